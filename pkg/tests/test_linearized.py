"""Linearized form: parsing, escaping, validation, and graph conversions."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_graph
from semkit.base import DelinearizeError, InputError, LinearizeError, rng_for
from semkit.linearized import (BULLET, LinearizedRepr, Skeleton, SpanNode,
                               analyze, bullet, close_arg, close_pred,
                               default_skeleton, delinearize,
                               delinearize_with_skeleton, linearize,
                               open_arg, open_pred, parse_corpus, parse_text,
                               render_token, resolve_antecedent,
                               serialize_corpus, serialize_text,
                               skeleton_from_obj, skeleton_to_obj,
                               validate_linearized, word)
from semkit.representations import (ENTITY, EVENT, GraphRepr, TokenSpan,
                                    Variable, isomorphic)


class TestParse:
    def test_plain_sentence(self):
        l = parse_text("[ sleeps_h ] ( John_h )")
        assert len(l.tokens) == 6
        assert l.assignments == {}
        kinds = [t.kind for t in l.tokens]
        assert kinds == ["open_pred", "word", "close_pred", "open_arg", "word", "close_arg"]
        assert l.tokens[1].surface == "sleeps" and l.tokens[1].is_head

    def test_bullet_with_coref(self):
        l = parse_text("[ saw_h ] ( John_h ) ( @b )\n#coref 7 4")
        assert l.tokens[7].kind == BULLET
        assert l.assignments == {7: 4}

    def test_utf8_bullet_accepted(self):
        l = parse_text("[ saw_h ] ( John_h ) ( • )\n#coref 7 4")
        assert l.tokens[7].kind == BULLET

    def test_unbalanced_error(self):
        with pytest.raises(InputError, match="unbalanced|unclosed|unmatched"):
            parse_text("( John_h")

    def test_bullet_without_coref_rejected(self):
        with pytest.raises(InputError, match="no assignment"):
            parse_text("[ saw_h ] ( John_h ) ( @b )")

    def test_coref_on_word_rejected(self):
        with pytest.raises(InputError, match="not.*bullet|does not name"):
            parse_text("[ saw_h ] ( John_h )\n#coref 4 1")

    def test_coref_out_of_range(self):
        with pytest.raises(InputError, match="out of range"):
            parse_text("[ saw_h ] ( John_h ) ( @b )\n#coref 7 99")

    def test_coref_forward_reference_rejected(self):
        with pytest.raises(InputError, match="non-earlier"):
            parse_text("[ saw_h ] ( @b ) ( John_h )\n#coref 4 8")

    def test_duplicate_coref_line(self):
        with pytest.raises(InputError, match="duplicate"):
            parse_text("[ saw_h ] ( John_h ) ( @b )\n#coref 7 4\n#coref 7 4")

    def test_malformed_coref_line(self):
        with pytest.raises(InputError, match="#coref"):
            parse_text("[ saw_h ] ( John_h ) ( @b )\n#coref seven four")

    def test_empty_block(self):
        assert parse_text("") == LinearizedRepr()
        assert serialize_text(LinearizedRepr()) == ""


class TestValidation:
    def test_two_heads_rejected(self):
        with pytest.raises(InputError, match="head"):
            parse_text("[ ran_h fast_h ]")

    def test_no_head_rejected(self):
        with pytest.raises(InputError, match="head"):
            parse_text("[ ran fast ]")

    def test_bullet_in_pred_rejected(self):
        l = LinearizedRepr(tokens=(open_pred(), bullet(), close_pred()),
                           assignments={1: 0})
        assert any(v.code == "bullet-in-pred" for v in validate_linearized(l))

    def test_root_bullet_rejected(self):
        l = LinearizedRepr(tokens=(open_pred(), word("x", True), close_pred(), bullet()),
                           assignments={3: 1})
        assert any(v.code == "bullet-outside-arg" for v in validate_linearized(l))

    def test_nested_spans_allowed(self):
        l = parse_text("[ said_h [ rained_h ] ]")
        assert validate_linearized(l) == []


class TestEscaping:
    def test_reserved_surfaces_round_trip(self):
        for surface in ["[", "]", "(", ")", "@b", "•", "\\", "a_h", "x\\y", "__h"]:
            for head in (False, True):
                tok = word(surface, head)
                back = parse_text("[ p_h ] ( " + render_token(tok) + (" )" if head else " z_h )"))
                got = back.tokens[4]
                assert got.surface == surface and got.is_head == head

    @given(st.text(alphabet="ab\\[]()_h•@", min_size=1).filter(lambda s: not s.isspace()),
           st.booleans())
    @settings(max_examples=200, deadline=None)
    def test_any_surface_round_trips(self, surface, head):
        rendered = render_token(word(surface, head))
        l = parse_text("[ " + rendered + " ]" if head else "[ p_h ] ( " + rendered + " q_h )")
        got = l.tokens[1] if head else l.tokens[4]
        assert got.surface == surface and got.is_head == head

    def test_serialize_parse_byte_identity(self):
        text = "[ saw_h ] ( John_h ) ( @b )\n#coref 7 4"
        assert serialize_text(parse_text(text)) == text

    def test_utf8_output_mode(self):
        l = parse_text("[ saw_h ] ( John_h ) ( @b )\n#coref 7 4")
        assert "•" in serialize_text(l, ascii_bullet=False)
        assert parse_text(serialize_text(l, ascii_bullet=False)) == l


SENTENCE = ("[ saw_h ] ( waves_h ) "
            "( a ( @b ) [ hit_h ] ( a storm surge_h ) house_h )\n#coref 9 4")


class TestDelinearize:
    def test_trivial_clause(self):
        g = delinearize(parse_text("[ sleeps_h ] ( John_h )"))
        assert g.var_ids == ("e1", "x1")
        assert g.edges == {("e1", "x1"): "ARG"}
        assert g.instances["x1"].tokens == ("John",)

    def test_empty(self):
        g = delinearize(LinearizedRepr())
        assert g.instance_count() == 0 and g.edge_count() == 0

    def test_embedded_clause_governors(self):
        # Outer argument span: its own words exclude the nested spans; the
        # bullet's governor is the following sibling predicate; the nested
        # entity attaches to the preceding sibling predicate.
        g = delinearize(parse_text(SENTENCE))
        assert g.instances["x2"].tokens == ("a", "house")
        assert g.instances["x2"].head == "house"
        assert g.instances["x3"].tokens == ("a", "storm", "surge")
        assert g.edges == {
            ("e1", "x1"): "ARG",    # saw -> waves
            ("e1", "x2"): "ARG",    # saw -> a house
            ("e2", "x1"): "ARG",    # hit -> waves, through the bullet
            ("e2", "x3"): "ARG",    # hit -> a storm surge
        }

    def test_repeated_argument_collapses(self):
        g = delinearize(parse_text("[ saw_h ] ( John_h ) ( @b )\n#coref 7 4"))
        assert g.var_ids == ("e1", "x1")
        assert g.edges == {("e1", "x1"): "ARG"}

    def test_ungoverned_argument_rejected(self):
        with pytest.raises(DelinearizeError, match="no governing predicate"):
            delinearize(parse_text("( John_h )"))

    def test_word_outside_spans_rejected(self):
        l = LinearizedRepr(tokens=(word("stray", True),))
        with pytest.raises(DelinearizeError, match="belongs to no span"):
            delinearize(l)

    def test_self_edge_rejected(self):
        with pytest.raises(DelinearizeError, match="self-edge"):
            delinearize(parse_text("[ runs_h ] ( @b )\n#coref 4 1"))

    def test_bullet_mixed_with_words_rejected(self):
        with pytest.raises(DelinearizeError, match="mixes a bullet"):
            delinearize(parse_text("[ saw_h ] ( John_h ) ( @b old )\n#coref 7 4"))

    def test_bullet_chain_resolves_through_bullets(self):
        text = "[ saw_h ] ( John_h ) ( @b ) [ left_h ] ( @b )\n#coref 7 4\n#coref 13 7"
        g = delinearize(parse_text(text))
        assert g.edges == {("e1", "x1"): "ARG", ("e2", "x1"): "ARG"}

    def test_invalid_input_rejected_up_front(self):
        l = LinearizedRepr(tokens=(open_pred(), word("a", True)))
        with pytest.raises(DelinearizeError, match="invalid"):
            delinearize(l)


class TestLinearize:
    def g(self):
        return GraphRepr(
            variables=(Variable("e1", EVENT), Variable("x1", ENTITY)),
            instances={"e1": TokenSpan(("sleeps",), 0),
                       "x1": TokenSpan(("John",), 0)},
            edges={("e1", "x1"): "ARG"})

    def test_single_clause_default_skeleton(self):
        assert serialize_text(linearize(self.g())) == "[ sleeps_h ] ( John_h )"

    def test_empty_graph(self):
        assert linearize(GraphRepr()) == LinearizedRepr()

    def test_shared_entity_becomes_bullet(self):
        g = GraphRepr(
            variables=(Variable("e1", EVENT), Variable("e2", EVENT), Variable("x1", ENTITY)),
            instances={"e1": TokenSpan(("saw",), 0, origin_positions=(0,)),
                       "e2": TokenSpan(("left",), 0, origin_positions=(3,)),
                       "x1": TokenSpan(("John",), 0, origin_positions=(1,))},
            edges={("e1", "x1"): "ARG", ("e2", "x1"): "ARG"})
        l = linearize(g)
        text = serialize_text(l)
        assert text.count("@b") == 1 and "#coref" in text
        assert isomorphic(delinearize(l), g)

    def test_ungoverned_entity_rejected(self):
        g = GraphRepr(variables=(Variable("e1", EVENT), Variable("x1", ENTITY)),
                      instances={"e1": TokenSpan(("runs",), 0),
                                 "x1": TokenSpan(("John",), 0)})
        with pytest.raises(LinearizeError, match="no governing event"):
            linearize(g)

    def test_skeleton_must_cover_every_variable(self):
        skel = Skeleton(roots=(SpanNode(var="e1"),))
        with pytest.raises(LinearizeError, match="omits"):
            linearize(self.g(), skel)

    def test_skeleton_rejects_double_render(self):
        skel = Skeleton(roots=(SpanNode(var="e1"), SpanNode(var="e1"),
                               SpanNode(var="x1")))
        with pytest.raises(LinearizeError, match="more than once"):
            linearize(self.g(), skel)

    def test_skeleton_rejects_unknown_variable(self):
        skel = Skeleton(roots=(SpanNode(var="zz"),))
        with pytest.raises(LinearizeError, match="unknown variable"):
            linearize(self.g(), skel)

    def test_remention_before_first_mention_rejected(self):
        skel = Skeleton(roots=(SpanNode(var="x1", remention=True),
                               SpanNode(var="e1"), SpanNode(var="x1")))
        with pytest.raises(LinearizeError, match="before its first mention"):
            linearize(self.g(), skel)

    def test_deterministic(self):
        rng = rng_for(0, 30)
        for _ in range(50):
            g = random_graph(rng, governed_entities=True)
            assert serialize_text(linearize(g)) == serialize_text(linearize(g))


class TestRoundTrips:
    def test_parse_serialize_identity_fuzz(self):
        rng = rng_for(0, 31)
        for _ in range(300):
            g = random_graph(rng, governed_entities=True)
            l = linearize(g)
            text = serialize_text(l)
            assert parse_text(text) == l
            assert serialize_text(parse_text(text)) == text

    def test_linearize_delinearize_isomorphic_fuzz(self):
        rng = rng_for(0, 32)
        for _ in range(300):
            g = random_graph(rng, governed_entities=True)
            assert isomorphic(delinearize(linearize(g)), g)

    def test_stored_skeleton_reproduces_bytes(self):
        for text in ["[ saw_h ] ( John_h ) ( @b )\n#coref 7 4", SENTENCE]:
            g, skel = delinearize_with_skeleton(parse_text(text))
            assert serialize_text(linearize(g, skel)) == text

    def test_stored_skeleton_reproduces_bytes_fuzz(self):
        rng = rng_for(0, 33)
        for _ in range(200):
            g = random_graph(rng, governed_entities=True)
            text = serialize_text(linearize(g))
            g2, skel = delinearize_with_skeleton(parse_text(text))
            assert serialize_text(linearize(g2, skel)) == text

    def test_skeleton_obj_round_trip(self):
        _, skel = delinearize_with_skeleton(parse_text(SENTENCE))
        assert skeleton_from_obj(skeleton_to_obj(skel)) == skel

    def test_bullet_count_matches_extra_in_degree(self):
        # Event-event edges form a forest, so every governed variable's
        # first mention is nested and each further governor adds one bullet.
        rng = rng_for(0, 34)
        for _ in range(200):
            g = self._forest_graph(rng)
            l = linearize(g)
            indeg = {v.id: 0 for v in g.variables}
            for _, dep in g.edges:
                indeg[dep] += 1
            expected = sum(max(0, d - 1) for d in indeg.values())
            got = sum(1 for t in l.tokens if t.kind == BULLET)
            assert got == expected

    @staticmethod
    def _forest_graph(rng):
        n_events = int(rng.integers(1, 4))
        n_entities = int(rng.integers(0, 4))
        variables = [Variable(f"e{i + 1}", EVENT) for i in range(n_events)]
        variables += [Variable(f"x{i + 1}", ENTITY) for i in range(n_entities)]
        instances = {v.id: TokenSpan(("w%d" % i,), 0) for i, v in enumerate(variables)}
        edges = {}
        for i in range(1, n_events):
            gov = int(rng.integers(i))
            edges[(f"e{gov + 1}", f"e{i + 1}")] = "ARG"
        for i in range(n_entities):
            governors = rng.permutation(n_events)[:int(rng.integers(1, n_events + 1))]
            for gov in governors:
                edges[(f"e{int(gov) + 1}", f"x{i + 1}")] = "ARG"
        return GraphRepr(variables=tuple(variables), instances=instances, edges=edges)


class TestCorpus:
    def test_round_trip(self):
        texts = ["[ sleeps_h ] ( John_h )",
                 "[ saw_h ] ( John_h ) ( @b )\n#coref 7 4"]
        corpus = "\n\n".join(texts) + "\n"
        reprs = parse_corpus(corpus)
        assert len(reprs) == 2
        assert serialize_corpus(reprs) == corpus

    def test_empty_corpus(self):
        assert parse_corpus("") == []
        assert parse_corpus("   \n  \n") == []
        assert serialize_corpus([]) == ""

    def test_error_names_block(self):
        with pytest.raises(InputError, match="block 1"):
            parse_corpus("[ a_h ]\n\n( oops_h")


class TestAnalysis:
    def test_innermost_ownership(self):
        l = parse_text(SENTENCE)
        analysis = analyze(l)
        spans = analysis.spans
        assert [s.kind for s in spans] == ["pred", "arg", "arg", "arg", "pred", "arg"]
        assert spans[3].is_lone_bullet()
        assert analysis.innermost(9) == 3

    def test_resolve_antecedent_cycle_guard(self):
        l = LinearizedRepr(
            tokens=(open_pred(), word("p", True), close_pred(),
                    open_arg(), bullet(), close_arg(),
                    open_arg(), bullet(), close_arg()),
            assignments={4: 7, 7: 4})
        with pytest.raises(InputError, match="cycle"):
            resolve_antecedent(l, 4)
