"""Synthetic corpus generator: structure, determinism, baseline ordering."""

import pytest

from semkit.base import InputError
from semkit.coref_metrics import avg_f1, corpus_counts
from semkit.kernel import BOS, EOS, encode_example, synth_dataset
from semkit.linearized import validate_linearized
from semkit.resolvers import forced_decode_eval, resolve_heuristic, resolve_random


def dataset_signature(data):
    return [(ex.example.X, ex.example.Y, tuple(sorted(ex.example.A.items())))
            for split in (data.train, data.val, data.test) for ex in split]


def method_avg_f1(gold, resolve, seed=0):
    keys, responses = forced_decode_eval(
        gold, lambda g, i: resolve(g, seed=seed, sentence_index=i))
    f1s = [corpus_counts(keys, responses, m).scores()[2] for m in ("muc", "b3", "ceafe")]
    return avg_f1(*f1s)


class TestShape:
    def test_split_sizes(self):
        data = synth_dataset(seed=0, size=50)
        assert len(data.train) == 50
        assert len(data.val) == 5
        assert len(data.test) == 5

    def test_explicit_split_sizes(self):
        data = synth_dataset(seed=0, size=20, val_size=3, test_size=7)
        assert (len(data.val), len(data.test)) == (3, 7)

    def test_size_zero_dataset_is_empty(self):
        data = synth_dataset(seed=0, size=0)
        assert data.train == () and data.val == () and data.test == ()

    def test_negative_size_rejected(self):
        with pytest.raises(InputError):
            synth_dataset(seed=0, size=-1)

    def test_negative_distractors_rejected(self):
        with pytest.raises(InputError):
            synth_dataset(seed=0, size=4, distractors=-1)

    def test_vocabularies_cover_all_examples(self):
        data = synth_dataset(seed=3, size=30)
        for split in (data.train, data.val, data.test):
            for ex in split:
                assert all(0 <= i < data.src_vocab.size for i in ex.example.X)
                assert all(0 <= i < data.tgt_vocab.size for i in ex.example.Y)

    def test_target_head_flags(self):
        data = synth_dataset(seed=0, size=1)
        for token, flag in zip(data.tgt_vocab.tokens, data.tgt_vocab.head_flags):
            assert flag == (token.endswith("_h") or token == "@b")


class TestSentences:
    def test_all_sentences_validate(self):
        data = synth_dataset(seed=7, size=60)
        for split in (data.train, data.val, data.test):
            for ex in split:
                assert validate_linearized(ex.linear) == []

    def test_every_sentence_has_an_assignment(self):
        data = synth_dataset(seed=2, size=60)
        for ex in data.train:
            assert ex.example.A

    def test_distractor_count_before_first_bullet(self):
        # The anchor's head word appears in exactly distractors+1 argument
        # spans before the first bullet, so context is required to resolve it.
        for distractors in (0, 1, 2, 3):
            data = synth_dataset(seed=5, size=40, distractors=distractors)
            for ex in data.train:
                first = min(ex.linear.assignments)
                anchor = ex.linear.assignments[first]
                surface = ex.linear.tokens[anchor].surface
                same = [p for p, tok in enumerate(ex.linear.tokens)
                        if p < first and tok.kind == "word" and tok.is_head
                        and tok.surface == surface]
                assert len(same) == distractors + 1

    def test_source_repeats_re_mention_words(self):
        # Re-mentions stay full words on the source side: the source is
        # strictly longer than one token per target span word.
        data = synth_dataset(seed=1, size=20)
        for ex in data.train:
            n_bullets = sum(1 for t in ex.linear.tokens if t.kind == "bullet")
            assert n_bullets >= 1
            assert len(ex.source_tokens) >= 2 * n_bullets


class TestEncoding:
    def test_target_ends_with_eos(self):
        data = synth_dataset(seed=0, size=10)
        eos = data.tgt_vocab.id(EOS)
        for ex in data.train:
            assert ex.example.Y[-1] == eos
            assert eos not in ex.example.Y[:-1]

    def test_heads_align_with_vocab_flags(self):
        data = synth_dataset(seed=0, size=10)
        for ex in data.train:
            for i, flag in zip(ex.example.Y, ex.example.heads):
                assert flag == data.tgt_vocab.head_flags[i]

    def test_assignments_match_linear(self):
        data = synth_dataset(seed=0, size=10)
        for ex in data.train:
            assert ex.example.A == dict(ex.linear.assignments)

    def test_encode_example_round_trips_tokens(self):
        from semkit.linearized import render_token

        data = synth_dataset(seed=4, size=5)
        ex = data.train[0]
        enc = encode_example(ex.source_tokens, ex.linear, data.src_vocab, data.tgt_vocab)
        rendered = [render_token(t, ascii_bullet=True) for t in ex.linear.tokens]
        assert [data.tgt_vocab.tokens[i] for i in enc.Y[:-1]] == rendered
        assert BOS in data.tgt_vocab.tokens

    def test_bos_reserved_ids(self):
        data = synth_dataset(seed=0, size=1)
        assert data.tgt_vocab.id(BOS) == 0
        assert data.tgt_vocab.id(EOS) == 1


class TestDeterminism:
    def test_same_seed_identical(self):
        a = synth_dataset(seed=11, size=25)
        b = synth_dataset(seed=11, size=25)
        assert dataset_signature(a) == dataset_signature(b)

    def test_different_seeds_differ(self):
        a = synth_dataset(seed=0, size=25)
        b = synth_dataset(seed=1, size=25)
        assert dataset_signature(a) != dataset_signature(b)

    def test_splits_use_distinct_streams(self):
        data = synth_dataset(seed=0, size=10, val_size=10, test_size=10)
        sig = lambda split: [ex.example.X for ex in split]
        assert sig(data.train) != sig(data.val)
        assert sig(data.val) != sig(data.test)


class TestBaselineOrdering:
    def test_no_distractors_heuristic_is_perfect(self):
        data = synth_dataset(seed=9, size=60, distractors=0)
        gold = [ex.linear for ex in data.train]
        assert method_avg_f1(gold, resolve_heuristic) == pytest.approx(1.0)

    def test_distractors_make_heuristic_imperfect(self):
        data = synth_dataset(seed=9, size=60, distractors=2)
        gold = [ex.linear for ex in data.train]
        heur = method_avg_f1(gold, resolve_heuristic)
        rand = method_avg_f1(gold, resolve_random)
        assert heur < 1.0
        assert rand < heur
