"""Baseline coreference resolvers and the forced-decoding evaluation protocol.

Both baselines see the gold token sequence with its bullets and predict only
the assignments.  The random baseline draws uniformly among all preceding
argument spans.  The heuristic baseline first recovers, for each bullet, the
head word of its true antecedent (the preprocessing that rewrites a bullet
as that head), then draws uniformly among preceding argument spans carrying
the same head word.  A bullet with no candidate keeps the empty assignment
and is counted as a fallback; it scores as a singleton.
"""

from __future__ import annotations

from dataclasses import dataclass

from .base import BaseEstimator, InputError, rng_for
from .coref_metrics import chains_from_linearized
from .linearized import LinearizedRepr, analyze, resolve_antecedent, validate_linearized

METHOD_RANDOM = "random"
METHOD_HEURISTIC = "heuristic"


@dataclass(frozen=True)
class ResolverSpec:
    method: str
    seed: int = 0

    def __post_init__(self):
        if self.method not in (METHOD_RANDOM, METHOD_HEURISTIC):
            raise InputError(f"unknown resolver method {self.method!r}")


@dataclass(frozen=True)
class Resolution:
    """Predicted assignments plus the bullets that fell back to empty."""

    assignments: dict
    fallbacks: tuple = ()


def _argument_spans(l: LinearizedRepr, analysis):
    """(open_pos, head_token_pos, span_index) per argument span, document order."""
    out = []
    for idx, span in enumerate(analysis.spans):
        if span.kind != "arg":
            continue
        if span.is_lone_bullet():
            head_pos = span.bullet_positions()[0]
        else:
            head_pos = next(p for p in span.word_positions() if l.tokens[p].is_head)
        out.append((span.open_pos, head_pos, idx))
    return out


def _head_surface_of_owner(l: LinearizedRepr, analysis, pos):
    """Head word surface of the span owning pos, following bullet chains."""
    pos = resolve_antecedent(l, pos)
    idx = analysis.innermost(pos)
    if idx is None:
        return None
    span = analysis.spans[idx]
    for p in span.word_positions():
        if l.tokens[p].is_head:
            return l.tokens[p].surface
    return None


def _validated(gold: LinearizedRepr):
    problems = validate_linearized(gold)
    if problems:
        raise InputError("invalid gold representation: "
                         + "; ".join(str(p) for p in problems))


def resolve_random(gold: LinearizedRepr, seed: int, sentence_index: int = 0) -> Resolution:
    """Uniform choice among all argument spans whose head precedes the bullet."""
    _validated(gold)
    analysis = analyze(gold)
    spans = _argument_spans(gold, analysis)
    rng = rng_for(seed, sentence_index)
    assignments = {}
    fallbacks = []
    for pos in sorted(gold.assignments):
        candidates = [head for _, head, _ in spans if head < pos]
        if not candidates:
            fallbacks.append(pos)
            continue
        assignments[pos] = candidates[int(rng.integers(len(candidates)))]
    return Resolution(assignments=assignments, fallbacks=tuple(fallbacks))


def resolve_heuristic(gold: LinearizedRepr, seed: int, sentence_index: int = 0) -> Resolution:
    """Uniform choice among preceding argument spans sharing the antecedent's head."""
    _validated(gold)
    analysis = analyze(gold)
    spans = _argument_spans(gold, analysis)
    head_of = {head: _head_surface_of_owner(gold, analysis, head) for _, head, _ in spans}
    rng = rng_for(seed, sentence_index)
    assignments = {}
    fallbacks = []
    for pos in sorted(gold.assignments):
        want = _head_surface_of_owner(gold, analysis, gold.assignments[pos])
        candidates = [head for _, head, _ in spans
                      if head < pos and want is not None and head_of[head] == want]
        if not candidates:
            fallbacks.append(pos)
            continue
        assignments[pos] = candidates[int(rng.integers(len(candidates)))]
    return Resolution(assignments=assignments, fallbacks=tuple(fallbacks))


class RandomResolver(BaseEstimator):
    """Estimator wrapper over resolve_random."""

    def __init__(self, seed=0):
        self.seed = seed

    def predict(self, gold: LinearizedRepr, sentence_index: int = 0) -> Resolution:
        return resolve_random(gold, self.seed, sentence_index)


class HeuristicResolver(BaseEstimator):
    """Estimator wrapper over resolve_heuristic."""

    def __init__(self, seed=0):
        self.seed = seed

    def predict(self, gold: LinearizedRepr, sentence_index: int = 0) -> Resolution:
        return resolve_heuristic(gold, self.seed, sentence_index)


def make_resolver(spec: ResolverSpec):
    if spec.method == METHOD_RANDOM:
        return RandomResolver(seed=spec.seed)
    return HeuristicResolver(seed=spec.seed)


def forced_decode_eval(gold_corpus, predict):
    """Key/response chain pairs with tokens forced to gold.

    predict is a callable (gold sentence, sentence index) -> Resolution (or
    a bare assignments mapping); only the assignments are predicted, the
    token sequence stays gold.  Returns (keys, responses) lists ready for
    the coreference scorers.
    """
    gold_corpus = list(gold_corpus)
    if not gold_corpus:
        raise InputError("empty corpus")
    keys = []
    responses = []
    for i, gold in enumerate(gold_corpus):
        out = predict(gold, i)
        assignments = out.assignments if isinstance(out, Resolution) else dict(out)
        keys.append(chains_from_linearized(gold))
        responses.append(chains_from_linearized(gold, assignments=assignments))
    return keys, responses
