"""Instance and relation similarity functions, all scored in [0, 1].

Span similarity ignores head marks by construction: spans store bare
surface tokens and carry the head as a separate index.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

from .base import InputError
from .representations import TokenSpan

KRONECKER_DELTA = "kronecker_delta"
SENTENCE_BLEU = "sentence_bleu"
SMOOTH_NONE = "none"
SMOOTH_ADD_ONE = "add_one_higher_orders"


@dataclass(frozen=True)
class SimilaritySpec:
    """Choice and configuration of a similarity function."""

    kind: str = KRONECKER_DELTA
    max_order: int = 4
    smoothing: str = SMOOTH_ADD_ONE
    case_sensitive: bool = True

    def __post_init__(self):
        if self.kind not in (KRONECKER_DELTA, SENTENCE_BLEU):
            raise InputError(f"unknown similarity kind {self.kind!r}")
        if self.max_order < 1:
            raise InputError("max_order must be at least 1")
        if self.smoothing not in (SMOOTH_NONE, SMOOTH_ADD_ONE):
            raise InputError(f"unknown smoothing {self.smoothing!r}")


def _as_tokens(value):
    if isinstance(value, TokenSpan):
        return value.tokens
    if isinstance(value, str):
        return value
    return tuple(value)


def delta(a, b) -> float:
    """1.0 iff the arguments are exactly equal; spans compare by tokens."""
    return 1.0 if _as_tokens(a) == _as_tokens(b) else 0.0


def sentence_bleu(candidate, reference, spec: SimilaritySpec | None = None) -> float:
    """Sentence-level BLEU of a candidate token sequence against one reference.

    Geometric mean of modified n-gram precisions for n up to
    min(max_order, |candidate|), times the brevity penalty
    min(1, exp(1 - |reference|/|candidate|)).  With add-one smoothing the
    numerator and denominator of every precision above order one get +1.
    """
    if spec is None:
        spec = SimilaritySpec(kind=SENTENCE_BLEU)
    cand = [t for t in _as_tokens(candidate)]
    ref = [t for t in _as_tokens(reference)]
    if not cand or not ref:
        raise InputError("sentence_bleu needs nonempty candidate and reference")
    if not spec.case_sensitive:
        cand = [t.lower() for t in cand]
        ref = [t.lower() for t in ref]
    orders = min(spec.max_order, len(cand))
    log_sum = 0.0
    for n in range(1, orders + 1):
        cand_counts = Counter(tuple(cand[i:i + n]) for i in range(len(cand) - n + 1))
        ref_counts = Counter(tuple(ref[i:i + n]) for i in range(len(ref) - n + 1))
        num = sum(min(c, ref_counts[g]) for g, c in cand_counts.items())
        den = sum(cand_counts.values())
        if spec.smoothing == SMOOTH_ADD_ONE and n >= 2:
            num += 1
            den += 1
        if num == 0:
            return 0.0
        log_sum += math.log(num / den)
    brevity = min(1.0, math.exp(1.0 - len(ref) / len(cand)))
    return brevity * math.exp(log_sum / orders)


def similarity(a, b, spec: SimilaritySpec) -> float:
    """Dispatch on the spec; the pluggable point for further functions."""
    if spec.kind == KRONECKER_DELTA:
        return delta(a, b)
    return sentence_bleu(a, b, spec)
