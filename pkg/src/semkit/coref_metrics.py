"""Coreference scorers: link-based, mention-based, and entity-alignment-based.

All three scorers take a key and a response chain set over the same mention
universe.  Undefined 0/0 ratios score 0 and are reported through the flags
of the returned counts.  Corpus-level figures micro-average by summing
numerators and denominators across documents before dividing.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .base import AlignmentError, InputError
from .linearized import BULLET, LinearizedRepr, analyze, validate_linearized


@dataclass(frozen=True)
class MentionChainSet:
    """Mention universe plus a partition of part of it into chains.

    Mentions not covered by any chain are implicit singletons.
    """

    mentions: frozenset = frozenset()
    chains: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "mentions", frozenset(self.mentions))
        object.__setattr__(self, "chains", tuple(frozenset(c) for c in self.chains))
        seen = set()
        for chain in self.chains:
            if not chain:
                raise InputError("chains must be nonempty")
            if chain & seen:
                raise InputError("chains must be disjoint")
            if not chain <= self.mentions:
                raise InputError("chain mentions must belong to the universe")
            seen |= chain

    def with_singletons(self):
        """All chains including one singleton per uncovered mention."""
        covered = set()
        for chain in self.chains:
            covered |= chain
        extra = tuple(frozenset([m]) for m in sorted(self.mentions - covered))
        return self.chains + extra

    def chain_of(self):
        """Mention -> chain (with implicit singletons materialized)."""
        out = {}
        for chain in self.with_singletons():
            for m in chain:
                out[m] = chain
        return out


@dataclass(frozen=True)
class MetricCounts:
    """Micro-averageable numerators and denominators for one document."""

    r_num: float
    r_den: float
    p_num: float
    p_den: float
    flags: tuple = ()

    def __add__(self, other):
        return MetricCounts(self.r_num + other.r_num, self.r_den + other.r_den,
                            self.p_num + other.p_num, self.p_den + other.p_den,
                            self.flags + other.flags)

    def scores(self):
        flags = list(self.flags)
        if self.r_den == 0:
            flags.append("recall-0/0")
        if self.p_den == 0:
            flags.append("precision-0/0")
        r = self.r_num / self.r_den if self.r_den else 0.0
        p = self.p_num / self.p_den if self.p_den else 0.0
        f1 = 0.0 if p + r == 0 else 2 * p * r / (p + r)
        return p, r, f1


def _check_universe(key: MentionChainSet, response: MentionChainSet):
    """Same mention universe required, except against a fully empty side."""
    if key.mentions != response.mentions and key.mentions and response.mentions:
        raise AlignmentError("key and response cover different mention universes")


def muc_counts(key: MentionChainSet, response: MentionChainSet) -> MetricCounts:
    """Link-based counts: each side's chains minus the partition they induce."""
    _check_universe(key, response)

    def side(chains, other_chain_of):
        num = den = 0
        for chain in chains:
            parts = set()
            missing = 0
            for m in chain:
                if m in other_chain_of:
                    parts.add(other_chain_of[m])
                else:
                    missing += 1
            num += len(chain) - (len(parts) + missing)
            den += len(chain) - 1
        return num, den

    r_num, r_den = side(key.chains, response.chain_of())
    p_num, p_den = side(response.chains, key.chain_of())
    return MetricCounts(r_num, r_den, p_num, p_den)


def muc(key: MentionChainSet, response: MentionChainSet):
    return muc_counts(key, response).scores()


def b_cubed_counts(key: MentionChainSet, response: MentionChainSet) -> MetricCounts:
    """Mention-based counts: per-mention overlap ratios, singletons included."""
    _check_universe(key, response)
    key_of = key.chain_of()
    resp_of = response.chain_of()
    empty = frozenset()
    r_num = sum(len(key_of[m] & resp_of.get(m, empty)) / len(key_of[m])
                for m in key.mentions)
    p_num = sum(len(resp_of[m] & key_of.get(m, empty)) / len(resp_of[m])
                for m in response.mentions)
    return MetricCounts(r_num, len(key.mentions), p_num, len(response.mentions))


def b_cubed(key: MentionChainSet, response: MentionChainSet):
    return b_cubed_counts(key, response).scores()


def assignment_max(weights):
    """Maximum-weight one-to-one alignment of rows to columns.

    Exact (Kuhn-Munkres via scipy); ties broken toward the lexicographically
    smallest row->column assignment, certified row by row.
    """
    w = np.asarray(weights, dtype=float)
    if w.size == 0:
        return tuple()
    if w.ndim != 2:
        raise InputError("weights must be a 2-d matrix")
    if not np.isfinite(w).all() or (w < 0).any():
        raise InputError("weights must be finite and nonnegative")
    n_rows, n_cols = w.shape

    def best_rest(done_rows, done_cols):
        sub = np.delete(np.delete(w, sorted(done_rows), axis=0),
                        sorted(done_cols), axis=1)
        if sub.size == 0 or min(sub.shape) == 0:
            return 0.0
        rows, cols = linear_sum_assignment(sub, maximize=True)
        return float(sub[rows, cols].sum())

    target = best_rest(set(), set())
    fixed = []
    done_rows = set()
    done_cols = set()
    base = 0.0
    for i in range(n_rows):
        if len(done_cols) == n_cols:
            break
        chosen = None
        for j in range(n_cols):
            if j in done_cols:
                continue
            rest = best_rest(done_rows | {i}, done_cols | {j})
            if base + w[i, j] + rest >= target - 1e-9:
                chosen = j
                break
        if chosen is None:
            # Every optimal alignment leaves row i unmatched.
            done_rows.add(i)
            continue
        fixed.append((i, chosen))
        base += w[i, chosen]
        done_rows.add(i)
        done_cols.add(chosen)
    return tuple(fixed)


def ceaf_e_counts(key: MentionChainSet, response: MentionChainSet) -> MetricCounts:
    """Entity-based counts via an optimal one-to-one chain alignment.

    Chain pair similarity is the dice overlap 2|K n R| / (|K| + |R|); the
    alignment maximizes its sum.
    """
    _check_universe(key, response)
    key_chains = key.with_singletons()
    resp_chains = response.with_singletons()
    if not key_chains or not resp_chains:
        return MetricCounts(0.0, len(key_chains), 0.0, len(resp_chains))
    w = np.array([[2 * len(k & r) / (len(k) + len(r)) for r in resp_chains]
                  for k in key_chains])
    aligned = assignment_max(w)
    total = float(sum(w[i, j] for i, j in aligned))
    return MetricCounts(total, len(key_chains), total, len(resp_chains))


def ceaf_e(key: MentionChainSet, response: MentionChainSet):
    return ceaf_e_counts(key, response).scores()


def avg_f1(muc_f1: float, b_cubed_f1: float, ceaf_e_f1: float) -> float:
    """Arithmetic mean of the three F1 scores."""
    return (muc_f1 + b_cubed_f1 + ceaf_e_f1) / 3.0


_COUNTERS = {"muc": muc_counts, "b3": b_cubed_counts, "ceafe": ceaf_e_counts}


def corpus_counts(keys, responses, metric: str) -> MetricCounts:
    """Summed per-document counts for one metric over aligned corpora."""
    if metric not in _COUNTERS:
        raise InputError(f"unknown metric {metric!r}")
    keys = list(keys)
    responses = list(responses)
    if len(keys) != len(responses):
        raise AlignmentError(f"key has {len(keys)} documents, response has {len(responses)}")
    counter = _COUNTERS[metric]
    total = MetricCounts(0.0, 0.0, 0.0, 0.0)
    for key, response in zip(keys, responses):
        total = total + counter(key, response)
    return total


def chains_from_linearized(l: LinearizedRepr, assignments=None) -> MentionChainSet:
    """Coreference chains over argument mentions of one linearized sentence.

    Mentions are argument spans, identified by their opening positions.
    Each bullet links its own span to the span containing its antecedent
    token; links landing in a predicate span or outside every span are not
    argument coreference and are skipped here.  Chains are the connected
    components; unlinked mentions stay implicit singletons.

    assignments, when given, replaces the stored links (same tokens, new
    predictions); entries may be missing for bullets resolved to the empty
    assignment, which then stay singletons.
    """
    problems = validate_linearized(l)
    if problems:
        raise InputError("invalid linearized representation: "
                         + "; ".join(str(p) for p in problems))
    if not l.tokens:
        return MentionChainSet()
    if assignments is None:
        assignments = l.assignments
    analysis = analyze(l)
    mentions = frozenset(span.open_pos for span in analysis.spans if span.kind == "arg")

    parent = {m: m for m in mentions}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for pos, ant in assignments.items():
        own_idx = analysis.innermost(pos)
        ant_idx = analysis.innermost(ant)
        if own_idx is None or analysis.spans[own_idx].kind != "arg":
            continue
        if ant_idx is None or analysis.spans[ant_idx].kind != "arg":
            continue
        ra = find(analysis.spans[own_idx].open_pos)
        rb = find(analysis.spans[ant_idx].open_pos)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)

    groups = {}
    for m in mentions:
        groups.setdefault(find(m), set()).add(m)
    chains = tuple(frozenset(g) for _, g in sorted(groups.items()) if len(g) > 1)
    return MentionChainSet(mentions=mentions, chains=chains)
