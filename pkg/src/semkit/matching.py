"""Similarity between two graph representations under a variable mapping.

The score of a mapping m sums instance similarities phi(I1(v), I2(m(v)))
over mapped variables and relation similarities psi over edges whose both
endpoints are mapped and whose image is itself an edge.  The metric is the
best such score over injective mappings; hill climbing approximates it and
an exhaustive oracle verifies it on small graphs.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace

from .base import InputError, rng_for
from .representations import GraphRepr, canonical_order
from .similarity import KRONECKER_DELTA, SimilaritySpec, similarity


@dataclass(frozen=True)
class MatchConfig:
    phi: SimilaritySpec = field(default_factory=lambda: SimilaritySpec(KRONECKER_DELTA))
    psi: SimilaritySpec = field(default_factory=lambda: SimilaritySpec(KRONECKER_DELTA))
    restarts: int = 4
    max_moves: int | None = None      # None = 10 * |V1| * |V2|
    seed: int = 0
    oracle_limit: int = 8

    def __post_init__(self):
        if self.restarts < 0:
            raise InputError("restarts must be nonnegative")
        if self.oracle_limit < 0:
            raise InputError("oracle_limit must be nonnegative")


@dataclass(frozen=True)
class MatchResult:
    mapping: dict
    score: float
    precision: float
    recall: float
    f1: float
    climbs_to_optimum: bool | None = None
    flags: tuple = ()


def _f1(p, r):
    return 0.0 if p + r == 0 else 2 * p * r / (p + r)


def _pair_sizes(g: GraphRepr):
    return len(g.instances), len(g.edges)


def precision_recall(g1: GraphRepr, g2: GraphRepr, score: float):
    """Precision, recall, F1 of a score against both graphs' sizes.

    Precision divides by g1's instance and relation count, recall by g2's;
    an empty side scores 0 there by convention.
    """
    i1, r1 = _pair_sizes(g1)
    i2, r2 = _pair_sizes(g2)
    den1 = i1 + r1
    den2 = i2 + r2
    p = score / den1 if den1 else 0.0
    r = score / den2 if den2 else 0.0
    return p, r, _f1(p, r)


class _PairScorer:
    """Precomputed similarity tables for one (g1, g2) pair."""

    def __init__(self, g1: GraphRepr, g2: GraphRepr, config: MatchConfig):
        self.g1, self.g2, self.config = g1, g2, config
        self.order1 = [v.id for v in canonical_order(g1)]
        self.order2 = [v.id for v in canonical_order(g2)]
        self.n1, self.n2 = len(self.order1), len(self.order2)
        self.phi = [[similarity(g1.instances[a], g2.instances[b], config.phi)
                     for b in self.order2] for a in self.order1]
        idx1 = {v: i for i, v in enumerate(self.order1)}
        idx2 = {v: i for i, v in enumerate(self.order2)}
        self.edges1 = [(idx1[gov], idx1[dep], label) for (gov, dep), label in g1.edges.items()]
        self.edge_label2 = {(idx2[gov], idx2[dep]): label for (gov, dep), label in g2.edges.items()}
        self.psi_cache = {}

    def psi(self, label1, label2):
        key = (label1, label2)
        if key not in self.psi_cache:
            self.psi_cache[key] = similarity(label1, label2, self.config.psi)
        return self.psi_cache[key]

    def score(self, assign):
        """Total score of an index-level assignment (list: row -> col or None)."""
        total = 0.0
        for i, j in enumerate(assign):
            if j is not None:
                total += self.phi[i][j]
        for gi, di, label in self.edges1:
            a, b = assign[gi], assign[di]
            if a is not None and b is not None:
                other = self.edge_label2.get((a, b))
                if other is not None:
                    total += self.psi(label, other)
        return total

    def mapping_from(self, assign):
        return {self.order1[i]: self.order2[j] for i, j in enumerate(assign) if j is not None}

    def result(self, assign, **extra):
        s = self.score(assign)
        p, r, f1 = precision_recall(self.g1, self.g2, s)
        flags = []
        if len(self.g1.instances) + len(self.g1.edges) == 0:
            flags.append("empty-side-precision")
        if len(self.g2.instances) + len(self.g2.edges) == 0:
            flags.append("empty-side-recall")
        return MatchResult(mapping=self.mapping_from(assign), score=s,
                           precision=p, recall=r, f1=f1, flags=tuple(flags), **extra)


def evaluate_mapping(g1: GraphRepr, g2: GraphRepr, mapping: dict,
                     config: MatchConfig | None = None) -> float:
    """Score one injective partial mapping from g1's variables to g2's."""
    config = config or MatchConfig()
    targets = list(mapping.values())
    if len(set(targets)) != len(targets):
        raise InputError("mapping is not injective")
    ids1 = set(g1.instances)
    ids2 = set(g2.instances)
    for a, b in mapping.items():
        if a not in ids1:
            raise InputError(f"mapping domain names unknown variable {a!r}")
        if b not in ids2:
            raise InputError(f"mapping range names unknown variable {b!r}")
    scorer = _PairScorer(g1, g2, config)
    pos1 = {v: i for i, v in enumerate(scorer.order1)}
    pos2 = {v: i for i, v in enumerate(scorer.order2)}
    assign = [None] * scorer.n1
    for a, b in mapping.items():
        assign[pos1[a]] = pos2[b]
    return scorer.score(assign)


def _enumerate_best(scorer: _PairScorer):
    """Exact maximum over total injective maps from the smaller side."""
    n1, n2 = scorer.n1, scorer.n2
    best = None
    best_assign = [None] * n1
    if n1 <= n2:
        for perm in itertools.permutations(range(n2), n1):
            s = scorer.score(list(perm))
            if best is None or s > best + 1e-12:
                best, best_assign = s, list(perm)
    else:
        for perm in itertools.permutations(range(n1), n2):
            assign = [None] * n1
            for j, i in enumerate(perm):
                assign[i] = j
            s = scorer.score(assign)
            if best is None or s > best + 1e-12:
                best, best_assign = s, assign
    return best_assign


def brute_force_match(g1: GraphRepr, g2: GraphRepr,
                      config: MatchConfig | None = None) -> MatchResult:
    """Exhaustive optimum; usable when the smaller side fits the oracle limit."""
    config = config or MatchConfig()
    if min(len(g1.variables), len(g2.variables)) > config.oracle_limit:
        raise InputError(f"graph pair exceeds oracle_limit={config.oracle_limit}")
    scorer = _PairScorer(g1, g2, config)
    if scorer.n1 == 0 or scorer.n2 == 0:
        return scorer.result([None] * scorer.n1, climbs_to_optimum=None)
    return scorer.result(_enumerate_best(scorer))


def _smart_init(scorer: _PairScorer):
    pairs = sorted(((scorer.phi[i][j], i, j) for i in range(scorer.n1) for j in range(scorer.n2)),
                   key=lambda t: (-t[0], t[1], t[2]))
    assign = [None] * scorer.n1
    taken = [False] * scorer.n2
    placed = 0
    limit = min(scorer.n1, scorer.n2)
    for _, i, j in pairs:
        if placed == limit:
            break
        if assign[i] is None and not taken[j]:
            assign[i] = j
            taken[j] = True
            placed += 1
    return assign


def _random_init(scorer: _PairScorer, rng):
    assign = [None] * scorer.n1
    k = min(scorer.n1, scorer.n2)
    rows = rng.permutation(scorer.n1)[:k]
    cols = rng.permutation(scorer.n2)[:k]
    for i, j in zip(rows, cols):
        assign[int(i)] = int(j)
    return assign


def _climb(scorer: _PairScorer, assign, max_moves):
    """Best-improving local search over single reassignments and swaps."""
    n1, n2 = scorer.n1, scorer.n2
    current = scorer.score(assign)
    moves = 0
    while moves < max_moves:
        best_gain = 1e-12
        best_apply = None
        taken = set(j for j in assign if j is not None)
        free = [j for j in range(n2) if j not in taken]
        for i in range(n1):
            old = assign[i]
            options = free + [None] if old is not None else free
            for j in options:
                assign[i] = j
                gain = scorer.score(assign) - current
                if gain > best_gain:
                    best_gain = gain
                    best_apply = [(i, j)]
                assign[i] = old
        for i1 in range(n1):
            for i2 in range(i1 + 1, n1):
                if assign[i1] is None and assign[i2] is None:
                    continue
                o1, o2 = assign[i1], assign[i2]
                assign[i1], assign[i2] = o2, o1
                gain = scorer.score(assign) - current
                if gain > best_gain:
                    best_gain = gain
                    best_apply = [(i1, o2), (i2, o1)]
                assign[i1], assign[i2] = o1, o2
        if best_apply is None:
            break
        for i, j in best_apply:
            assign[i] = j
        current += best_gain
        moves += 1
    return assign, scorer.score(assign)


def hill_climb_match(g1: GraphRepr, g2: GraphRepr,
                     config: MatchConfig | None = None,
                     pair_index: int = 0) -> MatchResult:
    """Greedy smart start plus seeded random restarts; never beats the oracle.

    pair_index seeds this pair's restart stream independently of corpus
    order, so parallel corpus scoring is order-free.
    """
    config = config or MatchConfig()
    scorer = _PairScorer(g1, g2, config)
    if scorer.n1 == 0 or scorer.n2 == 0:
        return scorer.result([None] * scorer.n1)
    max_moves = config.max_moves if config.max_moves is not None else 10 * scorer.n1 * scorer.n2
    best_assign, best = _climb(scorer, _smart_init(scorer), max_moves)
    best_assign = list(best_assign)
    rng = rng_for(config.seed, pair_index)
    for _ in range(config.restarts):
        assign, s = _climb(scorer, _random_init(scorer, rng), max_moves)
        if s > best + 1e-12:
            best, best_assign = s, list(assign)
    return scorer.result(best_assign)


def smatch_mode(g1: GraphRepr, g2: GraphRepr,
                config: MatchConfig | None = None) -> MatchResult:
    """Hill climbing with exact-match similarities on both instances and relations."""
    config = config or MatchConfig()
    config = replace(config, phi=SimilaritySpec(KRONECKER_DELTA),
                     psi=SimilaritySpec(KRONECKER_DELTA))
    return hill_climb_match(g1, g2, config)


@dataclass(frozen=True)
class CorpusScore:
    precision: float
    recall: float
    f1: float
    per_pair: tuple


def score_pair(g1: GraphRepr, g2: GraphRepr, config: MatchConfig | None = None,
               pair_index: int = 0) -> MatchResult:
    """Hill-climbing result for one system/gold pair."""
    return hill_climb_match(g1, g2, config, pair_index=pair_index)


def corpus_score(pairs, config: MatchConfig | None = None, pool_map=None) -> CorpusScore:
    """Micro-averaged corpus score: summed best scores over summed sizes."""
    config = config or MatchConfig()
    pairs = list(pairs)
    if not pairs:
        raise InputError("empty corpus")
    mapper = pool_map if pool_map is not None else (lambda fn, xs: [fn(x) for x in xs])
    results = list(mapper(_corpus_one, [(g1, g2, config, i) for i, (g1, g2) in enumerate(pairs)]))
    total = sum(r.score for r in results)
    den1 = sum(len(g1.instances) + len(g1.edges) for g1, _ in pairs)
    den2 = sum(len(g2.instances) + len(g2.edges) for _, g2 in pairs)
    p = total / den1 if den1 else 0.0
    r = total / den2 if den2 else 0.0
    return CorpusScore(precision=p, recall=r, f1=_f1(p, r), per_pair=tuple(results))


def _corpus_one(task):
    g1, g2, config, index = task
    return hill_climb_match(g1, g2, config, pair_index=index)
