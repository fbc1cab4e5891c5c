"""Graph-based semantic representations: formats, metrics, and models."""

from .base import (AlignmentError, BaseEstimator, InputError, NotFittedError,
                   NumericError, SemkitError, rng_for)
from .coref_metrics import (MentionChainSet, MetricCounts, assignment_max,
                            avg_f1, b_cubed_counts, ceaf_e_counts,
                            chains_from_linearized, corpus_counts, muc_counts)
from .linearized import (DelinearizeError, LinearizedRepr, LinearizeError,
                         LinToken, Skeleton, SpanNode, default_skeleton,
                         delinearize, delinearize_with_skeleton, linearize,
                         parse_corpus, parse_text, serialize_corpus,
                         serialize_text, skeleton_from_obj, skeleton_to_obj,
                         validate_linearized)
from .matching import (CorpusScore, MatchConfig, MatchResult,
                       brute_force_match, corpus_score, evaluate_mapping,
                       hill_climb_match, score_pair, smatch_mode)
from .representations import (ARG, ENTITY, EVENT, FlatRepr, GraphRepr,
                              TokenSpan, Variable, Violation, advisories,
                              canonical_order, dumps_record, flat_from_obj,
                              flat_isomorphic, flat_to_graph, flat_to_obj,
                              graph_from_obj, graph_to_flat, graph_to_obj,
                              isomorphic, loads_record, validate)
from .resolvers import (HeuristicResolver, RandomResolver, Resolution,
                        ResolverSpec, forced_decode_eval, make_resolver,
                        resolve_heuristic, resolve_random)
from .similarity import (KRONECKER_DELTA, SENTENCE_BLEU, SMOOTH_ADD_ONE,
                         SMOOTH_NONE, SimilaritySpec, delta, sentence_bleu,
                         similarity)

__version__ = "0.1.0"

__all__ = [
    "ARG", "AlignmentError", "BaseEstimator", "CorpusScore",
    "DelinearizeError", "ENTITY", "EVENT", "FlatRepr", "GraphRepr",
    "HeuristicResolver", "InputError", "KRONECKER_DELTA", "LinToken",
    "LinearizeError", "LinearizedRepr", "MatchConfig", "MatchResult",
    "MentionChainSet", "MetricCounts", "NotFittedError", "NumericError",
    "RandomResolver", "Resolution", "ResolverSpec", "SENTENCE_BLEU",
    "SMOOTH_ADD_ONE", "SMOOTH_NONE", "SemkitError", "SimilaritySpec",
    "Skeleton", "SpanNode", "TokenSpan", "Variable", "Violation",
    "advisories", "assignment_max", "avg_f1", "b_cubed_counts",
    "brute_force_match", "canonical_order", "ceaf_e_counts",
    "chains_from_linearized", "corpus_counts", "corpus_score",
    "default_skeleton", "delinearize", "delinearize_with_skeleton", "delta",
    "dumps_record", "evaluate_mapping", "flat_from_obj", "flat_isomorphic",
    "flat_to_graph", "flat_to_obj", "forced_decode_eval", "graph_from_obj",
    "graph_to_flat", "graph_to_obj", "hill_climb_match", "isomorphic",
    "linearize", "loads_record", "make_resolver", "muc_counts",
    "parse_corpus", "parse_text", "resolve_heuristic", "resolve_random",
    "rng_for", "score_pair", "sentence_bleu", "serialize_corpus",
    "serialize_text", "similarity", "skeleton_from_obj", "skeleton_to_obj",
    "smatch_mode", "validate", "validate_linearized", "__version__",
]
