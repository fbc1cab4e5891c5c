"""Shared random builders for the fuzz suites.

Graphs built here always satisfy the representation invariants; the
round-trip builders additionally give every entity a governing event so the
default nesting plan can place it.
"""

import numpy as np
import pytest

from semkit.base import rng_for
from semkit.representations import (ENTITY, EVENT, GraphRepr, TokenSpan,
                                    Variable)

WORDS = ["storm", "surge", "flood", "coast", "report", "warn", "reach",
         "water", "town", "levee", "rain", "wind"]


def random_span(rng, max_len=3):
    n = int(rng.integers(1, max_len + 1))
    tokens = tuple(WORDS[int(rng.integers(len(WORDS)))] for _ in range(n))
    return TokenSpan(tokens=tokens, head_index=int(rng.integers(n)))


def random_graph(rng, max_vars=6, p_edge=0.5, governed_entities=False):
    """Valid random graph; optionally every entity gets an event governor."""
    n = int(rng.integers(1, max_vars + 1))
    n_events = int(rng.integers(1, n + 1)) if governed_entities else int(rng.integers(0, n + 1))
    variables = []
    for i in range(n_events):
        variables.append(Variable(f"e{i + 1}", EVENT))
    for i in range(n - n_events):
        variables.append(Variable(f"x{i + 1}", ENTITY))
    instances = {v.id: random_span(rng) for v in variables}
    edges = {}
    events = [v.id for v in variables if v.kind == EVENT]
    for gov in events:
        for dep in variables:
            if dep.id == gov:
                continue
            if rng.random() < p_edge:
                edges[(gov, dep.id)] = "ARG"
    if governed_entities and events:
        for v in variables:
            if v.kind == ENTITY and not any(d == v.id for _, d in edges):
                gov = events[int(rng.integers(len(events)))]
                edges[(gov, v.id)] = "ARG"
    return GraphRepr(variables=tuple(variables), instances=instances, edges=edges)


def renamed(g: GraphRepr, rng):
    """Same graph under a random variable renaming."""
    ids = list(g.var_ids)
    perm = rng.permutation(len(ids))
    new_id = {ids[i]: f"n{int(perm[i]) + 1}" for i in range(len(ids))}
    variables = tuple(Variable(new_id[v.id], v.kind) for v in g.variables)
    instances = {new_id[k]: s for k, s in g.instances.items()}
    edges = {(new_id[a], new_id[b]): lab for (a, b), lab in g.edges.items()}
    return GraphRepr(variables=variables, instances=instances, edges=edges)


@pytest.fixture
def rng():
    return rng_for(0, 1234)
