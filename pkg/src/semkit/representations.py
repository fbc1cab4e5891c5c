"""Flat and graph meaning representations and the conversions between them.

A graph representation holds variables (events and entities), an instance
span per variable, and labeled argument edges between variables.  The flat
representation is the same content as a bag of unary predications plus
binary ARG assertions.  Both directions of the conversion are exact up to
variable renaming.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .base import InputError, natural_key

EVENT = "event"
ENTITY = "entity"
ARG = "ARG"


@dataclass(frozen=True)
class TokenSpan:
    """A surface span: tokens, the head position, optional source positions.

    origin_positions, when present, gives for each token its 0-based index
    in the sentence the span was taken from; it must increase strictly.
    """

    tokens: tuple
    head_index: int
    origin_positions: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        if self.origin_positions is not None:
            object.__setattr__(self, "origin_positions", tuple(self.origin_positions))
        if not self.tokens:
            raise InputError("TokenSpan needs at least one token")
        if not all(isinstance(t, str) and t for t in self.tokens):
            raise InputError("TokenSpan tokens must be nonempty strings")
        if not 0 <= self.head_index < len(self.tokens):
            raise InputError(f"head_index {self.head_index} out of range for {len(self.tokens)} tokens")
        if self.origin_positions is not None:
            if len(self.origin_positions) != len(self.tokens):
                raise InputError("origin_positions must match tokens in length")
            if any(b <= a for a, b in zip(self.origin_positions, self.origin_positions[1:])):
                raise InputError("origin_positions must be strictly increasing")

    @property
    def head(self):
        return self.tokens[self.head_index]


@dataclass(frozen=True)
class Variable:
    """A node identity: opaque id plus event/entity kind."""

    id: str
    kind: str

    def __post_init__(self):
        if self.kind not in (EVENT, ENTITY):
            raise InputError(f"variable kind must be {EVENT!r} or {ENTITY!r}, got {self.kind!r}")
        if not self.id:
            raise InputError("variable id must be nonempty")


@dataclass(frozen=True)
class Violation:
    """One failed invariant: a short code, the offending element, prose."""

    code: str
    element: str
    message: str

    def __str__(self):
        return f"{self.code} [{self.element}]: {self.message}"


@dataclass(frozen=True)
class GraphRepr:
    """Variables, one instance span per variable, labeled argument edges.

    edges maps (governor id, dependent id) to a relation label; the only
    label in scope is ARG, but the mapping keeps the label explicit so
    richer relation inventories need no schema change.
    """

    variables: tuple = ()
    instances: dict = field(default_factory=dict)
    edges: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "instances", dict(self.instances))
        object.__setattr__(self, "edges", dict(self.edges))

    def var(self, var_id):
        for v in self.variables:
            if v.id == var_id:
                return v
        raise KeyError(var_id)

    @property
    def var_ids(self):
        return tuple(v.id for v in self.variables)

    def instance_count(self):
        return len(self.instances)

    def edge_count(self):
        return len(self.edges)


@dataclass(frozen=True)
class FlatRepr:
    """Bag of unary predications (variable, span) plus binary ARG assertions."""

    preds: tuple = ()
    args: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "preds", tuple((v, s) for v, s in self.preds))
        object.__setattr__(self, "args", tuple((g, d, label) for g, d, label in
                                               (a if len(a) == 3 else (a[0], a[1], ARG) for a in self.args)))


def validate(g: GraphRepr):
    """Check every graph invariant; return a list of violations (empty = valid)."""
    out = []
    seen = set()
    for v in g.variables:
        if v.id in seen:
            out.append(Violation("duplicate-variable", v.id, f"variable id {v.id!r} declared more than once"))
        seen.add(v.id)
    for v in g.variables:
        if v.id not in g.instances:
            out.append(Violation("missing-instance", v.id, f"variable {v.id!r} has no instance span"))
    for var_id in g.instances:
        if var_id not in seen:
            out.append(Violation("orphan-instance", var_id, f"instance for undeclared variable {var_id!r}"))
    kind_of = {v.id: v.kind for v in g.variables}
    for (gov, dep), label in g.edges.items():
        if gov not in seen:
            out.append(Violation("dangling-endpoint", gov, f"edge ({gov!r}, {dep!r}) has unknown governor"))
        if dep not in seen:
            out.append(Violation("dangling-endpoint", dep, f"edge ({gov!r}, {dep!r}) has unknown dependent"))
        if gov == dep:
            out.append(Violation("self-edge", gov, f"edge from {gov!r} to itself"))
        if kind_of.get(gov) == ENTITY:
            out.append(Violation("entity-governor", gov, f"ARG governor {gov!r} is an entity"))
        if not label:
            out.append(Violation("empty-label", f"{gov}->{dep}", "edge label must be nonempty"))
    return out


def advisories(g: GraphRepr):
    """Non-fatal oddities: distinct variables sharing an identical span."""
    out = []
    by_span = {}
    for var_id, span in g.instances.items():
        by_span.setdefault(span.tokens, []).append(var_id)
    for tokens, ids in sorted(by_span.items()):
        if len(ids) > 1:
            ids = sorted(ids, key=natural_key)
            out.append(Violation("shared-span", ",".join(ids),
                                 f"variables {ids} share the identical span {list(tokens)}"))
    return out


def _require_valid(g: GraphRepr):
    problems = validate(g)
    if problems:
        raise InputError("invalid graph: " + "; ".join(str(p) for p in problems))


def flat_to_graph(f: FlatRepr) -> GraphRepr:
    """Re-bag a flat representation as a graph; inverse of graph_to_flat."""
    seen = set()
    for v, _ in f.preds:
        if v.id in seen:
            raise InputError(f"duplicate variable {v.id!r} in preds")
        seen.add(v.id)
    edges = {}
    for gov, dep, label in f.args:
        for end in (gov, dep):
            if end.id not in seen:
                raise InputError(f"arg assertion references unknown variable {end.id!r}")
        key = (gov.id, dep.id)
        if key in edges:
            raise InputError(f"duplicate arg assertion {key}")
        edges[key] = label
    g = GraphRepr(variables=tuple(v for v, _ in f.preds),
                  instances={v.id: s for v, s in f.preds},
                  edges=edges)
    _require_valid(g)
    return g


def graph_to_flat(g: GraphRepr) -> FlatRepr:
    """Re-bag a graph as unary predications plus ARG assertions."""
    _require_valid(g)
    by_id = {v.id: v for v in g.variables}
    return FlatRepr(preds=tuple((v, g.instances[v.id]) for v in g.variables),
                    args=tuple((by_id[gov], by_id[dep], label)
                               for (gov, dep), label in g.edges.items()))


def canonical_order(g: GraphRepr):
    """Deterministic variable ordering used for tie-breaking everywhere.

    Orders by structural signature first (kind, instance tokens, head
    position, degrees) and only then by id, so renamed but otherwise equal
    graphs order their variables compatibly.
    """
    out_deg = {v.id: 0 for v in g.variables}
    in_deg = {v.id: 0 for v in g.variables}
    for gov, dep in g.edges:
        out_deg[gov] += 1
        in_deg[dep] += 1

    def key(v):
        span = g.instances.get(v.id)
        tokens = span.tokens if span else ()
        head = span.head_index if span else -1
        return (v.kind, tokens, head, out_deg[v.id], in_deg[v.id], natural_key(v.id))

    return tuple(sorted(g.variables, key=key))


def _signatures(g: GraphRepr, rounds=3):
    """Iteratively refined structural signature per variable."""
    sig = {}
    for v in g.variables:
        span = g.instances.get(v.id)
        sig[v.id] = (v.kind, span.tokens if span else (), span.head_index if span else -1)
    adj_out = {v.id: [] for v in g.variables}
    adj_in = {v.id: [] for v in g.variables}
    for (gov, dep), label in g.edges.items():
        adj_out[gov].append((label, dep))
        adj_in[dep].append((label, gov))
    for _ in range(rounds):
        nxt = {}
        for v in g.variables:
            outs = tuple(sorted((label, sig[d]) for label, d in adj_out[v.id]))
            ins = tuple(sorted((label, sig[s]) for label, s in adj_in[v.id]))
            nxt[v.id] = (sig[v.id], outs, ins)
        sig = nxt
    return sig


def isomorphic(g1: GraphRepr, g2: GraphRepr) -> bool:
    """Exact isomorphism under variable renaming.

    Signature refinement prunes the search; a backtracking assignment over
    signature classes settles ties exactly, so automorphic graphs are not
    misjudged by the cheap normal form alone.
    """
    if len(g1.variables) != len(g2.variables) or len(g1.edges) != len(g2.edges):
        return False
    sig1 = _signatures(g1)
    sig2 = _signatures(g2)
    if sorted(sig1.values()) != sorted(sig2.values()):
        return False
    order1 = [v.id for v in canonical_order(g1)]
    candidates = {a: [b.id for b in g2.variables if sig2[b.id] == sig1[a]] for a in order1}
    order1.sort(key=lambda a: len(candidates[a]))
    edges1, edges2 = g1.edges, g2.edges
    mapping = {}
    used = set()

    def consistent(a, b):
        for c, d in mapping.items():
            if edges1.get((a, c)) != edges2.get((b, d)):
                return False
            if edges1.get((c, a)) != edges2.get((d, b)):
                return False
        return True

    def backtrack(i):
        if i == len(order1):
            return True
        a = order1[i]
        for b in candidates[a]:
            if b in used or not consistent(a, b):
                continue
            mapping[a] = b
            used.add(b)
            if backtrack(i + 1):
                return True
            del mapping[a]
            used.remove(b)
        return False

    return backtrack(0)


def flat_isomorphic(f1: FlatRepr, f2: FlatRepr) -> bool:
    """Isomorphism of flat representations, via their graph forms."""
    return isomorphic(flat_to_graph(f1), flat_to_graph(f2))


# --- serialization -----------------------------------------------------------

_GRAPH_FIELDS = {"vars", "instances", "edges", "skeleton"}
_SPAN_FIELDS = {"tokens", "head_index", "origin_positions"}
_FLAT_FIELDS = {"preds", "args"}


def span_to_obj(span: TokenSpan):
    obj = {"tokens": list(span.tokens), "head_index": span.head_index}
    if span.origin_positions is not None:
        obj["origin_positions"] = list(span.origin_positions)
    return obj


def span_from_obj(obj, strict=True):
    if not isinstance(obj, dict):
        raise InputError("span record must be an object")
    if strict:
        unknown = set(obj) - _SPAN_FIELDS
        if unknown:
            raise InputError(f"unknown span fields: {sorted(unknown)}")
    try:
        return TokenSpan(tokens=tuple(obj["tokens"]),
                         head_index=int(obj["head_index"]),
                         origin_positions=tuple(obj["origin_positions"]) if obj.get("origin_positions") is not None else None)
    except KeyError as exc:
        raise InputError(f"span record missing field {exc.args[0]!r}") from None


def graph_to_obj(g: GraphRepr, skeleton_obj=None):
    """JSON-compatible record for one graph; optional stored nesting plan."""
    obj = {
        "vars": [{"id": v.id, "kind": v.kind} for v in g.variables],
        "instances": {var_id: span_to_obj(span) for var_id, span in g.instances.items()},
        "edges": [[gov, label, dep] for (gov, dep), label in g.edges.items()],
    }
    if skeleton_obj is not None:
        obj["skeleton"] = skeleton_obj
    return obj


def graph_from_obj(obj, strict=True):
    """Parse one graph record; returns (GraphRepr, skeleton object or None)."""
    if not isinstance(obj, dict):
        raise InputError("graph record must be an object")
    if strict:
        unknown = set(obj) - _GRAPH_FIELDS
        if unknown:
            raise InputError(f"unknown graph fields: {sorted(unknown)}")
    try:
        raw_vars = obj["vars"]
        raw_instances = obj["instances"]
        raw_edges = obj["edges"]
    except KeyError as exc:
        raise InputError(f"graph record missing field {exc.args[0]!r}") from None
    variables = []
    for rv in raw_vars:
        if strict and isinstance(rv, dict) and set(rv) - {"id", "kind"}:
            raise InputError(f"unknown var fields: {sorted(set(rv) - {'id', 'kind'})}")
        variables.append(Variable(id=rv["id"], kind=rv["kind"]))
    instances = {var_id: span_from_obj(rec, strict=strict) for var_id, rec in raw_instances.items()}
    edges = {}
    for rec in raw_edges:
        if len(rec) != 3:
            raise InputError(f"edge record must be [governor, label, dependent], got {rec!r}")
        gov, label, dep = rec
        if (gov, dep) in edges:
            raise InputError(f"duplicate edge ({gov!r}, {dep!r})")
        edges[(gov, dep)] = label
    g = GraphRepr(variables=tuple(variables), instances=instances, edges=edges)
    problems = validate(g)
    if problems:
        raise InputError("invalid graph record: " + "; ".join(str(p) for p in problems))
    return g, obj.get("skeleton")


def flat_to_obj(f: FlatRepr):
    return {
        "preds": [[v.id, v.kind, span_to_obj(span)] for v, span in f.preds],
        "args": [[gov.id, label, dep.id] for gov, dep, label in f.args],
    }


def flat_from_obj(obj, strict=True):
    if not isinstance(obj, dict):
        raise InputError("flat record must be an object")
    if strict:
        unknown = set(obj) - _FLAT_FIELDS
        if unknown:
            raise InputError(f"unknown flat fields: {sorted(unknown)}")
    try:
        raw_preds = obj["preds"]
        raw_args = obj["args"]
    except KeyError as exc:
        raise InputError(f"flat record missing field {exc.args[0]!r}") from None
    preds = []
    by_id = {}
    for rec in raw_preds:
        if len(rec) != 3:
            raise InputError(f"pred record must be [id, kind, span], got {rec!r}")
        var = Variable(id=rec[0], kind=rec[1])
        preds.append((var, span_from_obj(rec[2], strict=strict)))
        by_id.setdefault(var.id, var)
    args = []
    for rec in raw_args:
        if len(rec) != 3:
            raise InputError(f"arg record must be [governor, label, dependent], got {rec!r}")
        gov, label, dep = rec
        if gov not in by_id or dep not in by_id:
            missing = gov if gov not in by_id else dep
            raise InputError(f"arg assertion references unknown variable {missing!r}")
        args.append((by_id[gov], by_id[dep], label))
    return FlatRepr(preds=tuple(preds), args=tuple(args))


def dumps_record(obj):
    """One record, one line, deterministic byte form."""
    return json.dumps(obj, ensure_ascii=False, sort_keys=True, separators=(",", ":"))


def loads_record(line, lineno=None):
    try:
        return json.loads(line)
    except json.JSONDecodeError as exc:
        where = f" on line {lineno}" if lineno is not None else ""
        raise InputError(f"bad JSON record{where}: {exc}") from None
