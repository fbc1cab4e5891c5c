"""The linearized representation: bracketed token sequences with coreference.

A block is one sentence: predicate spans in square brackets, argument spans
in parentheses, `_h` marking the head word of each span, and a bullet token
(`@b` on ASCII output, `•` accepted and optionally emitted) standing for a
re-mentioned argument.  Every bullet carries an assignment to an earlier
token; all other tokens carry the empty assignment.

File format (one corpus = blank-line-separated blocks):
    line 1: space-separated tokens
    then:   #coref <bullet_pos> <antecedent_pos>   (0-based positions)
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .base import DelinearizeError, InputError, LinearizeError, natural_key
from .representations import (ARG, ENTITY, EVENT, GraphRepr, TokenSpan,
                              Variable, Violation, canonical_order, validate)

OPEN_PRED = "open_pred"
CLOSE_PRED = "close_pred"
OPEN_ARG = "open_arg"
CLOSE_ARG = "close_arg"
BULLET = "bullet"
WORD = "word"

BULLET_ASCII = "@b"
BULLET_UTF8 = "•"

_STRUCTURAL = {
    "[": OPEN_PRED,
    "]": CLOSE_PRED,
    "(": OPEN_ARG,
    ")": CLOSE_ARG,
}
_STRUCTURAL_TEXT = {v: k for k, v in _STRUCTURAL.items()}


@dataclass(frozen=True)
class LinToken:
    """One token: a bracket, a bullet, or a word with an optional head mark."""

    kind: str
    surface: str = ""
    is_head: bool = False

    def __post_init__(self):
        if self.kind not in (OPEN_PRED, CLOSE_PRED, OPEN_ARG, CLOSE_ARG, BULLET, WORD):
            raise InputError(f"unknown token kind {self.kind!r}")
        if self.kind == WORD:
            if not self.surface:
                raise InputError("word surface must be nonempty")
            if any(ch.isspace() for ch in self.surface):
                raise InputError(f"word surface {self.surface!r} contains whitespace")
        else:
            if self.surface or self.is_head:
                raise InputError(f"{self.kind} token takes no surface or head mark")


def word(surface, head=False):
    return LinToken(WORD, surface, head)


def bullet():
    return LinToken(BULLET)


def open_pred():
    return LinToken(OPEN_PRED)


def close_pred():
    return LinToken(CLOSE_PRED)


def open_arg():
    return LinToken(OPEN_ARG)


def close_arg():
    return LinToken(CLOSE_ARG)


@dataclass(frozen=True)
class LinearizedRepr:
    """Token sequence plus coreference assignments.

    assignments maps each bullet position to its antecedent position; every
    position absent from the mapping has the empty assignment.
    """

    tokens: tuple = ()
    assignments: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(self, "assignments", dict(self.assignments))

    def assignment(self, pos):
        """Antecedent position for pos, or None for the empty assignment."""
        return self.assignments.get(pos)


# --- token escaping ----------------------------------------------------------


def _escaped_at(raw, i):
    n = 0
    j = i - 1
    while j >= 0 and raw[j] == "\\":
        n += 1
        j -= 1
    return n % 2 == 1


def _unescape(raw):
    out = []
    i = 0
    while i < len(raw):
        if raw[i] == "\\":
            if i + 1 >= len(raw):
                raise InputError(f"dangling escape in token {raw!r}")
            out.append(raw[i + 1])
            i += 2
        else:
            out.append(raw[i])
            i += 1
    return "".join(out)


def _escape_word(tok: LinToken) -> str:
    raw = tok.surface.replace("\\", "\\\\")
    if raw.endswith("_h"):
        raw = raw[:-2] + "\\_h"
    if raw in _STRUCTURAL or raw in (BULLET_ASCII, BULLET_UTF8):
        raw = "\\" + raw
    if tok.is_head:
        raw += "_h"
    return raw


def _parse_raw_token(raw: str) -> LinToken:
    if raw in _STRUCTURAL:
        return LinToken(_STRUCTURAL[raw])
    if raw in (BULLET_ASCII, BULLET_UTF8):
        return LinToken(BULLET)
    is_head = False
    if raw.endswith("_h") and not _escaped_at(raw, len(raw) - 2):
        is_head = True
        raw = raw[:-2]
    surface = _unescape(raw)
    if not surface:
        raise InputError("empty word after unescaping")
    return LinToken(WORD, surface, is_head)


def render_token(tok: LinToken, ascii_bullet=True) -> str:
    if tok.kind == WORD:
        return _escape_word(tok)
    if tok.kind == BULLET:
        return BULLET_ASCII if ascii_bullet else BULLET_UTF8
    return _STRUCTURAL_TEXT[tok.kind]


# --- validation --------------------------------------------------------------


def validate_linearized(l: LinearizedRepr):
    """Check every linearized invariant; return violations (empty = valid)."""
    out = []
    stack = []
    matched = True
    for pos, tok in enumerate(l.tokens):
        if tok.kind in (OPEN_PRED, OPEN_ARG):
            stack.append((tok.kind, pos))
        elif tok.kind in (CLOSE_PRED, CLOSE_ARG):
            want = OPEN_PRED if tok.kind == CLOSE_PRED else OPEN_ARG
            if not stack or stack[-1][0] != want:
                out.append(Violation("unbalanced-span", str(pos),
                                     f"unmatched closer at position {pos}"))
                matched = False
                if stack:
                    stack.pop()
            else:
                stack.pop()
    for kind, pos in stack:
        out.append(Violation("unbalanced-span", str(pos), f"unclosed span opened at position {pos}"))
        matched = False

    for pos, ant in sorted(l.assignments.items()):
        if not 0 <= pos < len(l.tokens) or l.tokens[pos].kind != BULLET:
            out.append(Violation("assignment-not-bullet", str(pos),
                                 f"assignment at position {pos} does not name a bullet"))
            continue
        if not 0 <= ant < pos:
            out.append(Violation("assignment-not-earlier", str(pos),
                                 f"bullet at {pos} assigned to non-earlier position {ant}"))
            continue
        if l.tokens[ant].kind not in (WORD, BULLET):
            out.append(Violation("assignment-target-kind", str(pos),
                                 f"bullet at {pos} assigned to a structural token at {ant}"))
    for pos, tok in enumerate(l.tokens):
        if tok.kind == BULLET and pos not in l.assignments:
            out.append(Violation("bullet-unassigned", str(pos),
                                 f"bullet at position {pos} has no assignment"))

    if not matched:
        return out

    # Span-shape checks need a well-nested sequence.
    analysis = _analyze(l.tokens)
    for idx, span in enumerate(analysis.spans):
        heads = sum(1 for kind, p in span.items
                    if kind == "word" and l.tokens[p].is_head)
        bullets = [p for kind, p in span.items if kind == "bullet"]
        if span.kind == "pred" and bullets:
            out.append(Violation("bullet-in-pred", str(bullets[0]),
                                 f"bullet at {bullets[0]} inside a predicate span"))
        count = heads + len(bullets)
        if count != 1:
            out.append(Violation("head-count", str(span.open_pos),
                                 f"span at {span.open_pos} has {count} heads at its top level"))
    for kind, pos in analysis.root_items:
        if kind == "bullet":
            out.append(Violation("bullet-outside-arg", str(pos),
                                 f"bullet at {pos} is not inside an argument span"))
    return out


# --- structural analysis -----------------------------------------------------


@dataclass(frozen=True)
class SpanInfo:
    """One span in document order: its extent, parent, and top-level items."""

    kind: str                 # "pred" | "arg"
    open_pos: int
    close_pos: int
    parent: int | None        # index of the innermost enclosing span
    items: tuple              # ("word"|"bullet", pos) or ("span", index)

    def word_positions(self):
        return tuple(p for kind, p in self.items if kind == "word")

    def bullet_positions(self):
        return tuple(p for kind, p in self.items if kind == "bullet")

    def is_lone_bullet(self):
        return self.kind == "arg" and len(self.items) == 1 and self.items[0][0] == "bullet"


@dataclass(frozen=True)
class LinearAnalysis:
    """Span tree of a well-nested token sequence."""

    spans: tuple              # SpanInfo, document order by open_pos
    root_items: tuple         # items at nesting depth zero
    owner: dict               # token position -> innermost span index (absent = root)

    def innermost(self, pos):
        return self.owner.get(pos)


def _analyze(tokens) -> LinearAnalysis:
    spans = []
    open_stack = []           # (span index, items list)
    root_items = []
    owner = {}
    raw = []                  # mutable span records

    def current_items():
        return open_stack[-1][1] if open_stack else root_items

    for pos, tok in enumerate(tokens):
        if tok.kind in (OPEN_PRED, OPEN_ARG):
            idx = len(raw)
            parent = open_stack[-1][0] if open_stack else None
            record = {"kind": "pred" if tok.kind == OPEN_PRED else "arg",
                      "open": pos, "close": -1, "parent": parent, "items": []}
            current_items().append(("span", idx))
            raw.append(record)
            open_stack.append((idx, record["items"]))
        elif tok.kind in (CLOSE_PRED, CLOSE_ARG):
            if not open_stack:
                raise InputError(f"unmatched closer at position {pos}")
            idx, _ = open_stack.pop()
            raw[idx]["close"] = pos
        else:
            if open_stack:
                owner[pos] = open_stack[-1][0]
            current_items().append(("word" if tok.kind == WORD else "bullet", pos))
    if open_stack:
        raise InputError(f"unclosed span opened at position {raw[open_stack[0][0]]['open']}")
    spans = tuple(SpanInfo(kind=r["kind"], open_pos=r["open"], close_pos=r["close"],
                           parent=r["parent"], items=tuple(r["items"]))
                  for r in raw)
    return LinearAnalysis(spans=spans, root_items=tuple(root_items), owner=owner)


def analyze(l: LinearizedRepr) -> LinearAnalysis:
    """Span tree of a valid representation (raises on bad nesting)."""
    return _analyze(l.tokens)


def resolve_antecedent(l: LinearizedRepr, pos: int) -> int:
    """Follow bullet-to-bullet assignments from pos down to a word position."""
    seen = set()
    while l.tokens[pos].kind == BULLET:
        if pos in seen:
            raise InputError(f"assignment cycle through position {pos}")
        seen.add(pos)
        nxt = l.assignment(pos)
        if nxt is None:
            raise InputError(f"bullet at {pos} has no assignment")
        pos = nxt
    return pos


# --- block parsing and serialization ----------------------------------------

_COREF_RE = re.compile(r"^#coref\s+(\d+)\s+(\d+)\s*$")


def parse_text(block: str) -> LinearizedRepr:
    """Parse one block (token line plus #coref lines) into a representation."""
    lines = [ln for ln in block.split("\n") if ln.strip()]
    if not lines:
        return LinearizedRepr()
    tokens = tuple(_parse_raw_token(raw) for raw in lines[0].split())
    assignments = {}
    for ln in lines[1:]:
        m = _COREF_RE.match(ln.strip())
        if not m:
            raise InputError(f"expected '#coref <bullet> <antecedent>', got {ln.strip()!r}")
        pos, ant = int(m.group(1)), int(m.group(2))
        if pos >= len(tokens) or ant >= len(tokens):
            raise InputError(f"coref line {pos} {ant} out of range for {len(tokens)} tokens")
        if pos in assignments:
            raise InputError(f"duplicate coref line for position {pos}")
        assignments[pos] = ant
    l = LinearizedRepr(tokens=tokens, assignments=assignments)
    problems = validate_linearized(l)
    if problems:
        raise InputError("invalid block: " + "; ".join(str(p) for p in problems))
    return l


def serialize_text(l: LinearizedRepr, ascii_bullet=True) -> str:
    """Render one block; parse_text inverts this exactly."""
    if not l.tokens:
        return ""
    lines = [" ".join(render_token(t, ascii_bullet) for t in l.tokens)]
    for pos in sorted(l.assignments):
        lines.append(f"#coref {pos} {l.assignments[pos]}")
    return "\n".join(lines)


def parse_corpus(text: str):
    """Parse a blank-line-separated corpus into a list of representations."""
    stripped = text.strip()
    if not stripped:
        return []
    out = []
    for i, block in enumerate(re.split(r"\n\s*\n", stripped)):
        try:
            out.append(parse_text(block))
        except InputError as exc:
            raise InputError(f"block {i}: {exc}") from None
    return out


def serialize_corpus(reprs, ascii_bullet=True) -> str:
    """Deterministic corpus rendering: blocks joined by one blank line."""
    if not reprs:
        return ""
    return "\n\n".join(serialize_text(l, ascii_bullet) for l in reprs) + "\n"


# --- skeletons ---------------------------------------------------------------


@dataclass(frozen=True)
class SpanNode:
    """One rendered span in the nesting plan.

    A first mention (remention=False) renders the variable's full span with
    child spans interleaved at the given word offsets.  A re-mention renders
    a lone-bullet argument span; cite is the absolute token position the
    bullet points at (None = the head word of the first mention).
    """

    var: str
    remention: bool = False
    cite: int | None = None
    children: tuple = ()      # ((offset, SpanNode), ...)


@dataclass(frozen=True)
class Skeleton:
    """Nesting plan: the lexical span tree over a graph's variables."""

    roots: tuple = ()


def skeleton_to_obj(s: Skeleton):
    def node(n: SpanNode):
        obj = {"var": n.var}
        if n.remention:
            obj["remention"] = True
            if n.cite is not None:
                obj["cite"] = n.cite
        if n.children:
            obj["children"] = [[off, node(c)] for off, c in n.children]
        return obj

    return {"roots": [node(n) for n in s.roots]}


def skeleton_from_obj(obj) -> Skeleton:
    if not isinstance(obj, dict) or set(obj) - {"roots"}:
        raise InputError("skeleton record must be an object with a 'roots' field")

    def node(rec):
        if not isinstance(rec, dict) or set(rec) - {"var", "remention", "cite", "children"}:
            raise InputError(f"bad skeleton node {rec!r}")
        return SpanNode(var=rec["var"],
                        remention=bool(rec.get("remention", False)),
                        cite=rec.get("cite"),
                        children=tuple((int(off), node(c)) for off, c in rec.get("children", ())))

    return Skeleton(roots=tuple(node(r) for r in obj.get("roots", ())))


# --- delinearize -------------------------------------------------------------


def _enclosing_pred(analysis: LinearAnalysis, span_idx):
    """Index of the nearest enclosing predicate span (start at span_idx itself)."""
    idx = span_idx
    while idx is not None:
        if analysis.spans[idx].kind == "pred":
            return idx
        idx = analysis.spans[idx].parent
    return None


def _governor_for_item(analysis, level_items, item_pos_in_level, level_span_idx, arg_item):
    """Rules for governor resolution at one nesting level.

    Argument items: nearest preceding sibling predicate, else nearest
    enclosing predicate, else nearest following sibling predicate.
    Predicate items: nearest enclosing predicate only.
    """
    if arg_item:
        for j in range(item_pos_in_level - 1, -1, -1):
            kind, val = level_items[j]
            if kind == "span" and analysis.spans[val].kind == "pred":
                return val
        enclosing = _enclosing_pred(analysis, level_span_idx)
        if enclosing is not None:
            return enclosing
        for j in range(item_pos_in_level + 1, len(level_items)):
            kind, val = level_items[j]
            if kind == "span" and analysis.spans[val].kind == "pred":
                return val
        return None
    if level_span_idx is None:
        return None
    return _enclosing_pred(analysis, level_span_idx)


def delinearize(l: LinearizedRepr) -> GraphRepr:
    """Graph reading of a valid linearized representation."""
    return delinearize_with_skeleton(l)[0]


def delinearize_with_skeleton(l: LinearizedRepr):
    """Graph reading plus the lexical skeleton that reproduces the exact bytes."""
    problems = validate_linearized(l)
    if problems:
        raise DelinearizeError("invalid linearized representation: "
                               + "; ".join(str(p) for p in problems))
    if not l.tokens:
        return GraphRepr(), Skeleton()
    analysis = _analyze(l.tokens)

    for kind, pos in analysis.root_items:
        if kind == "word":
            raise DelinearizeError(f"word at position {pos} belongs to no span")

    # Variables per span, in opening order; lone-bullet spans introduce none.
    span_var = {}
    event_n = entity_n = 0
    variables = []
    instances = {}
    for idx, span in enumerate(analysis.spans):
        if span.kind == "pred":
            event_n += 1
            var = Variable(f"e{event_n}", EVENT)
        else:
            if span.is_lone_bullet():
                continue
            if span.bullet_positions():
                raise DelinearizeError(
                    f"span at {span.open_pos} mixes a bullet with other top-level items")
            entity_n += 1
            var = Variable(f"x{entity_n}", ENTITY)
        words = span.word_positions()
        tokens = tuple(l.tokens[p].surface for p in words)
        head_candidates = [i for i, p in enumerate(words) if l.tokens[p].is_head]
        span_var[idx] = var.id
        variables.append(var)
        instances[var.id] = TokenSpan(tokens=tokens, head_index=head_candidates[0],
                                      origin_positions=words)

    def owner_var(pos):
        """Variable owning a token position, following bullet chains."""
        pos = resolve_antecedent(l, pos)
        idx = analysis.innermost(pos)
        if idx is None:
            raise DelinearizeError(f"antecedent token at {pos} is not inside any span")
        if idx not in span_var:
            # Inside a lone-bullet span: impossible for words; bullets resolved above.
            raise DelinearizeError(f"antecedent token at {pos} has no owning variable")
        return span_var[idx]

    # Edges, walking every level in document order.
    edges = {}

    def add_edge(gov, dep, where):
        if gov == dep:
            raise DelinearizeError(f"re-mention at {where} creates a self-edge on {gov}")
        # Relations form a set: a repeated argument collapses onto one edge.
        edges[(gov, dep)] = ARG

    levels = [(None, analysis.root_items)]
    levels.extend((idx, span.items) for idx, span in enumerate(analysis.spans))
    for level_idx, items in levels:
        for j, (kind, val) in enumerate(items):
            if kind == "span":
                child = analysis.spans[val]
                arg_item = child.kind == "arg"
                gov_idx = _governor_for_item(analysis, items, j, level_idx, arg_item)
                if gov_idx == val:
                    gov_idx = None
                if gov_idx is None:
                    if arg_item:
                        raise DelinearizeError(
                            f"argument span at {child.open_pos} has no governing predicate")
                    continue
                gov = span_var[gov_idx]
                if child.is_lone_bullet():
                    bpos = child.bullet_positions()[0]
                    add_edge(gov, owner_var(bpos), bpos)
                else:
                    add_edge(gov, span_var[val], child.open_pos)

    g = GraphRepr(variables=tuple(variables), instances=instances, edges=edges)
    bad = validate(g)
    if bad:
        raise DelinearizeError("graph reading violates invariants: "
                               + "; ".join(str(p) for p in bad))

    # Lexical skeleton, capturing offsets and bullet cites verbatim.
    def capture(idx):
        span = analysis.spans[idx]
        if span.is_lone_bullet():
            bpos = span.bullet_positions()[0]
            return SpanNode(var=owner_var(bpos), remention=True, cite=l.assignment(bpos))
        children = []
        words_seen = 0
        for kind, val in span.items:
            if kind == "word":
                words_seen += 1
            elif kind == "span":
                children.append((words_seen, capture(val)))
        return SpanNode(var=span_var[idx], children=tuple(children))

    roots = tuple(capture(val) for kind, val in analysis.root_items if kind == "span")
    return g, Skeleton(roots=roots)


# --- linearize ---------------------------------------------------------------


def _order_key(g: GraphRepr):
    canon = {v.id: i for i, v in enumerate(canonical_order(g))}

    def key(var_id):
        span = g.instances[var_id]
        if span.origin_positions is not None:
            head_pos = span.origin_positions[span.head_index]
        else:
            head_pos = float("inf")
        return (head_pos, canon[var_id])

    return key


def default_skeleton(g: GraphRepr) -> Skeleton:
    """Nesting plan used when the caller supplies none.

    Depth-first from ungoverned events: the first rendering of a variable is
    its full span, later governors see a lone-bullet re-mention.  Dependent
    event clauses nest inside the governor's predicate span; entity
    arguments follow it as siblings.  Sibling order follows head origin
    positions when present, canonical order otherwise.
    """
    key = _order_key(g)
    deps = {v.id: [] for v in g.variables}
    event_governors = {v.id: 0 for v in g.variables}
    for gov, dep in g.edges:
        deps[gov].append(dep)
    for gov, dep in g.edges:
        if g.var(dep).kind == EVENT:
            event_governors[dep] += 1
    for var_id in deps:
        deps[var_id].sort(key=key)
    kind_of = {v.id: v.kind for v in g.variables}
    mentioned = set()

    def clause(event_id):
        mentioned.add(event_id)
        inner = []
        nested_here = set()
        # Nested event clauses render inside the predicate span, before any
        # sibling argument, so they claim their first mentions first.
        for dep in deps[event_id]:
            if dep not in mentioned and kind_of[dep] == EVENT:
                nested_here.add(dep)
                inner.extend(clause(dep))
        after = []
        for dep in deps[event_id]:
            if dep in nested_here:
                continue
            if dep in mentioned:
                after.append(SpanNode(var=dep, remention=True))
            else:
                mentioned.add(dep)
                after.append(SpanNode(var=dep))
        n_words = len(g.instances[event_id].tokens)
        node = SpanNode(var=event_id,
                        children=tuple((n_words, child) for child in inner))
        return [node] + after

    events = sorted((v.id for v in g.variables if v.kind == EVENT), key=key)
    roots = []
    while True:
        pending = [e for e in events if e not in mentioned]
        if not pending:
            break
        unforced = [e for e in pending if event_governors[e] == 0]
        start = unforced[0] if unforced else pending[0]
        roots.extend(clause(start))
    unplaced = [v.id for v in g.variables if v.id not in mentioned]
    if unplaced:
        unplaced.sort(key=natural_key)
        raise LinearizeError(f"entity {unplaced[0]} has no governing event")
    return Skeleton(roots=tuple(roots))


def linearize(g: GraphRepr, skeleton: Skeleton | None = None) -> LinearizedRepr:
    """Render a graph to the linear form under a nesting plan."""
    bad = validate(g)
    if bad:
        raise LinearizeError("invalid graph: " + "; ".join(str(p) for p in bad))
    if skeleton is None:
        skeleton = default_skeleton(g)

    known = {v.id for v in g.variables}
    first_mentions = []

    def scan(node: SpanNode):
        if node.var not in known:
            raise LinearizeError(f"skeleton names unknown variable {node.var!r}")
        if not node.remention:
            first_mentions.append(node.var)
        for off, child in node.children:
            if node.remention:
                raise LinearizeError("re-mention nodes take no children")
            scan(child)

    for root in skeleton.roots:
        scan(root)
    if sorted(first_mentions) != sorted(known):
        dup = {v for v in first_mentions if first_mentions.count(v) > 1}
        if dup:
            raise LinearizeError(f"skeleton renders {sorted(dup)[0]!r} more than once")
        missing = sorted(known - set(first_mentions), key=natural_key)
        raise LinearizeError(f"skeleton omits variable {missing[0]!r}")

    tokens = []
    assignments = {}
    head_pos_of = {}          # var id -> absolute position of its head word
    owner_of_pos = {}         # emitted word/bullet position -> var id
    pending_cites = []

    def emit(node: SpanNode):
        var = g.var(node.var)
        if node.remention:
            tokens.append(open_arg())
            bpos = len(tokens)
            tokens.append(bullet())
            owner_of_pos[bpos] = node.var
            tokens.append(close_arg())
            if node.cite is not None:
                pending_cites.append((bpos, node.cite, node.var))
            else:
                if node.var not in head_pos_of:
                    raise LinearizeError(
                        f"re-mention of {node.var!r} renders before its first mention")
                assignments[bpos] = head_pos_of[node.var]
            return
        span = g.instances[node.var]
        opener, closer = (open_pred, close_pred) if var.kind == EVENT else (open_arg, close_arg)
        tokens.append(opener())
        children = sorted(node.children, key=lambda oc: oc[0])
        ci = 0
        for slot in range(len(span.tokens) + 1):
            while ci < len(children) and children[ci][0] <= slot:
                if children[ci][0] < slot:
                    raise LinearizeError(
                        f"child offset {children[ci][0]} out of range in span of {node.var!r}")
                emit(children[ci][1])
                ci += 1
            if slot < len(span.tokens):
                pos = len(tokens)
                tokens.append(word(span.tokens[slot], head=(slot == span.head_index)))
                owner_of_pos[pos] = node.var
                if slot == span.head_index:
                    head_pos_of[node.var] = pos
        if ci < len(children):
            raise LinearizeError(
                f"child offset {children[ci][0]} out of range in span of {node.var!r}")
        tokens.append(closer())

    for root in skeleton.roots:
        emit(root)

    for bpos, cite, var_id in pending_cites:
        if not 0 <= cite < bpos:
            raise LinearizeError(f"cite {cite} is not an earlier position than bullet {bpos}")
        if owner_of_pos.get(cite) != var_id:
            raise LinearizeError(f"cite {cite} does not land on a token of {var_id!r}")
        assignments[bpos] = cite

    out = LinearizedRepr(tokens=tuple(tokens), assignments=assignments)
    problems = validate_linearized(out)
    if problems:
        raise LinearizeError("rendered representation is invalid: "
                             + "; ".join(str(p) for p in problems))
    return out
