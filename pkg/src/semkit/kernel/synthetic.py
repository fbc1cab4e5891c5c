"""Synthetic parallel corpus for exercising the copy mechanism.

Each sentence pairs a flat foreign source with a linearized target.  The
source repeats the full words of a re-mentioned entity; the target writes
the re-mention as a bullet that must point at the first mention.  Same-type
competing arguments differ only in their modifier word, so picking the
right antecedent requires context, not just the head word.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..base import InputError, rng_for
from ..linearized import (BULLET_ASCII, LinearizedRepr, LinToken, bullet,
                          close_arg, close_pred, open_arg, open_pred,
                          render_token, validate_linearized, word)
from .config import BOS, EOS, TrainingExample, Vocab


@dataclass(frozen=True)
class SynthExample:
    """One sentence: surface source, gold linearized target, id encoding."""

    source_tokens: tuple
    linear: LinearizedRepr
    example: TrainingExample


@dataclass(frozen=True)
class SynthDataset:
    train: tuple
    val: tuple
    test: tuple
    src_vocab: Vocab
    tgt_vocab: Vocab
    seed: int
    distractors: int


def _inventory(vocab, distractors):
    n_preds = max(2, vocab // 3)
    n_types = max(2, vocab // 3)
    n_mods = max(distractors + 2, vocab - n_preds - n_types)
    return n_preds, n_types, n_mods


def _vocabs(vocab, distractors):
    n_preds, n_types, n_mods = _inventory(vocab, distractors)
    words = ([f"v{j}" for j in range(n_preds)]
             + [f"n{j}" for j in range(n_types)]
             + [f"m{j}" for j in range(n_mods)])
    src_tokens = ["s.,"] + [f"s.{w}" for w in words]
    src_vocab = Vocab(tuple(src_tokens), tuple(False for _ in src_tokens))
    tgt_tokens = [BOS, EOS, "[", "]", "(", ")", BULLET_ASCII]
    tgt_tokens += [f"v{j}_h" for j in range(n_preds)]
    tgt_tokens += [f"n{j}_h" for j in range(n_types)]
    tgt_tokens += [f"m{j}" for j in range(n_mods)]
    flags = tuple(t == BULLET_ASCII or t.endswith("_h") for t in tgt_tokens)
    return src_vocab, Vocab(tuple(tgt_tokens), flags)


def encode_example(source_tokens, linear, src_vocab, tgt_vocab) -> TrainingExample:
    """Id-encode a (source, linearized target) pair, appending the end id."""
    X = src_vocab.ids(source_tokens)
    rendered = [render_token(tok, ascii_bullet=True) for tok in linear.tokens]
    Y = tuple(tgt_vocab.ids(rendered)) + (tgt_vocab.id(EOS),)
    heads = tuple(tgt_vocab.head_flags[i] for i in Y)
    return TrainingExample(X=X, Y=Y, A=dict(linear.assignments), heads=heads)


def _mention(src, toks, mod, typ):
    """Append one full argument mention to both sides; returns head position."""
    src.append(f"s.m{mod}")
    src.append(f"s.n{typ}")
    toks.append(open_arg())
    toks.append(word(f"m{mod}"))
    pos = len(toks)
    toks.append(word(f"n{typ}", head=True))
    toks.append(close_arg())
    return pos


def _bullet_mention(src, toks, assignments, cite, mod, typ):
    """Append a re-mention: repeated words on the source, a bullet on the target."""
    src.append(f"s.m{mod}")
    src.append(f"s.n{typ}")
    toks.append(open_arg())
    pos = len(toks)
    toks.append(bullet())
    toks.append(close_arg())
    assignments[pos] = cite
    return pos


def _clause_open(src, toks, pred, first):
    if not first:
        src.append("s.,")
    src.append(f"s.v{pred}")
    toks.append(open_pred())
    toks.append(word(f"v{pred}", head=True))
    toks.append(close_pred())


def _sentence(rng, vocab, distractors):
    n_preds, n_types, n_mods = _inventory(vocab, distractors)
    tau = int(rng.integers(n_types))
    m0 = int(rng.integers(n_mods))
    other_mods = [m for m in range(n_mods) if m != m0]
    if len(other_mods) < distractors:
        raise InputError("vocabulary too small for the requested distractors")
    picked = rng.choice(len(other_mods), size=distractors, replace=False)
    dmods = [other_mods[int(j)] for j in picked]
    other_types = [t for t in range(n_types) if t != tau]
    r = 1 + int(rng.integers(0, min(2, len(other_types))))
    picked = rng.choice(len(other_types), size=r, replace=False)
    others = [(int(rng.integers(n_mods)), other_types[int(j)]) for j in picked]

    args = ([("anchor", m0, tau)]
            + [("distractor", m, tau) for m in dmods]
            + [("other", m, t) for (m, t) in others])
    order = rng.permutation(len(args))
    args = [args[int(j)] for j in order]

    src = []
    toks = []
    assignments = {}
    _clause_open(src, toks, int(rng.integers(n_preds)), first=True)
    anchor_pos = None
    other_pos = {}
    for role, mod, typ in args:
        pos = _mention(src, toks, mod, typ)
        if role == "anchor":
            anchor_pos = pos
        elif role == "other":
            other_pos[pos] = (mod, typ)
    cited_other = min(other_pos) if other_pos else None

    _clause_open(src, toks, int(rng.integers(n_preds)), first=False)
    _bullet_mention(src, toks, assignments, anchor_pos, m0, tau)
    if rng.random() < 0.3:
        # Filler mention.  Its type must stay clear of every head a later
        # bullet can cite, and its surface must not duplicate an earlier
        # mention: a repeated surface always becomes a bullet, so an exact
        # duplicate would make the target depend on more than the source.
        safe = [t for t in other_types
                if cited_other is None or t != other_pos[cited_other][1]]
        if safe:
            typ = safe[int(rng.integers(len(safe)))]
            used = {m for _, m, t in args if t == typ}
            free = [m for m in range(n_mods) if m not in used]
            if free:
                mod = free[int(rng.integers(len(free)))]
                _mention(src, toks, mod, typ)

    if rng.random() < 0.4:
        _clause_open(src, toks, int(rng.integers(n_preds)), first=False)
        if other_pos and rng.random() < 0.5:
            mod, typ = other_pos[cited_other]
            _bullet_mention(src, toks, assignments, cited_other, mod, typ)
        else:
            _bullet_mention(src, toks, assignments, anchor_pos, m0, tau)

    linear = LinearizedRepr(tokens=tuple(toks), assignments=assignments)
    problems = validate_linearized(linear)
    if problems:
        raise InputError(f"generated an invalid sentence: {problems[0].message}")
    return tuple(src), linear


def synth_dataset(seed=0, size=200, vocab=12, distractors=2,
                  val_size=None, test_size=None) -> SynthDataset:
    """Deterministic train/validation/test splits of generated sentences.

    size=0 yields an entirely empty dataset (unless the val/test sizes are
    given explicitly).
    """
    if size < 0:
        raise InputError("size must be nonnegative")
    if distractors < 0:
        raise InputError("distractors must be nonnegative")
    if val_size is None:
        val_size = max(1, size // 10) if size else 0
    if test_size is None:
        test_size = max(1, size // 10) if size else 0
    src_vocab, tgt_vocab = _vocabs(vocab, distractors)

    def make_split(stream, count):
        out = []
        for i in range(count):
            rng = rng_for(seed, 10 + stream, i)
            src, linear = _sentence(rng, vocab, distractors)
            out.append(SynthExample(
                source_tokens=src, linear=linear,
                example=encode_example(src, linear, src_vocab, tgt_vocab)))
        return tuple(out)

    return SynthDataset(
        train=make_split(0, size), val=make_split(1, val_size),
        test=make_split(2, test_size), src_vocab=src_vocab,
        tgt_vocab=tgt_vocab, seed=seed, distractors=distractors)
