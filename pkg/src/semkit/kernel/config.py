"""Model configuration, vocabularies, training examples, checkpoints."""

from __future__ import annotations

import json
import zipfile
from dataclasses import asdict, dataclass

import numpy as np

from ..base import InputError

FORMAT_VERSION = "semkit-model/1"
BOS = "<s>"
EOS = "</s>"


@dataclass(frozen=True)
class ModelConfig:
    """Dimensions and seed of one encoder-decoder instance."""

    src_vocab: int
    tgt_vocab: int
    embed_dim: int = 16
    hidden_dim: int = 24
    layers: int = 1
    ffnn_dim: int = 16
    mu: float = 1.0
    seed: int = 0

    def __post_init__(self):
        for name in ("src_vocab", "tgt_vocab", "embed_dim", "hidden_dim", "layers", "ffnn_dim"):
            if getattr(self, name) < 1:
                raise InputError(f"{name} must be at least 1")


@dataclass(frozen=True)
class Vocab:
    """Token inventory with a head flag per type.

    Head-marked words and the bullet count as head tokens; they are the
    only permissible copy antecedents.
    """

    tokens: tuple
    head_flags: tuple

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(self, "head_flags", tuple(bool(f) for f in self.head_flags))
        if len(self.tokens) != len(self.head_flags):
            raise InputError("tokens and head_flags must align")
        if len(set(self.tokens)) != len(self.tokens):
            raise InputError("duplicate token in vocabulary")

    @property
    def size(self):
        return len(self.tokens)

    def id(self, token):
        try:
            return self.tokens.index(token)
        except ValueError:
            raise InputError(f"token {token!r} not in vocabulary") from None

    def ids(self, tokens):
        index = {t: i for i, t in enumerate(self.tokens)}
        try:
            return tuple(index[t] for t in tokens)
        except KeyError as exc:
            raise InputError(f"token {exc.args[0]!r} not in vocabulary") from None

    def head_ids(self):
        return frozenset(i for i, f in enumerate(self.head_flags) if f)


def build_vocab(sentences, specials=(), head_of=None) -> Vocab:
    """Vocabulary over token strings; head_of decides per-type head flags."""
    seen = []
    for s in specials:
        if s not in seen:
            seen.append(s)
    vocab_set = set(seen)
    for sent in sentences:
        for tok in sent:
            if tok not in vocab_set:
                seen.append(tok)
                vocab_set.add(tok)
    flags = tuple(bool(head_of(t)) if head_of else False for t in seen)
    return Vocab(tokens=tuple(seen), head_flags=flags)


@dataclass(frozen=True)
class TrainingExample:
    """Source ids, target ids, assignments, and per-step head flags.

    assignments maps target positions to earlier target positions; positions
    absent from the mapping carry the empty assignment.  heads aligns with Y
    and marks permissible copy antecedents.
    """

    X: tuple
    Y: tuple
    A: dict
    heads: tuple

    def __post_init__(self):
        object.__setattr__(self, "X", tuple(int(i) for i in self.X))
        object.__setattr__(self, "Y", tuple(int(i) for i in self.Y))
        object.__setattr__(self, "A", {int(k): int(v) for k, v in self.A.items()})
        object.__setattr__(self, "heads", tuple(bool(h) for h in self.heads))
        if len(self.heads) != len(self.Y):
            raise InputError("heads must align with Y")
        if not self.X or not self.Y:
            raise InputError("examples need nonempty X and Y")
        for t, k in self.A.items():
            if not 0 <= k < t < len(self.Y):
                raise InputError(f"assignment {t}->{k} is not to an earlier position")


def save_model(path, params, config: ModelConfig, src_vocab: Vocab, tgt_vocab: Vocab):
    """Versioned checkpoint: weight arrays plus an embedded JSON record."""
    meta = {
        "format": FORMAT_VERSION,
        "config": asdict(config),
        "src_vocab": {"tokens": list(src_vocab.tokens), "head_flags": list(src_vocab.head_flags)},
        "tgt_vocab": {"tokens": list(tgt_vocab.tokens), "head_flags": list(tgt_vocab.head_flags)},
    }
    arrays = dict(params)
    arrays["__meta__"] = np.array(json.dumps(meta, sort_keys=True))
    # Through a handle so the file lands at exactly this path, whatever
    # its suffix.
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)


def load_model(path):
    """Inverse of save_model: (params, config, src_vocab, tgt_vocab)."""
    try:
        data = np.load(path, allow_pickle=False)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from None
    except (ValueError, zipfile.BadZipFile):
        raise InputError(f"{path} is not a model checkpoint") from None
    with data:
        if "__meta__" not in data:
            raise InputError(f"{path} is not a model checkpoint")
        meta = json.loads(str(data["__meta__"][()]))
        if meta.get("format") != FORMAT_VERSION:
            raise InputError(f"unsupported checkpoint format {meta.get('format')!r}")
        params = {k: data[k].astype(np.float64) for k in data.files if k != "__meta__"}
    config = ModelConfig(**meta["config"])
    src_vocab = Vocab(tuple(meta["src_vocab"]["tokens"]), tuple(meta["src_vocab"]["head_flags"]))
    tgt_vocab = Vocab(tuple(meta["tgt_vocab"]["tokens"]), tuple(meta["tgt_vocab"]["head_flags"]))
    return params, config, src_vocab, tgt_vocab
