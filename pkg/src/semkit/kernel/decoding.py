"""Evaluation protocols for the trained model.

Forced evaluation keeps gold target tokens fixed and only asks the model
for antecedents, so assignment quality is measured in isolation from
generation quality.
"""

from __future__ import annotations

from ..base import InputError
from ..coref_metrics import chains_from_linearized
from .network import forced_assignments, greedy_decode


def forced_copy_eval(examples, params, config):
    """Key and response chain sets for a list of synthetic examples."""
    if not examples:
        raise InputError("no examples to evaluate")
    keys = []
    responses = []
    for ex in examples:
        keys.append(chains_from_linearized(ex.linear))
        preds = forced_assignments(ex.example, params, config)
        links = {t: k for t, k in preds.items() if k is not None}
        responses.append(chains_from_linearized(ex.linear, assignments=links))
    return keys, responses


def assignment_accuracy(examples, params, config):
    """Fraction of assignments resolved to the gold coreference set.

    A prediction counts as correct when it lands on any position that the
    gold assignments connect to the bullet's own chain.
    """
    total = 0
    hit = 0
    for ex in examples:
        gold = ex.example.A
        if not gold:
            continue
        parent = {}

        def find(a):
            parent.setdefault(a, a)
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        for t, k in gold.items():
            ra, rb = find(t), find(k)
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)
        preds = forced_assignments(ex.example, params, config)
        for t, k in gold.items():
            total += 1
            p = preds.get(t)
            if p is not None and find(p) == find(k):
                hit += 1
    if total == 0:
        raise InputError("no assignments in the evaluation set")
    return hit / total


def greedy_decode_text(source_tokens, params, config, src_vocab, tgt_vocab, max_len=200):
    """Greedy generation rendered as a text block; raises no parse errors.

    Returns (lines, ok) where lines is the token line plus any coref lines;
    ok is False when the emitted token sequence is not a valid sentence.
    """
    from ..linearized import parse_text, serialize_text

    X = src_vocab.ids(source_tokens)
    ids, assignments = greedy_decode(X, params, config, tgt_vocab, max_len=max_len)
    surface = [tgt_vocab.tokens[i] for i in ids]
    lines = [" ".join(surface)]
    for t in sorted(assignments):
        lines.append(f"#coref {t} {assignments[t]}")
    text = "\n".join(lines)
    try:
        linear = parse_text(text)
    except InputError:
        return text, False
    return serialize_text(linear), True
