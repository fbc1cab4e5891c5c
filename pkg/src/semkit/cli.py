"""Command-line entry point.

Subcommands: convert, score, coref-score, resolve, kernel.  Every run
prints a JSON manifest to stderr; outputs themselves are deterministic
given the same manifest (the recorded wall time is informational only).

File formats
------------
linear: blank-line-separated blocks.  Line 1 holds space-separated tokens
  (`[ ... ]` predicate spans, `( ... )` argument spans, `_h` head marks,
  `@b` or `•` bullets); following lines are `#coref <bullet_pos>
  <antecedent_pos>` with 0-based token positions.
graph: one JSON record per line with fields `vars` (list of {id, kind}),
  `instances` (id -> {tokens, head_index, origin_positions?}), `edges`
  (list of [governor, label, dependent]), and optional `skeleton`.
flat: one JSON record per line with fields `preds` (list of
  [id, kind, span]) and `args` (list of [governor, label, dependent]).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

from . import __version__
from .base import AlignmentError, InputError, NumericError, SemkitError
from .coref_metrics import avg_f1, chains_from_linearized, corpus_counts
from .linearized import (delinearize_with_skeleton, linearize, parse_corpus,
                         serialize_corpus, serialize_text, skeleton_from_obj,
                         skeleton_to_obj)
from .matching import MatchConfig, brute_force_match, corpus_score
from .representations import (dumps_record, flat_from_obj, flat_to_graph,
                              flat_to_obj, graph_from_obj, graph_to_flat,
                              graph_to_obj, loads_record)
from .resolvers import make_resolver, ResolverSpec
from .similarity import (KRONECKER_DELTA, SENTENCE_BLEU, SMOOTH_ADD_ONE,
                         SMOOTH_NONE, SimilaritySpec)

FORMS = ("flat", "graph", "linear")
_METRICS = ("muc", "b3", "ceafe")


def _default_seed():
    raw = os.environ.get("SEMKIT_SEED", "0")
    try:
        return int(raw)
    except ValueError:
        raise InputError(f"SEMKIT_SEED must be an integer, got {raw!r}") from None


# ----------------------------------------------------------- manifests

def _emit_manifest(args, subcommand, inputs, outputs, config, started):
    manifest = {
        "subcommand": subcommand,
        "inputs": [str(p) for p in inputs],
        "outputs": [str(p) for p in outputs],
        "seed": getattr(args, "seed", None),
        "config": config,
        "version": __version__,
        "wall_time_s": round(time.monotonic() - started, 3),
    }
    line = json.dumps(manifest, sort_keys=True)
    print(f"manifest: {line}", file=sys.stderr)
    path = getattr(args, "manifest", None)
    if path:
        Path(path).write_text(line + "\n", encoding="utf-8")


# --------------------------------------------------------- corpus i/o

def _read_text(path):
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from None


def _write_text(path, text):
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot write {path}: {exc.strerror or exc}") from None


def _read_records(path):
    """JSON-record corpus: one record per nonblank line."""
    out = []
    for lineno, line in enumerate(_read_text(path).splitlines(), start=1):
        if line.strip():
            out.append(loads_record(line, lineno))
    return out


def _load_corpus(path, form):
    """Returns a list of (GraphRepr, skeleton object or None)."""
    if form == "linear":
        blocks = parse_corpus(_read_text(path))
        out = []
        for i, block in enumerate(blocks):
            try:
                g, skel = delinearize_with_skeleton(block)
            except SemkitError as exc:
                raise type(exc)(f"block {i}: {exc}") from None
            out.append((g, skeleton_to_obj(skel)))
        return out
    if form == "graph":
        return [graph_from_obj(obj, strict=True) for obj in _read_records(path)]
    if form == "flat":
        return [(flat_to_graph(flat_from_obj(obj, strict=True)), None)
                for obj in _read_records(path)]
    raise InputError(f"unknown form {form!r}")


def _dump_corpus(items, form):
    """items: list of (GraphRepr, skeleton object or None) -> file text."""
    if form == "linear":
        blocks = []
        for i, (g, skel_obj) in enumerate(items):
            try:
                skel = skeleton_from_obj(skel_obj) if skel_obj is not None else None
                blocks.append(linearize(g, skeleton=skel))
            except SemkitError as exc:
                raise type(exc)(f"block {i}: {exc}") from None
        return serialize_corpus(blocks)
    if form == "graph":
        lines = [dumps_record(graph_to_obj(g, skeleton_obj=skel)) for g, skel in items]
    elif form == "flat":
        lines = [dumps_record(flat_to_obj(graph_to_flat(g))) for g, _ in items]
    else:
        raise InputError(f"unknown form {form!r}")
    return "".join(line + "\n" for line in lines)


# -------------------------------------------------------- subcommands

def cmd_convert(args):
    started = time.monotonic()
    items = _load_corpus(args.input, args.from_form)
    _write_text(args.output, _dump_corpus(items, args.to_form))
    _emit_manifest(args, "convert", [args.input], [args.output],
                   {"from": args.from_form, "to": args.to_form}, started)
    return 0


def _phi_from_flags(args):
    if args.phi == "bleu":
        smoothing = SMOOTH_NONE if args.bleu_smoothing == "none" else SMOOTH_ADD_ONE
        return SimilaritySpec(kind=SENTENCE_BLEU, max_order=args.bleu_max_order,
                              smoothing=smoothing)
    return SimilaritySpec(kind=KRONECKER_DELTA)


def cmd_score(args):
    started = time.monotonic()
    system = _load_corpus(args.system, args.form)
    gold = _load_corpus(args.gold, args.form)
    if len(system) != len(gold):
        raise AlignmentError(
            f"system has {len(system)} blocks, gold has {len(gold)}")
    if not system:
        raise InputError("empty corpus")
    config = MatchConfig(phi=_phi_from_flags(args),
                         psi=SimilaritySpec(KRONECKER_DELTA),
                         restarts=args.restarts, seed=args.seed,
                         oracle_limit=args.oracle_limit)
    pairs = [(s, g) for (s, _), (g, _) in zip(system, gold)]
    if args.workers > 1:
        import multiprocessing

        with multiprocessing.Pool(args.workers) as pool:
            report = corpus_score(pairs, config, pool_map=pool.map)
    else:
        report = corpus_score(pairs, config)

    oracle = None
    if args.oracle:
        hits = eligible = 0
        for (g1, g2), res in zip(pairs, report.per_pair):
            if min(len(g1.variables), len(g2.variables)) > config.oracle_limit:
                continue
            eligible += 1
            exact = brute_force_match(g1, g2, config)
            if res.score <= exact.score + 1e-9 and exact.score - res.score <= 1e-9:
                hits += 1
        oracle = {"eligible": eligible, "hits": hits,
                  "rate": (hits / eligible) if eligible else 1.0}

    if args.json:
        payload = {
            "pairs": [{"id": i, "precision": r.precision, "recall": r.recall,
                       "f1": r.f1, "score": r.score}
                      for i, r in enumerate(report.per_pair)],
            "corpus": {"precision": report.precision, "recall": report.recall,
                       "f1": report.f1},
        }
        if oracle is not None:
            payload["oracle"] = oracle
        print(json.dumps(payload, sort_keys=True))
    else:
        for i, r in enumerate(report.per_pair):
            print(f"{i} {r.precision:.6f} {r.recall:.6f} {r.f1:.6f} {r.score:.6f}")
        print(f"CORPUS {report.precision:.6f} {report.recall:.6f} {report.f1:.6f}")
        if oracle is not None:
            print(f"ORACLE {oracle['hits']} {oracle['eligible']} {oracle['rate']:.6f}")
    _emit_manifest(args, "score", [args.system, args.gold], [],
                   {"form": args.form, "phi": args.phi,
                    "bleu_max_order": args.bleu_max_order,
                    "bleu_smoothing": args.bleu_smoothing,
                    "restarts": args.restarts, "oracle": args.oracle,
                    "workers": args.workers}, started)
    return 0


def _coref_table(keys, responses, which, json_out):
    rows = []
    f1_by_metric = {}
    for metric in _METRICS:
        if which not in (metric, "all"):
            continue
        p, r, f1 = corpus_counts(keys, responses, metric).scores()
        f1_by_metric[metric] = f1
        rows.append((metric, p, r, f1))
    lines = []
    average = None
    if which == "all":
        average = avg_f1(f1_by_metric["muc"], f1_by_metric["b3"], f1_by_metric["ceafe"])
    if json_out:
        payload = {m: {"precision": p, "recall": r, "f1": f1} for m, p, r, f1 in rows}
        if average is not None:
            payload["avg_f1"] = average
        return json.dumps(payload, sort_keys=True)
    lines.append(f"{'metric':<8} {'P':>8} {'R':>8} {'F1':>8}")
    for m, p, r, f1 in rows:
        lines.append(f"{m:<8} {p:8.4f} {r:8.4f} {f1:8.4f}")
    if average is not None:
        lines.append(f"{'avg-f1':<8} {'':>8} {'':>8} {average:8.4f}")
    return "\n".join(lines)


def cmd_coref_score(args):
    started = time.monotonic()
    key_blocks = parse_corpus(_read_text(args.key))
    resp_blocks = parse_corpus(_read_text(args.response))
    if len(key_blocks) != len(resp_blocks):
        raise AlignmentError(
            f"key has {len(key_blocks)} blocks, response has {len(resp_blocks)}")
    keys = [chains_from_linearized(b) for b in key_blocks]
    responses = [chains_from_linearized(b) for b in resp_blocks]
    print(_coref_table(keys, responses, args.metric, args.json))
    _emit_manifest(args, "coref-score", [args.key, args.response], [],
                   {"metric": args.metric}, started)
    return 0


def cmd_resolve(args):
    started = time.monotonic()
    blocks = parse_corpus(_read_text(args.input))
    resolver = make_resolver(ResolverSpec(method=args.method, seed=args.seed))
    out_blocks = []
    for i, block in enumerate(blocks):
        resolution = resolver.predict(block, sentence_index=i)
        for pos in resolution.fallbacks:
            print(f"warning: block {i}: bullet {pos} has no candidate antecedent",
                  file=sys.stderr)
        lines = [serialize_text(block).splitlines()[0]] if block.tokens else []
        for t in sorted(resolution.assignments):
            lines.append(f"#coref {t} {resolution.assignments[t]}")
        out_blocks.append("\n".join(lines))
    text = "\n\n".join(out_blocks) + ("\n" if out_blocks else "")
    _write_text(args.output, text)
    _emit_manifest(args, "resolve", [args.input], [args.output],
                   {"method": args.method}, started)
    return 0


# ------------------------------------------------------------- kernel

def _parse_dims(raw):
    parts = raw.split(",")
    if len(parts) != 3:
        raise InputError("--dims expects embed,hidden,ffnn (three integers)")
    try:
        return tuple(int(p) for p in parts)
    except ValueError:
        raise InputError(f"--dims expects integers, got {raw!r}") from None


def cmd_kernel_gradcheck(args):
    from .kernel import ModelConfig, grad_check

    started = time.monotonic()
    E, H, F = _parse_dims(args.dims)
    config = ModelConfig(src_vocab=9, tgt_vocab=10, embed_dim=E, hidden_dim=H,
                         layers=args.layers, ffnn_dim=F, seed=args.seed)
    worst, report = grad_check(seed=args.seed, mu=args.mu, config=config)
    for name in sorted(report):
        print(f"{name} {report[name]:.3e}")
    print(f"MAX {worst:.3e}")
    _emit_manifest(args, "kernel gradcheck", [], [],
                   {"dims": args.dims, "layers": args.layers, "mu": args.mu}, started)
    if worst >= 1e-4:
        raise NumericError(f"gradient check failed: max relative error {worst:.3e}")
    return 0


def _eval_table(rows):
    lines = [f"{'method':<10} {'muc-f1':>8} {'b3-f1':>8} {'ceafe-f1':>9} {'avg-f1':>8}"]
    for name, scores in rows:
        lines.append(f"{name:<10} {scores['muc']:8.4f} {scores['b3']:8.4f} "
                     f"{scores['ceafe']:9.4f} {scores['avg']:8.4f}")
    return "\n".join(lines)


def _method_scores(keys, responses):
    out = {}
    for metric in _METRICS:
        out[metric] = corpus_counts(keys, responses, metric).scores()[2]
    out["avg"] = avg_f1(out["muc"], out["b3"], out["ceafe"])
    return out


def cmd_kernel_train_toy(args):
    from .kernel import CopyParser, forced_copy_eval, synth_dataset

    started = time.monotonic()
    E, H, F = _parse_dims(args.dims)
    data = synth_dataset(seed=args.seed, size=args.size, vocab=args.vocab,
                         distractors=args.distractors, test_size=args.test_size)
    parser = CopyParser(embed_dim=E, hidden_dim=H, ffnn_dim=F, seed=args.seed,
                        mu=args.mu, lr=args.lr, batch_size=args.batch_size,
                        max_epochs=args.max_epochs, patience=args.patience,
                        phase0_epochs=args.phase0_epochs)
    parser.fit(data)
    keys, copy_resp = forced_copy_eval(data.test, parser.params_, parser.config_)
    rows = [("copy", _method_scores(keys, copy_resp))]
    from .resolvers import forced_decode_eval, resolve_heuristic, resolve_random

    gold = [ex.linear for ex in data.test]
    for name, fn in (("heuristic", resolve_heuristic), ("random", resolve_random)):
        k2, resp = forced_decode_eval(
            gold, lambda g, i, fn=fn: fn(g, seed=args.seed, sentence_index=i))
        rows.append((name, _method_scores(k2, resp)))
    print(_eval_table(rows))
    outputs = []
    if args.out:
        from .kernel import save_model

        save_model(args.out, parser.params_, parser.config_,
                   parser.src_vocab_, parser.tgt_vocab_)
        outputs.append(args.out)
    if args.emit:
        emit_dir = Path(args.emit)
        emit_dir.mkdir(parents=True, exist_ok=True)
        gold_text = serialize_corpus([ex.linear for ex in data.test])
        _write_text(emit_dir / "key.txt", gold_text)
        from .kernel import forced_assignments

        method_lines = {"copy": [], "heuristic": [], "random": []}
        for i, ex in enumerate(data.test):
            token_line = serialize_text(ex.linear).splitlines()[0]
            preds = forced_assignments(ex.example, parser.params_, parser.config_)
            per_method = {
                "copy": {t: k for t, k in preds.items() if k is not None},
                "heuristic": resolve_heuristic(ex.linear, seed=args.seed,
                                               sentence_index=i).assignments,
                "random": resolve_random(ex.linear, seed=args.seed,
                                         sentence_index=i).assignments,
            }
            for name, assignments in per_method.items():
                lines = [token_line]
                for t in sorted(assignments):
                    lines.append(f"#coref {t} {assignments[t]}")
                method_lines[name].append("\n".join(lines))
        for name, blocks in method_lines.items():
            _write_text(emit_dir / f"{name}.txt",
                        "\n\n".join(blocks) + ("\n" if blocks else ""))
        outputs.extend(str(emit_dir / f"{n}.txt")
                       for n in ("key", "copy", "heuristic", "random"))
    _emit_manifest(args, "kernel train-toy", [], outputs,
                   {"size": args.size, "vocab": args.vocab,
                    "distractors": args.distractors, "dims": args.dims,
                    "test_size": args.test_size, "mu": args.mu, "lr": args.lr,
                    "batch_size": args.batch_size, "max_epochs": args.max_epochs,
                    "patience": args.patience,
                    "phase0_epochs": args.phase0_epochs}, started)
    return 0


def cmd_kernel_decode(args):
    from .kernel import greedy_decode_text, load_model

    started = time.monotonic()
    params, config, src_vocab, tgt_vocab = load_model(args.model)
    blocks = []
    for lineno, line in enumerate(_read_text(args.input).splitlines(), start=1):
        if not line.strip():
            continue
        tokens = line.split()
        text, ok = greedy_decode_text(tokens, params, config, src_vocab, tgt_vocab,
                                      max_len=args.max_len)
        if not ok:
            print(f"warning: line {lineno}: decoded sequence is not well formed",
                  file=sys.stderr)
        blocks.append(text)
    _write_text(args.output, "\n\n".join(blocks) + ("\n" if blocks else ""))
    _emit_manifest(args, "kernel decode", [args.model, args.input], [args.output],
                   {"max_len": args.max_len}, started)
    return 0


# -------------------------------------------------------------- parser

def build_parser():
    parser = argparse.ArgumentParser(
        prog="semkit",
        description=__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=f"semkit {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("convert", help="convert a corpus between forms")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--from", dest="from_form", choices=FORMS, required=True)
    p.add_argument("--to", dest="to_form", choices=FORMS, required=True)
    p.add_argument("--manifest")
    p.set_defaults(fn=cmd_convert)

    p = sub.add_parser("score", help="graph similarity over aligned corpora")
    p.add_argument("system")
    p.add_argument("gold")
    p.add_argument("--form", choices=FORMS, default="linear")
    p.add_argument("--phi", choices=("delta", "bleu"), default="delta")
    p.add_argument("--psi", choices=("delta",), default="delta")
    p.add_argument("--bleu-max-order", type=int, default=4)
    p.add_argument("--bleu-smoothing", choices=("none", "add1"), default="add1")
    p.add_argument("--restarts", type=int, default=4)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--oracle", action="store_true",
                   help="cross-check small pairs against brute force")
    p.add_argument("--oracle-limit", type=int, default=8)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--json", action="store_true")
    p.add_argument("--manifest")
    p.set_defaults(fn=cmd_score)

    p = sub.add_parser("coref-score", help="coreference metrics over corpora")
    p.add_argument("key")
    p.add_argument("response")
    p.add_argument("--metric", choices=_METRICS + ("all",), default="all")
    p.add_argument("--json", action="store_true")
    p.add_argument("--manifest")
    p.set_defaults(fn=cmd_coref_score)

    p = sub.add_parser("resolve", help="baseline antecedent prediction")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--method", choices=("heuristic", "random"), required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--manifest")
    p.set_defaults(fn=cmd_resolve)

    p = sub.add_parser("kernel", help="model experiments")
    ksub = p.add_subparsers(dest="kernel_command", required=True)

    k = ksub.add_parser("gradcheck", help="verify analytic gradients")
    k.add_argument("--seed", type=int, default=None)
    k.add_argument("--dims", default="4,4,4", help="embed,hidden,ffnn")
    k.add_argument("--layers", type=int, default=2)
    k.add_argument("--mu", type=float, default=1.0)
    k.add_argument("--manifest")
    k.set_defaults(fn=cmd_kernel_gradcheck)

    k = ksub.add_parser("train-toy", help="train on synthetic data and report")
    k.add_argument("--seed", type=int, default=None)
    k.add_argument("--size", type=int, default=200)
    k.add_argument("--vocab", type=int, default=12)
    k.add_argument("--distractors", type=int, default=2)
    k.add_argument("--test-size", type=int, default=None)
    k.add_argument("--dims", default="16,24,16", help="embed,hidden,ffnn")
    k.add_argument("--mu", type=float, default=1.0)
    k.add_argument("--lr", type=float, default=2e-3)
    k.add_argument("--batch-size", type=int, default=16)
    k.add_argument("--max-epochs", type=int, default=60)
    k.add_argument("--patience", type=int, default=3)
    k.add_argument("--phase0-epochs", type=int, default=None,
                   help="cap the pretraining phase at this many epochs")
    k.add_argument("--out", help="checkpoint path")
    k.add_argument("--emit", help="directory for key/response corpora")
    k.add_argument("--manifest")
    k.set_defaults(fn=cmd_kernel_train_toy)

    k = ksub.add_parser("decode", help="greedy generation from source lines")
    k.add_argument("input", help="one space-separated source sentence per line")
    k.add_argument("output")
    k.add_argument("--model", required=True)
    k.add_argument("--max-len", type=int, default=200)
    k.add_argument("--manifest")
    k.set_defaults(fn=cmd_kernel_decode)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if getattr(args, "seed", 0) is None:
            args.seed = _default_seed()
        return args.fn(args)
    except AlignmentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except NumericError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SemkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
