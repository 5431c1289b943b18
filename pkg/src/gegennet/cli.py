"""Command-line entry points for the full pipeline.

Subcommands: prepare, init-features, train, evaluate, analyze-spectrum,
selftest. Exit statuses: 0 success, 1 usage error, 2 data error, 3 numerical
failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import sys
import time
from pathlib import Path

from .analysis import fit_report, spectral_signal, write_fit_report
from .features import load_feature_cache, random_features, save_feature_cache, \
    spectral_features
from .filters import study_curves
from .graph import GraphFormatError, build_sign_matrices, load_edge_list, load_split, \
    normalize_adjacency, save_split, split_edges, symmetrize
from .linalg import ConvergenceError
from .metrics import evaluate
from .model import ModelConfig, TrainingDivergedError, load_checkpoint, save_checkpoint, \
    score_edges, train

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _parse_ratios(text):
    parts = text.split(",")
    if len(parts) != 3:
        raise _UsageError(f"ratios must be three comma-separated numbers, got {text!r}")
    try:
        return tuple(float(p) for p in parts)
    except ValueError:
        raise _UsageError(f"ratios must be numeric, got {text!r}") from None


def load_config(path) -> ModelConfig:
    """Read a flat key = value config document mirroring ModelConfig fields.

    Unknown keys are errors so typos fail fast. '#' starts a comment; string
    values may be quoted.
    """
    fields = {f.name: f.type for f in dataclasses.fields(ModelConfig)}
    doc = {}
    with open(path, "r", encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise GraphFormatError(f"{path}:{lineno}: expected key = value")
            key, _, value = line.partition("=")
            key = key.strip()
            value = value.strip().strip("\"'")
            if key not in fields:
                raise GraphFormatError(f"{path}:{lineno}: unknown config key {key!r}")
            doc[key] = value
    typed = {}
    defaults = ModelConfig()
    for key, value in doc.items():
        current = getattr(defaults, key)
        if isinstance(current, bool):
            typed[key] = value.lower() in ("1", "true", "yes")
        elif isinstance(current, int):
            typed[key] = int(value)
        elif isinstance(current, float):
            typed[key] = float(value)
        else:
            typed[key] = value
    return ModelConfig(**typed)


def config_hash(cfg: ModelConfig) -> str:
    canon = json.dumps(cfg.to_dict(), sort_keys=True)
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:16]


def _build_parser() -> _Parser:
    parser = _Parser(prog="gegennet", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prepare", help="parse an edge list and write a split manifest")
    p.add_argument("--input", required=True)
    p.add_argument("--ratios", default="0.8,0.1,0.1")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", required=True)

    p = sub.add_parser("init-features", help="compute and cache spectral features")
    p.add_argument("--input", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--d", type=int, default=32)
    p.add_argument("--mu", type=float, default=0.3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--signed-laplacian", action="store_true")
    p.add_argument("--output", required=True)

    p = sub.add_parser("train", help="train the model and write metrics/checkpoint")
    p.add_argument("--input", required=True)
    p.add_argument("--manifest", help="split manifest; omit to split with --ratios/--seed")
    p.add_argument("--ratios", default="0.8,0.1,0.1")
    p.add_argument("--seed", type=int, help="overrides the config seed")
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--dataset", default="unnamed")
    p.add_argument("--features", help="feature cache from init-features")
    p.add_argument("--random-features", action="store_true",
                   help="seeded random features instead of spectral ones")
    p.add_argument("--output-dir", required=True)

    p = sub.add_parser("evaluate", help="score a checkpoint on a split part")
    p.add_argument("--input", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--split", choices=("train", "validation", "test"), default="test")
    p.add_argument("--dataset", default="unnamed")
    p.add_argument("--output", help="metrics JSON path (default stdout)")

    p = sub.add_parser("analyze-spectrum", help="eigen-targets of held-out edges + curve fits")
    p.add_argument("--input", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--source", choices=("pos", "neg"), default="pos")
    p.add_argument("--target", choices=("pos", "neg"), default="pos")
    p.add_argument("--output", required=True, help="signal CSV path")
    p.add_argument("--report", help="optional per-curve residual CSV path")

    p = sub.add_parser("selftest", help="run the oracle property suite on synthetic graphs")
    p.add_argument("--seed", type=int, default=0)

    return parser


def _resolve_config(args) -> ModelConfig:
    cfg = load_config(args.config) if args.config else ModelConfig()
    if getattr(args, "seed", None) is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    return cfg


def _metrics_doc(dataset, cfg, metrics, epochs_run, best_epoch, wall_seconds):
    return {
        "dataset": dataset,
        "seed": cfg.seed,
        "config_hash": config_hash(cfg),
        "auc": metrics.auc,
        "macro_f1": metrics.macro_f1,
        "f1_positive": metrics.f1_positive,
        "f1_negative": metrics.f1_negative,
        "epochs_run": epochs_run,
        "best_epoch": best_epoch,
        "wall_seconds": wall_seconds,
    }


def _write_json(doc, path):
    text = json.dumps(doc, sort_keys=True, indent=2) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _cmd_prepare(args) -> int:
    g = load_edge_list(args.input)
    split = split_edges(g, _parse_ratios(args.ratios), args.seed)
    save_split(split, args.output)
    print(f"{args.input}: {g.u_count} x {g.v_count} nodes, {g.n_edges} edges -> "
          f"train {len(split.train)} / val {len(split.validation)} / test {len(split.test)}")
    return EXIT_OK


def _cmd_init_features(args) -> int:
    g = load_edge_list(args.input)
    split = load_split(args.manifest)
    feats = spectral_features(g, edge_subset=split.train, d=args.d, mu=args.mu,
                              seed=args.seed, use_signed_laplacian=args.signed_laplacian)
    save_feature_cache(args.output, feats)
    print(f"wrote {feats.x.shape[0]} x {feats.d} features to {args.output}")
    return EXIT_OK


def _cmd_train(args) -> int:
    started = time.perf_counter()
    g = load_edge_list(args.input)
    cfg = _resolve_config(args)
    if args.manifest:
        split = load_split(args.manifest)
    else:
        split = split_edges(g, _parse_ratios(args.ratios), cfg.seed)
    if split.n_edges != g.n_edges:
        raise GraphFormatError(
            f"manifest covers {split.n_edges} edges but graph has {g.n_edges}")

    if args.random_features:
        x = random_features(g.n_nodes, cfg.feature_dim, seed=cfg.seed)
    elif args.features:
        x = load_feature_cache(args.features).x
    else:
        x = spectral_features(g, edge_subset=split.train, d=cfg.feature_dim,
                              mu=cfg.mu, seed=cfg.seed).x

    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "history.jsonl", "w", encoding="utf-8") as hist_file:
        result = train(g, split, x, cfg,
                       log=lambda rec: hist_file.write(json.dumps(rec) + "\n"))

    test_scores = score_edges(g, split, x, result.params, cfg, split.test)
    metrics = evaluate(test_scores, g.edge_signs(split.test))
    wall = time.perf_counter() - started
    save_checkpoint(out / "model.ckpt", cfg, result.params)
    save_split(split, out / "split.json")
    doc = _metrics_doc(args.dataset, cfg, metrics, result.epochs_run,
                       result.best_epoch, wall)
    _write_json(doc, out / "metrics.json")
    print(f"test auc {metrics.auc:.4f}  macro-f1 {metrics.macro_f1:.4f}  "
          f"({result.epochs_run} epochs, best {result.best_epoch}, {wall:.1f}s)")
    return EXIT_OK


def _cmd_evaluate(args) -> int:
    started = time.perf_counter()
    g = load_edge_list(args.input)
    split = load_split(args.manifest)
    cfg, params = load_checkpoint(args.checkpoint)
    x = spectral_features(g, edge_subset=split.train, d=cfg.feature_dim,
                          mu=cfg.mu, seed=cfg.seed).x
    part = getattr(split, args.split)
    scores = score_edges(g, split, x, params, cfg, part)
    metrics = evaluate(scores, g.edge_signs(part))
    doc = _metrics_doc(args.dataset, cfg, metrics, 0, 0, time.perf_counter() - started)
    _write_json(doc, args.output)
    return EXIT_OK


def _cmd_analyze_spectrum(args) -> int:
    g = load_edge_list(args.input)
    split = load_split(args.manifest)
    train_m = build_sign_matrices(g, split.train)
    test_m = build_sign_matrices(g, split.test)
    source = train_m.a_pos if args.source == "pos" else train_m.a_neg
    target = test_m.a_pos if args.target == "pos" else test_m.a_neg
    a_hat = normalize_adjacency(symmetrize(source))
    y = symmetrize(target)  # raw 0/1 indicator, deliberately unnormalized
    signal = spectral_signal(a_hat, y, source_sign=args.source, target_sign=args.target)
    signal.to_csv(args.output)
    if args.report:
        write_fit_report(fit_report(signal, study_curves()), args.report)
    print(f"wrote {signal.lambdas.size} spectral points to {args.output}")
    return EXIT_OK


def _cmd_selftest(args) -> int:
    from .selftest import run_selftest
    failures = run_selftest(seed=args.seed, emit=print)
    return EXIT_OK if failures == 0 else EXIT_NUMERICAL


_COMMANDS = {
    "prepare": _cmd_prepare,
    "init-features": _cmd_init_features,
    "train": _cmd_train,
    "evaluate": _cmd_evaluate,
    "analyze-spectrum": _cmd_analyze_spectrum,
    "selftest": _cmd_selftest,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConvergenceError, TrainingDivergedError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (GraphFormatError, FileNotFoundError, json.JSONDecodeError,
            ValueError, KeyError, IndexError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
