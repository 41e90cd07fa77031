"""Command-line interface.

Subcommands: ``synth``, ``split``, ``mask``, ``train``, ``estimate-priors``,
``evaluate``.  Exit codes: 0 success, 2 usage/config/input error, 3 data
condition (a label without any observed positive).

Reports are JSON documents; every report carries the tool version, the
command and (for ``train``) the fully resolved configuration.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from . import __version__
from .config import ConfigError, RunConfig, apply_overrides, format_config, parse_config, parse_priors
from .data import (MultiLabelDataset, SplitSpec, load_dataset, load_single_positive,
                   mask_single_positive, save_dataset, save_single_positive, split_indices)
from .model import CheckpointError, forward_probs, init_classifier, load_checkpoint, save_checkpoint
from .prior import EstimatorConfig, MissingPositivesError, estimate_all_priors
from .synth import SynthConfig, generate
from .trainer import evaluate, train

log = logging.getLogger("crisp")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 2, 3


class UsageError(Exception):
    pass


def _write_json(doc: dict, out: str | None) -> None:
    text = json.dumps(doc, indent=2, allow_nan=False)
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text + "\n")
    else:
        sys.stdout.write(text + "\n")


def _report(command: str, **body) -> dict:
    return {"tool": "crisp", "version": __version__, "command": command, **body}


def _load_full(path, c=None, q=None) -> MultiLabelDataset:
    try:
        return load_dataset(path, c, q)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror or exc}") from None
    except ValueError as exc:
        raise UsageError(f"{path}: {exc}") from None


def _load_sp(path, c=None, q=None):
    try:
        return load_single_positive(path, c, q)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror or exc}") from None
    except ValueError as exc:
        raise UsageError(f"{path}: {exc}") from None


def _load_model(path):
    try:
        return load_checkpoint(path)
    except OSError as exc:
        raise UsageError(f"cannot read checkpoint {path}: {exc.strerror or exc}") from None
    except CheckpointError as exc:
        raise UsageError(f"{path}: {exc}") from None


def _load_truth(path) -> list:
    try:
        doc = json.loads(Path(path).read_text())
        return [float(v) for v in doc["realized_priors"]]
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"cannot read truth sidecar {path}: {exc}") from None


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def cmd_synth(args) -> int:
    priors = parse_priors(args.priors)
    if len(priors) != args.c:
        raise UsageError(f"prior count mismatch: {len(priors)} priors for --c {args.c}")
    try:
        cfg = SynthConfig(n=args.n, q=args.q, c=args.c, target_priors=priors,
                          separability=args.separability, label_correlation=args.label_correlation,
                          seed=args.seed)
        ds, realized = generate(cfg)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_dataset(ds, out / "dataset.txt")
    _write_json({
        "n": cfg.n, "q": cfg.q, "c": cfg.c, "seed": cfg.seed,
        "separability": cfg.separability, "label_correlation": cfg.label_correlation,
        "target_priors": list(cfg.target_priors), "realized_priors": realized.tolist(),
    }, str(out / "truth.json"))
    print(f"wrote {out / 'dataset.txt'} ({cfg.n} x {cfg.q}, c={cfg.c})")
    return EXIT_OK


def cmd_split(args) -> int:
    ds = _load_full(args.data, args.num_classes, args.num_features)
    try:
        fr = parse_priors(args.fractions)
        if len(fr) != 3:
            raise ValueError("expected three fractions")
        spec = SplitSpec(*fr, seed=args.seed)
        parts = split_indices(ds.n, spec)
    except (ValueError, ConfigError) as exc:
        raise UsageError(str(exc)) from None
    prefix = args.out or str(Path(args.data).with_suffix(""))
    for name, idx in zip(("train", "val", "test"), parts):
        save_dataset(ds.subset(idx), f"{prefix}.{name}")
    print(f"split {ds.n} rows -> {', '.join(str(len(p)) for p in parts)} ({prefix}.train/.val/.test)")
    return EXIT_OK


def cmd_mask(args) -> int:
    ds = _load_full(args.data, args.num_classes, args.num_features)
    try:
        sp, dropped = mask_single_positive(ds, args.seed)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    save_single_positive(sp, args.out)
    kept = ds.labels[sp.source_index]
    _write_json({
        "source": str(args.data), "seed": args.seed, "n": sp.n, "dropped": dropped,
        "realized_priors": kept.mean(axis=0).tolist(),
        "observed_counts": sp.positive_counts().tolist(),
    }, args.out + ".truth.json")
    print(f"wrote {args.out} ({sp.n} rows, dropped {dropped} without positives)")
    return EXIT_OK


def _resolve_config(args) -> RunConfig:
    cfg = RunConfig()
    if args.config:
        try:
            cfg = parse_config(Path(args.config).read_text(), cfg)
        except OSError as exc:
            raise UsageError(f"cannot read config {args.config}: {exc.strerror}") from None
    pairs = {}
    for item in args.set or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        pairs[key.strip()] = value
    for key in ("epochs", "seed", "hidden"):
        if getattr(args, key) is not None:
            pairs[key] = str(getattr(args, key))
    if args.method is not None:
        pairs["method"] = args.method
    if args.fixed_priors is not None:
        pairs["fixed_priors"] = args.fixed_priors
    return apply_overrides(cfg, pairs)


def cmd_train(args) -> int:
    cfg = _resolve_config(args)
    sp = _load_sp(args.train, args.num_classes, args.num_features)
    if cfg.fixed_priors is not None and len(cfg.fixed_priors) != sp.c:
        raise UsageError(f"--fixed-priors has {len(cfg.fixed_priors)} values for c={sp.c}")
    val = _load_full(args.val, sp.c, sp.q) if args.val else None
    test = _load_full(args.test, sp.c, sp.q) if args.test else None
    truth = _load_truth(args.truth) if args.truth else None
    if truth is not None and len(truth) != sp.c:
        raise UsageError(f"truth sidecar has {len(truth)} priors for c={sp.c}")

    dims = [sp.q, cfg.hidden, sp.c] if cfg.hidden else [sp.q, sp.c]
    model = init_classifier(dims, cfg.seed)
    t0 = time.perf_counter()
    try:
        model, rep = train(model, sp, cfg.train_config(), val=val, true_priors=truth)
    except MissingPositivesError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    total = time.perf_counter() - t0

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ckpt = out / "model.ckpt"
    save_checkpoint(model, ckpt)
    (out / "config.txt").write_text(format_config(cfg))
    rep.checkpoint = str(ckpt)
    doc = _report(
        "train",
        config=cfg.to_dict(),
        data={"train": str(args.train), "n": sp.n, "q": sp.q, "c": sp.c,
              "observed_counts": sp.positive_counts().tolist()},
        train=rep.to_dict(),
        timings={
            "total_seconds": total,
            "epoch_seconds": [e.wall_time for e in rep.epochs],
            "prior_estimation_seconds": [e.prior_time for e in rep.epochs],
        },
    )
    if rep.epochs:
        doc["final_priors"] = rep.epochs[-1].priors
    if test is not None:
        doc["test_metrics"] = evaluate(model, test).to_dict()
    _write_json(doc, str(out / "report.json"))
    print(f"trained {len(rep.epochs)} epochs; checkpoint {ckpt}; report {out / 'report.json'}")
    return EXIT_OK


def cmd_estimate_priors(args) -> int:
    model = _load_model(args.checkpoint)
    sp = _load_sp(args.data, args.num_classes or model.n_outputs, args.num_features or model.n_inputs)
    if (sp.q, sp.c) != (model.n_inputs, model.n_outputs):
        raise UsageError(f"data shape (q={sp.q}, c={sp.c}) does not match checkpoint {model.layer_dims}")
    try:
        cfg = EstimatorConfig(args.delta, args.tau)
        est = estimate_all_priors(forward_probs(model, sp.features), sp, cfg)
    except MissingPositivesError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    _write_json(_report("estimate-priors", config={"delta": cfg.delta, "tau": cfg.tau},
                        priors=est.to_dict()), args.out)
    return EXIT_OK


def cmd_evaluate(args) -> int:
    model = _load_model(args.checkpoint)
    test = _load_full(args.test, args.num_classes or model.n_outputs, args.num_features or model.n_inputs)
    try:
        metrics = evaluate(model, test)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    _write_json(_report("evaluate", metrics=metrics.to_dict()), args.out)
    return EXIT_OK


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------

def _dims_flags(p):
    p.add_argument("--num-classes", type=int, help="class count when the file has no header")
    p.add_argument("--num-features", type=int, help="feature count when the file has no header")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="crisp", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"crisp {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic multi-label dataset with known priors")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--q", type=int, default=20)
    p.add_argument("--c", type=int, required=True)
    p.add_argument("--priors", required=True, help="comma-separated target priors")
    p.add_argument("--separability", type=float, default=1.0)
    p.add_argument("--label-correlation", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("split", help="seeded train/val/test split")
    p.add_argument("--data", required=True)
    p.add_argument("--fractions", default="0.8,0.1,0.1")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output prefix (default: input path without suffix)")
    _dims_flags(p)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("mask", help="keep one random positive label per instance")
    p.add_argument("--data", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    _dims_flags(p)
    p.set_defaults(func=cmd_mask)

    p = sub.add_parser("train", help="warm-up + alternating prior estimation and risk minimisation")
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key")
    p.add_argument("--train", required=True, help="single-positive training file")
    p.add_argument("--val", help="fully labelled validation file")
    p.add_argument("--test", help="fully labelled test file, evaluated once after training")
    p.add_argument("--truth", help="sidecar JSON with realized_priors")
    p.add_argument("--fixed-priors", help="comma-separated priors; disables estimation")
    p.add_argument("--epochs", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--hidden", type=int, help="hidden width (0 = linear model)")
    p.add_argument("--method", choices=("crisp", "an"))
    p.add_argument("--out", required=True, help="output directory")
    _dims_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("estimate-priors", help="estimate class priors with a trained model")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True, help="single-positive dataset")
    p.add_argument("--delta", type=float, default=0.01)
    p.add_argument("--tau", type=float, default=0.01)
    p.add_argument("--out", help="report path (default: stdout)")
    _dims_flags(p)
    p.set_defaults(func=cmd_estimate_priors)

    p = sub.add_parser("evaluate", help="multi-label metrics of a checkpoint on a labelled set")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--out", help="report path (default: stdout)")
    _dims_flags(p)
    p.set_defaults(func=cmd_evaluate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
