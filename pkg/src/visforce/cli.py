# SPDX-FileCopyrightText: 2026 The Visforce Authors
# SPDX-License-Identifier: Apache-2.0

"""Command-line entry point.

Every verb reads the shared config file (``--config`` or the usual search
path) and applies its flags on top. Exit codes: 0 success, 1 contract or
configuration error, 2 I/O error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
from pathlib import Path
from typing import List, Optional, Sequence

from visforce._version import __version__
from visforce.config import MODEL_VARIANTS, POOLING_MODES, TrainConfig, find_config_file
from visforce.data import load_dataset, split_protocol, synth_generate, write_corpus
from visforce.data.recording import RecordingSet
from visforce.data.synth import SynthConfig
from visforce.errors import ContractViolation, VisforceError
from visforce.evaluation import (
    MetricsReport,
    attention_sample,
    check_blocks,
    compare_reports,
    evaluate,
    export_attention_maps,
    format_table,
    predict_trace,
    raise_on_failure,
)
from visforce.models.network import ForceEstimator
from visforce.telemetry import configure_logging, disable_tracing, enable_tracing
from visforce.tensor import load_checkpoint
from visforce.training import train

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_IO = 2


def _config(args: argparse.Namespace) -> TrainConfig:
    base = TrainConfig.from_file_or_env(args.config)
    overrides = {
        "model_variant": getattr(args, "variant", None),
        "epochs": getattr(args, "epochs", None),
        "batch_size": getattr(args, "batch_size", None),
        "k": getattr(args, "k", None),
        "pooling": getattr(args, "pooling", None),
        "seed": getattr(args, "seed", None),
        "workers": getattr(args, "workers", None),
        "output_dir": getattr(args, "output_dir", None),
        "log_level": args.log_level,
    }
    return base.overridden(**overrides).validate()


def _load_models(paths: Sequence[str]) -> List[ForceEstimator]:
    return [ForceEstimator.from_checkpoint(load_checkpoint(p)) for p in paths]


def _load_split(args: argparse.Namespace, cfg: TrainConfig) -> List[RecordingSet]:
    sets = load_dataset(args.manifest, image_size=cfg.image_size, strict=args.strict, workers=cfg.workers)
    if args.split == "all":
        return sets
    train_sets, test_sets = split_protocol(sets, cfg.seed)
    chosen = train_sets if args.split == "train" else test_sets
    if not chosen:
        raise ContractViolation(f"the {args.split} split of {args.manifest} is empty")
    return chosen


def _find_set(sets: Sequence[RecordingSet], set_id: str) -> RecordingSet:
    for rec in sets:
        if rec.set_id == set_id:
            return rec
    raise ContractViolation(f"no recording set {set_id!r}; available: {[s.set_id for s in sets]}")


# ---------------------------------------------------------------------------
# Verbs
# ---------------------------------------------------------------------------


def cmd_synth(args: argparse.Namespace) -> int:
    path = find_config_file(args.config)
    synth = SynthConfig.from_yaml(str(path)) if path is not None else SynthConfig()
    values = synth.to_dict()
    for key in ("seed", "n_sets", "frames_per_set", "image_size", "noise"):
        flag = getattr(args, key)
        if flag is not None:
            values[key] = flag
    synth = SynthConfig.from_dict(values)
    manifest = write_corpus(synth_generate(synth), args.out)
    print(manifest)
    return EXIT_OK


def cmd_train(args: argparse.Namespace) -> int:
    cfg = _config(args)
    sets = _load_split(args, cfg)
    out = Path(cfg.output_dir)
    result = train(cfg, sets, output_dir=out, steps_per_epoch=args.steps_per_epoch)
    print(result.checkpoint_path)
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    cfg = _config(args)
    models = _load_models(args.checkpoint)
    sets = _load_split(args, cfg)
    report = evaluate(models, sets, window=cfg.window, force_scale=cfg.force_scale_newtons, workers=cfg.workers)
    if args.baseline:
        report = compare_reports(MetricsReport.load(args.baseline), report)
    out = Path(args.out)
    report.save(out / "report.json")
    report.write_bins_csv(out / "bins.csv")
    ratio = f", {report.ratio_vs_baseline}% of baseline" if report.ratio_vs_baseline is not None else ""
    print(f"{report.variant}: MAE {report.mae:.4f} N, RMSE {report.rmse:.4f} N over {report.samples} frames{ratio}")
    return EXIT_OK


def cmd_trace(args: argparse.Namespace) -> int:
    cfg = _config(args)
    models = _load_models(args.checkpoint)
    sets = load_dataset(args.manifest, image_size=cfg.image_size, strict=args.strict, workers=cfg.workers)
    trace = predict_trace(models, _find_set(sets, args.set), window=cfg.window, force_scale=cfg.force_scale_newtons)
    print(trace.write_csv(args.out))
    return EXIT_OK


def cmd_attnmap(args: argparse.Namespace) -> int:
    cfg = _config(args)
    (model,) = _load_models([args.checkpoint])
    sets = load_dataset(args.manifest, image_size=cfg.image_size, strict=args.strict, workers=cfg.workers)
    rec = _find_set(sets, args.set)
    end = len(rec) - 1 if args.end is None else args.end
    paths = export_attention_maps(model, attention_sample(model, rec, end, cfg.window), args.out)
    print(f"{len(paths)} maps written to {args.out}")
    return EXIT_OK


def cmd_gradcheck(args: argparse.Namespace) -> int:
    results = check_blocks(args.blocks, eps=args.eps, seed=args.seed or 0)
    print(format_table(results))
    raise_on_failure(results)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _data_args(p: argparse.ArgumentParser, default_split: Optional[str] = None) -> None:
    p.add_argument("--manifest", required=True, help="Manifest CSV (path,object,angle_deg,lux)")
    if default_split is not None:
        p.add_argument(
            "--split",
            choices=("all", "train", "test"),
            default=default_split,
            help=f"Which protocol split to use (default: {default_split})",
        )
    p.add_argument("--strict", action="store_true", help="Fail if any set in the manifest is rejected")


def _model_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--variant", choices=MODEL_VARIANTS, help="Model variant")
    p.add_argument("--k", type=int, help="Frames per attention stack (previous frames + 1)")
    p.add_argument("--pooling", choices=POOLING_MODES, help="Pooling inside SSAM/SCAM")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="visforce", description="Interaction-force estimation from image sequences")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", help="YAML config file (default: search visforce.yaml)")
    parser.add_argument("--log-level", help="Logging level (default: from config, INFO)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="Write a synthetic corpus with a manifest")
    p.add_argument("--out", required=True, help="Output directory")
    p.add_argument("--seed", type=int)
    p.add_argument("--sets", dest="n_sets", type=int)
    p.add_argument("--frames", dest="frames_per_set", type=int)
    p.add_argument("--image-size", type=int)
    p.add_argument("--noise", type=float)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="Train a model variant from scratch")
    _data_args(p, "train")
    _model_args(p)
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--output-dir", help="Directory for model.ckpt and loss.csv")
    p.add_argument("--steps-per-epoch", type=int, help="Override the frames/batch default")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="Evaluate one checkpoint, or two as an ensemble")
    _data_args(p, "test")
    p.add_argument("--checkpoint", required=True, nargs="+")
    p.add_argument("--baseline", help="Baseline report.json for improvement ratios")
    p.add_argument("--seed", type=int, help="Split seed")
    p.add_argument("--workers", type=int)
    p.add_argument("--out", required=True, help="Directory for report.json and bins.csv")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("trace", help="Per-frame force trace of one set")
    _data_args(p)
    p.add_argument("--checkpoint", required=True, nargs="+")
    p.add_argument("--set", required=True, help="Recording set id (manifest path)")
    p.add_argument("--out", required=True, help="Output CSV")
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("attnmap", help="Export SSAM attention maps for one window")
    _data_args(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--set", required=True, help="Recording set id (manifest path)")
    p.add_argument("--end", type=int, help="Index of the window's last frame (default: last frame)")
    p.add_argument("--out", required=True, help="Output directory")
    p.set_defaults(func=cmd_attnmap)

    p = sub.add_parser("gradcheck", help="Finite-difference gradient checks")
    p.add_argument("--blocks", nargs="+", help="Subset of blocks to check")
    p.add_argument("--eps", type=float, default=1e-5)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_gradcheck)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = TrainConfig.from_file_or_env(args.config)
        configure_logging(args.log_level or cfg.log_level)
        enable_tracing(cfg)
        return args.func(args)
    except VisforceError as exc:
        logger.error("%s: %s", type(exc).__name__, exc)
        return exc.exit_code
    except OSError as exc:
        logger.error("I/O error: %s", exc)
        return EXIT_IO
    finally:
        disable_tracing()
