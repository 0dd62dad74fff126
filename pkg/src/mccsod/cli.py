"""Command-line entry points: train, infer, eval, ablate, pr-export.

Configuration resolves in three layers: built-in defaults, then a flat
``section.key = value`` config file (--config), then individual ``--set``
overrides and dedicated flags. The fully resolved config is written next to
every run's outputs.

Exit codes: 0 success, 2 usage/configuration, 3 data/pairing/checkpoint,
4 numeric failure. The compute device comes from MCCSOD_DEVICE (default cpu).
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import torch

from .ablation import (
    format_ablation_table,
    run_content_ablation,
    run_loss_ablation,
    write_ablation_table,
)
from .checkpoint import load_checkpoint, restore_network, save_checkpoint
from .config import RunConfig, load_config_file, save_config, set_option
from .data import load_dataset
from .encoder import load_pretrained
from .errors import ConfigurationError, MccsodError, NumericError
from .inference import predict_directory
from .metrics import evaluate_directory, format_table, write_pr_csv, write_report
from .trainer import overfit_smoke, train

DEVICE_ENV = "MCCSOD_DEVICE"


def resolve_device() -> torch.device:
    name = os.environ.get(DEVICE_ENV, "cpu")
    try:
        device = torch.device(name)
    except RuntimeError as exc:
        raise ConfigurationError(f"bad {DEVICE_ENV} value {name!r}: {exc}") from exc
    if device.type == "cuda" and not torch.cuda.is_available():
        raise ConfigurationError(f"{DEVICE_ENV}={name} but no CUDA device is available")
    return device


def _resolved_config(args) -> RunConfig:
    config = RunConfig()
    if getattr(args, "config", None):
        path = Path(args.config)
        if not path.exists():
            raise ConfigurationError(f"config file not found: {path}")
        load_config_file(path, config)
    for assignment in getattr(args, "set", None) or []:
        if "=" not in assignment:
            raise ConfigurationError(f"--set expects section.key=value, got {assignment!r}")
        dotted, _, raw = assignment.partition("=")
        set_option(config, dotted.strip(), raw.strip())
    if getattr(args, "seed", None) is not None:
        config.train.seed = args.seed
    for flag, key in (
        ("fg", "foreground"),
        ("eg", "edge"),
        ("bg", "background"),
        ("gic", "global_context"),
        ("skip", "short_connection"),
    ):
        value = getattr(args, flag, None)
        if value is not None:
            setattr(config.network.mccm, key, value)
    config.validate()
    return config


def _add_config_args(p: argparse.ArgumentParser, *, seed: bool = True) -> None:
    p.add_argument("--config", help="flat section.key = value config file")
    p.add_argument(
        "--set",
        action="append",
        metavar="SECTION.KEY=VALUE",
        help="override one config entry (repeatable; applied after --config)",
    )
    if seed:
        p.add_argument("--seed", type=int, help="training seed (train.seed)")


def _add_ablation_flags(p: argparse.ArgumentParser) -> None:
    for flag, text in (
        ("fg", "foreground branch"),
        ("eg", "edge branch"),
        ("bg", "background branch"),
        ("gic", "global image-level content branch"),
        ("skip", "short connection"),
    ):
        p.add_argument(
            f"--{flag}",
            action=argparse.BooleanOptionalAction,
            default=None,
            help=f"enable/disable the {text}",
        )


def cmd_train(args) -> int:
    config = _resolved_config(args)
    device = resolve_device()
    manifest = load_dataset(args.data_root, args.split)
    pretrained = load_pretrained(args.pretrained) if args.pretrained else None
    out_dir = Path(args.out)

    if args.smoke is not None:
        iterations = args.iters if args.iters is not None else 200
        result = overfit_smoke(
            config,
            manifest,
            n_images=args.smoke,
            iterations=iterations,
            device=device,
            pretrained=pretrained,
            quiet=False,
        )
        out_dir.mkdir(parents=True, exist_ok=True)
        save_config(config, out_dir / "config.resolved")
        result.log.save(out_dir / "train_log.jsonl")
        save_checkpoint(out_dir / "checkpoint_final.npz", result.net, config, epoch=0)
        table = format_table(result.report)
        (out_dir / "smoke_metrics.txt").write_text(table + "\n")
        print(table)
        print(f"smoke checkpoint: {out_dir / 'checkpoint_final.npz'}")
        return 0

    if args.iters is not None:
        raise ConfigurationError("--iters only applies together with --smoke")
    result = train(config, manifest, out_dir=out_dir, device=device, pretrained=pretrained)
    print(f"final checkpoint: {result.final_checkpoint}")
    return 0


def cmd_infer(args) -> int:
    device = resolve_device()
    ckpt = load_checkpoint(args.ckpt)
    net = restore_network(ckpt, device)
    manifest = load_dataset(args.data_root, args.split)
    written = predict_directory(net, manifest, ckpt.run_config.data, args.out, device)
    print(f"wrote {len(written)} saliency maps to {args.out}")
    return 0


def _gt_dir(args) -> Path:
    if args.gt:
        return Path(args.gt)
    if args.data_root:
        return Path(args.data_root) / args.split / "GT"
    raise ConfigurationError("give either --gt or --data-root/--split")


def cmd_eval(args) -> int:
    config = _resolved_config(args)
    report = evaluate_directory(args.pred, _gt_dir(args), config.eval)
    print(format_table(report))
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        write_report(report, out_dir / "report.txt")
        write_pr_csv(report, out_dir / "pr_curve.csv")
        save_config(config, out_dir / "config.resolved")
        print(f"report and PR curve written to {out_dir}")
    return 0


def cmd_pr_export(args) -> int:
    config = _resolved_config(args)
    report = evaluate_directory(args.pred, _gt_dir(args), config.eval)
    out = Path(args.out)
    if out.suffix.lower() != ".csv":
        out = out / "pr_curve.csv"
    write_pr_csv(report, out)
    print(f"PR curve ({report.n_images} images) written to {out}")
    return 0


def cmd_ablate(args) -> int:
    config = _resolved_config(args)
    device = resolve_device()
    manifest = load_dataset(args.data_root, args.split)
    n_images = args.smoke if args.smoke is not None else 4
    iterations = args.iters if args.iters is not None else 50

    def progress(label):
        print(f"[ablate] training variant: {label}", file=sys.stderr)

    if args.loss_ablation:
        rows = run_loss_ablation(
            config, manifest, n_images=n_images, iterations=iterations,
            device=device, progress=progress,
        )
    else:
        rows = run_content_ablation(
            config, manifest, n_images=n_images, iterations=iterations,
            device=device, include_no_short=args.no_original_content, progress=progress,
        )
    table = format_ablation_table(rows)
    print(table)
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        write_ablation_table(rows, out_dir / "ablation.txt")
        save_config(config, out_dir / "config.resolved")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mccsod",
        description="Salient object detection in optical remote sensing images: "
        "training, inference, evaluation, ablations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a network (or run an overfit smoke test)")
    p.add_argument("--data-root", required=True, help="dataset root directory")
    p.add_argument("--split", default="train")
    p.add_argument("--out", required=True, help="output directory for checkpoints/logs")
    p.add_argument("--pretrained", help="backbone weight archive (.npz)")
    p.add_argument("--smoke", type=int, metavar="N", help="overfit N images instead of a full run")
    p.add_argument("--iters", type=int, metavar="N", help="iterations for --smoke (default 200)")
    _add_config_args(p)
    _add_ablation_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("infer", help="write saliency PNGs for a dataset split")
    p.add_argument("--ckpt", required=True, help="checkpoint .npz")
    p.add_argument("--data-root", required=True)
    p.add_argument("--split", default="test")
    p.add_argument("--out", required=True, help="directory for predicted maps")
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("eval", help="score predictions against ground truth")
    p.add_argument("--pred", required=True, help="directory of predicted PNGs")
    p.add_argument("--gt", help="directory of ground-truth PNGs")
    p.add_argument("--data-root", help="dataset root (used with --split when --gt absent)")
    p.add_argument("--split", default="test")
    p.add_argument("--out", help="directory for report.txt and pr_curve.csv")
    _add_config_args(p, seed=False)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("ablate", help="run branch/loss ablation sweeps at smoke scale")
    p.add_argument("--data-root", required=True)
    p.add_argument("--split", default="train")
    p.add_argument("--out", help="directory for the comparison table")
    p.add_argument("--smoke", type=int, metavar="N", help="images per variant (default 4)")
    p.add_argument("--iters", type=int, metavar="N", help="iterations per variant (default 50)")
    p.add_argument("--loss-ablation", action="store_true", help="sweep loss terms instead of branches")
    p.add_argument(
        "--no-original-content",
        action="store_true",
        help="also run the variant without the short connection",
    )
    _add_config_args(p)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("pr-export", help="export the PR curve as CSV")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", help="directory of ground-truth PNGs")
    p.add_argument("--data-root")
    p.add_argument("--split", default="test")
    p.add_argument("--out", required=True, help="CSV path (or directory)")
    _add_config_args(p, seed=False)
    p.set_defaults(func=cmd_pr_export)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except MccsodError as exc:
        # data, pairing, checkpoint, dimension problems
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
