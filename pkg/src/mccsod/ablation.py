"""Ablation harness: sweep branch combinations (and loss terms) at smoke scale.

Reproduces the comparison protocol, not any published numbers: every variant
trains briefly on the same few images with the same seed, then is scored on
them. Rows follow the canonical content-combination order, Baseline first,
full module last.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass
from pathlib import Path

from .config import RunConfig
from .data import DatasetManifest
from .metrics import MetricReport
from .trainer import overfit_smoke

# (label, branch toggles). Baseline keeps only the skip path; the final row
# enables everything. BG never appears without FG or EG (it is their complement).
CONTENT_ROWS = (
    ("Baseline", dict(foreground=False, edge=False, background=False, global_context=False)),
    ("+FG", dict(foreground=True, edge=False, background=False, global_context=False)),
    ("+FG+EG", dict(foreground=True, edge=True, background=False, global_context=False)),
    ("+FG+EG+BG", dict(foreground=True, edge=True, background=True, global_context=False)),
    ("+EG", dict(foreground=False, edge=True, background=False, global_context=False)),
    ("+GIC", dict(foreground=False, edge=False, background=False, global_context=True)),
    ("+FG+GIC", dict(foreground=True, edge=False, background=False, global_context=True)),
    ("+EG+GIC", dict(foreground=False, edge=True, background=False, global_context=True)),
    ("+FG+EG+GIC", dict(foreground=True, edge=True, background=False, global_context=True)),
    ("full MCCM", dict(foreground=True, edge=True, background=True, global_context=True)),
)

NO_SHORT_ROW = (
    "w/o original content",
    dict(foreground=True, edge=True, background=True, global_context=True, short_connection=False),
)

LOSS_ROWS = (
    ("BCE", dict(use_iou=False, use_fm=False)),
    ("BCE+IoU", dict(use_iou=True, use_fm=False)),
    ("BCE+Fm", dict(use_iou=False, use_fm=True)),
    ("BCE+IoU+Fm", dict(use_iou=True, use_fm=True)),
)


@dataclass
class AblationRow:
    label: str
    report: MetricReport
    final_loss: float


def _run_variant(config: RunConfig, manifest, n_images, iterations, device) -> tuple:
    result = overfit_smoke(
        config, manifest, n_images=n_images, iterations=iterations, device=device
    )
    return result.report, result.log.iterations()[-1]["total"]


def run_content_ablation(
    base: RunConfig,
    manifest: DatasetManifest,
    n_images: int = 4,
    iterations: int = 50,
    device="cpu",
    include_no_short: bool = False,
    progress=None,
) -> list:
    rows = list(CONTENT_ROWS)
    if include_no_short:
        rows.append(NO_SHORT_ROW)
    out = []
    for label, toggles in rows:
        config = copy.deepcopy(base)
        for key, value in toggles.items():
            setattr(config.network.mccm, key, value)
        if progress:
            progress(label)
        report, final_loss = _run_variant(config, manifest, n_images, iterations, device)
        out.append(AblationRow(label=label, report=report, final_loss=final_loss))
    return out


def run_loss_ablation(
    base: RunConfig,
    manifest: DatasetManifest,
    n_images: int = 4,
    iterations: int = 50,
    device="cpu",
    progress=None,
) -> list:
    out = []
    for label, toggles in LOSS_ROWS:
        config = copy.deepcopy(base)
        for key, value in toggles.items():
            setattr(config.train, key, value)
        if progress:
            progress(label)
        report, final_loss = _run_variant(config, manifest, n_images, iterations, device)
        out.append(AblationRow(label=label, report=report, final_loss=final_loss))
    return out


def format_ablation_table(rows: list) -> str:
    header = ("variant", "f_max", "e_max", "s_alpha", "mae", "final_loss")
    body = [
        (
            row.label,
            f"{row.report.f_max:.4f}",
            f"{row.report.e_max:.4f}",
            f"{row.report.s_alpha:.4f}",
            f"{row.report.mae:.4f}",
            f"{row.final_loss:.4f}",
        )
        for row in rows
    ]
    widths = [max(len(header[i]), *(len(r[i]) for r in body)) for i in range(len(header))]
    lines = ["  ".join(h.ljust(widths[i]) for i, h in enumerate(header))]
    lines.append("  ".join("-" * w for w in widths))
    for r in body:
        lines.append("  ".join(r[i].ljust(widths[i]) for i in range(len(header))))
    return "\n".join(lines)


def write_ablation_table(rows: list, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(format_ablation_table(rows) + "\n")
