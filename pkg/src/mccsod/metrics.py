"""Evaluation measures: MAE, threshold-swept F and E measures, S-measure, PR.

Everything runs in float64 numpy on (H, W) maps: the prediction in [0, 1] and
a binary ground truth. Threshold sweeps use the 256 integer levels 0..255 on
the prediction scaled by 255; a pixel is positive when its scaled value is >=
the threshold. Per-image scores are averaged arithmetically over a corpus; PR
curves are averaged pointwise per threshold.

The sweeps are computed from foreground/background histograms of the
quantized map (floor(s*255) >= tau is equivalent to s*255 >= tau for integer
tau), which matches the straight per-threshold loop bit for bit while doing
one pass over the pixels.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .config import EvalConfig
from .errors import DataError, DimensionError, EmptyDatasetError, PairingError

EPS = 1e-8
BETA_SQ = 0.3
THRESHOLDS = np.arange(256, dtype=np.float64)

SCALAR_FIELDS = ("s_alpha", "f_max", "f_mean", "f_adp", "e_max", "e_mean", "e_adp", "mae")


def _check_inputs(s: np.ndarray, g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    s = np.asarray(s, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    if s.shape != g.shape:
        raise DimensionError(f"prediction shape {s.shape} != ground-truth shape {g.shape}")
    if s.ndim != 2:
        raise DimensionError(f"expected 2-D maps, got {s.ndim}-D")
    return s, (g > 0.5).astype(np.float64)


def mae(s: np.ndarray, g: np.ndarray) -> float:
    s, g = _check_inputs(s, g)
    return float(np.mean(np.abs(s - g)))


def adaptive_threshold(s: np.ndarray) -> float:
    """Twice the mean value, capped at 1."""
    return min(2.0 * float(np.mean(s)), 1.0)


def _sweep_counts(s: np.ndarray, g: np.ndarray) -> tuple[np.ndarray, np.ndarray, float, float]:
    """True/false positive counts at every integer threshold 0..255."""
    q = np.floor(s * 255.0).astype(np.int64)
    np.clip(q, 0, 255, out=q)
    fg = g > 0.5
    hist_fg = np.bincount(q[fg], minlength=256).astype(np.float64)
    hist_bg = np.bincount(q[~fg], minlength=256).astype(np.float64)
    # pixels with q >= tau: reversed cumulative sums
    tp = np.cumsum(hist_fg[::-1])[::-1]
    fp = np.cumsum(hist_bg[::-1])[::-1]
    return tp, fp, float(fg.sum()), float((~fg).sum())


def _fmeasure_from_counts(tp, fp, n_fg) -> np.ndarray:
    precision = tp / (tp + fp + EPS)
    recall = tp / (n_fg + EPS)
    return (1.0 + BETA_SQ) * precision * recall / (BETA_SQ * precision + recall + EPS)


def _binary_fmeasure(pred: np.ndarray, g: np.ndarray) -> float:
    tp = float(np.sum(pred * g))
    fp = float(np.sum(pred * (1.0 - g)))
    fn = float(np.sum((1.0 - pred) * g))
    precision = tp / (tp + fp + EPS)
    recall = tp / (tp + fn + EPS)
    return float((1.0 + BETA_SQ) * precision * recall / (BETA_SQ * precision + recall + EPS))


@dataclass
class FMeasureSuite:
    f_max: float
    f_mean: float
    f_adp: float
    precision: np.ndarray  # (256,)
    recall: np.ndarray  # (256,)


def f_measure_suite(s: np.ndarray, g: np.ndarray) -> FMeasureSuite:
    s, g = _check_inputs(s, g)
    tp, fp, n_fg, _ = _sweep_counts(s, g)
    precision = tp / (tp + fp + EPS)
    recall = tp / (n_fg + EPS)
    curve = _fmeasure_from_counts(tp, fp, n_fg)
    adp_pred = (s >= adaptive_threshold(s)).astype(np.float64)
    return FMeasureSuite(
        f_max=float(curve.max()),
        f_mean=float(curve.mean()),
        f_adp=_binary_fmeasure(adp_pred, g),
        precision=precision,
        recall=recall,
    )


def _enhanced_alignment_sum(tp, fp, n_fg, n_bg) -> np.ndarray:
    """Sum of the enhanced alignment matrix for each threshold, vectorized.

    The matrix value at a pixel depends only on the (pred, gt) combination, so
    the pixel sum is a weighted sum over the four confusion counts.
    """
    n = n_fg + n_bg
    if n_fg == 0:  # gt empty: matrix is 1 - pred
        return n - (tp + fp)
    if n_bg == 0:  # gt full: matrix is pred
        return tp + fp
    mu_g = n_fg / n
    mu_f = (tp + fp) / n  # (256,)
    d_g_pos, d_g_neg = 1.0 - mu_g, -mu_g
    d_f_pos, d_f_neg = 1.0 - mu_f, -mu_f

    def enhanced(d_f, d_g):
        align = 2.0 * d_g * d_f / (d_g**2 + d_f**2 + EPS)
        return (align + 1.0) ** 2 / 4.0

    fn = n_fg - tp
    tn = n_bg - fp
    return (
        tp * enhanced(d_f_pos, d_g_pos)
        + fp * enhanced(d_f_pos, d_g_neg)
        + fn * enhanced(d_f_neg, d_g_pos)
        + tn * enhanced(d_f_neg, d_g_neg)
    )


@dataclass
class EMeasureSuite:
    e_max: float
    e_mean: float
    e_adp: float


def e_measure_suite(s: np.ndarray, g: np.ndarray) -> EMeasureSuite:
    s, g = _check_inputs(s, g)
    n = float(g.size)
    tp, fp, n_fg, n_bg = _sweep_counts(s, g)
    curve = _enhanced_alignment_sum(tp, fp, n_fg, n_bg) / n

    adp_pred = (s >= adaptive_threshold(s)).astype(np.float64)
    tp_a = np.array([float(np.sum(adp_pred * g))])
    fp_a = np.array([float(np.sum(adp_pred * (1.0 - g)))])
    e_adp = float(_enhanced_alignment_sum(tp_a, fp_a, n_fg, n_bg)[0] / n)
    return EMeasureSuite(e_max=float(curve.max()), e_mean=float(curve.mean()), e_adp=e_adp)


def _object_score(values: np.ndarray) -> float:
    if values.size == 0:
        return 0.0
    x = float(values.mean())
    sigma = float(np.sqrt(np.sum((values - x) ** 2) / (values.size - 1 + EPS)))
    return 2.0 * x / (x * x + 1.0 + sigma + EPS)


def _s_object(s: np.ndarray, g: np.ndarray) -> float:
    mu = float(g.mean())
    o_fg = _object_score((s * g)[g > 0.5])
    o_bg = _object_score(((1.0 - s) * (1.0 - g))[g <= 0.5])
    return mu * o_fg + (1.0 - mu) * o_bg


def _centroid(g: np.ndarray) -> tuple[int, int]:
    """Foreground centroid as 1-based cut points (row, col), half-up rounding."""
    rows, cols = np.nonzero(g > 0.5)
    cy = int(np.floor(rows.mean() + 0.5)) + 1
    cx = int(np.floor(cols.mean() + 0.5)) + 1
    return cy, cx


def _split4(arr: np.ndarray, cy: int, cx: int):
    return arr[:cy, :cx], arr[:cy, cx:], arr[cy:, :cx], arr[cy:, cx:]


def _ssim_score(pred: np.ndarray, gt: np.ndarray) -> float:
    n = pred.size
    x = float(pred.mean()) if n else 0.0
    y = float(gt.mean()) if n else 0.0
    sigma_x = float(np.sum((pred - x) ** 2) / (n - 1 + EPS))
    sigma_y = float(np.sum((gt - y) ** 2) / (n - 1 + EPS))
    sigma_xy = float(np.sum((pred - x) * (gt - y)) / (n - 1 + EPS))
    alpha = 4.0 * x * y * sigma_xy
    beta = (x * x + y * y) * (sigma_x + sigma_y)
    if alpha != 0.0:
        return alpha / (beta + EPS)
    if beta == 0.0:
        return 1.0
    return 0.0


def _s_region(s: np.ndarray, g: np.ndarray) -> float:
    cy, cx = _centroid(g)
    h, w = g.shape
    total = float(h * w)
    gs = _split4(g, cy, cx)
    ps = _split4(s, cy, cx)
    score = 0.0
    for g_part, s_part in zip(gs, ps):
        score += (g_part.size / total) * _ssim_score(s_part, g_part)
    return score


def s_measure(s: np.ndarray, g: np.ndarray, alpha: float = 0.5) -> float:
    """Structure measure: object-aware plus region-aware similarity.

    The region term splits both maps into the four quadrants around the
    foreground centroid (half-up rounded, 1-based cut indices) and scores each
    with an SSIM-style similarity weighted by area.
    """
    s, g = _check_inputs(s, g)
    mu = float(g.mean())
    if mu == 0.0:  # no foreground: reward predicting nothing
        return 1.0 - float(s.mean())
    if mu == 1.0:  # all foreground: reward predicting everything
        return float(s.mean())
    score = alpha * _s_object(s, g) + (1.0 - alpha) * _s_region(s, g)
    return max(score, 0.0)


@dataclass
class ImageMetrics:
    s_alpha: float
    f_max: float
    f_mean: float
    f_adp: float
    e_max: float
    e_mean: float
    e_adp: float
    mae: float
    precision: np.ndarray
    recall: np.ndarray


def measure_image(s: np.ndarray, g: np.ndarray) -> ImageMetrics:
    fsuite = f_measure_suite(s, g)
    esuite = e_measure_suite(s, g)
    return ImageMetrics(
        s_alpha=s_measure(s, g),
        f_max=fsuite.f_max,
        f_mean=fsuite.f_mean,
        f_adp=fsuite.f_adp,
        e_max=esuite.e_max,
        e_mean=esuite.e_mean,
        e_adp=esuite.e_adp,
        mae=mae(s, g),
        precision=fsuite.precision,
        recall=fsuite.recall,
    )


@dataclass
class MetricReport:
    s_alpha: float
    f_max: float
    f_mean: float
    f_adp: float
    e_max: float
    e_mean: float
    e_adp: float
    mae: float
    precision: np.ndarray  # (256,) pointwise mean over images
    recall: np.ndarray  # (256,)
    n_images: int


def evaluate_pairs(pairs) -> MetricReport:
    """Average per-image metrics over an iterable of (pred, gt) maps."""
    sums = {name: 0.0 for name in SCALAR_FIELDS}
    precision = np.zeros(256, dtype=np.float64)
    recall = np.zeros(256, dtype=np.float64)
    n = 0
    for s, g in pairs:
        m = measure_image(s, g)
        for name in SCALAR_FIELDS:
            sums[name] += getattr(m, name)
        precision += m.precision
        recall += m.recall
        n += 1
    if n == 0:
        raise EmptyDatasetError("no prediction/ground-truth pairs to evaluate")
    return MetricReport(
        **{name: sums[name] / n for name in SCALAR_FIELDS},
        precision=precision / n,
        recall=recall / n,
        n_images=n,
    )


def _resize_to(s: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    if s.shape == shape:
        return s
    img = Image.fromarray(np.clip(s * 255.0, 0, 255).astype(np.float32), mode="F")
    resized = img.resize((shape[1], shape[0]), Image.BILINEAR)
    return np.clip(np.asarray(resized, dtype=np.float64) / 255.0, 0.0, 1.0)


def iter_directory_pairs(pred_dir, gt_dir, cfg: EvalConfig | None = None):
    """Yield (pred, gt) float maps for stem-paired PNGs, lexicographic order."""
    cfg = cfg if cfg is not None else EvalConfig()
    pred_dir, gt_dir = Path(pred_dir), Path(gt_dir)
    if not pred_dir.is_dir():
        raise DataError(f"no prediction directory at {pred_dir}")
    if not gt_dir.is_dir():
        raise DataError(f"no ground-truth directory at {gt_dir}")
    preds = {p.stem: p for p in pred_dir.iterdir() if p.suffix.lower() == ".png"}
    gts = {p.stem: p for p in gt_dir.iterdir() if p.suffix.lower() == ".png"}
    only_pred = sorted(set(preds) - set(gts))
    only_gt = sorted(set(gts) - set(preds))
    if only_pred or only_gt:
        raise PairingError(
            f"unpaired stems between {pred_dir} and {gt_dir} "
            f"(pred-only: {only_pred[:5]}, gt-only: {only_gt[:5]})"
        )
    if not preds:
        raise EmptyDatasetError(f"no predictions in {pred_dir}")
    for stem in sorted(preds):
        with Image.open(gts[stem]) as img:
            g = np.asarray(img.convert("L"), dtype=np.float64) / 255.0
        g = (g > 0.5).astype(np.float64)
        if not cfg.include_empty_gt and g.sum() == 0:
            continue
        with Image.open(preds[stem]) as img:
            s = np.asarray(img.convert("L"), dtype=np.float64) / 255.0
        if cfg.resize_pred_to_gt:
            s = _resize_to(s, g.shape)
        elif s.shape != g.shape:
            raise DimensionError(
                f"{stem}: prediction {s.shape} does not match GT {g.shape} "
                "and resizing is disabled"
            )
        yield s, g


def evaluate_directory(pred_dir, gt_dir, cfg: EvalConfig | None = None) -> MetricReport:
    return evaluate_pairs(iter_directory_pairs(pred_dir, gt_dir, cfg))


def format_table(report: MetricReport) -> str:
    rows = [("images", f"{report.n_images}")]
    for name in SCALAR_FIELDS:
        rows.append((name, f"{getattr(report, name):.4f}"))
    width = max(len(k) for k, _ in rows)
    return "\n".join(f"{k.ljust(width)}  {v}" for k, v in rows)


def write_report(report: MetricReport, path) -> None:
    lines = [f"n_images = {report.n_images}"]
    for name in SCALAR_FIELDS:
        lines.append(f"{name} = {getattr(report, name)!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def write_pr_csv(report: MetricReport, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["threshold", "precision", "recall"])
        for t in range(256):
            writer.writerow([t, repr(float(report.precision[t])), repr(float(report.recall[t]))])
