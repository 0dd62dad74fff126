"""Independent reference implementations the package is checked against.

Everything here is written straight from the definitions with obvious loops,
deliberately ignoring efficiency, and imports nothing from the package under
test. When a test compares the package to these, both sides were authored
separately; do not "fix" a disagreement by copying one into the other.
"""

from __future__ import annotations

import numpy as np
import torch

EPS = 1e-8  # metric guards
LOSS_EPS = 1e-7
BETA_SQ = 0.3


# ---------------------------------------------------------------- metrics ---

def mae_oracle(s: np.ndarray, g: np.ndarray) -> float:
    s = np.asarray(s, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    total = 0.0
    for value, truth in zip(s.ravel(), g.ravel()):
        total += abs(value - truth)
    return total / s.size


def _binary_counts(pred: np.ndarray, g: np.ndarray) -> tuple:
    tp = fp = fn = tn = 0
    for p, t in zip(pred.ravel(), g.ravel()):
        if p and t:
            tp += 1
        elif p and not t:
            fp += 1
        elif not p and t:
            fn += 1
        else:
            tn += 1
    return tp, fp, fn, tn


def _fbeta(tp: float, fp: float, fn: float) -> float:
    precision = tp / (tp + fp + EPS)
    recall = tp / (tp + fn + EPS)
    return (1.0 + BETA_SQ) * precision * recall / (BETA_SQ * precision + recall + EPS)


def f_suite_oracle(s: np.ndarray, g: np.ndarray) -> dict:
    """Loop over all 256 thresholds; confusion counts by explicit iteration."""
    s = np.asarray(s, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64) > 0.5
    curve, precisions, recalls = [], [], []
    for tau in range(256):
        pred = s * 255.0 >= tau
        tp, fp, fn, _ = _binary_counts(pred, g)
        precisions.append(tp / (tp + fp + EPS))
        recalls.append(tp / (tp + fn + EPS))
        curve.append(_fbeta(tp, fp, fn))
    tau_adp = min(2.0 * float(s.mean()), 1.0)
    tp, fp, fn, _ = _binary_counts(s >= tau_adp, g)
    return {
        "f_max": max(curve),
        "f_mean": sum(curve) / 256.0,
        "f_adp": _fbeta(tp, fp, fn),
        "precision": np.array(precisions),
        "recall": np.array(recalls),
    }


def e_binary_oracle(pred: np.ndarray, g: np.ndarray) -> float:
    """Enhanced-alignment score of one binarized prediction, per-pixel loops."""
    pred = np.asarray(pred, dtype=np.float64)
    g = (np.asarray(g, dtype=np.float64) > 0.5).astype(np.float64)
    h, w = g.shape
    n = h * w
    fg = g.sum()
    if fg == 0:
        enhanced = 1.0 - pred
    elif fg == n:
        enhanced = pred.copy()
    else:
        mu_p = pred.mean()
        mu_g = g.mean()
        enhanced = np.zeros_like(g)
        for i in range(h):
            for j in range(w):
                dp = pred[i, j] - mu_p
                dg = g[i, j] - mu_g
                align = 2.0 * dg * dp / (dg * dg + dp * dp + EPS)
                enhanced[i, j] = (align + 1.0) ** 2 / 4.0
    return float(enhanced.sum() / n)


def e_suite_oracle(s: np.ndarray, g: np.ndarray) -> dict:
    s = np.asarray(s, dtype=np.float64)
    curve = [e_binary_oracle(s * 255.0 >= tau, g) for tau in range(256)]
    tau_adp = min(2.0 * float(s.mean()), 1.0)
    return {
        "e_max": max(curve),
        "e_mean": sum(curve) / 256.0,
        "e_adp": e_binary_oracle(s >= tau_adp, g),
    }


def _object_similarity(values: np.ndarray) -> float:
    if values.size == 0:
        return 0.0
    x = float(values.mean())
    if values.size > 1:
        sigma = float(np.sqrt(((values - x) ** 2).sum() / (values.size - 1 + EPS)))
    else:
        sigma = 0.0
    return 2.0 * x / (x * x + 1.0 + sigma + EPS)


def _region_similarity(pred: np.ndarray, gt: np.ndarray) -> float:
    n = pred.size
    if n == 0:
        x = y = 0.0
    else:
        x, y = float(pred.mean()), float(gt.mean())
    vx = float(((pred - x) ** 2).sum() / (n - 1 + EPS))
    vy = float(((gt - y) ** 2).sum() / (n - 1 + EPS))
    vxy = float(((pred - x) * (gt - y)).sum() / (n - 1 + EPS))
    numerator = 4.0 * x * y * vxy
    denominator = (x * x + y * y) * (vx + vy)
    if numerator != 0.0:
        return numerator / (denominator + EPS)
    if denominator == 0.0:
        return 1.0
    return 0.0


def s_measure_oracle(s: np.ndarray, g: np.ndarray, alpha: float = 0.5) -> float:
    s = np.asarray(s, dtype=np.float64)
    g = (np.asarray(g, dtype=np.float64) > 0.5).astype(np.float64)
    mu = float(g.mean())
    if mu == 0.0:
        return 1.0 - float(s.mean())
    if mu == 1.0:
        return float(s.mean())

    # object-aware part
    o_fg = _object_similarity((s * g)[g > 0.5])
    o_bg = _object_similarity(((1.0 - s) * (1.0 - g))[g <= 0.5])
    s_object = mu * o_fg + (1.0 - mu) * o_bg

    # region-aware part: quadrants around the rounded foreground centroid
    rows, cols = np.nonzero(g > 0.5)
    cy = int(np.floor(rows.mean() + 0.5)) + 1
    cx = int(np.floor(cols.mean() + 0.5)) + 1
    h, w = g.shape
    s_region = 0.0
    for rs, cs in ((slice(0, cy), slice(0, cx)), (slice(0, cy), slice(cx, w)),
                   (slice(cy, h), slice(0, cx)), (slice(cy, h), slice(cx, w))):
        g_part = g[rs, cs]
        p_part = s[rs, cs]
        s_region += (g_part.size / (h * w)) * _region_similarity(p_part, g_part)

    return max(alpha * s_object + (1.0 - alpha) * s_region, 0.0)


# ----------------------------------------------------------------- losses ---

def bce_oracle(s: np.ndarray, g: np.ndarray, reduction: str = "mean") -> float:
    s = np.clip(np.asarray(s, dtype=np.float64), LOSS_EPS, 1.0 - LOSS_EPS)
    g = np.asarray(g, dtype=np.float64)
    terms = -(g * np.log(s) + (1.0 - g) * np.log(1.0 - s))
    return float(terms.sum() if reduction == "sum" else terms.mean())


def iou_oracle(s: np.ndarray, g: np.ndarray) -> float:
    """Single-sample soft IoU loss."""
    s = np.asarray(s, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    inter = float((s * g).sum())
    union = float((s + g - s * g).sum())
    return 1.0 - (inter + LOSS_EPS) / (union + LOSS_EPS)


def fmeasure_oracle(s: np.ndarray, g: np.ndarray) -> float:
    """Single-sample soft F-measure loss."""
    s = np.asarray(s, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    tp = float((s * g).sum())
    fp = float((s * (1.0 - g)).sum())
    fn = float(((1.0 - s) * g).sum())
    precision = tp / (tp + fp + LOSS_EPS)
    recall = tp / (tp + fn + LOSS_EPS)
    fm = (1.0 + BETA_SQ) * precision * recall / (BETA_SQ * precision + recall + LOSS_EPS)
    return 1.0 - fm


# Frozen hand-computed values. Derivations:
#   two pixels, S=(1,1), G=(1,0): TP=1, FP=1, FN=0 -> P=.5, R=1,
#     F = 1.3*.5*1/(0.3*.5+1) = .65/1.15 = 0.565217...; loss = 0.434783
#   uniform S=0.5 vs G=1 (n pixels): bce = ln 2; TP=.5n, FP=0, FN=.5n
#     -> P=1 (eps-limit), R=.5, F = 1.3*.5/(0.3+.5) = 0.8125; fm loss = 0.1875
#     iou = 1 - .5n/n = 0.5; level total = ln2 + .5 + .1875 = 1.3806472
#   five levels of that plus five ln-2 edge terms: 5*1.3806472 + 5*ln2
HAND_TWO_PIXEL_FM_LOSS = 0.4347826086956522
HAND_UNIFORM_FM_LOSS = 0.1875
HAND_UNIFORM_LEVEL_TOTAL = float(np.log(2.0) + 0.5 + 0.1875)
HAND_UNIFORM_GRAND_TOTAL = float(5.0 * (np.log(2.0) + 0.5 + 0.1875) + 5.0 * np.log(2.0))


# ------------------------------------------------------- module hand trace ---

def _sigmoid(x: float) -> float:
    return 1.0 / (1.0 + np.exp(-x))


def _relu(x: float) -> float:
    return x if x > 0.0 else 0.0


def mccm_scalar_trace(
    x: float,
    *,
    ca_w1: float, ca_b1: float, ca_w2: float, ca_b2: float,
    sa_f_w: float, sa_f_b: float,
    sa_e_w: float, sa_e_b: float,
    g_conv_w: float, g_conv_b: float,
    sa_g_w: float, sa_g_b: float,
    polish_fe_w: float, polish_fe_b: float,
    polish_bg_w: float, polish_bg_b: float,
    polish_g_w: float, polish_g_b: float,
    fuse_w_fe: float, fuse_w_bg: float, fuse_w_g: float, fuse_b: float,
    short_connection: bool = True,
) -> dict:
    """Step-by-step hand evaluation of the full module on a 1-channel 1x1 input.

    On a 1x1 spatial input every convolution reduces to its center tap plus
    bias (padding contributes zeros), so the whole forward pass is scalar
    arithmetic. Conv arguments are those center taps.
    """
    # channel gate: spatial max pool is x itself; two linear maps; sigmoid
    w_c = _sigmoid(ca_w2 * (ca_w1 * x + ca_b1) + ca_b2)
    f_ca = w_c * x
    # spatial gates see the channel max, again just the scalar
    a_f = _sigmoid(sa_f_w * f_ca + sa_f_b)
    a_e = _sigmoid(sa_e_w * f_ca + sa_e_b)
    a_fe = a_f + a_e
    f_fe = a_fe * f_ca
    a_b = 1.0 - a_fe
    f_b = a_b * f_ca
    # global path: average pool of a 1x1 map is x; 1x1 conv; (no-op upsample); gate
    a_g = _sigmoid(sa_g_w * (g_conv_w * x + g_conv_b) + sa_g_b)
    f_g = a_g * x
    # polish, fuse, short connection
    p_fe = _relu(polish_fe_w * f_fe + polish_fe_b)
    p_b = _relu(polish_bg_w * f_b + polish_bg_b)
    p_g = _relu(polish_g_w * f_g + polish_g_b)
    fused = _relu(fuse_w_fe * p_fe + fuse_w_bg * p_b + fuse_w_g * p_g + fuse_b)
    out = fused + x if short_connection else fused
    return {
        "w_c": w_c, "f_ca": f_ca, "a_f": a_f, "a_e": a_e, "a_fe": a_fe,
        "a_b": a_b, "f_fe": f_fe, "f_b": f_b, "a_g": a_g, "f_g": f_g,
        "out": out,
    }


# -------------------------------------------------------------- gradients ---

def finite_difference_grads(fn, tensors, h: float = 1e-6):
    """Central finite differences of a scalar-valued callable.

    ``fn`` recomputes the scalar from the current contents of ``tensors``
    (float64 leaves, modified in place one coordinate at a time).
    """
    grads = []
    with torch.no_grad():
        for tensor in tensors:
            grad = torch.zeros_like(tensor)
            flat = tensor.reshape(-1)
            grad_flat = grad.reshape(-1)
            for i in range(flat.numel()):
                original = flat[i].item()
                flat[i] = original + h
                up = float(fn())
                flat[i] = original - h
                down = float(fn())
                flat[i] = original
                grad_flat[i] = (up - down) / (2.0 * h)
            grads.append(grad)
    return grads


def relative_grad_error(analytic, numeric) -> float:
    """Global-norm relative error between two gradient collections."""
    diff_sq = 0.0
    ref_sq = 0.0
    for a, n in zip(analytic, numeric):
        diff_sq += float(((a - n) ** 2).sum())
        ref_sq += float((n**2).sum())
    return (diff_sq**0.5) / max(ref_sq**0.5, 1e-12)
