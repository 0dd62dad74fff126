"""Training objective: BCE + soft IoU + soft F-measure on every side output,
plus BCE edge supervision on the per-level edge attention maps.

All quantities run on probabilities in (0, 1), not logits. Region terms (IoU,
F-measure) are computed per sample and averaged over the batch; epsilon guards
every denominator.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn.functional as F

from .errors import DimensionError
from .network import NetworkOutputs

EPS = 1e-7
BETA_SQ = 0.3


def _check_pair(s: torch.Tensor, g: torch.Tensor, who: str) -> None:
    if s.shape != g.shape:
        raise DimensionError(
            f"{who}: prediction shape {tuple(s.shape)} != target shape {tuple(g.shape)}"
        )


def _flatten_per_sample(t: torch.Tensor) -> torch.Tensor:
    if t.dim() <= 1:
        return t.reshape(1, -1)
    return t.reshape(t.shape[0], -1)


def bce_loss(s: torch.Tensor, g: torch.Tensor, reduction: str = "mean") -> torch.Tensor:
    """Pixelwise binary cross-entropy on probabilities clamped to [EPS, 1-EPS]."""
    _check_pair(s, g, "bce_loss")
    sc = s.clamp(EPS, 1.0 - EPS)
    term = -(g * torch.log(sc) + (1.0 - g) * torch.log(1.0 - sc))
    if reduction == "mean":
        return term.mean()
    if reduction == "sum":
        return term.sum()
    raise DimensionError(f"unknown reduction {reduction!r}")


def iou_loss(s: torch.Tensor, g: torch.Tensor) -> torch.Tensor:
    """1 - soft intersection over union, per sample, batch-averaged."""
    _check_pair(s, g, "iou_loss")
    s2, g2 = _flatten_per_sample(s), _flatten_per_sample(g)
    inter = (s2 * g2).sum(dim=1)
    union = (s2 + g2 - s2 * g2).sum(dim=1)
    iou = (inter + EPS) / (union + EPS)
    return (1.0 - iou).mean()


def fmeasure_loss(s: torch.Tensor, g: torch.Tensor) -> torch.Tensor:
    """1 - soft F-measure with beta^2 = 0.3, per sample, batch-averaged."""
    _check_pair(s, g, "fmeasure_loss")
    s2, g2 = _flatten_per_sample(s), _flatten_per_sample(g)
    tp = (s2 * g2).sum(dim=1)
    fp = (s2 * (1.0 - g2)).sum(dim=1)
    fn = ((1.0 - s2) * g2).sum(dim=1)
    precision = tp / (tp + fp + EPS)
    recall = tp / (tp + fn + EPS)
    fm = (1.0 + BETA_SQ) * precision * recall / (BETA_SQ * precision + recall + EPS)
    return (1.0 - fm).mean()


def _upsample_to(t: torch.Tensor, size: tuple) -> torch.Tensor:
    if tuple(t.shape[-2:]) == tuple(size):
        return t
    if t.dim() != 4:
        raise DimensionError(f"can only upsample (B, C, h, w) maps, got {tuple(t.shape)}")
    return F.interpolate(t, size=size, mode="bilinear", align_corners=False)


@dataclass
class SaliencyLoss:
    bce: torch.Tensor
    iou: torch.Tensor | None
    fm: torch.Tensor | None
    total: torch.Tensor


def saliency_loss(
    s: torch.Tensor,
    g: torch.Tensor,
    *,
    bce_reduction: str = "mean",
    use_iou: bool = True,
    use_fm: bool = True,
) -> SaliencyLoss:
    """Combined saliency term for one side output.

    The map is bilinearly upsampled to the ground truth's size first, so any
    decoder level can be supervised against the full-resolution target.
    Disabled pieces contribute nothing.
    """
    s = _upsample_to(s, g.shape[-2:]) if s.dim() == 4 else s
    bce = bce_loss(s, g, bce_reduction)
    iou = iou_loss(s, g) if use_iou else None
    fm = fmeasure_loss(s, g) if use_fm else None
    total = bce
    if iou is not None:
        total = total + iou
    if fm is not None:
        total = total + fm
    return SaliencyLoss(bce=bce, iou=iou, fm=fm, total=total)


def edge_loss(a_e: torch.Tensor, g_e: torch.Tensor, reduction: str = "mean") -> torch.Tensor:
    """BCE between an (upsampled) edge attention map and the edge ground truth."""
    a_e = _upsample_to(a_e, g_e.shape[-2:]) if a_e.dim() == 4 else a_e
    return bce_loss(a_e, g_e, reduction)


@dataclass
class LossBundle:
    """Per-level terms plus their exact sum.

    ``saliency`` and ``edge`` hold five scalars each (edge entries are None
    when the edge branch is disabled); ``total`` equals the sum of every
    non-None entry by construction.
    """

    saliency: list
    edge: list
    components: list
    total: torch.Tensor

    def named_components(self) -> dict:
        out = {}
        for t, (s, e) in enumerate(zip(self.saliency, self.edge), start=1):
            out[f"loss_s{t}"] = s
            out[f"loss_e{t}"] = e
        return out


def total_loss(
    outputs: NetworkOutputs,
    gt: torch.Tensor,
    edge_gt: torch.Tensor | None,
    *,
    bce_reduction: str = "mean",
    use_iou: bool = True,
    use_fm: bool = True,
) -> LossBundle:
    """Deep-supervision objective over all five side outputs.

    Every side map (and edge map, when present) is bilinearly upsampled to the
    ground-truth resolution before its terms are computed.
    """
    if len(outputs.saliency) != 5:
        raise DimensionError(f"expected 5 side outputs, got {len(outputs.saliency)}")
    if gt.dim() != 4 or gt.shape[1] != 1:
        raise DimensionError(f"expected (B, 1, H, W) ground truth, got {tuple(gt.shape)}")

    saliency_terms = []
    edge_terms = []
    components = []
    total = None
    for t in range(5):
        piece = saliency_loss(
            outputs.saliency[t], gt,
            bce_reduction=bce_reduction, use_iou=use_iou, use_fm=use_fm,
        )
        saliency_terms.append(piece.total)
        components.append(piece)
        total = piece.total if total is None else total + piece.total

        a_e = outputs.edges[t]
        if a_e is None:
            edge_terms.append(None)
            continue
        if edge_gt is None:
            raise DimensionError("edge maps present but no edge ground truth given")
        e = edge_loss(a_e, edge_gt, bce_reduction)
        edge_terms.append(e)
        total = total + e

    return LossBundle(saliency=saliency_terms, edge=edge_terms, components=components, total=total)
