"""Multi-content complementation: foreground, edge, background and global cues.

Each encoder level passes through one of these modules. A channel gate first
purifies the features; two independent spatial gates highlight foreground and
edges; their complement covers background; a separate path distills a global
descriptor back into a spatial gate. Enabled branches are polished by 3x3
convs, fused, and added back onto the input.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import torch
import torch.nn as nn
import torch.nn.functional as F

from .attention import ChannelAttention, SpatialAttention, apply_channel_weights
from .config import MccmConfig
from .errors import DimensionError

__all__ = [
    "MccmOutputs",
    "MultiContentModule",
    "foreground_edge_map",
    "background_map",
]


def foreground_edge_map(a_f: torch.Tensor | None, a_e: torch.Tensor | None) -> torch.Tensor:
    """Combine foreground and edge attention into one map.

    With both present the sum lands in [0, 2]; with a single map it stays in
    [0, 1]. At least one map must be given.
    """
    if a_f is None and a_e is None:
        raise DimensionError("need at least one of the foreground/edge attention maps")
    if a_f is None:
        return a_e
    if a_e is None:
        return a_f
    if a_f.shape != a_e.shape:
        raise DimensionError(
            f"attention maps disagree in shape: {tuple(a_f.shape)} vs {tuple(a_e.shape)}"
        )
    return a_f + a_e


def background_map(a_fe: torch.Tensor) -> torch.Tensor:
    """Complement of the foreground/edge attention; negative where a_fe > 1."""
    return 1.0 - a_fe


@dataclass
class MccmOutputs:
    features: torch.Tensor
    edge: torch.Tensor | None = None
    maps: dict = field(default_factory=dict)


class MultiContentModule(nn.Module):
    """Per-level feature enhancer; disabled branches carry no parameters."""

    def __init__(self, channels: int, config: MccmConfig | None = None):
        super().__init__()
        config = config if config is not None else MccmConfig()
        config.validate()
        self.channels = channels
        self.config = config

        if config.foreground or config.edge:
            self.channel_gate = ChannelAttention(channels, config.reduction)
            self.polish_fe = nn.Conv2d(channels, channels, 3, padding=1)
        if config.foreground:
            self.foreground_gate = SpatialAttention()
        if config.edge:
            self.edge_gate = SpatialAttention()
        if config.background:
            self.polish_bg = nn.Conv2d(channels, channels, 3, padding=1)
        if config.global_context:
            self.global_conv = nn.Conv2d(channels, channels, 1)
            self.global_gate = SpatialAttention()
            self.polish_global = nn.Conv2d(channels, channels, 3, padding=1)
        k = config.branch_count
        if k > 0:
            self.fuse = nn.Conv2d(k * channels, channels, 3, padding=1)

    def purify(self, f: torch.Tensor) -> torch.Tensor:
        """Channel-gated copy of the input features."""
        return apply_channel_weights(f, self.channel_gate(f))

    def global_map(self, f: torch.Tensor) -> torch.Tensor:
        """Spatial gate distilled from the globally averaged descriptor."""
        g = f.mean(dim=(2, 3), keepdim=True)
        g = self.global_conv(g)
        g = F.interpolate(g, size=f.shape[2:], mode="bilinear", align_corners=False)
        return self.global_gate(g)

    def forward(self, f: torch.Tensor, collect_maps: bool = False) -> MccmOutputs:
        if f.dim() != 4 or f.shape[1] != self.channels:
            raise DimensionError(
                f"expected (B, {self.channels}, H, W) features, got shape {tuple(f.shape)}"
            )
        cfg = self.config
        maps: dict = {}
        if cfg.is_identity:
            return MccmOutputs(features=f, edge=None, maps=maps)

        parts = []
        a_e = None
        if cfg.foreground or cfg.edge:
            f_ca = self.purify(f)
            a_f = self.foreground_gate(f_ca) if cfg.foreground else None
            a_e = self.edge_gate(f_ca) if cfg.edge else None
            a_fe = foreground_edge_map(a_f, a_e)
            f_fe = f_ca * a_fe
            parts.append(F.relu(self.polish_fe(f_fe)))
            if cfg.background:
                a_b = background_map(a_fe)
                f_b = f_ca * a_b
                parts.append(F.relu(self.polish_bg(f_b)))
                if collect_maps:
                    maps["a_b"] = a_b
            if collect_maps:
                if a_f is not None:
                    maps["a_f"] = a_f
                if a_e is not None:
                    maps["a_e"] = a_e
                maps["a_fe"] = a_fe
        if cfg.global_context:
            a_g = self.global_map(f)
            f_g = f * a_g
            parts.append(F.relu(self.polish_global(f_g)))
            if collect_maps:
                maps["a_g"] = a_g

        out = F.relu(self.fuse(torch.cat(parts, dim=1)))
        if cfg.short_connection:
            out = out + f
        return MccmOutputs(features=out, edge=a_e, maps=maps)
