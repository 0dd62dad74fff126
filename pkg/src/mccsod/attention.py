"""Channel and spatial attention primitives.

Both are max-pool based: the channel gate pools over space, the spatial gate
pools over channels. Outputs are sigmoid maps in (0, 1).
"""

from __future__ import annotations

import torch
import torch.nn as nn

from .errors import DimensionError


def _check_4d(f: torch.Tensor, who: str) -> None:
    if f.dim() != 4:
        raise DimensionError(f"{who} expects a (B, C, H, W) tensor, got shape {tuple(f.shape)}")


class ChannelAttention(nn.Module):
    """Per-channel gate: global spatial max pool, two linear layers, sigmoid.

    The hidden width is channels // reduction, clamped to at least 1. There is
    no nonlinearity between the two linear layers.
    """

    def __init__(self, channels: int, reduction: int = 16):
        super().__init__()
        if channels < 1:
            raise DimensionError(f"channels must be >= 1, got {channels}")
        self.channels = channels
        hidden = max(channels // reduction, 1)
        self.fc1 = nn.Linear(channels, hidden)
        self.fc2 = nn.Linear(hidden, channels)

    def forward(self, f: torch.Tensor) -> torch.Tensor:
        _check_4d(f, "ChannelAttention")
        if f.shape[1] != self.channels:
            raise DimensionError(
                f"ChannelAttention built for {self.channels} channels, input has {f.shape[1]}"
            )
        pooled = f.amax(dim=(2, 3))  # (B, C)
        return torch.sigmoid(self.fc2(self.fc1(pooled)))


def apply_channel_weights(f: torch.Tensor, weights: torch.Tensor) -> torch.Tensor:
    """Scale each channel of ``f`` (B, C, H, W) by ``weights`` (B, C)."""
    _check_4d(f, "apply_channel_weights")
    if weights.dim() != 2 or weights.shape != f.shape[:2]:
        raise DimensionError(
            f"weights shape {tuple(weights.shape)} does not match feature batch/channels "
            f"{tuple(f.shape[:2])}"
        )
    return f * weights[:, :, None, None]


class SpatialAttention(nn.Module):
    """Single-channel spatial gate: channel-wise max map, kxk conv, sigmoid."""

    def __init__(self, kernel_size: int = 7):
        super().__init__()
        if kernel_size % 2 != 1:
            raise DimensionError(f"kernel_size must be odd, got {kernel_size}")
        self.conv = nn.Conv2d(1, 1, kernel_size, padding=kernel_size // 2)

    def forward(self, f: torch.Tensor) -> torch.Tensor:
        _check_4d(f, "SpatialAttention")
        pooled = f.amax(dim=1, keepdim=True)  # (B, 1, H, W)
        return torch.sigmoid(self.conv(pooled))
