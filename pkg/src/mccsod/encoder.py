"""Truncated VGG-16 backbone: 13 convs, five feature levels, no classifier head.

A 2x2 stride-2 max pool sits between consecutive blocks (none after the last),
so a 256x256 input yields features at 256/128/64/32/16.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from .errors import CheckpointError, DimensionError

BLOCK_CHANNELS = (64, 128, 256, 512, 512)
BLOCK_DEPTHS = (2, 2, 3, 3, 3)


def archive_key(block: int, conv: int, kind: str) -> str:
    """Weight-archive name for one conv parameter, 1-indexed."""
    return f"enc.b{block}.c{conv}.{kind}"


def conv_parameter_count() -> int:
    """Total weight+bias count over the 13 convs (all 3x3)."""
    total = 0
    c_in = 3
    for c_out, depth in zip(BLOCK_CHANNELS, BLOCK_DEPTHS):
        for _ in range(depth):
            total += 9 * c_in * c_out + c_out
            c_in = c_out
    return total


class VggEncoder(nn.Module):
    """Five-level feature extractor over 3-channel inputs."""

    def __init__(self):
        super().__init__()
        blocks = []
        c_in = 3
        for c_out, depth in zip(BLOCK_CHANNELS, BLOCK_DEPTHS):
            convs = []
            for _ in range(depth):
                convs.append(nn.Conv2d(c_in, c_out, 3, padding=1))
                c_in = c_out
            blocks.append(nn.ModuleList(convs))
        self.blocks = nn.ModuleList(blocks)

    def forward(self, x: torch.Tensor) -> list[torch.Tensor]:
        if x.dim() != 4:
            raise DimensionError(f"expected a (B, 3, H, W) input, got shape {tuple(x.shape)}")
        if x.shape[1] != 3:
            raise DimensionError(f"expected 3 input channels, got {x.shape[1]}")
        h, w = x.shape[2], x.shape[3]
        if h < 16 or w < 16 or h % 16 or w % 16:
            raise DimensionError(
                f"input spatial size must be a multiple of 16, got {h}x{w}"
            )
        features = []
        for i, block in enumerate(self.blocks):
            if i > 0:
                x = F.max_pool2d(x, kernel_size=2, stride=2)
            for conv in block:
                x = F.relu(conv(x), inplace=True)
            features.append(x)
        return features

    def load_archive(self, weights: dict[str, np.ndarray]) -> None:
        """Copy a named-array archive into the conv parameters."""
        expected = set()
        for b, depth in enumerate(BLOCK_DEPTHS, start=1):
            for c in range(1, depth + 1):
                expected.add(archive_key(b, c, "weight"))
                expected.add(archive_key(b, c, "bias"))
        missing = expected - set(weights)
        extra = set(weights) - expected
        if missing:
            raise CheckpointError(f"weight archive is missing keys: {sorted(missing)[:4]} ...")
        if extra:
            raise CheckpointError(f"weight archive has unexpected keys: {sorted(extra)[:4]} ...")
        with torch.no_grad():
            for b, block in enumerate(self.blocks, start=1):
                for c, conv in enumerate(block, start=1):
                    for kind, param in (("weight", conv.weight), ("bias", conv.bias)):
                        arr = np.asarray(weights[archive_key(b, c, kind)])
                        if tuple(arr.shape) != tuple(param.shape):
                            raise CheckpointError(
                                f"{archive_key(b, c, kind)} has shape {tuple(arr.shape)}, "
                                f"expected {tuple(param.shape)}"
                            )
                        param.copy_(torch.from_numpy(arr.astype(np.float32, copy=False)))


def load_pretrained(path: str | Path) -> dict[str, np.ndarray]:
    """Read an .npz backbone archive and validate its keys and shapes."""
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"weight archive not found: {path}")
    try:
        with np.load(path) as bundle:
            weights = {name: bundle[name] for name in bundle.files}
    except (OSError, ValueError) as exc:
        raise CheckpointError(f"cannot read weight archive {path}: {exc}") from exc
    probe = VggEncoder()
    probe.load_archive(weights)  # shape/key validation
    return weights


def convert_torchvision_state_dict(state: dict) -> dict[str, np.ndarray]:
    """Map a torchvision vgg16 ``state_dict`` onto the archive naming scheme."""
    feature_indices = (0, 2, 5, 7, 10, 12, 14, 17, 19, 21, 24, 26, 28)
    out: dict[str, np.ndarray] = {}
    i = 0
    for b, depth in enumerate(BLOCK_DEPTHS, start=1):
        for c in range(1, depth + 1):
            idx = feature_indices[i]
            i += 1
            for kind in ("weight", "bias"):
                src = f"features.{idx}.{kind}"
                if src not in state:
                    raise CheckpointError(f"state dict is missing {src}")
                tensor = state[src]
                arr = tensor.detach().cpu().numpy() if hasattr(tensor, "detach") else np.asarray(tensor)
                out[archive_key(b, c, kind)] = arr.astype(np.float32)
    return out
