"""Encoder, per-level content modules, and a deeply supervised decoder.

The decoder mirrors the encoder: level t runs (2, 2, 3, 3, 3)[t-1] 3x3 convs
at the encoder's channel width, consuming the enhanced features plus a 2x2
transposed-conv upsampling of the level above. A 1x1 head with sigmoid emits a
side saliency map at every level; the full-resolution one is the prediction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import torch
import torch.nn as nn
import torch.nn.functional as F

from .config import NetworkConfig
from .encoder import BLOCK_CHANNELS, BLOCK_DEPTHS, VggEncoder
from .errors import DimensionError
from .mccm import MultiContentModule


@dataclass
class NetworkOutputs:
    """Side outputs ordered fine to coarse: index 0 is full resolution."""

    saliency: list  # five (B, 1, h_t, w_t) maps in (0, 1)
    edges: list  # five (B, 1, h_t, w_t) attention maps, or None when disabled


class MCCNet(nn.Module):
    def __init__(self, config: NetworkConfig | None = None, seed: int | None = None):
        super().__init__()
        config = config if config is not None else NetworkConfig()
        config.validate()
        self.config = config

        self.encoder = VggEncoder()
        self.enhancers = nn.ModuleList(
            MultiContentModule(c, config.mccm) for c in BLOCK_CHANNELS
        )
        decoder = []
        for c, depth in zip(BLOCK_CHANNELS, BLOCK_DEPTHS):
            decoder.append(
                nn.ModuleList(nn.Conv2d(c, c, 3, padding=1) for _ in range(depth))
            )
        self.decoder = nn.ModuleList(decoder)
        # upsamplers[t] carries level t+2 features down to level t+1's width
        self.upsamplers = nn.ModuleList(
            nn.ConvTranspose2d(BLOCK_CHANNELS[t + 1], BLOCK_CHANNELS[t], 2, stride=2)
            for t in range(4)
        )
        self.heads = nn.ModuleList(nn.Conv2d(c, 1, 1) for c in BLOCK_CHANNELS)
        if seed is not None:
            init_parameters(self, seed)

    def forward(self, x: torch.Tensor) -> NetworkOutputs:
        size = self.config.input_size
        if x.dim() != 4 or x.shape[1] != 3:
            raise DimensionError(f"expected a (B, 3, H, W) input, got shape {tuple(x.shape)}")
        if x.shape[2] != size or x.shape[3] != size:
            raise DimensionError(
                f"network is configured for {size}x{size} inputs, got {x.shape[2]}x{x.shape[3]}"
            )
        features = self.encoder(x)
        enhanced = []
        edges = []
        for f, module in zip(features, self.enhancers):
            out = module(f)
            enhanced.append(out.features)
            edges.append(out.edge)

        saliency: list = [None] * 5
        above = None
        for t in reversed(range(5)):
            h = enhanced[t]
            if above is not None:
                h = h + self.upsamplers[t](above)
            for conv in self.decoder[t]:
                h = F.relu(conv(h))
            saliency[t] = torch.sigmoid(self.heads[t](h))
            above = h
        return NetworkOutputs(saliency=saliency, edges=edges)

    @torch.no_grad()
    def predict(self, x: torch.Tensor) -> torch.Tensor:
        """Full-resolution saliency map in (0, 1), shape (B, 1, H, W)."""
        return self.forward(x).saliency[0]

    def parameter_count(self) -> int:
        return sum(p.numel() for p in self.parameters())


def _fan_in(weight: torch.Tensor) -> int:
    receptive = 1
    for s in weight.shape[2:]:
        receptive *= s
    return weight.shape[1] * receptive


def init_parameters(net: nn.Module, seed: int) -> None:
    """He-normal weights, zero biases, drawn from one explicitly seeded stream."""
    gen = torch.Generator().manual_seed(seed)
    with torch.no_grad():
        for module in net.modules():
            if isinstance(module, (nn.Conv2d, nn.ConvTranspose2d, nn.Linear)):
                std = math.sqrt(2.0 / _fan_in(module.weight))
                module.weight.normal_(0.0, std, generator=gen)
                if module.bias is not None:
                    module.bias.zero_()
