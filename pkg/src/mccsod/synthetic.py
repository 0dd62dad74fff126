"""Tiny procedurally generated dataset in the on-disk layout loaders expect.

Bright simple shapes on dark textured backgrounds: trivially memorizable, so
short overfitting runs and pipeline smoke tests converge quickly.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image


def _shape_mask(rng: np.random.Generator, size: int) -> np.ndarray:
    kind = rng.integers(0, 3)
    yy, xx = np.mgrid[0:size, 0:size]
    cy = rng.integers(size // 3, 2 * size // 3)
    cx = rng.integers(size // 3, 2 * size // 3)
    extent = rng.integers(size // 5, size // 3)
    if kind == 0:  # disk
        mask = (yy - cy) ** 2 + (xx - cx) ** 2 <= extent**2
    elif kind == 1:  # axis-aligned rectangle
        h = rng.integers(size // 6, size // 3)
        mask = (np.abs(yy - cy) <= h) & (np.abs(xx - cx) <= extent)
    else:  # diamond
        mask = np.abs(yy - cy) + np.abs(xx - cx) <= extent
    return mask.astype(np.uint8)


def _render(rng: np.random.Generator, mask: np.ndarray, size: int) -> np.ndarray:
    background = rng.integers(20, 70, size=(size, size, 3)).astype(np.float32)
    background += rng.normal(0, 6, size=(size, size, 3)).astype(np.float32)
    color = rng.integers(170, 255, size=3).astype(np.float32)
    image = np.where(mask[:, :, None] > 0, color[None, None, :], background)
    return np.clip(image, 0, 255).astype(np.uint8)


def make_toy_dataset(
    root: str | Path,
    n_train: int = 8,
    n_test: int = 4,
    size: int = 256,
    seed: int = 0,
) -> Path:
    """Write a train/test dataset under ``root`` and return it."""
    root = Path(root)
    rng = np.random.default_rng(seed)
    for split, count in (("train", n_train), ("test", n_test)):
        image_dir = root / split / "image"
        gt_dir = root / split / "GT"
        image_dir.mkdir(parents=True, exist_ok=True)
        gt_dir.mkdir(parents=True, exist_ok=True)
        for i in range(count):
            mask = _shape_mask(rng, size)
            image = _render(rng, mask, size)
            name = f"{split}_{i:04d}"
            Image.fromarray(image).save(image_dir / f"{name}.png")
            Image.fromarray(mask * 255, mode="L").save(gt_dir / f"{name}.png")
    return root
