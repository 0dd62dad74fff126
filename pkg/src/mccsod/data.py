"""Dataset discovery, sample preparation, edge targets, dihedral augmentation.

Datasets live on disk as ``<root>/<split>/image/*.png|jpg`` paired with
``<root>/<split>/GT/*.png`` by filename stem. Manifests list pairs in
lexicographic stem order so iteration order is stable across filesystems.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image
from scipy import ndimage

from .config import DataConfig
from .errors import DataError, EmptyDatasetError, PairingError

IMAGE_EXTENSIONS = (".png", ".jpg", ".jpeg")

# (flip, k): horizontal mirror first, then k counterclockwise quarter turns.
# Identity leads; the eight pairs enumerate the full dihedral group of the square.
DIHEDRAL_VARIANTS = ((0, 0), (0, 1), (0, 2), (0, 3), (1, 0), (1, 1), (1, 2), (1, 3))


@dataclass
class DatasetManifest:
    root: Path
    split: str
    ids: list
    image_paths: list
    gt_paths: list

    def __len__(self) -> int:
        return len(self.ids)


def load_dataset(root: str | Path, split: str) -> DatasetManifest:
    root = Path(root)
    image_dir = root / split / "image"
    gt_dir = root / split / "GT"
    if not image_dir.is_dir():
        raise DataError(f"no image directory at {image_dir}")
    if not gt_dir.is_dir():
        raise DataError(f"no GT directory at {gt_dir}")

    images = {}
    for p in image_dir.iterdir():
        if p.suffix.lower() in IMAGE_EXTENSIONS and p.is_file():
            if p.stem in images:
                raise PairingError(f"duplicate image stem {p.stem!r} in {image_dir}")
            images[p.stem] = p
    gts = {}
    for p in gt_dir.iterdir():
        if p.suffix.lower() == ".png" and p.is_file():
            gts[p.stem] = p

    only_images = sorted(set(images) - set(gts))
    only_gts = sorted(set(gts) - set(images))
    if only_images or only_gts:
        raise PairingError(
            f"{root}/{split}: unpaired stems "
            f"(image-only: {only_images[:5]}, GT-only: {only_gts[:5]})"
        )
    ids = sorted(images)
    if not ids:
        raise EmptyDatasetError(f"{root}/{split} contains no image/GT pairs")
    return DatasetManifest(
        root=root,
        split=split,
        ids=ids,
        image_paths=[images[i] for i in ids],
        gt_paths=[gts[i] for i in ids],
    )


def load_image(path: str | Path) -> np.ndarray:
    """RGB image as uint8 (H, W, 3)."""
    with Image.open(path) as img:
        return np.asarray(img.convert("RGB"), dtype=np.uint8)


def load_mask(path: str | Path) -> np.ndarray:
    """Grayscale mask as uint8 (H, W)."""
    with Image.open(path) as img:
        return np.asarray(img.convert("L"), dtype=np.uint8)


def save_saliency(path: str | Path, s: np.ndarray) -> None:
    """Write a [0, 1] map as an 8-bit grayscale PNG."""
    arr = np.clip(np.rint(np.asarray(s, dtype=np.float64) * 255.0), 0, 255).astype(np.uint8)
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(arr, mode="L").save(path)


def load_saliency(path: str | Path) -> np.ndarray:
    """Read an 8-bit grayscale PNG back to float64 in [0, 1]."""
    return load_mask(path).astype(np.float64) / 255.0


def edge_ground_truth(gt: np.ndarray, band: int = 1) -> np.ndarray:
    """Morphological gradient of a binary mask: dilation minus erosion.

    Uses the 3x3 cross structuring element, ``band`` iterations each way, so
    the band is roughly ``band`` pixels wide on both sides of the contour.
    Objects touching the image border get an edge along that border.
    """
    if band < 1:
        raise DataError(f"band must be >= 1, got {band}")
    mask = np.asarray(gt) > 0.5
    grown = ndimage.binary_dilation(mask, iterations=band)
    shrunk = ndimage.binary_erosion(mask, iterations=band)
    return (grown & ~shrunk).astype(np.float32)


@dataclass
class Sample:
    id: str
    image: np.ndarray  # float32 (3, S, S), channel-normalized
    gt: np.ndarray  # float32 (S, S) in {0, 1}
    edge: np.ndarray  # float32 (S, S) in {0, 1}


def prepare(image: np.ndarray, gt: np.ndarray, cfg: DataConfig, sample_id: str = "") -> Sample:
    """Resize, normalize and binarize one image/GT pair into training form."""
    size = cfg.input_size
    img = Image.fromarray(image).resize((size, size), Image.BILINEAR)
    arr = np.asarray(img, dtype=np.float32) / 255.0
    mean = np.asarray(cfg.mean, dtype=np.float32)
    std = np.asarray(cfg.std, dtype=np.float32)
    arr = (arr - mean) / std
    chw = np.ascontiguousarray(arr.transpose(2, 0, 1))

    mask = Image.fromarray(gt).resize((size, size), Image.NEAREST)
    binary = (np.asarray(mask, dtype=np.float32) / 255.0 > 0.5).astype(np.float32)
    edge = edge_ground_truth(binary, cfg.edge_band)
    return Sample(id=sample_id, image=chw, gt=binary, edge=edge)


def load_sample(manifest: DatasetManifest, index: int, cfg: DataConfig) -> Sample:
    image = load_image(manifest.image_paths[index])
    gt = load_mask(manifest.gt_paths[index])
    return prepare(image, gt, cfg, sample_id=manifest.ids[index])


def dihedral(arr: np.ndarray, flip: int, k: int) -> np.ndarray:
    """Mirror horizontally (last axis) if ``flip``, then rotate 90deg k times.

    Operates on the trailing two axes, so (H, W) and (C, H, W) both work.
    """
    out = arr[..., ::-1] if flip else arr
    if k % 4:
        out = np.rot90(out, k % 4, axes=(-2, -1))
    return np.ascontiguousarray(out)


def dihedral_inverse(flip: int, k: int) -> tuple[int, int]:
    """The (flip, k) pair that undoes ``dihedral(_, flip, k)``."""
    if flip == 0:
        return (0, (-k) % 4)
    return (1, k % 4)  # a mirror composed with rotation is its own inverse


def augment_variant(sample: Sample, variant: tuple[int, int]) -> Sample:
    flip, k = variant
    return Sample(
        id=sample.id,
        image=dihedral(sample.image, flip, k),
        gt=dihedral(sample.gt, flip, k),
        edge=dihedral(sample.edge, flip, k),
    )


def augment(sample: Sample) -> list[Sample]:
    """All eight dihedral variants, identity first."""
    return [augment_variant(sample, v) for v in DIHEDRAL_VARIANTS]
