"""Batchless inference: one saliency PNG per input image, at native size."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import torch
from PIL import Image

from .config import DataConfig
from .data import DatasetManifest, load_image, prepare, save_saliency
from .network import MCCNet


def predict_array(
    net: MCCNet,
    image: np.ndarray,
    data_config: DataConfig,
    device: str | torch.device = "cpu",
) -> np.ndarray:
    """Saliency for one uint8 RGB array, returned at the array's own size."""
    h, w = image.shape[:2]
    sample = prepare(image, np.zeros((h, w), dtype=np.uint8), data_config)
    tensor = torch.from_numpy(sample.image[None]).to(torch.device(device))
    with torch.no_grad():
        pred = net.predict(tensor)[0, 0].cpu().numpy().astype(np.float64)
    if pred.shape != (h, w):
        img = Image.fromarray(pred.astype(np.float32), mode="F")
        pred = np.asarray(img.resize((w, h), Image.BILINEAR), dtype=np.float64)
    return np.clip(pred, 0.0, 1.0)


def predict_directory(
    net: MCCNet,
    manifest: DatasetManifest,
    data_config: DataConfig,
    out_dir: str | Path,
    device: str | torch.device = "cpu",
) -> list[Path]:
    """Write one grayscale PNG per manifest entry; returns the paths written."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    net.eval()
    written = []
    for image_path, sample_id in zip(manifest.image_paths, manifest.ids):
        image = load_image(image_path)
        pred = predict_array(net, image, data_config, device)
        target = out_dir / f"{sample_id}.png"
        save_saliency(target, pred)
        written.append(target)
    return written
