"""Training loop: Adam with a step lr decay, deep supervision, JSONL logging.

Each epoch visits every sample-variant pair exactly once in a seeded random
order (eight dihedral variants per sample when augmentation is on). Runs are
reproducible: parameter init, batch order and shuffling all flow from
``TrainConfig.seed``.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from .checkpoint import save_checkpoint
from .config import RunConfig, save_config
from .data import (
    DIHEDRAL_VARIANTS,
    DatasetManifest,
    Sample,
    augment_variant,
    load_sample,
)
from .errors import ConfigurationError, NumericError
from .losses import total_loss
from .metrics import MetricReport, evaluate_pairs
from .network import MCCNet

IDENTITY_VARIANT = DIHEDRAL_VARIANTS[0]


@dataclass
class TrainLog:
    records: list

    def append(self, record: dict) -> None:
        self.records.append(record)

    def iterations(self) -> list:
        """Just the per-step records, without epoch summaries."""
        return [r for r in self.records if "iteration" in r]

    def save(self, path: str | Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w") as fh:
            for record in self.records:
                fh.write(json.dumps(record) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "TrainLog":
        records = []
        with Path(path).open() as fh:
            for line in fh:
                line = line.strip()
                if line:
                    records.append(json.loads(line))
        return cls(records=records)


def lr_for_epoch(config, epoch: int) -> float:
    """Learning rate for a 1-indexed epoch: decays once past lr_decay_epoch."""
    if epoch > config.lr_decay_epoch:
        return config.initial_lr / config.lr_decay_factor
    return config.initial_lr


def build_optimizer(net: torch.nn.Module, config) -> torch.optim.Adam:
    return torch.optim.Adam(
        net.parameters(),
        lr=config.initial_lr,
        betas=(0.9, 0.999),
        eps=1e-8,
        weight_decay=0.0,
    )


class _SampleCache:
    """Prepared samples keyed by manifest index, capped to bound memory."""

    def __init__(self, manifest: DatasetManifest, data_config, max_entries: int = 512):
        self.manifest = manifest
        self.data_config = data_config
        self.max_entries = max_entries
        self._store: dict[int, Sample] = {}

    def get(self, index: int) -> Sample:
        hit = self._store.get(index)
        if hit is not None:
            return hit
        sample = load_sample(self.manifest, index, self.data_config)
        if len(self._store) < self.max_entries:
            self._store[index] = sample
        return sample


def _batch_tensors(samples: list, device: torch.device):
    image = torch.from_numpy(np.stack([s.image for s in samples])).to(device)
    gt = torch.from_numpy(np.stack([s.gt for s in samples])[:, None]).to(device)
    edge = torch.from_numpy(np.stack([s.edge for s in samples])[:, None]).to(device)
    return image, gt, edge


def _check_finite(bundle, iteration: int) -> None:
    named = {"total": bundle.total}
    named.update(bundle.named_components())
    for name, value in named.items():
        if value is not None and not bool(torch.isfinite(value)):
            raise NumericError(
                f"loss component {name!r} became non-finite at iteration {iteration}; "
                "aborting instead of training on garbage"
            )


def _log_record(iteration: int, epoch: int, lr: float, bundle) -> dict:
    record = {"iteration": iteration, "epoch": epoch, "lr": lr}
    for name, value in bundle.named_components().items():
        record[name] = float(value.detach()) if value is not None else 0.0
    record["total"] = float(bundle.total.detach())
    return record


def _train_step(net, optimizer, images, gts, edges, config, iteration):
    outputs = net(images)
    bundle = total_loss(
        outputs,
        gts,
        edges,
        bce_reduction=config.train.bce_reduction,
        use_iou=config.train.use_iou,
        use_fm=config.train.use_fm,
    )
    _check_finite(bundle, iteration)
    optimizer.zero_grad()
    bundle.total.backward()
    optimizer.step()
    return bundle


@dataclass
class TrainResult:
    net: MCCNet
    log: TrainLog
    final_checkpoint: Path
    out_dir: Path


def train(
    config: RunConfig,
    manifest: DatasetManifest,
    out_dir: str | Path,
    device: str | torch.device = "cpu",
    pretrained: dict | None = None,
    quiet: bool = False,
) -> TrainResult:
    config.validate()
    device = torch.device(device)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_config(config, out_dir / "config.resolved")

    net = MCCNet(config.network, seed=config.train.seed)
    if pretrained is not None:
        net.encoder.load_archive(pretrained)
    net.to(device)
    net.train()
    optimizer = build_optimizer(net, config.train)

    variants = DIHEDRAL_VARIANTS if config.train.augment else (IDENTITY_VARIANT,)
    items = [(i, v) for i in range(len(manifest)) for v in variants]
    cache = _SampleCache(manifest, config.data)
    rng = np.random.default_rng(config.train.seed)
    log = TrainLog(records=[])
    batch = config.train.batch_size
    iteration = 0
    for epoch in range(1, config.train.epochs + 1):
        lr = lr_for_epoch(config.train, epoch)
        for group in optimizer.param_groups:
            group["lr"] = lr
        order = rng.permutation(len(items))
        started = time.monotonic()
        for start in range(0, len(order), batch):
            chunk = order[start : start + batch]
            samples = [
                augment_variant(cache.get(items[j][0]), items[j][1]) for j in chunk
            ]
            images, gts, edges = _batch_tensors(samples, device)
            iteration += 1
            bundle = _train_step(net, optimizer, images, gts, edges, config, iteration)
            log.append(_log_record(iteration, epoch, lr, bundle))
        elapsed = time.monotonic() - started
        log.append({"epoch_summary": epoch, "lr": lr, "seconds": elapsed})
        if not quiet:
            last = [r for r in log.records if "iteration" in r][-1]
            print(
                f"epoch {epoch}/{config.train.epochs} lr {lr:g} "
                f"loss {last['total']:.4f} ({elapsed:.1f}s)"
            )
        if epoch % config.train.snapshot_every == 0:
            save_checkpoint(
                out_dir / f"checkpoint_epoch{epoch:03d}.npz", net, config, epoch, optimizer
            )

    final = out_dir / "checkpoint_final.npz"
    save_checkpoint(final, net, config, config.train.epochs, optimizer)
    log.save(out_dir / "train_log.jsonl")
    return TrainResult(net=net, log=log, final_checkpoint=final, out_dir=out_dir)


@dataclass
class SmokeResult:
    net: MCCNet
    log: TrainLog
    report: MetricReport


def overfit_smoke(
    config: RunConfig,
    manifest: DatasetManifest,
    n_images: int = 4,
    iterations: int = 200,
    device: str | torch.device = "cpu",
    pretrained: dict | None = None,
    quiet: bool = True,
) -> SmokeResult:
    """Memorize a handful of images without augmentation, then score them.

    A sanity check that gradients flow end to end: a healthy configuration
    drives the training-set F-measure close to 1 within a few hundred steps.
    """
    config.validate()
    if n_images < 1 or n_images > 8:
        raise ConfigurationError(f"n_images must be in 1..8, got {n_images}")
    if n_images > len(manifest):
        raise ConfigurationError(
            f"asked for {n_images} images but the split has only {len(manifest)}"
        )
    if iterations < 1:
        raise ConfigurationError(f"iterations must be >= 1, got {iterations}")
    device = torch.device(device)
    samples = [load_sample(manifest, i, config.data) for i in range(n_images)]

    net = MCCNet(config.network, seed=config.train.seed)
    if pretrained is not None:
        net.encoder.load_archive(pretrained)
    net.to(device)
    net.train()
    optimizer = build_optimizer(net, config.train)

    batch = min(config.train.batch_size, n_images)
    log = TrainLog(records=[])
    cursor = 0
    for iteration in range(1, iterations + 1):
        picked = [samples[(cursor + k) % n_images] for k in range(batch)]
        cursor = (cursor + batch) % n_images
        images, gts, edges = _batch_tensors(picked, device)
        bundle = _train_step(net, optimizer, images, gts, edges, config, iteration)
        log.append(_log_record(iteration, 1, config.train.initial_lr, bundle))
        if not quiet and iteration % 10 == 0:
            print(f"iter {iteration}/{iterations} loss {log.records[-1]['total']:.4f}")

    net.eval()
    pairs = []
    with torch.no_grad():
        for sample in samples:
            image = torch.from_numpy(sample.image[None]).to(device)
            pred = net.predict(image)[0, 0].cpu().numpy().astype(np.float64)
            pairs.append((pred, sample.gt.astype(np.float64)))
    report = evaluate_pairs(pairs)
    return SmokeResult(net=net, log=log, report=report)
