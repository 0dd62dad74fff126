"""Pickle-free checkpoints: an .npz of named arrays plus a JSON metadata blob.

Layout inside the archive:
    __meta__            uint8 bytes of a JSON document (magic, epoch, config,
                        optimizer param groups)
    param/<name>        one array per network parameter
    opt/<idx>/<key>     optimizer state tensors, keyed by parameter index

Round-trips are bit-identical: arrays are stored verbatim.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from .config import RunConfig, config_as_dict, config_from_dict
from .errors import CheckpointError
from .network import MCCNet

MAGIC = "mccsod-checkpoint"
FORMAT_VERSION = 1


@dataclass
class Checkpoint:
    run_config: RunConfig
    epoch: int
    state: dict  # parameter name -> np.ndarray
    optimizer_state: dict | None  # torch optimizer state_dict layout, or None
    meta: dict


def save_checkpoint(
    path: str | Path,
    net: MCCNet,
    run_config: RunConfig,
    epoch: int,
    optimizer: torch.optim.Optimizer | None = None,
) -> None:
    arrays: dict[str, np.ndarray] = {}
    param_names = []
    for name, tensor in net.state_dict().items():
        param_names.append(name)
        arrays[f"param/{name}"] = tensor.detach().cpu().numpy()

    meta = {
        "magic": MAGIC,
        "format_version": FORMAT_VERSION,
        "epoch": int(epoch),
        "config": config_as_dict(run_config),
        "param_names": param_names,
        "optimizer": None,
    }
    if optimizer is not None:
        opt_state = optimizer.state_dict()
        state_layout: dict[str, list[str]] = {}
        for idx, entry in opt_state["state"].items():
            keys = []
            for key, value in entry.items():
                if isinstance(value, torch.Tensor):
                    arrays[f"opt/{idx}/{key}"] = value.detach().cpu().numpy()
                    keys.append(key)
                else:
                    raise CheckpointError(
                        f"optimizer state entry {key!r} is not a tensor; cannot serialize"
                    )
            state_layout[str(idx)] = keys
        meta["optimizer"] = {
            "param_groups": opt_state["param_groups"],
            "state_layout": state_layout,
        }

    blob = np.frombuffer(json.dumps(meta).encode("utf-8"), dtype=np.uint8)
    arrays["__meta__"] = blob
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savez(path, **arrays)


def load_checkpoint(path: str | Path) -> Checkpoint:
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"checkpoint not found: {path}")
    try:
        with np.load(path) as bundle:
            arrays = {name: bundle[name] for name in bundle.files}
    except (OSError, ValueError) as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    if "__meta__" not in arrays:
        raise CheckpointError(f"{path} has no metadata block; not a checkpoint")
    try:
        meta = json.loads(arrays.pop("__meta__").tobytes().decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"{path} metadata is not valid JSON") from exc
    if meta.get("magic") != MAGIC:
        raise CheckpointError(f"{path} magic mismatch: {meta.get('magic')!r}")
    if meta.get("format_version") != FORMAT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {meta.get('format_version')!r}")

    state = {}
    for name in meta["param_names"]:
        key = f"param/{name}"
        if key not in arrays:
            raise CheckpointError(f"{path} is missing parameter array {name!r}")
        state[name] = arrays[key]

    optimizer_state = None
    if meta.get("optimizer") is not None:
        opt_meta = meta["optimizer"]
        state_entries = {}
        for idx_str, keys in opt_meta["state_layout"].items():
            entry = {}
            for key in keys:
                arr_key = f"opt/{idx_str}/{key}"
                if arr_key not in arrays:
                    raise CheckpointError(f"{path} is missing optimizer array {arr_key!r}")
                entry[key] = torch.from_numpy(arrays[arr_key].copy())
            state_entries[int(idx_str)] = entry
        optimizer_state = {
            "state": state_entries,
            "param_groups": opt_meta["param_groups"],
        }

    return Checkpoint(
        run_config=config_from_dict(meta["config"]),
        epoch=meta["epoch"],
        state=state,
        optimizer_state=optimizer_state,
        meta=meta,
    )


def restore_network(ckpt: Checkpoint, device: str | torch.device = "cpu") -> MCCNet:
    net = MCCNet(ckpt.run_config.network)
    tensors = {name: torch.from_numpy(arr.copy()) for name, arr in ckpt.state.items()}
    try:
        missing, unexpected = net.load_state_dict(tensors, strict=False)
    except RuntimeError as exc:  # strict=False still raises on shape mismatch
        raise CheckpointError(
            f"checkpoint does not fit the configured network: {exc}"
        ) from exc
    if missing or unexpected:
        raise CheckpointError(
            f"checkpoint does not fit the configured network "
            f"(missing {sorted(missing)[:3]}, unexpected {sorted(unexpected)[:3]})"
        )
    return net.to(torch.device(device))
