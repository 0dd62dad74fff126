"""Dataclass configs and the flat ``section.key = value`` config-file format."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, fields
from pathlib import Path

from .errors import ConfigurationError

IMAGENET_MEAN = (0.485, 0.456, 0.406)
IMAGENET_STD = (0.229, 0.224, 0.225)


@dataclass
class MccmConfig:
    """Which content branches of a complementation module are active."""

    foreground: bool = True
    edge: bool = True
    background: bool = True
    global_context: bool = True
    short_connection: bool = True
    reduction: int = 16

    def validate(self) -> None:
        if self.background and not (self.foreground or self.edge):
            raise ConfigurationError(
                "background branch needs the foreground or edge branch: "
                "its attention is defined as the complement of theirs"
            )
        if self.reduction < 1:
            raise ConfigurationError(f"reduction must be >= 1, got {self.reduction}")
        if self.branch_count == 0 and not self.short_connection:
            raise ConfigurationError(
                "a module with every branch disabled must keep the short connection, "
                "otherwise it has no output path"
            )

    @property
    def branch_count(self) -> int:
        """Number of feature branches entering the fusion conv."""
        n = 0
        if self.foreground or self.edge:
            n += 1  # foreground and edge attentions gate one shared branch
        if self.background:
            n += 1
        if self.global_context:
            n += 1
        return n

    @property
    def is_identity(self) -> bool:
        """True when no branch is active and the module reduces to a skip."""
        return self.branch_count == 0


@dataclass
class NetworkConfig:
    input_size: int = 256
    mccm: MccmConfig = field(default_factory=MccmConfig)

    def validate(self) -> None:
        if self.input_size < 16 or self.input_size % 16 != 0:
            raise ConfigurationError(
                f"input_size must be a positive multiple of 16, got {self.input_size}"
            )
        self.mccm.validate()


@dataclass
class DataConfig:
    input_size: int = 256
    mean: tuple = IMAGENET_MEAN
    std: tuple = IMAGENET_STD
    edge_band: int = 1

    def validate(self) -> None:
        if self.input_size < 1:
            raise ConfigurationError(f"input_size must be positive, got {self.input_size}")
        if len(self.mean) != 3 or len(self.std) != 3:
            raise ConfigurationError("mean and std must each have three components")
        if any(s <= 0 for s in self.std):
            raise ConfigurationError("std components must be positive")
        if self.edge_band < 1:
            raise ConfigurationError(f"edge_band must be >= 1, got {self.edge_band}")


@dataclass
class TrainConfig:
    epochs: int = 39
    batch_size: int = 8
    initial_lr: float = 1e-4
    lr_decay_epoch: int = 30  # last 1-indexed epoch at the initial rate
    lr_decay_factor: float = 10.0
    seed: int = 0
    augment: bool = True
    bce_reduction: str = "mean"
    use_iou: bool = True
    use_fm: bool = True
    snapshot_every: int = 5

    def validate(self) -> None:
        if self.epochs < 1:
            raise ConfigurationError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigurationError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.initial_lr <= 0:
            raise ConfigurationError(f"initial_lr must be positive, got {self.initial_lr}")
        if self.lr_decay_epoch < 1:
            raise ConfigurationError("lr_decay_epoch must be >= 1")
        if self.lr_decay_factor <= 0:
            raise ConfigurationError("lr_decay_factor must be positive")
        if self.bce_reduction not in ("mean", "sum"):
            raise ConfigurationError(
                f"bce_reduction must be 'mean' or 'sum', got {self.bce_reduction!r}"
            )
        if self.snapshot_every < 1:
            raise ConfigurationError("snapshot_every must be >= 1")


@dataclass
class EvalConfig:
    resize_pred_to_gt: bool = True
    include_empty_gt: bool = True

    def validate(self) -> None:
        pass


@dataclass
class RunConfig:
    """Everything a CLI run needs, grouped by section."""

    network: NetworkConfig = field(default_factory=NetworkConfig)
    data: DataConfig = field(default_factory=DataConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)

    def validate(self) -> None:
        self.network.validate()
        self.data.validate()
        self.train.validate()
        self.eval.validate()
        if self.network.input_size != self.data.input_size:
            raise ConfigurationError(
                "network.input_size and data.input_size must agree "
                f"({self.network.input_size} vs {self.data.input_size})"
            )


# mccm lives inside network but is addressed as its own section in files/flags.
_SECTIONS = {
    "network": lambda rc: rc.network,
    "mccm": lambda rc: rc.network.mccm,
    "data": lambda rc: rc.data,
    "train": lambda rc: rc.train,
    "eval": lambda rc: rc.eval,
}


def _coerce(raw: str, target_type, key: str):
    if target_type is bool:
        low = raw.strip().lower()
        if low in ("true", "1", "yes", "on"):
            return True
        if low in ("false", "0", "no", "off"):
            return False
        raise ConfigurationError(f"cannot read {raw!r} as a boolean for {key}")
    if target_type is int:
        try:
            return int(raw)
        except ValueError as exc:
            raise ConfigurationError(f"cannot read {raw!r} as an integer for {key}") from exc
    if target_type is float:
        try:
            return float(raw)
        except ValueError as exc:
            raise ConfigurationError(f"cannot read {raw!r} as a number for {key}") from exc
    if target_type is tuple:
        try:
            return tuple(float(part) for part in raw.replace(",", " ").split())
        except ValueError as exc:
            raise ConfigurationError(f"cannot read {raw!r} as numbers for {key}") from exc
    return raw.strip()


def set_option(config: RunConfig, dotted_key: str, raw_value: str) -> None:
    """Apply one ``section.key = value`` assignment onto a RunConfig."""
    if "." not in dotted_key:
        raise ConfigurationError(f"config key {dotted_key!r} must look like section.key")
    section_name, _, key = dotted_key.partition(".")
    if section_name not in _SECTIONS:
        raise ConfigurationError(
            f"unknown config section {section_name!r} "
            f"(expected one of {', '.join(sorted(_SECTIONS))})"
        )
    if section_name == "network" and key == "mccm":
        raise ConfigurationError("address branch toggles as mccm.<key>, not network.mccm")
    section = _SECTIONS[section_name](config)
    for f in fields(section):
        if f.name == key:
            value = _coerce(raw_value, _field_type(section, key), dotted_key)
            setattr(section, key, value)
            return
    raise ConfigurationError(f"unknown config key {dotted_key!r}")


def _field_type(section, key: str):
    # dataclass field types arrive as strings under `from __future__ import annotations`
    hint = next(f.type for f in fields(section) if f.name == key)
    if isinstance(hint, type):
        return hint
    return {"bool": bool, "int": int, "float": float, "str": str, "tuple": tuple}.get(str(hint), str)


def load_config_file(path: str | Path, base: RunConfig | None = None) -> RunConfig:
    """Parse a flat config file onto ``base`` (or a default RunConfig)."""
    config = base if base is not None else RunConfig()
    text = Path(path).read_text()
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigurationError(f"{path}:{lineno}: expected 'section.key = value'")
        dotted, _, raw = stripped.partition("=")
        set_option(config, dotted.strip(), raw.strip())
    return config


def format_config(config: RunConfig) -> str:
    """Render a RunConfig in the same flat format load_config_file reads."""
    lines = []
    for section_name in ("network", "mccm", "data", "train", "eval"):
        section = _SECTIONS[section_name](config)
        for f in fields(section):
            if f.name == "mccm":
                continue
            value = getattr(section, f.name)
            if isinstance(value, bool):
                rendered = "true" if value else "false"
            elif isinstance(value, tuple):
                rendered = " ".join(repr(v) for v in value)
            else:
                rendered = repr(value) if isinstance(value, float) else str(value)
            lines.append(f"{section_name}.{f.name} = {rendered}")
    return "\n".join(lines) + "\n"


def save_config(config: RunConfig, path: str | Path) -> None:
    Path(path).write_text(format_config(config))


def config_as_dict(config: RunConfig) -> dict:
    return dataclasses.asdict(config)


def config_from_dict(payload: dict) -> RunConfig:
    network = payload.get("network", {})
    mccm = MccmConfig(**network.get("mccm", {}))
    net_kwargs = {k: v for k, v in network.items() if k != "mccm"}
    data = payload.get("data", {})
    if "mean" in data:
        data = dict(data, mean=tuple(data["mean"]))
    if "std" in data:
        data = dict(data, std=tuple(data["std"]))
    return RunConfig(
        network=NetworkConfig(mccm=mccm, **net_kwargs),
        data=DataConfig(**data),
        train=TrainConfig(**payload.get("train", {})),
        eval=EvalConfig(**payload.get("eval", {})),
    )
