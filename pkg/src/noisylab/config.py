"""Run configuration: one flat record covering every module's knobs.

Values resolve with precedence CLI flags > config file > defaults. The file
format is a flat YAML mapping using the same key names as the dataclass
fields. Every run echoes its fully resolved config (plus tool version and
backend) to a manifest, which is sufficient to reproduce the run bit-exactly
on the same platform.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import yaml

VARIANTS = (
    "full",
    "standard",
    "no-rss",
    "no-mgm",
    "no-both",
    "no-ssl",
    "no-mv",
    "no-mp",
)

PRESETS = ("cifar80n-o-mini",)


@dataclass
class RunConfig:
    # dataset
    preset: str = "cifar80n-o-mini"
    total_classes: int = 10
    per_class_train: int = 200
    per_class_test: int = 50
    dim: int = 16
    separation: float = 4.0
    data_seed: int | None = None  # defaults to seed
    dataset_stem: str | None = None  # load from files instead of generating

    # noise
    noise_kind: str = "symmetric"
    closed_rate: float = 0.2
    open_set: bool = True
    open_fraction: float = 0.2

    # model / optimizer
    hidden: tuple[int, ...] = (32, 32)
    optimizer: str = "adam"
    momentum: float = 0.9

    # augmentation
    weak_sigma: float = 0.05
    strong_sigma: float = 0.2
    dropout_fraction: float = 0.2

    # selection / margins / relabeling
    tau_s: float = 0.75
    tau_h: float = 0.9
    tau_p: float = 0.9
    stat_view: str = "weak"
    margin_scale: str = "probability"
    margin_reference: str = "mean-argmax"
    epsilon: float = 0.1
    sharpen_tau: float = 0.5
    sharpen_after_mean: bool = True

    # losses
    lambda1: float = 0.05
    lambda2: float = 0.05
    entropy_weight: float = 0.05
    clean_mode: str = "literal"
    cons_scope: str = "batch"  # batch | retained

    # training
    variant: str = "full"
    eta: float = 0.001
    t_max: int = 100
    warmup_epochs: int = 10
    batch_size: int = 64
    lr_schedule: str = "linear-decay"  # constant | linear-decay | cosine
    lr_decay_start: int | None = None  # default: round(t_max * 80 / 300)
    lr_floor: float = 1e-4
    seed: int = 0
    dump_stats: bool = False

    def __post_init__(self):
        self.variant = str(self.variant).lower()
        if isinstance(self.hidden, list):
            self.hidden = tuple(int(h) for h in self.hidden)
        self.validate()

    def validate(self) -> None:
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.preset not in PRESETS:
            raise ValueError(f"unknown preset {self.preset!r}")
        if self.t_max < 1:
            raise ValueError(f"t_max must be >= 1, got {self.t_max}")
        if not 0 <= self.warmup_epochs <= self.t_max:
            raise ValueError(
                f"warmup_epochs must be in [0, t_max], got {self.warmup_epochs}"
            )
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.eta <= 0:
            raise ValueError(f"eta must be > 0, got {self.eta}")
        if self.lr_floor < 0:
            raise ValueError(f"lr_floor must be >= 0, got {self.lr_floor}")
        if self.lr_schedule not in ("constant", "linear-decay", "cosine"):
            raise ValueError(f"unknown lr_schedule {self.lr_schedule!r}")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError(f"optimizer must be adam or sgd, got {self.optimizer!r}")
        if self.stat_view not in ("weak", "mean"):
            raise ValueError(f"stat_view must be weak or mean, got {self.stat_view!r}")
        if self.cons_scope not in ("batch", "retained"):
            raise ValueError(
                f"cons_scope must be batch or retained, got {self.cons_scope!r}"
            )

    @property
    def effective_data_seed(self) -> int:
        return self.seed if self.data_seed is None else self.data_seed

    @property
    def effective_decay_start(self) -> int:
        if self.lr_decay_start is not None:
            return self.lr_decay_start
        return int(round(self.t_max * 80.0 / 300.0))

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["hidden"] = list(self.hidden)
        return out

    def replace(self, **kwargs) -> "RunConfig":
        return dataclasses.replace(self, **kwargs)


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(RunConfig)}


def _coerce(name: str, value):
    """Parse a string override into the field's declared type."""
    if name not in _FIELD_TYPES:
        raise ValueError(f"unknown config key {name!r}")
    if not isinstance(value, str):
        return value
    ftype = _FIELD_TYPES[name]
    text = value.strip()
    if text.lower() in ("none", "null"):
        return None
    if "bool" in ftype:
        if text.lower() in ("true", "1", "yes", "on"):
            return True
        if text.lower() in ("false", "0", "no", "off"):
            return False
        raise ValueError(f"cannot parse {text!r} as a boolean for {name}")
    if "tuple" in ftype:
        return tuple(int(p) for p in text.replace(",", " ").split())
    if ftype.startswith("int"):
        return int(text)
    if ftype.startswith("float"):
        return float(text)
    return text


def load_config(
    path: str | None = None, overrides: dict | None = None
) -> RunConfig:
    """Resolve a config from an optional YAML file plus key=value overrides."""
    values: dict = {}
    if path is not None:
        with open(path) as fh:
            loaded = yaml.safe_load(fh) or {}
        if not isinstance(loaded, dict):
            raise ValueError(f"config file {path} must hold a flat mapping")
        for key, val in loaded.items():
            values[key] = _coerce(key, val)
    for key, val in (overrides or {}).items():
        values[key] = _coerce(key, val)
    return RunConfig(**values)


def parse_set_args(pairs: list[str]) -> dict:
    """Turn ['eta=0.01', 'variant=full'] into an override dict."""
    out = {}
    for pair in pairs:
        if "=" not in pair:
            raise ValueError(f"--set expects key=value, got {pair!r}")
        key, _, val = pair.partition("=")
        out[key.strip()] = val.strip()
    return out


def save_config(path: str, cfg: RunConfig) -> None:
    from .ioutils import atomic_write_text

    atomic_write_text(path, yaml.safe_dump(cfg.to_dict(), sort_keys=True))


def build_manifest(cfg: RunConfig, out_dir: str, config_path: str | None) -> dict:
    from . import __version__
    from .backend import BACKEND

    return {
        "config": cfg.to_dict(),
        "config_file": config_path,
        "out_dir": out_dir,
        "version": __version__,
        "backend": BACKEND,
        "seed": cfg.seed,
    }
