"""Flat key=value run configuration with CLI-flag overrides."""

from __future__ import annotations

import os
from dataclasses import dataclass, fields, replace

from .errors import ConfigError

__all__ = ["RunConfig", "load_config"]

_ARCHS = ("GCN", "GAT", "GraphSAGE")
_MODES = ("evasion", "poisoning")
_SPLITS = ("random", "planetoid")


@dataclass(frozen=True)
class RunConfig:
    content_path: str = "data/cora.content"
    cites_path: str = "data/cora.cites"
    dataset_name: str = "cora"
    arch: str = "GCN"
    split: str = "random"
    train_frac: float = 0.6
    val_frac: float = 0.2
    seed: int = 0
    k: int = 50
    s: int = 20
    fraction: float = 0.10
    multiplier: float = 2.0
    mode: str = "evasion"
    trials: int = 10
    epochs: int = 20
    learning_rate: float = 0.005
    weight_decay: float = 5e-4
    dropout: float | None = None
    metric: str = "euclidean"
    embed_layer: str = "hidden"
    eig_tol: float = 1e-8
    out: str = "runs"

    def validate(self, require_data: bool = True) -> "RunConfig":
        if self.arch not in _ARCHS:
            raise ConfigError(f"arch must be one of {_ARCHS}, not {self.arch!r}")
        if self.mode not in _MODES:
            raise ConfigError(f"mode must be one of {_MODES}, not {self.mode!r}")
        if self.split not in _SPLITS:
            raise ConfigError(f"split must be one of {_SPLITS}, not {self.split!r}")
        if self.k < 1:
            raise ConfigError("k must be at least 1")
        if self.s < 1:
            raise ConfigError("s must be at least 1")
        if not (0.0 < self.fraction <= 1.0):
            raise ConfigError("fraction must be in (0, 1]")
        if not self.multiplier > 0.0:
            raise ConfigError("multiplier must be positive")
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        if self.epochs < 1 or self.learning_rate < 0.0:
            raise ConfigError("epochs must be positive, learning_rate non-negative")
        if self.eig_tol <= 0.0:
            raise ConfigError("eig_tol must be positive")
        if require_data:
            for path in (self.content_path, self.cites_path):
                if not os.path.isfile(path):
                    raise ConfigError(f"dataset file not found: {path}")
        return self


_CASTERS = {}
for f in fields(RunConfig):
    if f.name == "dropout":
        _CASTERS[f.name] = lambda v: None if v.lower() == "none" else float(v)
    elif f.type == "int":
        _CASTERS[f.name] = int
    elif f.type == "float":
        _CASTERS[f.name] = float
    else:
        _CASTERS[f.name] = str


def _parse_value(key: str, raw: str, where: str):
    if key not in _CASTERS:
        raise ConfigError(f"{where}: unknown config key {key!r}")
    try:
        return _CASTERS[key](raw)
    except ValueError:
        raise ConfigError(f"{where}: cannot parse {key}={raw!r}")


def load_config(path: str | None, overrides: dict | None = None) -> RunConfig:
    """Read ``key = value`` lines, then apply non-None overrides on top."""
    values = {}
    if path is not None:
        if not os.path.isfile(path):
            raise ConfigError(f"config file not found: {path}")
        with open(path, "r", encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                stripped = line.split("#", 1)[0].strip()
                if not stripped:
                    continue
                if "=" not in stripped:
                    raise ConfigError(f"{path}:{line_no}: expected key = value")
                key, raw = (part.strip() for part in stripped.split("=", 1))
                values[key] = _parse_value(key, raw, f"{path}:{line_no}")
    cfg = replace(RunConfig(), **values)
    if overrides:
        cfg = replace(
            cfg, **{k: v for k, v in overrides.items() if v is not None}
        )
    return cfg
