"""Plain-text experiment configuration: ``key = value`` lines plus ``--set`` overrides."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from cleas.errors import ConfigError
from cleas.tasknet import LayerSpec

MODES = ("cleas", "cleas-c", "reuse-all", "standard-controller")
DATASETS = ("permuted-mnist", "rotated-mnist", "class-split-mnist", "class-split-cifar",
            "synthetic", "synthetic-images")


@dataclass
class RunConfig:
    mode: str = "cleas"
    dataset: str = "permuted-mnist"
    data_dir: str = "data/mnist"
    tasks: int = 10
    train_per_task: int = 55000
    valid_per_task: int = 5000
    test_per_task: int = 10000
    # kind:capacity:initial_width[:filter_size], comma separated
    architecture: str = "dense:1000:312,dense:1000:128"
    episodes: int = 200
    steps: int = 1
    explore: float = 0.3
    alpha: float = 1e-3
    max_new_per_layer: int = -1
    epochs: int = 5
    initial_epochs: int = 5
    batch_size: int = 64
    lr: float = 1e-3
    optimizer: str = "adam"
    initial_optimizer: str = "adam"
    controller_hidden: int = 64
    controller_lr: float = 1e-3
    controller_rho: float = 0.9
    controller_init_scale: float = 0.1
    baseline_decay: float = 0.9
    sample_actions: bool = False
    cache_candidates: bool = True
    synth_dims: int = 20
    synth_separation: float = 3.0
    synth_classes: int = 2
    image_side: int = 8
    seed: int = 0
    out: str = "runs/run"

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.dataset not in DATASETS:
            raise ConfigError(f"dataset must be one of {DATASETS}, got {self.dataset!r}")
        if self.episodes < 1 or self.steps < 1:
            raise ConfigError("episodes (H) and steps (U) must be >= 1")
        if not 0.0 <= self.explore <= 1.0:
            raise ConfigError("explore (p) must lie in [0, 1]")
        if self.alpha < 0:
            raise ConfigError("alpha must be >= 0")
        if self.tasks < 1:
            raise ConfigError("tasks must be >= 1")
        if self.batch_size < 1 or self.epochs < 0 or self.initial_epochs < 0:
            raise ConfigError("batch_size must be >= 1 and epochs >= 0")
        for name in ("optimizer", "initial_optimizer"):
            if getattr(self, name) not in ("sgd", "adam", "rmsprop"):
                raise ConfigError(f"{name} must be sgd, adam or rmsprop")
        if not 0.0 <= self.baseline_decay < 1.0:
            raise ConfigError("baseline_decay must lie in [0, 1)")
        self.layer_specs()

    @property
    def cap(self) -> int | None:
        return None if self.max_new_per_layer < 0 else self.max_new_per_layer

    @property
    def four_way(self) -> bool:
        return self.mode == "cleas-c"

    def layer_specs(self) -> tuple[LayerSpec, ...]:
        specs = []
        for item in self.architecture.split(","):
            parts = item.strip().split(":")
            try:
                if parts[0] == "dense" and len(parts) == 3:
                    specs.append(LayerSpec("dense", int(parts[1]), int(parts[2])))
                elif parts[0] == "conv" and len(parts) == 4:
                    specs.append(LayerSpec("conv", int(parts[1]), int(parts[2]), int(parts[3])))
                else:
                    raise ValueError(item)
            except ValueError:
                raise ConfigError(f"bad architecture item {item!r}; use dense:cap:width or conv:cap:width:k") from None
        return tuple(specs)

    def rng(self, stream: str, *keys: int) -> np.random.Generator:
        """Independent generator for a named sub-stream of the run seed."""
        return np.random.default_rng([self.seed, STREAMS[stream], *[int(k) for k in keys]])

    def dumps(self) -> str:
        lines = [f"{f.name} = {_format(getattr(self, f.name))}" for f in fields(self)]
        return "\n".join(lines) + "\n"


STREAMS = {"controller": 1, "candidate": 2, "explore": 3, "state": 4, "data": 5, "initial": 6, "sample": 7}


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _coerce(name: str, kind, text: str):
    text = text.strip()
    try:
        if kind in (bool, "bool"):
            lowered = text.lower()
            if lowered not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(text)
            return lowered in ("true", "1", "yes")
        if kind in (int, "int"):
            return int(text)
        if kind in (float, "float"):
            return float(text)
    except ValueError:
        raise ConfigError(f"bad value for {name}: {text!r}") from None
    return text


def parse_pairs(pairs) -> dict:
    """``key=value`` strings (or ``(key, value)`` tuples) to a typed dict; unknown keys rejected."""
    kinds = {f.name: f.type for f in fields(RunConfig)}
    out = {}
    for pair in pairs:
        if isinstance(pair, str):
            if "=" not in pair:
                raise ConfigError(f"expected key=value, got {pair!r}")
            key, value = pair.split("=", 1)
        else:
            key, value = pair
        key = key.strip()
        if key not in kinds:
            raise ConfigError(f"unknown config key {key!r}")
        out[key] = _coerce(key, kinds[key], str(value))
    return out


def parse_text(text: str) -> dict:
    pairs = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        pairs.append(line)
    return parse_pairs(pairs)


def load_config(path=None, overrides=()) -> RunConfig:
    values = parse_text(Path(path).read_text()) if path is not None else {}
    values.update(parse_pairs(overrides))
    return RunConfig(**values)


def with_overrides(cfg: RunConfig, **changes) -> RunConfig:
    return dataclasses.replace(cfg, **changes)
