"""Experiment configuration: typed sections, validation and YAML round-tripping."""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import yaml


class ConfigError(ValueError):
    pass


@dataclass
class BaseConfig:
    kind: str = "solenoid"
    lam: float = 0.05
    R: float = 2.0
    n_terms: int = 16
    matrix: list = field(default_factory=lambda: [[2, 1], [1, 1]])


@dataclass
class FiberConfig:
    a: float = 0.1
    eps0: float = 0.03


@dataclass
class GridConfig:
    n_x: int = 5
    n_m: int = 64
    central_n_m: int = 256


@dataclass
class SymbolicConfig:
    w: str = "1"
    kappa: float = 0.1
    N: int = 24
    N_min: int = 16
    N_max: int = 64
    cover_epsilon: float = 0.01
    N0: list = field(default_factory=lambda: [16, 24, 32])
    box_depths: list = field(default_factory=lambda: [8, 24])
    box_set: str = "atypical"
    avoid_pattern: str = "11"


@dataclass
class ExperimentConfig:
    """All knobs of an experiment; every field has a documented default in the template."""

    base: BaseConfig = field(default_factory=BaseConfig)
    fiber: FiberConfig = field(default_factory=FiberConfig)
    epsilon: float = 1e-3
    perturbation_seed: int = 0
    delta: float | None = None
    grid: GridConfig = field(default_factory=GridConfig)
    depth: int = 20
    kind: str = "s"
    seed: int = 0
    n_points: int = 4
    pairs_per_point: int = 5
    holder_j: list = field(default_factory=lambda: [4, 14])
    contraction_tolerance: float = 0.1
    weak_ergodic_samples: int = 1000
    weak_ergodic_n: int = 400
    weak_ergodic_delta: float = 0.25
    falconer_map: str = "solenoid"
    falconer_alpha: float | None = None
    falconer_nodes: int = 4096
    symbolic: SymbolicConfig = field(default_factory=SymbolicConfig)
    threads: int | None = None
    output_dir: str = "lamina_out"

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict | None) -> "ExperimentConfig":
        cfg = _build(cls, data or {}, "")
        cfg.validate()
        return cfg

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)

    @classmethod
    def from_yaml(cls, text: str) -> "ExperimentConfig":
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigError(f"config is not valid YAML: {exc}") from None
        if data is not None and not isinstance(data, dict):
            raise ConfigError("config must be a mapping")
        return cls.from_dict(data)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        return cls.from_yaml(Path(path).read_text())

    def save(self, path) -> None:
        Path(path).write_text(self.to_yaml())

    def digest(self) -> str:
        """SHA-256 of the canonical JSON form; identifies the config in output headers."""
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()

    def validate(self) -> None:
        b = self.base
        if b.kind not in ("solenoid", "anosov"):
            raise ConfigError(f"base.kind must be solenoid or anosov, got {b.kind!r}")
        if not (0 < b.lam < 0.5):
            raise ConfigError("base.lam must lie in (0, 1/2)")
        if not (self.epsilon >= 0):
            raise ConfigError("epsilon must be non-negative")
        if self.epsilon > 0.05:
            raise ConfigError("epsilon above 0.05 is outside the perturbative regime")
        if self.delta is not None and not (0 < self.delta <= 0.1):
            raise ConfigError("delta must lie in (0, 0.1]")
        if self.grid.n_x < 2 or self.grid.n_m < 4:
            raise ConfigError("grid too coarse (n_x >= 2, n_m >= 4)")
        if self.depth < 0:
            raise ConfigError("depth must be non-negative")
        if self.kind not in ("s", "u"):
            raise ConfigError("kind must be s or u")
        if self.n_points < 1 or self.pairs_per_point < 1:
            raise ConfigError("n_points and pairs_per_point must be positive")
        s = self.symbolic
        if not s.w or any(c not in "01" for c in s.w):
            raise ConfigError("symbolic.w must be a binary word")
        if s.kappa < 0:
            raise ConfigError("symbolic.kappa must be non-negative")
        if not (1 <= s.N <= 4096) or not (1 <= s.N_min <= s.N_max <= 4096):
            raise ConfigError("symbolic depths must satisfy 1 <= N_min <= N_max <= 4096")
        if len(s.box_depths) != 2 or s.box_depths[0] >= s.box_depths[1] or s.box_depths[1] > 26:
            raise ConfigError("symbolic.box_depths must be [lo, hi] with lo < hi <= 26")
        if s.box_set not in ("atypical", "avoid", "full"):
            raise ConfigError("symbolic.box_set must be atypical, avoid or full")
        if self.falconer_map not in ("solenoid", "weierstrass"):
            raise ConfigError("falconer_map must be solenoid or weierstrass")
        if self.threads is not None and self.threads < 1:
            raise ConfigError("threads must be positive")
        if len(self.holder_j) != 2 or self.holder_j[0] >= self.holder_j[1]:
            raise ConfigError("holder_j must be [j_min, j_max]")


def _build(cls, data: dict, prefix: str):
    if not isinstance(data, dict):
        raise ConfigError(f"section {prefix or 'root'} must be a mapping")
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(data) - set(fields)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(prefix + k for k in unknown))}")
    kwargs = {}
    for name, value in data.items():
        default = getattr(cls(), name) if name in fields else None
        if dataclasses.is_dataclass(default):
            kwargs[name] = _build(type(default), value or {}, f"{prefix}{name}.")
        else:
            kwargs[name] = value
    return cls(**kwargs)


def template_text() -> str:
    """The shipped, commented default configuration."""
    return resources.files("lamina").joinpath("templates/default.yaml").read_text()
