"""Experiment configuration files and run manifests."""

from __future__ import annotations

import copy
import hashlib
import json
import math
from dataclasses import dataclass, field

import yaml

from . import __version__
from .errors import ConfigError
from .geoflow import ATOL, RTOL, T_MAX, TAU_MAX
from .surface_models import KINDS, SurfaceModel

COMMANDS = ("renlen", "scatter", "liouville", "deviate", "theta", "escape", "verify")

# every numeric default in one place; the manifest records this table
DEFAULTS = {
    "renlen": {"p": 0.0, "q": math.pi, "winding": 0, "eps0": 0.02, "levels": 5},
    "scatter": {"p": [0.0], "eta": [0.0]},
    "liouville": {"boxes": [[0.0, math.pi / 2, math.pi, 3 * math.pi / 2]], "eps0": 0.02,
                  "levels": 5},
    "deviate": {"x": 0.1, "y": 0.0, "heading": 0.0, "theta": [math.pi / 3]},
    "theta": {"eps": 0.02, "ntheta": 16, "samples": 100_000, "alpha": 0.0, "beta": 1.0,
              "beta_prime": 0.0, "hinge": math.pi / 2},
    "escape": {"eps": 0.1, "tmin": 0.0, "tmax": 16.0, "tstep": 0.5, "samples": 100_000},
    "verify": {"only": []},
}
MODEL_COUNT = {"renlen": (1, 1), "scatter": (1, 2), "liouville": (1, 2), "deviate": (2, 2),
               "theta": (2, 2), "escape": (1, 1), "verify": (0, 0)}
TOLERANCES = {"atol": ATOL, "rtol": RTOL, "tau_cutoff": TAU_MAX, "t_max": T_MAX}
MODEL_KEYS = {"kind", "neck_length", "bump", "bdf_shift"}
BUMP_KEYS = {"cx", "cy", "radius", "amplitude"}


def _check_type(key, value, default):
    if isinstance(default, bool):
        ok = isinstance(value, bool)
    elif isinstance(default, int):
        ok = isinstance(value, int) and not isinstance(value, bool)
    elif isinstance(default, float):
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
    elif isinstance(default, list):
        ok = isinstance(value, list)
    else:
        ok = True
    if not ok:
        raise ConfigError(f"parameter {key!r} has the wrong type ({type(value).__name__})")


def _check_model(desc):
    if not isinstance(desc, dict) or "kind" not in desc:
        raise ConfigError("each model needs a 'kind'")
    extra = set(desc) - MODEL_KEYS
    if extra:
        raise ConfigError(f"unknown model keys {sorted(extra)}")
    if desc["kind"] not in KINDS:
        raise ConfigError(f"unknown model kind {desc['kind']!r}")
    bump = desc.get("bump")
    if bump is not None and (not isinstance(bump, dict) or set(bump) - BUMP_KEYS):
        raise ConfigError("bump must be a mapping with keys cx, cy, radius, amplitude")


@dataclass
class ExperimentConfig:
    command: str
    models: list = field(default_factory=list)
    params: dict = field(default_factory=dict)
    seed: int = 0
    output_dir: str = "."

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or self.seed < 0:
            raise ConfigError("seed must be a nonnegative integer")
        lo, hi = MODEL_COUNT[self.command]
        if not lo <= len(self.models) <= hi:
            raise ConfigError(f"{self.command} takes {lo} to {hi} models, got {len(self.models)}")
        for m in self.models:
            _check_model(m)
        defaults = DEFAULTS[self.command]
        extra = set(self.params) - set(defaults)
        if extra:
            raise ConfigError(f"unknown parameters for {self.command}: {sorted(extra)}")
        for key, value in self.params.items():
            _check_type(key, value, defaults[key])

    def resolved(self) -> dict:
        """Parameters with defaults filled in."""
        out = copy.deepcopy(DEFAULTS[self.command])
        out.update(copy.deepcopy(self.params))
        return out

    def build_models(self) -> list[SurfaceModel]:
        return [SurfaceModel.from_dict(m) for m in self.models]

    def to_dict(self) -> dict:
        return {"command": self.command, "seed": self.seed, "output_dir": self.output_dir,
                "models": copy.deepcopy(self.models), "params": copy.deepcopy(self.params)}

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        if not isinstance(d, dict):
            raise ConfigError("a configuration must be a mapping")
        extra = set(d) - {"command", "seed", "output_dir", "models", "params"}
        if extra:
            raise ConfigError(f"unknown configuration keys {sorted(extra)}")
        if "command" not in d:
            raise ConfigError("configuration needs a 'command'")
        return cls(d["command"], list(d.get("models") or []), dict(d.get("params") or {}),
                   d.get("seed", 0), str(d.get("output_dir", ".")))

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=True)

    @classmethod
    def from_yaml(cls, text: str) -> "ExperimentConfig":
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigError(f"unreadable configuration: {exc}") from exc
        return cls.from_dict(data)

    def config_hash(self) -> str:
        """Short digest of the resolved configuration (output directory excluded)."""
        body = {"command": self.command, "seed": self.seed, "models": self.models,
                "params": self.resolved()}
        text = json.dumps(body, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()[:12]


@dataclass
class RunManifest:
    config_hash: str
    version: str
    wall_time: float
    checksums: dict
    config: dict
    defaults: dict

    @classmethod
    def build(cls, cfg: ExperimentConfig, wall_time: float, files: dict) -> "RunManifest":
        sums = {name: hashlib.sha256(data.encode()).hexdigest() for name, data in files.items()}
        defaults = {"command": cfg.resolved(), "tolerances": TOLERANCES}
        return cls(cfg.config_hash(), __version__, wall_time, sums, cfg.to_dict(), defaults)

    def to_json(self) -> str:
        return json.dumps(self.__dict__, indent=2, sort_keys=True) + "\n"
