"""Run configuration, canonical JSON and atomic file output for the batch driver."""
from __future__ import annotations

import hashlib
import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .maps import map_from_config

SEED_MAX = 2**64 - 1

# subcommand -> default parameters; keys outside these are rejected
SUBCOMMAND_PARAMS: dict[str, dict] = {
    "classify-inner": {"z0": [0.0, 0.0], "n_steps": 4000},
    "dw-point": {"z0": [0.0, 0.0], "budget": 4000},
    "orbit": {"z0": [0.0, 0.0], "n_max": 1000, "escape_radius": 1e6},
    "radial-limit": {"xi": [1.0, 0.0], "kmax": 48, "tol": 1e-8},
    "singularity-scan": {"candidate_resolution": 1e-2, "eps": 0.05, "n_samples": 100000,
                         "spot_checks": None},
    "distortion-check": {"r": 0.5, "n_max": 20, "univalent": ["identity", "koebe"],
                         "random_polynomials": 10},
    "stolz-check": {"xi": [1.0, 0.0], "p": [0.0, 0.0], "alpha": math.pi / 4, "rho": 0.5,
                    "depth": 10, "samples": 64, "choices": None, "bisect": False},
    "rho0": {"xi": [1.0, 0.0], "N": 10, "cap": 1.0, "n_validate": 16, "validate": True},
    "harmonic-sample": {"domain": "exact_disk", "z0": [0.0, 0.0], "n_walks": 10000, "h": 1e-3,
                        "band": 1e-6, "max_steps": 1000000, "arcs": [], "intervals": []},
    "find-periodic": {"x": None, "seed_method": "ray", "theta": 0.0, "depth": 4, "delta": 0.1,
                      "maxN": 12, "attempts": 48, "r_max": 0.5},
    "density-experiment": {"n_seeds": 64, "delta": 0.1, "maxN": 12, "attempts": 48,
                           "r_max": 0.5},
    "oracle-periodic": {"N": 1, "tol": 1e-14},
}

# subcommands that run without a map
MAPLESS = {"distortion-check"}
TOLERANCE_KEYS = {"membership_iter", "membership_tol"}
TOP_KEYS = {"subcommand", "map", "params", "seed", "out", "tolerances"}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    subcommand: str
    map: dict | None = None
    params: dict = field(default_factory=dict)
    seed: int = 0
    out: str | None = None
    tolerances: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.subcommand not in SUBCOMMAND_PARAMS:
            raise ConfigError(f"unknown subcommand {self.subcommand!r}")
        if not isinstance(self.params, dict):
            raise ConfigError("params must be an object")
        extra = set(self.params) - set(SUBCOMMAND_PARAMS[self.subcommand])
        if extra:
            raise ConfigError(f"unknown parameters for {self.subcommand}: {sorted(extra)}")
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or not 0 <= self.seed <= SEED_MAX:
            raise ConfigError("seed must be an integer in [0, 2**64)")
        if not isinstance(self.tolerances, dict):
            raise ConfigError("tolerances must be an object")
        bad = set(self.tolerances) - TOLERANCE_KEYS
        if bad:
            raise ConfigError(f"unknown tolerance keys: {sorted(bad)}")
        if self.map is None and not self._map_optional():
            raise ConfigError(f"{self.subcommand} needs a map")
        if self.map is not None and not isinstance(self.map, dict):
            raise ConfigError("map must be an object")

    def _map_optional(self) -> bool:
        if self.subcommand in MAPLESS:
            return True
        if self.subcommand == "harmonic-sample":
            return self.param("domain") != "fatou_component"
        return False

    def param(self, key):
        """Parameter value with the subcommand default filled in."""
        return self.params.get(key, SUBCOMMAND_PARAMS[self.subcommand][key])

    def resolved_params(self) -> dict:
        out = dict(SUBCOMMAND_PARAMS[self.subcommand])
        out.update(self.params)
        return out

    def build_map(self):
        if self.map is None:
            return None
        try:
            return map_from_config(self.map)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad map: {exc}") from exc

    def to_dict(self) -> dict:
        return {"subcommand": self.subcommand, "map": self.map, "params": dict(self.params),
                "seed": self.seed, "out": self.out, "tolerances": dict(self.tolerances)}

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        extra = set(d) - TOP_KEYS
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        if "subcommand" not in d:
            raise ConfigError("config needs a subcommand")
        return cls(**d)

    def to_json(self) -> str:
        return canonical_json(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        return cls.from_dict(d)

    def hash(self) -> str:
        """sha256 of the canonical config with the output directory removed."""
        d = self.to_dict()
        d.pop("out")
        return hashlib.sha256(canonical_json(d).encode()).hexdigest()


# ---------------------------------------------------------------------------
# serialization


def to_jsonable(x):
    """Plain JSON types; complex -> [re, im], non-finite floats -> strings."""
    if isinstance(x, dict):
        return {str(k): to_jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [to_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return [to_jsonable(v) for v in x.tolist()]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (complex, np.complexfloating)):
        return [to_jsonable(float(x.real)), to_jsonable(float(x.imag))]
    if isinstance(x, (float, np.floating)):
        v = float(x)
        if math.isfinite(v):
            return v
        return "nan" if math.isnan(v) else ("inf" if v > 0 else "-inf")
    return x


def canonical_json(obj) -> str:
    return json.dumps(to_jsonable(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def atomic_write(path: str | os.PathLike, text: str) -> Path:
    """Write to a temp file in the target directory, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path
