"""Experiment configuration: JSON files merged with command-line flags."""

import copy
import json
import os
from dataclasses import dataclass, field


class ConfigError(ValueError):
    """Bad configuration; the CLI maps it to exit code 2."""


COMMON = {"out": "out", "grid": None, "tol": None, "threads": None, "seed": 0}

DEFAULTS = {
    "contact-check": {"chart": "critset", "F": [0.0], "g_scale": 0.5, "grid": 128, "tol": 1e-9},
    "foliation": {"surface": "graph", "profile": {"variant": "C_eps", "eps": 0.04, "delta": 0.01},
                  "F": [0.0], "domain": None, "n_leaves": 24, "t_max": 6.0, "grid": 256, "tol": 1e-10},
    "classify": {"field": "saddle", "point": [0.0, 0.0], "tol": 1e-8},
    "leaves": {"field": "rank_one", "point": [0.0, 0.0], "a": 0.2, "tol": 1e-6},
    "hammer": {"p": [0.0, 0.0, 0.0], "q": [0.0, 0.5, 0.0], "eps": 0.1, "T": 1.0, "grid": 50, "tol": 1e-12},
    "convexity": {"profile": {"variant": "C_eps", "eps": 0.04, "delta": 0.01}, "tol": 1e-6},
    "flexibility": {"N": 3, "C": 0.25, "c": None, "grid": 256, "snapshots": [0.0, 0.5, 1.0]},
    "critset": {"F": [0.0, [0.3, 0.4]], "interval": [-1.0, 1.0], "grid": 512, "tol": 1e-10},
    "verify": {"criteria": None},
}

TOLERANCE_KEYS = ("tol",)


@dataclass
class ExperimentConfig:
    command: str
    params: dict = field(default_factory=dict)

    @property
    def out(self):
        return self.params["out"]

    def get(self, key, default=None):
        v = self.params.get(key)
        return default if v is None else v

    def to_dict(self):
        return {"command": self.command, **self.params}


def threads_from_env(value=None):
    """--threads value, else CHARFOL_THREADS, else 1."""
    if value is None:
        env = os.environ.get("CHARFOL_THREADS")
        if env is None:
            return 1
        try:
            value = int(env)
        except ValueError:
            raise ConfigError(f"CHARFOL_THREADS must be an integer, got {env!r}") from None
    if value < 1:
        raise ConfigError("threads must be at least 1")
    return value


def load_config(command, path=None, overrides=None):
    """Merge defaults, an optional JSON file and flag overrides (None = unset)."""
    if command not in DEFAULTS:
        raise ConfigError(f"unknown command {command!r}")
    params = copy.deepcopy(COMMON)
    params.update(copy.deepcopy(DEFAULTS[command]))
    allowed = set(params)
    if path is not None:
        try:
            with open(path) as fh:
                data = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
        unknown = sorted(set(data) - allowed)
        if unknown:
            raise ConfigError(f"unknown config keys for {command}: {unknown}")
        params.update(data)
    for k, v in (overrides or {}).items():
        if v is not None:
            if k not in allowed:
                raise ConfigError(f"option {k} does not apply to {command}")
            params[k] = v
    params["threads"] = threads_from_env(params.get("threads"))
    for k in TOLERANCE_KEYS:
        v = params.get(k)
        if v is not None and not (isinstance(v, (int, float)) and v > 0):
            raise ConfigError(f"{k} must be positive, got {v!r}")
    g = params.get("grid")
    if g is not None and not (isinstance(g, int) and g > 0):
        raise ConfigError(f"grid must be a positive integer, got {g!r}")
    if not isinstance(params.get("seed"), int):
        raise ConfigError("seed must be an integer")
    return ExperimentConfig(command, params)
