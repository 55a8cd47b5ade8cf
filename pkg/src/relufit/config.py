"""Sweep config files (TOML) and output-directory resolution."""

from __future__ import annotations

import os
import sys

from .errors import ConfigError
from .experiment import SweepConfig

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

ENV_OUT = "RELUFIT_OUT"

_LIST_KEYS = {"d": "d_list", "M": "m_list", "sigma": "sigma_list", "epsilon": "eps_targets"}
_SCALAR_KEYS = {
    "depth": ("depth", int),
    "scheme": ("scheme", str),
    "trials": ("trials", int),
    "n_start": ("n_start", int),
    "n_cap": ("n_cap", int),
    "seed": ("master_seed", int),
    "parallelism": ("parallelism", int),
    "out_dir": ("out_dir", str),
    "n_mc": ("n_mc", int),
}


def _as_list(value, key: str, numeric_type):
    if isinstance(value, (list, tuple)):
        items = list(value)
    else:
        items = [value]
    out = []
    for item in items:
        if isinstance(item, bool) or not isinstance(item, (int, float)):
            raise ConfigError(f"config key {key!r} must hold numbers, got {item!r}")
        out.append(numeric_type(item))
    if not out:
        raise ConfigError(f"config key {key!r} must not be empty")
    return out


def load_sweep_config(path: str) -> SweepConfig:
    """Parse a sweep config; unreadable or ill-typed input raises ConfigError."""
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc

    table = raw.get("sweep", raw)
    if not isinstance(table, dict):
        raise ConfigError("config must hold a [sweep] table or top-level keys")

    cfg = SweepConfig(d_list=[], m_list=[], sigma_list=[])
    cfg.out_dir = ""  # only an explicit config value should beat the env var
    for key in ("d", "M"):
        if key not in table:
            raise ConfigError(f"config is missing required key {key!r}")
    cfg.d_list = _as_list(table["d"], "d", int)
    cfg.m_list = _as_list(table["M"], "M", int)
    cfg.sigma_list = _as_list(table.get("sigma", 0.1), "sigma", float)
    if "epsilon" in table:
        cfg.eps_targets = _as_list(table["epsilon"], "epsilon", float)

    for key, (attr, typ) in _SCALAR_KEYS.items():
        if key in table:
            value = table[key]
            if typ is int and (isinstance(value, bool) or not isinstance(value, int)):
                raise ConfigError(f"config key {key!r} must be an integer, got {value!r}")
            if typ is str and not isinstance(value, str):
                raise ConfigError(f"config key {key!r} must be a string, got {value!r}")
            setattr(cfg, attr, typ(value))

    if any(v < 1 for v in cfg.d_list) or any(v < 1 for v in cfg.m_list):
        raise ConfigError("d and M values must be >= 1")
    if cfg.scheme not in ("same", "four_m", "tune"):
        raise ConfigError(f"scheme must be same, four_m, or tune, got {cfg.scheme!r}")
    if cfg.depth not in (1, 2, 3):
        raise ConfigError(f"depth must be 1, 2, or 3, got {cfg.depth}")
    if cfg.trials < 1:
        raise ConfigError("trials must be >= 1")
    if cfg.n_start < 2:
        raise ConfigError("n_start must be >= 2 (training needs a split)")
    if cfg.n_cap < cfg.n_start:
        raise ConfigError("n_cap must be >= n_start")
    if any(e <= 0 for e in cfg.eps_targets):
        raise ConfigError("epsilon targets must be positive")
    if any(s <= 0 for s in cfg.sigma_list):
        raise ConfigError("sigma values must be positive")
    return cfg


def resolve_out_dir(flag_value: str | None, config_value: str | None) -> str:
    """Flags beat config; config beats the environment; then a default."""
    if flag_value:
        return flag_value
    if config_value:
        return config_value
    env = os.environ.get(ENV_OUT)
    if env:
        return env
    return "results"


def resolve_parallelism(value: int) -> int:
    if value < 1:
        return os.cpu_count() or 1
    return value
