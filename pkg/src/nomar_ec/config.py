"""JSON configuration files for single points and sweeps.

Recognised top-level keys::

    k_users, powers, betas          network (betas default to -2 for every user)
    snr_db | snr_grid_db            one SNR point, or an SNR sweep
    beta1_grid                      sweep beta of users 1..K-1 at fixed snr_db
    k_users_grid, powers_by_k       sweep the user count
    strategies, nomar_variant       e.g. ["OMA", "NOMA", "NOMA-R"], "event"|"timeshare"|"both"
    estimator                       "cf" | "mc" | "both"
    n_samples, seed, workers

A file with no grid key describes a single NetworkConfig.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .closed_form import NOMA, OMA, StrategyModel
from .rate_model import ConfigError, NetworkConfig

__all__ = [
    "AXES",
    "ESTIMATORS",
    "DEFAULT_POWERS",
    "SweepSpec",
    "db_to_linear",
    "parse_strategies",
    "load_config",
    "config_from_dict",
]

AXES = ("snr_db", "beta1", "k_users")
ESTIMATORS = ("cf", "mc", "both")
DEFAULT_POWERS = {
    2: (0.2, 0.8),
    3: (0.05, 0.15, 0.8),
    4: (0.01, 0.04, 0.15, 0.8),
}
DEFAULT_SAMPLES = 10**6

_KNOWN_KEYS = {
    "k_users", "powers", "betas", "snr_db", "snr_grid_db", "beta1_grid",
    "k_users_grid", "powers_by_k", "strategies", "nomar_variant", "estimator",
    "n_samples", "seed", "workers",
}


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


@dataclass(frozen=True)
class SweepSpec:
    axis: str
    grid: tuple[float, ...]
    base: NetworkConfig
    strategies: tuple[StrategyModel, ...]
    estimator: str = "both"
    n: int = DEFAULT_SAMPLES
    seed: int = 0
    workers: int = 1
    powers_by_k: dict = field(default_factory=lambda: dict(DEFAULT_POWERS))

    def __post_init__(self):
        if self.axis not in AXES:
            raise ConfigError(f"axis must be one of {AXES}, got {self.axis!r}")
        if not self.grid:
            raise ConfigError("sweep grid is empty")
        steps = [b - a for a, b in zip(self.grid, self.grid[1:])]
        if not (all(s > 0 for s in steps) or all(s < 0 for s in steps)):
            raise ConfigError("sweep grid must be strictly monotone")
        if not self.strategies:
            raise ConfigError("no strategies requested")
        if self.estimator not in ESTIMATORS:
            raise ConfigError(f"estimator must be one of {ESTIMATORS}, got {self.estimator!r}")
        if self.n < 1:
            raise ConfigError("n_samples must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.axis == "beta1" and any(not (b < 0) for b in self.grid):
            raise ConfigError("beta1 grid values must be negative")

    def point_config(self, value: float) -> NetworkConfig:
        """Network configuration at one grid value."""
        base = self.base
        if self.axis == "snr_db":
            return base.with_rho(db_to_linear(value))
        if self.axis == "beta1":
            # users 1..K-1 follow the axis, the strongest user keeps its beta
            betas = (value,) * (base.k_users - 1) + (base.betas[-1],)
            return base.with_betas(betas)
        k = int(value)
        if k not in self.powers_by_k:
            raise ConfigError(f"no power vector for k_users={k}")
        return NetworkConfig(k, tuple(self.powers_by_k[k]), base.rho, (base.betas[0],) * k)


def parse_strategies(names, variant: str = "event") -> tuple[StrategyModel, ...]:
    """["OMA", "NOMA", "NOMA-R"] plus a variant ("event", "timeshare", "both")."""
    if variant not in ("event", "timeshare", "both"):
        raise ConfigError(f"nomar_variant must be event, timeshare or both, got {variant!r}")
    variants = ("event", "timeshare") if variant == "both" else (variant,)
    out = []
    for name in names:
        if name == "OMA":
            out.append(OMA)
        elif name == "NOMA":
            out.append(NOMA)
        elif name == "NOMA-R":
            out.extend(StrategyModel("NOMA-R", v) for v in variants)
        else:
            raise ConfigError(f"strategies: unknown strategy {name!r}")
    return tuple(dict.fromkeys(out))


def _number_list(doc: dict, key: str) -> tuple[float, ...]:
    val = doc[key]
    if not isinstance(val, list) or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in val):
        raise ConfigError(f"{key}: expected a list of numbers, got {val!r}")
    return tuple(float(v) for v in val)


def _integer(doc: dict, key: str, default: int) -> int:
    val = doc.get(key, default)
    if not isinstance(val, int) or isinstance(val, bool):
        raise ConfigError(f"{key}: expected an integer, got {val!r}")
    return val


def config_from_dict(doc: dict[str, Any]) -> NetworkConfig | SweepSpec:
    if not isinstance(doc, dict):
        raise ConfigError("top level must be a JSON object")
    unknown = sorted(set(doc) - _KNOWN_KEYS)
    if unknown:
        raise ConfigError(f"unknown keys: {', '.join(unknown)}")
    grid_keys = [k for k in ("snr_grid_db", "beta1_grid", "k_users_grid") if k in doc]
    if len(grid_keys) > 1:
        raise ConfigError(f"only one sweep axis allowed, got {grid_keys}")
    if "snr_db" in doc and "snr_grid_db" in doc:
        raise ConfigError("give either snr_db or snr_grid_db, not both")

    powers_by_k = dict(DEFAULT_POWERS)
    if "powers_by_k" in doc:
        raw = doc["powers_by_k"]
        if not isinstance(raw, dict):
            raise ConfigError("powers_by_k: expected an object mapping K to a power list")
        try:
            powers_by_k.update({int(k): tuple(float(p) for p in v) for k, v in raw.items()})
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"powers_by_k: {exc}") from None

    if "k_users_grid" in doc:
        k_grid = _number_list(doc, "k_users_grid")
        k0 = int(k_grid[0])
        k_users = k0
        powers = powers_by_k.get(k0)
        if powers is None:
            raise ConfigError(f"powers_by_k: no power vector for k_users={k0}")
    else:
        if "k_users" not in doc:
            raise ConfigError("k_users: missing")
        k_users = _integer(doc, "k_users", 0)
        if "powers" in doc:
            powers = _number_list(doc, "powers")
        elif k_users in DEFAULT_POWERS:
            powers = DEFAULT_POWERS[k_users]
        else:
            raise ConfigError("powers: missing")
    betas = _number_list(doc, "betas") if "betas" in doc else ()
    if "k_users_grid" in doc and betas:
        betas = (betas[0],) * k_users

    if "snr_grid_db" in doc:
        snr_grid = _number_list(doc, "snr_grid_db")
        if not snr_grid:
            raise ConfigError("snr_grid_db: empty grid")
        snr_db = snr_grid[0]
    elif "snr_db" in doc:
        snr_db = doc["snr_db"]
        if not isinstance(snr_db, (int, float)) or isinstance(snr_db, bool) or not math.isfinite(snr_db):
            raise ConfigError(f"snr_db: expected a number, got {snr_db!r}")
    else:
        raise ConfigError("snr_db: missing (or give snr_grid_db)")

    try:
        base = NetworkConfig(k_users, powers, db_to_linear(float(snr_db)), betas)
    except ConfigError as exc:
        raise ConfigError(f"network: {exc}") from None

    if not grid_keys:
        return base

    strategies = doc.get("strategies", ["OMA", "NOMA", "NOMA-R"])
    if not isinstance(strategies, list):
        raise ConfigError("strategies: expected a list")
    axis, grid = {
        "snr_grid_db": ("snr_db", lambda: _number_list(doc, "snr_grid_db")),
        "beta1_grid": ("beta1", lambda: _number_list(doc, "beta1_grid")),
        "k_users_grid": ("k_users", lambda: _number_list(doc, "k_users_grid")),
    }[grid_keys[0]]
    return SweepSpec(
        axis=axis,
        grid=grid(),
        base=base,
        strategies=parse_strategies(strategies, doc.get("nomar_variant", "event")),
        estimator=doc.get("estimator", "both"),
        n=_integer(doc, "n_samples", DEFAULT_SAMPLES),
        seed=_integer(doc, "seed", 0),
        workers=_integer(doc, "workers", 1),
        powers_by_k=powers_by_k,
    )


def load_config(path: str | Path) -> NetworkConfig | SweepSpec:
    """Read and validate a JSON config; a power-sum mismatch only warns."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    try:
        return config_from_dict(doc)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None
