"""Seeded Monte-Carlo estimators for the NOMA probability and effective capacity.

Samples are drawn in fixed blocks of ``BLOCK_SIZE``; block b always uses the
stream ``block_rng(seed, b)`` and block statistics are merged in ascending
block order, so the result is bit-identical for any worker count.  Every
strategy and user evaluated in one call shares the same gains (common random
numbers), and so does every call with the same seed.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .channel import block_rng, sample_gain_matrix
from .closed_form import (
    BETA_DEGENERATE,
    NOMA,
    NOMAR_EVENT,
    NOMAR_TIMESHARE,
    OMA,
    DegenerateExponentError,
    StrategyModel,
    TwoUserParams,
    tau_closed_form,
)
from .rate_model import (
    NetworkConfig,
    feasible_partitions,
    noma_r_rates_batch,
    noma_rates_batch,
    oma_rates_batch,
    select_clusters_batch,
)

__all__ = [
    "BLOCK_SIZE",
    "UnsupportedModelError",
    "EcEstimate",
    "TauEstimate",
    "SumEcEstimate",
    "Simulation",
    "simulate",
    "estimate_tau",
    "estimate_ec",
    "estimate_sum_ec",
    "combined_se",
]

BLOCK_SIZE = 1 << 16
_LN2 = math.log(2.0)

Sampler = Callable[[np.random.Generator, int, int], np.ndarray]


class UnsupportedModelError(ValueError):
    """Requested strategy model is not defined for this configuration."""


@dataclass(frozen=True)
class EcEstimate:
    value: float
    std_err: float
    n: int
    raw_mean: float
    raw_se: float


@dataclass(frozen=True)
class TauEstimate:
    value: float
    std_err: float
    n: int


@dataclass(frozen=True)
class SumEcEstimate:
    per_user: tuple[EcEstimate, ...]
    value: float
    std_err: float


@dataclass(frozen=True)
class Simulation:
    """Everything one pass over the samples produced.

    ``ec`` is keyed by (strategy, user) with 1-based users; ``noma_frequency``
    is the fraction of realizations where NOMA-R formed at least one cluster
    (only when event-selection NOMA-R was simulated, else None).
    """

    ec: dict
    noma_frequency: TauEstimate | None
    n: int
    seed: int

    def sum_ec(self, strategy: StrategyModel, k_users: int) -> SumEcEstimate:
        per_user = tuple(self.ec[(strategy, u)] for u in range(1, k_users + 1))
        return SumEcEstimate(per_user, sum(e.value for e in per_user),
                             combined_se(*per_user))


def combined_se(*estimates) -> float:
    """Independence bound sqrt(sum SE^2); conservative under common random numbers."""
    return math.sqrt(sum(e.std_err ** 2 for e in estimates))


# --------------------------------------------------------------------------
# block machinery
# --------------------------------------------------------------------------

@dataclass
class _Moments:
    """Running count/mean/M2, merged with the pairwise (Chan) update."""

    n: int = 0
    mean: float = 0.0
    m2: float = 0.0

    @classmethod
    def of(cls, x: np.ndarray) -> "_Moments":
        mean = float(np.mean(x))
        return cls(x.size, mean, float(np.sum((x - mean) ** 2)))

    def merge(self, other: "_Moments") -> None:
        if other.n == 0:
            return
        n = self.n + other.n
        delta = other.mean - self.mean
        self.mean += delta * other.n / n
        self.m2 += other.m2 + delta * delta * self.n * other.n / n
        self.n = n

    def sem(self) -> float:
        if self.n < 2:
            return 0.0
        return math.sqrt(max(self.m2, 0.0) / (self.n - 1) / self.n)


def _blocks(n: int) -> list[tuple[int, int]]:
    if n < 1:
        raise ValueError("sample count must be >= 1")
    full, rest = divmod(n, BLOCK_SIZE)
    out = [(b, BLOCK_SIZE) for b in range(full)]
    if rest:
        out.append((full, rest))
    return out


def _map_blocks(fn, blocks, workers: int):
    if workers < 1:
        raise ValueError("workers must be >= 1")
    if workers == 1 or len(blocks) == 1:
        return [fn(b) for b in blocks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, blocks))


def _draw(seed: int, block: int, size: int, k: int, sampler: Sampler | None) -> np.ndarray:
    rng = block_rng(seed, block)
    if sampler is None:
        return sample_gain_matrix(size, k, rng)
    gains = np.asarray(sampler(rng, size, k), dtype=float)
    if gains.shape != (size, k):
        raise ValueError(f"sampler returned shape {gains.shape}, expected {(size, k)}")
    return gains


def _validate_request(strategy: StrategyModel, user: int, cfg: NetworkConfig) -> None:
    if not 1 <= user <= cfg.k_users:
        raise ValueError(f"user must be in 1..{cfg.k_users}, got {user}")
    if strategy == NOMAR_TIMESHARE and cfg.k_users != 2:
        raise UnsupportedModelError(
            "time-share NOMA-R needs the closed-form NOMA probability, defined for K=2 only")
    if abs(cfg.betas[user - 1]) < BETA_DEGENERATE:
        raise DegenerateExponentError(f"|beta| of user {user} below {BETA_DEGENERATE}")


def _rates_by_strategy(gains: np.ndarray, cfg: NetworkConfig, needed: set, tau: float | None):
    out = {}
    oma = noma = None
    if needed & {OMA, NOMAR_TIMESHARE}:
        oma = oma_rates_batch(gains, cfg)
    if needed & {NOMA, NOMAR_TIMESHARE}:
        noma = noma_rates_batch(range(cfg.k_users), gains, cfg)
    if OMA in needed:
        out[OMA] = oma
    if NOMA in needed:
        out[NOMA] = noma
    if NOMAR_TIMESHARE in needed:
        out[NOMAR_TIMESHARE] = tau * noma + (1.0 - tau) * oma
    choice = None
    if NOMAR_EVENT in needed:
        out[NOMAR_EVENT], choice = noma_r_rates_batch(gains, cfg)
    return out, choice


# --------------------------------------------------------------------------
# public estimators
# --------------------------------------------------------------------------

def simulate(cfg: NetworkConfig, strategies: Iterable[StrategyModel], n: int, seed: int,
             workers: int = 1, users: Sequence[int] | None = None,
             sampler: Sampler | None = None) -> Simulation:
    """Estimate EC for every (strategy, user) pair from one shared sample stream."""
    strategies = tuple(dict.fromkeys(strategies))
    users = tuple(range(1, cfg.k_users + 1)) if users is None else tuple(users)
    requests = [(s, u) for s in strategies for u in users]
    for s, u in requests:
        _validate_request(s, u, cfg)
    tau = tau_closed_form(TwoUserParams.from_config(cfg)) if NOMAR_TIMESHARE in strategies else None
    needed = set(strategies)
    scale = {u: cfg.betas[u - 1] * _LN2 for u in users}
    no_cluster = len(feasible_partitions(cfg.k_users)) - 1

    def run(block):
        b, size = block
        gains = _draw(seed, b, size, cfg.k_users, sampler)
        rates, choice = _rates_by_strategy(gains, cfg, needed, tau)
        stats = {(s, u): _Moments.of(np.expm1(scale[u] * rates[s][:, u - 1]))
                 for s, u in requests}
        hits = None if choice is None else int(np.count_nonzero(choice != no_cluster))
        return stats, hits, size

    acc = {key: _Moments() for key in requests}
    hits = total = 0
    for stats, h, size in _map_blocks(run, _blocks(n), workers):
        for key, m in stats.items():
            acc[key].merge(m)
        hits = None if h is None else hits + h
        total += size

    ec = {}
    for (s, u), m in acc.items():
        beta = cfg.betas[u - 1]
        raw_mean = 1.0 + m.mean
        raw_se = m.sem()
        value = math.log1p(m.mean) / (beta * _LN2)
        err = raw_se / (abs(beta) * _LN2 * raw_mean) if raw_mean > 0 else math.inf
        ec[(s, u)] = EcEstimate(value, err, m.n, raw_mean, raw_se)
    freq = _binomial(hits, total) if NOMAR_EVENT in needed else None
    return Simulation(ec, freq, total, seed)


def _binomial(hits: int, n: int) -> TauEstimate:
    p = hits / n
    return TauEstimate(p, math.sqrt(p * (1.0 - p) / n), n)


def estimate_tau(cfg: NetworkConfig, n: int, seed: int, workers: int = 1,
                 sampler: Sampler | None = None) -> TauEstimate:
    """Fraction of realizations where NOMA-R selects at least one NOMA cluster."""
    no_cluster = len(feasible_partitions(cfg.k_users)) - 1

    def run(block):
        b, size = block
        gains = _draw(seed, b, size, cfg.k_users, sampler)
        return int(np.count_nonzero(select_clusters_batch(gains, cfg) != no_cluster)), size

    parts = _map_blocks(run, _blocks(n), workers)
    return _binomial(sum(h for h, _ in parts), sum(s for _, s in parts))


def estimate_ec(strategy: StrategyModel, user: int, cfg: NetworkConfig, n: int, seed: int,
                workers: int = 1, sampler: Sampler | None = None) -> EcEstimate:
    """EC of one user (1-based) under one strategy model."""
    sim = simulate(cfg, [strategy], n, seed, workers, users=[user], sampler=sampler)
    return sim.ec[(strategy, user)]


def estimate_sum_ec(strategy: StrategyModel, cfg: NetworkConfig, n: int, seed: int,
                    workers: int = 1, sampler: Sampler | None = None) -> SumEcEstimate:
    sim = simulate(cfg, [strategy], n, seed, workers, sampler=sampler)
    return sim.sum_ec(strategy, cfg.k_users)
