"""Per-realization uplink rates under OMA, NOMA and the adaptive NOMA-R policy.

Users are 0-based and ordered by ascending channel gain (user 0 is the
weakest).  A NOMA cluster is a sorted tuple of user indices; SIC decodes the
strongest member first, so member k only sees interference from the weaker
members of its own cluster.

Every operation has a batched form working on an (n, K) gain matrix, which is
what the Monte-Carlo estimators use.  The scalar forms are thin wrappers on the
batched ones so both share one code path.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from .channel import GainSample

__all__ = [
    "ConfigError",
    "PowerSumWarning",
    "NetworkConfig",
    "ClusterAssignment",
    "MAX_PARTITION_USERS",
    "beta_from_qos",
    "noma_rates",
    "oma_rate",
    "noma_beneficial",
    "select_clusters",
    "noma_r_rates",
    "oma_rates_batch",
    "noma_rates_batch",
    "noma_beneficial_batch",
    "select_clusters_batch",
    "noma_r_rates_batch",
    "feasible_partitions",
]

_LN2 = math.log(2.0)
MAX_PARTITION_USERS = 12


class ConfigError(ValueError):
    """Invalid network or sweep configuration."""


class PowerSumWarning(UserWarning):
    """Transmit powers do not sum to one."""


def beta_from_qos(theta: float, frame_duration: float, bandwidth: float) -> float:
    """Negative QoS exponent beta = -theta * T_f * B / ln 2."""
    return -theta * frame_duration * bandwidth / _LN2


@dataclass(frozen=True)
class NetworkConfig:
    """K-user uplink: powers P_k, transmit SNR rho (linear) and exponents beta_k.

    ``powers`` and ``betas`` are listed in user order, weakest user first.
    """

    k_users: int
    powers: tuple[float, ...]
    rho: float
    betas: tuple[float, ...] = field(default=())

    def __post_init__(self):
        k = self.k_users
        if not isinstance(k, (int, np.integer)) or isinstance(k, bool) or k < 1:
            raise ConfigError(f"k_users must be an integer >= 1, got {k!r}")
        powers = tuple(float(p) for p in self.powers)
        betas = tuple(float(b) for b in self.betas) if len(self.betas) else (-2.0,) * k
        if len(powers) != k:
            raise ConfigError(f"powers has {len(powers)} entries, expected k_users={k}")
        if len(betas) != k:
            raise ConfigError(f"betas has {len(betas)} entries, expected k_users={k}")
        for i, p in enumerate(powers, start=1):
            if not (math.isfinite(p) and p > 0):
                raise ConfigError(f"power must be positive (user {i}: {p})")
        for i, b in enumerate(betas, start=1):
            if not (math.isfinite(b) and b < 0):
                raise ConfigError(f"beta must be negative (user {i}: {b})")
        if not (math.isfinite(self.rho) and self.rho > 0):
            raise ConfigError(f"rho must be positive, got {self.rho}")
        object.__setattr__(self, "k_users", int(k))
        object.__setattr__(self, "powers", powers)
        object.__setattr__(self, "betas", betas)
        object.__setattr__(self, "rho", float(self.rho))
        if abs(math.fsum(powers) - 1.0) > 1e-9:
            warnings.warn(f"transmit powers sum to {math.fsum(powers):g}, not 1",
                          PowerSumWarning, stacklevel=3)

    def with_rho(self, rho: float) -> "NetworkConfig":
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", PowerSumWarning)
            return NetworkConfig(self.k_users, self.powers, rho, self.betas)

    def with_betas(self, betas: Sequence[float]) -> "NetworkConfig":
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", PowerSumWarning)
            return NetworkConfig(self.k_users, self.powers, self.rho, tuple(betas))


@dataclass(frozen=True)
class ClusterAssignment:
    """NOMA clusters (size >= 2) plus OMA singletons, covering every user once."""

    clusters: tuple[tuple[int, ...], ...]
    singletons: tuple[int, ...]

    @property
    def noma_users(self) -> int:
        return sum(len(c) for c in self.clusters)

    def blocks(self) -> tuple[tuple[int, ...], ...]:
        return tuple(sorted(self.clusters + tuple((s,) for s in self.singletons)))


# --------------------------------------------------------------------------
# batched rate primitives
# --------------------------------------------------------------------------

def _check_cluster(cluster: Sequence[int], k: int) -> tuple[int, ...]:
    c = tuple(int(i) for i in cluster)
    if not c:
        raise ValueError("cluster must not be empty")
    if any(i < 0 or i >= k for i in c):
        raise ValueError(f"cluster {c} has indices outside 0..{k - 1}")
    if any(b <= a for a, b in zip(c, c[1:])):
        raise ValueError(f"cluster {c} must be strictly ascending (gain order)")
    return c


def _snr(gains: np.ndarray, cfg: NetworkConfig, users) -> np.ndarray:
    return cfg.rho * np.asarray(cfg.powers)[list(users)] * gains[:, list(users)]


def _sic_terms(gains: np.ndarray, cfg: NetworkConfig, cluster):
    """Received SNR y_k and SIC interference z_k for each cluster member."""
    y = _snr(gains, cfg, cluster)
    z = np.cumsum(y, axis=1) - y
    return y, z


def oma_rates_batch(gains: np.ndarray, cfg: NetworkConfig) -> np.ndarray:
    """(n, K) OMA rates (1/K) log2(1 + rho P_k x_k)."""
    y = cfg.rho * np.asarray(cfg.powers) * gains
    return np.log1p(y) / (_LN2 * cfg.k_users)


def noma_rates_batch(cluster: Sequence[int], gains: np.ndarray,
                     cfg: NetworkConfig) -> np.ndarray:
    """(n, |S|) NOMA rates of the cluster members, in cluster order."""
    c = _check_cluster(cluster, cfg.k_users)
    y, z = _sic_terms(gains, cfg, c)
    return (len(c) / cfg.k_users) * np.log1p(y / (1.0 + z)) / _LN2


def _criterion_general(y: np.ndarray, z: np.ndarray, size: int) -> np.ndarray:
    # 1 + y/(1+z) >= (1+y)^(1/|S|) for every member, in log form
    return np.all(size * np.log1p(y / (1.0 + z)) >= np.log1p(y), axis=1)


def _criterion_k2(gains: np.ndarray, cfg: NetworkConfig) -> np.ndarray:
    # closed threshold for the two-user cluster {0, 1}:
    # x2 >= (rho^2 x1^2 P1^2 - 1) / (rho P2)
    rho = cfg.rho
    p1, p2 = cfg.powers[0], cfg.powers[1]
    x1, x2 = gains[:, 0], gains[:, 1]
    return x2 >= ((rho * p1 * x1) ** 2 - 1.0) / (rho * p2)


def noma_beneficial_batch(cluster: Sequence[int], gains: np.ndarray,
                          cfg: NetworkConfig) -> np.ndarray:
    """(n,) mask: NOMA beats OMA for every member of ``cluster``."""
    c = _check_cluster(cluster, cfg.k_users)
    if len(c) < 2:
        raise ValueError("the NOMA criterion needs a cluster of at least two users")
    if cfg.k_users == 2:
        return _criterion_k2(gains, cfg)
    y, z = _sic_terms(gains, cfg, c)
    return _criterion_general(y, z, len(c))


# --------------------------------------------------------------------------
# partition search
# --------------------------------------------------------------------------

def _set_partitions(k: int):
    """All set partitions of range(k) as tuples of ascending blocks."""
    if k == 0:
        yield ()
        return
    for part in _set_partitions(k - 1):
        # put k-1 into each existing block, or open a new one
        for i in range(len(part)):
            yield part[:i] + (part[i] + (k - 1,),) + part[i + 1:]
        yield part + ((k - 1,),)


@lru_cache(maxsize=None)
def feasible_partitions(k: int) -> tuple[ClusterAssignment, ...]:
    """Every cluster/singleton split of k users, in tie-break preference order.

    Preference: more users on NOMA first, then the lexicographically smallest
    cluster list.  The all-OMA split is always last.
    """
    if k > MAX_PARTITION_USERS:
        raise ConfigError(
            f"exhaustive cluster search supports at most {MAX_PARTITION_USERS} users, got {k}")
    out = []
    for part in _set_partitions(k):
        clusters = tuple(sorted(b for b in part if len(b) >= 2))
        singles = tuple(sorted(b[0] for b in part if len(b) == 1))
        out.append(ClusterAssignment(clusters, singles))
    out.sort(key=lambda a: (-a.noma_users, a.clusters))
    return tuple(out)


def _chunk_rows(k: int) -> int:
    # bound the per-subset work arrays (~2^k subsets) to a few hundred MB
    return max(1, 2**25 // (k * 2**k))


def select_clusters_batch(gains: np.ndarray, cfg: NetworkConfig) -> np.ndarray:
    """Index into ``feasible_partitions(K)`` of the NOMA-R choice for each row.

    Among splits whose clusters all satisfy the NOMA criterion, the one with
    the largest total instantaneous rate wins; ties go to the earlier split in
    preference order.
    """
    k = cfg.k_users
    if k == 1:
        return np.zeros(gains.shape[0], dtype=np.int64)
    if k == 2:
        # a cluster where both users gain always has the larger sum rate, so
        # the search reduces to the criterion (partition 0 is {0, 1})
        return np.where(_criterion_k2(gains, cfg), 0, 1).astype(np.int64)
    return _select_exhaustive(gains, cfg)


def _select_exhaustive(gains: np.ndarray, cfg: NetworkConfig) -> np.ndarray:
    k = cfg.k_users
    parts = feasible_partitions(k)
    n = gains.shape[0]
    choice = np.empty(n, dtype=np.int64)
    step = _chunk_rows(k)
    for lo in range(0, n, step):
        g = gains[lo:lo + step]
        oma = oma_rates_batch(g, cfg)
        block_ok: dict[tuple[int, ...], np.ndarray] = {}
        block_sum: dict[tuple[int, ...], np.ndarray] = {}
        for a in parts:
            for c in a.clusters:
                if c not in block_sum:
                    block_ok[c] = noma_beneficial_batch(c, g, cfg)
                    block_sum[c] = noma_rates_batch(c, g, cfg).sum(axis=1)
        best = np.full(g.shape[0], -np.inf)
        best_idx = np.full(g.shape[0], len(parts) - 1, dtype=np.int64)
        for idx, a in enumerate(parts):
            total = oma[:, list(a.singletons)].sum(axis=1) if a.singletons else 0.0
            ok = np.ones(g.shape[0], dtype=bool)
            for c in a.clusters:
                total = total + block_sum[c]
                ok &= block_ok[c]
            better = ok & (total > best)
            best = np.where(better, total, best)
            best_idx[better] = idx
        choice[lo:lo + step] = best_idx
    return choice


def noma_r_rates_batch(gains: np.ndarray, cfg: NetworkConfig) -> tuple[np.ndarray, np.ndarray]:
    """(n, K) NOMA-R rates and the (n,) partition choice behind them."""
    parts = feasible_partitions(cfg.k_users)
    choice = select_clusters_batch(gains, cfg)
    rates = oma_rates_batch(gains, cfg)
    for idx in np.unique(choice):
        a = parts[idx]
        if not a.clusters:
            continue
        rows = np.nonzero(choice == idx)[0]
        g = gains[rows]
        for c in a.clusters:
            rates[np.ix_(rows, c)] = noma_rates_batch(c, g, cfg)
    return rates, choice


# --------------------------------------------------------------------------
# single-realization API
# --------------------------------------------------------------------------

def _row(sample: GainSample, cfg: NetworkConfig) -> np.ndarray:
    if sample.k != cfg.k_users:
        raise ValueError(f"sample has {sample.k} gains, config has {cfg.k_users} users")
    return sample.gains[None, :]


def noma_rates(cluster: Sequence[int], sample: GainSample, cfg: NetworkConfig) -> np.ndarray:
    return noma_rates_batch(cluster, _row(sample, cfg), cfg)[0]


def oma_rate(k: int, sample: GainSample, cfg: NetworkConfig) -> float:
    return float(oma_rates_batch(_row(sample, cfg), cfg)[0, k])


def noma_beneficial(cluster: Sequence[int], sample: GainSample, cfg: NetworkConfig) -> bool:
    return bool(noma_beneficial_batch(cluster, _row(sample, cfg), cfg)[0])


def select_clusters(sample: GainSample, cfg: NetworkConfig) -> ClusterAssignment:
    idx = select_clusters_batch(_row(sample, cfg), cfg)[0]
    return feasible_partitions(cfg.k_users)[idx]


def noma_r_rates(sample: GainSample, cfg: NetworkConfig) -> np.ndarray:
    return noma_r_rates_batch(_row(sample, cfg), cfg)[0][0]
