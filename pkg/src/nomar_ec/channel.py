"""Ordered i.i.d. Rayleigh channel gains.

Power gains x_k = |h_k|^2 of unit-variance Rayleigh coefficients are unit-mean
exponentials; users are indexed by ascending gain, so index 0 is the weakest.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "GainSample",
    "block_rng",
    "sample_ordered_gains",
    "sample_gain_matrix",
    "pdf_k2",
    "PDF_WEAK",
    "PDF_STRONG",
    "PDF_JOINT",
]

PDF_WEAK = "weak"
PDF_STRONG = "strong"
PDF_JOINT = "joint"


@dataclass(frozen=True)
class GainSample:
    """One realization of K ordered channel power gains."""

    gains: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.gains, dtype=float)
        if g.ndim != 1 or g.size == 0:
            raise ValueError("gains must be a non-empty 1-D vector")
        if np.any(g < 0) or not np.all(np.isfinite(g)):
            raise ValueError("gains must be finite and non-negative")
        if np.any(np.diff(g) < 0):
            raise ValueError("gains must be sorted ascending")
        g.setflags(write=False)
        object.__setattr__(self, "gains", g)

    @property
    def k(self) -> int:
        return self.gains.size


def block_rng(seed: int, block: int) -> np.random.Generator:
    """Independent stream for sample block ``block`` under master ``seed``.

    The stream depends only on (seed, block), which is what makes Monte-Carlo
    results independent of how blocks are spread over workers.
    """
    if not 0 <= seed < 2**64:
        raise ValueError("seed must be an unsigned 64-bit integer")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(block,))))


def sample_gain_matrix(n: int, k: int, rng: np.random.Generator) -> np.ndarray:
    """(n, k) array of ordered gains, each row sorted ascending.

    Exponentials come from the inverse CDF x = -ln(u) with u in (0, 1].
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    u = 1.0 - rng.random((n, k))
    x = -np.log(u)
    x.sort(axis=1)
    return x


def sample_ordered_gains(k: int, rng: np.random.Generator) -> GainSample:
    return GainSample(sample_gain_matrix(1, k, rng)[0])


def pdf_k2(which: str, x1: float, x2: float | None = None) -> float:
    """Order-statistic densities for two i.i.d. unit-mean exponentials.

    ``weak``: density of the smaller gain at ``x1``; ``strong``: density of the
    larger gain, evaluated at ``x1`` (``x2`` ignored); ``joint``: density of
    (x1, x2), zero off the ordered support x1 <= x2.
    """
    if x1 < 0 or (x2 is not None and x2 < 0):
        raise ValueError("densities are defined for non-negative gains only")
    if which == PDF_WEAK:
        return 2.0 * math.exp(-2.0 * x1)
    if which == PDF_STRONG:
        return -2.0 * math.exp(-x1) * math.expm1(-x1)
    if which == PDF_JOINT:
        if x2 is None:
            raise ValueError("joint density needs both x1 and x2")
        if x2 < x1:
            return 0.0
        return 2.0 * math.exp(-x1 - x2)
    raise ValueError(f"unknown density selector {which!r}")
