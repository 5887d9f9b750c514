"""Two-user analytical evaluators: NOMA probability, NOMA-R effective capacity.

User numbering here is 1-based as in the two-user analysis: user 1 is the weak
(smaller gain) user, user 2 the strong one.

Effective capacity is EC = (1/beta) log2 E[2^(beta r)].  The quadrature-based
evaluators integrate expm1(beta ln2 r) and finish with log1p so that the
result stays accurate as beta approaches 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .rate_model import NetworkConfig
from .specfun import (
    DEFAULT_QUAD,
    QuadratureSpec,
    gamma_fn,
    hyper_u_a1,
    integrate_semi_infinite,
    log_erfc,
)

__all__ = [
    "DegenerateExponentError",
    "TwoUserParams",
    "StrategyModel",
    "OMA",
    "NOMA",
    "NOMAR_EVENT",
    "NOMAR_TIMESHARE",
    "BETA_DEGENERATE",
    "tau_parts",
    "tau_closed_form",
    "ec_nomar_weak_closed",
    "ec_nomar_weak_quadrature",
    "ec_nomar_strong_timeshare",
    "ec_nomar_strong_highsnr",
    "highsnr_moment_factor",
    "ec_numeric_k2",
    "ergodic_rate_k2",
]

_LN2 = math.log(2.0)
BETA_DEGENERATE = 1e-6


class DegenerateExponentError(ValueError):
    """|beta| too small for the EC formula; use the ergodic-rate limit instead."""


@dataclass(frozen=True)
class TwoUserParams:
    p1: float
    p2: float
    rho: float
    beta1: float = -2.0
    beta2: float = -2.0

    def __post_init__(self):
        if not (self.p1 > 0 and self.p2 > 0 and self.rho > 0):
            raise ValueError("p1, p2 and rho must be positive")
        if not (self.beta1 < 0 and self.beta2 < 0):
            raise ValueError("beta1 and beta2 must be negative")

    @classmethod
    def from_config(cls, cfg: NetworkConfig) -> "TwoUserParams":
        if cfg.k_users != 2:
            raise ValueError("two-user formulas need k_users == 2")
        return cls(cfg.powers[0], cfg.powers[1], cfg.rho, cfg.betas[0], cfg.betas[1])

    def beta(self, user: int) -> float:
        return {1: self.beta1, 2: self.beta2}[user]


STRATEGIES = ("OMA", "NOMA", "NOMA-R")
VARIANTS = ("event", "timeshare")


@dataclass(frozen=True)
class StrategyModel:
    """Multiple-access strategy; NOMA-R additionally names its EC model.

    ``event``: NOMA-R picks NOMA or OMA per realization.
    ``timeshare``: the rate mixes NOMA and OMA with the NOMA probability tau.
    """

    strategy: str
    variant: str | None = None

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if (self.strategy == "NOMA-R") != (self.variant is not None):
            raise ValueError("a variant is required for NOMA-R and only for NOMA-R")
        if self.variant is not None and self.variant not in VARIANTS:
            raise ValueError(f"unknown NOMA-R variant {self.variant!r}")

    @property
    def label(self) -> str:
        return self.strategy if self.variant is None else f"{self.strategy}/{self.variant}"


OMA = StrategyModel("OMA")
NOMA = StrategyModel("NOMA")
NOMAR_EVENT = StrategyModel("NOMA-R", "event")
NOMAR_TIMESHARE = StrategyModel("NOMA-R", "timeshare")


def _check_beta(beta: float) -> None:
    if not beta < 0:
        raise ValueError(f"beta must be negative, got {beta}")
    if abs(beta) < BETA_DEGENERATE:
        raise DegenerateExponentError(
            f"|beta|={abs(beta):.3g} < {BETA_DEGENERATE}: EC degenerates to 0/0; "
            "use ergodic_rate_k2 for the beta -> 0 limit")


def _ec_from_excess(excess: float, beta: float) -> float:
    """EC from E[2^(beta r)] - 1."""
    return math.log1p(excess) / (beta * _LN2)


# --------------------------------------------------------------------------
# probability of NOMA
# --------------------------------------------------------------------------

def tau_parts(p: TwoUserParams) -> tuple[float, float]:
    """(f, g): mass below and above the point where the NOMA threshold crosses x2 = x1.

    g mixes a factor exp(+a/rho) with erfc of an argument ~ 1/sqrt(rho); both
    are combined in log space.
    """
    p1, p2, rho = p.p1, p.p2, p.rho
    root = math.sqrt(p2 * p2 + 4.0 * p1 * p1)
    f = -math.expm1(-(p2 + root) / (rho * p1 * p1))
    arg = (2.0 * p2 + root) / (2.0 * math.sqrt(p2 * rho) * p1)
    log_g = (0.5 * math.log(math.pi)
             + (4.0 * p1 * p1 + p2 * p2) / (4.0 * rho * p2 * p1 * p1)
             + log_erfc(arg)
             + 0.5 * math.log(p2 / rho)
             - math.log(p1))
    return f, math.exp(log_g)


@lru_cache(maxsize=4096)
def _tau_cached(p1: float, p2: float, rho: float) -> float:
    f, g = tau_parts(TwoUserParams(p1, p2, rho))
    tau = f + g
    assert -1e-12 <= tau <= 1.0 + 1e-12, f"tau out of range: {tau}"
    return min(max(tau, 0.0), 1.0)


def tau_closed_form(p: TwoUserParams) -> float:
    """Probability that NOMA-R uses NOMA in the two-user uplink."""
    return _tau_cached(p.p1, p.p2, p.rho)


# --------------------------------------------------------------------------
# weak user
# --------------------------------------------------------------------------

def _timeshare_exponent(p: TwoUserParams) -> float:
    # tau*R1 + (1-tau)*R1/2 = (1+tau)/2 * log2(1 + rho P1 x1)
    return p.beta1 * (tau_closed_form(p) + 1.0) / 2.0


def ec_nomar_weak_closed(p: TwoUserParams, q: QuadratureSpec = DEFAULT_QUAD) -> float:
    """NOMA-R (time-share) EC of the weak user through U(1, b, z)."""
    _check_beta(p.beta1)
    z = 2.0 / (p.rho * p.p1)
    b = 2.0 + _timeshare_exponent(p)
    return math.log2(z * hyper_u_a1(b, z, q)) / p.beta1


def ec_nomar_weak_quadrature(p: TwoUserParams, q: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Same quantity as ``ec_nomar_weak_closed`` by direct integration over the weak-user pdf."""
    _check_beta(p.beta1)
    c = _timeshare_exponent(p)
    a = p.rho * p.p1

    def integrand(x):
        return np.expm1(c * np.log1p(a * x)) * 2.0 * np.exp(-2.0 * x)

    return _ec_from_excess(integrate_semi_infinite(integrand, q, scale=0.5), p.beta1)


# --------------------------------------------------------------------------
# strong user
# --------------------------------------------------------------------------

def _joint_expectation(h, q: QuadratureSpec) -> float:
    """E[h(x1, x2)] over the ordered pair, x2 = x1 + u.

    Joint density 2 e^{-x1} e^{-x2} becomes 2 e^{-2 x1} e^{-u} on the quadrant.
    """
    def inner(x1: float) -> float:
        return integrate_semi_infinite(lambda u: h(x1, x1 + u) * np.exp(-u), q)

    def outer(x1s):
        vals = np.array([inner(float(x1)) if np.isfinite(x1) else 0.0 for x1 in x1s])
        return vals * 2.0 * np.exp(-2.0 * x1s)

    return integrate_semi_infinite(outer, q, scale=0.5)


def ec_nomar_strong_timeshare(p: TwoUserParams, q: QuadratureSpec = DEFAULT_QUAD) -> float:
    """NOMA-R (time-share) EC of the strong user by nested quadrature."""
    _check_beta(p.beta2)
    tau = tau_closed_form(p)
    a1, a2, beta = p.rho * p.p1, p.rho * p.p2, p.beta2

    def h(x1, x2):
        noma = np.log1p(a2 * x2 / (1.0 + a1 * x1))
        oma = 0.5 * np.log1p(a2 * x2)
        return np.expm1(beta * (tau * noma + (1.0 - tau) * oma))

    return _ec_from_excess(_joint_expectation(h, q), beta)


def highsnr_moment_factor(beta: float) -> float:
    """Gamma(beta/2 + 1) (2 - 2^(-beta/2)) = E[x2^(beta/2)] for the strong-user gain.

    At beta = -2 the printed product is Gamma(0) * 0; writing beta/2 + 1 = eps
    it equals 2 Gamma(1 + eps) (1 - 2^-eps) / eps, which tends to 2 ln 2.
    """
    if not -4.0 < beta < 0.0:
        if beta <= -4.0:
            raise ValueError(f"E[x2^(beta/2)] diverges for beta <= -4 (got {beta})")
        raise ValueError(f"beta must be negative, got {beta}")
    if abs(beta + 2.0) < 1e-3:
        eps = 0.5 * (beta + 2.0)
        ratio = _LN2 if eps == 0.0 else -math.expm1(-eps * _LN2) / eps
        return 2.0 * gamma_fn(1.0 + eps) * ratio
    s = 0.5 * beta
    return gamma_fn(s + 1.0) * (2.0 - 2.0 ** (-s))


def ec_nomar_strong_highsnr(p: TwoUserParams) -> float:
    """High-SNR asymptote of the strong user's NOMA-R EC (pure OMA, 1 + y ~ y)."""
    beta = p.beta2
    _check_beta(beta)
    m = highsnr_moment_factor(beta)
    return math.log2(m) / beta + 0.5 * math.log2(p.rho * p.p2)


# --------------------------------------------------------------------------
# plain OMA / NOMA at K = 2
# --------------------------------------------------------------------------

def _rate_exponent_k2(strategy: StrategyModel, user: int, p: TwoUserParams):
    """log-rate integrand pieces: returns ('marginal', weight-pdf-name, fn) or ('joint', fn)."""
    a1, a2 = p.rho * p.p1, p.rho * p.p2
    if strategy == OMA:
        if user == 1:
            return "weak", lambda x: 0.5 * np.log1p(a1 * x)
        return "strong", lambda x: 0.5 * np.log1p(a2 * x)
    if strategy == NOMA:
        if user == 1:
            return "weak", lambda x: np.log1p(a1 * x)
        return "joint", lambda x1, x2: np.log1p(a2 * x2 / (1.0 + a1 * x1))
    raise ValueError(f"ec_numeric_k2 covers OMA and NOMA only, got {strategy.label}")


def _marginal_expectation(which: str, h, q: QuadratureSpec) -> float:
    if which == "weak":
        return integrate_semi_infinite(lambda x: h(x) * 2.0 * np.exp(-2.0 * x), q, scale=0.5)
    return integrate_semi_infinite(lambda x: h(x) * -2.0 * np.exp(-x) * np.expm1(-x), q)


def ec_numeric_k2(strategy: StrategyModel, user: int, p: TwoUserParams,
                  q: QuadratureSpec = DEFAULT_QUAD) -> float:
    """OMA or NOMA EC of user 1 or 2 by quadrature over the order-statistic densities."""
    if user not in (1, 2):
        raise ValueError("user must be 1 (weak) or 2 (strong)")
    beta = p.beta(user)
    _check_beta(beta)
    kind, lograte = _rate_exponent_k2(strategy, user, p)
    if kind == "joint":
        excess = _joint_expectation(lambda x1, x2: np.expm1(beta * lograte(x1, x2)), q)
    else:
        excess = _marginal_expectation(kind, lambda x: np.expm1(beta * lograte(x)), q)
    return _ec_from_excess(excess, beta)


def ergodic_rate_k2(strategy: StrategyModel, user: int, p: TwoUserParams,
                    q: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Mean rate E[r] in bits/s/Hz, the beta -> 0 limit of the EC.

    Covers OMA, NOMA and time-share NOMA-R.
    """
    if user not in (1, 2):
        raise ValueError("user must be 1 (weak) or 2 (strong)")
    if strategy == NOMAR_TIMESHARE:
        tau = tau_closed_form(p)
        mix = {OMA: 1.0 - tau, NOMA: tau}
        return sum(w * ergodic_rate_k2(s, user, p, q) for s, w in mix.items())
    kind, lograte = _rate_exponent_k2(strategy, user, p)
    if kind == "joint":
        mean_nats = _joint_expectation(lograte, q)
    else:
        mean_nats = _marginal_expectation(kind, lograte, q)
    return mean_nats / _LN2
