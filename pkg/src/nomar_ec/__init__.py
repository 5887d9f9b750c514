"""Effective capacity of uplink NOMA, OMA and rate-adaptive NOMA (NOMA-R).

Submodules:

``specfun``      erf/erfc, gamma, confluent U(1, b, z), adaptive quadrature
``channel``      ordered Rayleigh gains, seeded block streams, K=2 densities
``rate_model``   per-user NOMA/OMA rates, the NOMA-R criterion, cluster selection
``closed_form``  K=2 NOMA probability and effective-capacity expressions
``monte_carlo``  seeded, worker-count-independent EC and probability estimators
``harness``      sweeps, figure pipelines, CSV persistence (CLI in ``cli``)
"""

from .closed_form import (
    NOMA,
    NOMAR_EVENT,
    NOMAR_TIMESHARE,
    OMA,
    DegenerateExponentError,
    StrategyModel,
    TwoUserParams,
    ec_nomar_strong_highsnr,
    ec_nomar_strong_timeshare,
    ec_nomar_weak_closed,
    ec_numeric_k2,
    tau_closed_form,
)
from .config import SweepSpec, load_config
from .monte_carlo import estimate_ec, estimate_sum_ec, estimate_tau, simulate
from .rate_model import ConfigError, NetworkConfig, PowerSumWarning
from .specfun import QuadratureError, QuadratureSpec

__version__ = "0.1.0"

__all__ = [
    "OMA", "NOMA", "NOMAR_EVENT", "NOMAR_TIMESHARE", "StrategyModel", "TwoUserParams",
    "DegenerateExponentError", "tau_closed_form", "ec_nomar_weak_closed",
    "ec_nomar_strong_timeshare", "ec_nomar_strong_highsnr", "ec_numeric_k2",
    "SweepSpec", "load_config", "simulate", "estimate_tau", "estimate_ec", "estimate_sum_ec",
    "NetworkConfig", "ConfigError", "PowerSumWarning", "QuadratureError", "QuadratureSpec",
]
