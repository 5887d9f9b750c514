"""Command-line interface.

    nomar-ec tau      [--snr-db ...] [--config F] [--estimator cf|mc|both]
    nomar-ec ec       [--snr-db X] [--k K] [--config F] [--variant event|timeshare]
    nomar-ec sweep    --config F
    nomar-ec figure   {1,2,3,4} --out DIR
    nomar-ec validate [--only 1 3 ...]

Results go to stdout as CSV, or to ``--out`` (a directory) when given.
Exit codes: 0 success, 2 configuration error, 3 numerical convergence
failure, 4 validation failure.
"""

from __future__ import annotations

import argparse
import math
import logging
import sys
from pathlib import Path

from .closed_form import DegenerateExponentError
from .config import (
    DEFAULT_SAMPLES,
    ESTIMATORS,
    DEFAULT_POWERS,
    SweepSpec,
    db_to_linear,
    load_config,
    parse_strategies,
)
from .harness import (
    SNR_GRID_FIG1,
    format_csv,
    reproduce_figure,
    run_sweep,
    tau_rows,
    write_csv,
)
from .monte_carlo import UnsupportedModelError
from .rate_model import ConfigError, NetworkConfig
from .specfun import QuadratureError

log = logging.getLogger("nomar_ec")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_VALIDATION = 4


def _u64(text: str) -> int:
    val = int(text, 0)
    if not 0 <= val < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return val


def _positive(text: str) -> int:
    val = int(float(text)) if "e" in text.lower() else int(text)
    if val < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return val


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON configuration file")
    common.add_argument("--out", type=Path, help="output directory (default: CSV on stdout)")
    common.add_argument("--samples", type=_positive, help=f"Monte-Carlo samples (default {DEFAULT_SAMPLES})")
    common.add_argument("--seed", type=_u64, help="RNG seed (default 0)")
    common.add_argument("--workers", type=_positive, help="worker threads (default 1)")
    common.add_argument("--estimator", choices=ESTIMATORS, help="closed form, Monte Carlo or both")
    common.add_argument("--variant", choices=("event", "timeshare"),
                        help="NOMA-R model: per-realization selection or time sharing")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(
        prog="nomar-ec",
        description="Effective capacity of uplink NOMA, OMA and NOMA-R.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("tau", parents=[common], help="probability that NOMA-R uses NOMA (K=2)")
    p.add_argument("--snr-db", type=float, nargs="+", help="SNR points in dB (default -40..40 step 5)")

    p = sub.add_parser("ec", parents=[common], help="per-user and sum EC at one point")
    p.add_argument("--snr-db", type=float, help="SNR in dB (default 20)")
    p.add_argument("--k", type=int, choices=sorted(DEFAULT_POWERS), help="number of users (default 2)")
    p.add_argument("--beta", type=float, help="common QoS exponent for every user (default -2)")

    sub.add_parser("sweep", parents=[common], help="sweep described by --config")

    p = sub.add_parser("figure", parents=[common], help="data and gnuplot script for a figure")
    p.add_argument("fig", type=int, choices=(1, 2, 3, 4))

    p = sub.add_parser("validate", parents=[common], help="run the acceptance checks")
    p.add_argument("--only", type=int, nargs="+", metavar="N", help="run only these checks")
    return parser


def _emit(rows, args, name: str) -> None:
    if args.out is None:
        sys.stdout.write(format_csv(rows))
    else:
        path = write_csv(rows, args.out / name)
        log.info("wrote %s (%d rows)", path, len(rows))


def _overrides(spec: SweepSpec, args) -> SweepSpec:
    kw = dict(axis=spec.axis, grid=spec.grid, base=spec.base, strategies=spec.strategies,
              estimator=args.estimator or spec.estimator,
              n=args.samples or spec.n,
              seed=spec.seed if args.seed is None else args.seed,
              workers=args.workers or spec.workers,
              powers_by_k=spec.powers_by_k)
    if args.variant:
        names = dict.fromkeys(s.strategy for s in spec.strategies)
        kw["strategies"] = parse_strategies(list(names), args.variant)
    return SweepSpec(**kw)


def _point_network(args) -> NetworkConfig:
    if args.config is not None:
        cfg = load_config(args.config)
        if not isinstance(cfg, NetworkConfig):
            raise ConfigError(f"{args.config}: expected a single point, found a {cfg.axis} sweep")
        if getattr(args, "snr_db", None) is not None and not isinstance(args.snr_db, list):
            cfg = cfg.with_rho(db_to_linear(args.snr_db))
        return cfg
    k = getattr(args, "k", None) or 2
    beta = getattr(args, "beta", None)
    beta = -2.0 if beta is None else beta
    snr = getattr(args, "snr_db", None)
    snr = 20.0 if snr is None or isinstance(snr, list) else snr
    return NetworkConfig(k, DEFAULT_POWERS[k], db_to_linear(snr), (beta,) * k)


def cmd_tau(args) -> int:
    if args.config is not None:
        loaded = load_config(args.config)
        if isinstance(loaded, SweepSpec):
            if loaded.axis != "snr_db":
                raise ConfigError(f"{args.config}: tau needs an SNR sweep, found {loaded.axis}")
            spec = _overrides(loaded, args)
            _emit(tau_rows(spec), args, "tau.csv")
            return EXIT_OK
        base = loaded
    else:
        base = _point_network(args)
    grid = tuple(args.snr_db) if args.snr_db else SNR_GRID_FIG1
    spec = SweepSpec("snr_db", grid, base, parse_strategies(["NOMA-R"]),
                     estimator=args.estimator or "both", n=args.samples or DEFAULT_SAMPLES,
                     seed=args.seed or 0, workers=args.workers or 1)
    _emit(tau_rows(spec), args, "tau.csv")
    return EXIT_OK


def cmd_ec(args) -> int:
    cfg = _point_network(args)
    snr_db = 10.0 * math.log10(cfg.rho)
    spec = SweepSpec("snr_db", (snr_db,), cfg.with_rho(db_to_linear(snr_db)),
                     parse_strategies(["OMA", "NOMA", "NOMA-R"], args.variant or "event"),
                     estimator=args.estimator or "both", n=args.samples or DEFAULT_SAMPLES,
                     seed=args.seed or 0, workers=args.workers or 1)
    _emit(run_sweep(spec), args, "ec.csv")
    return EXIT_OK


def cmd_sweep(args) -> int:
    if args.config is None:
        raise ConfigError("sweep needs --config")
    loaded = load_config(args.config)
    if not isinstance(loaded, SweepSpec):
        raise ConfigError(f"{args.config}: no sweep axis (give snr_grid_db, beta1_grid or k_users_grid)")
    spec = _overrides(loaded, args)
    _emit(run_sweep(spec), args, "sweep.csv")
    return EXIT_OK


def cmd_figure(args) -> int:
    out = args.out or Path("figures")
    paths = reproduce_figure(args.fig, out, args.samples or DEFAULT_SAMPLES,
                             0 if args.seed is None else args.seed, args.workers or 1)
    for p in paths:
        print(p)
    return EXIT_OK


def cmd_validate(args) -> int:
    from .validation import ACCEPT_N, SWEEP_N, run_all

    large = args.samples or ACCEPT_N
    sweep = min(args.samples, SWEEP_N) if args.samples else SWEEP_N
    results = run_all(large, sweep, args.workers or 1, args.only)
    failed = [r.name for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return EXIT_VALIDATION if failed else EXIT_OK


COMMANDS = {"tau": cmd_tau, "ec": cmd_ec, "sweep": cmd_sweep, "figure": cmd_figure,
            "validate": cmd_validate}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, DegenerateExponentError, UnsupportedModelError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except QuadratureError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
