"""Parameter sweeps, figure pipelines and CSV persistence."""

from __future__ import annotations

import csv
import io
import math
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable

from .closed_form import (
    NOMA,
    NOMAR_EVENT,
    NOMAR_TIMESHARE,
    OMA,
    StrategyModel,
    TwoUserParams,
    ec_nomar_strong_timeshare,
    ec_nomar_weak_closed,
    ec_numeric_k2,
    tau_closed_form,
)
from .config import DEFAULT_POWERS, SweepSpec, db_to_linear
from .monte_carlo import UnsupportedModelError, combined_se, estimate_tau, simulate
from .rate_model import NetworkConfig

__all__ = [
    "CSV_HEADER",
    "ResultRow",
    "format_csv",
    "write_csv",
    "read_csv",
    "normalize_timestamp",
    "run_sweep",
    "reproduce_figure",
    "figure_specs",
]

CSV_HEADER = ("axis,axis_value_db,axis_value_linear,strategy,variant,user,estimator,"
              "ec_bits_per_s_per_hz,std_err,n_samples,seed")
TIMESTAMP_PREFIX = "# generated "
ERROR_SUFFIX = ":unsupported"
SNR_GRID_FIG1 = tuple(range(-40, 45, 5))
SNR_GRID_FIG2 = tuple(range(-10, 55, 5))
SNR_GRID_FIG3 = tuple(range(0, 45, 5))
BETA1_GRID_FIG4 = (-10.0, -8.0, -6.0, -4.0, -2.0, -1.0, -0.5, -0.1)


@dataclass(frozen=True)
class ResultRow:
    """One CSV line.

    ``strategy`` is OMA, NOMA or NOMA-R; two pseudo-strategies also appear:
    ``tau`` (value = probability that NOMA-R uses NOMA) and ``crossover``
    (summary of a beta1 sweep).  ``estimator`` is cf or mc, with an
    ``:unsupported`` suffix on rows that could not be evaluated.
    """

    axis: str
    axis_value_db: float | None
    axis_value_linear: float
    strategy: str
    variant: str
    user: str
    estimator: str
    value: float
    std_err: float
    n_samples: int
    seed: int

    @property
    def failed(self) -> bool:
        return self.estimator.endswith(ERROR_SUFFIX)


def _fmt(x: float | None) -> str:
    return "" if x is None else format(x, ".17g")


def _row_fields(r: ResultRow) -> list[str]:
    return [r.axis, _fmt(r.axis_value_db), _fmt(r.axis_value_linear), r.strategy, r.variant,
            r.user, r.estimator, _fmt(r.value), _fmt(r.std_err), str(r.n_samples), str(r.seed)]


def format_csv(rows: Iterable[ResultRow]) -> str:
    """Timestamp line, header, then one line per row."""
    buf = io.StringIO()
    stamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
    buf.write(f"{TIMESTAMP_PREFIX}{stamp}\n")
    buf.write(CSV_HEADER + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    for r in rows:
        writer.writerow(_row_fields(r))
    return buf.getvalue()


def write_csv(rows: Iterable[ResultRow], path: str | Path) -> Path:
    """Write rows atomically (temp file in the same directory, then rename)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = format_csv(rows)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise
    return path


def read_csv(path: str | Path) -> list[ResultRow]:
    lines = [ln for ln in Path(path).read_text().splitlines() if not ln.startswith("#")]
    if not lines or lines[0] != CSV_HEADER:
        raise ValueError(f"{path}: unexpected CSV header")
    rows = []
    for rec in csv.reader(lines[1:]):
        rows.append(ResultRow(
            axis=rec[0],
            axis_value_db=float(rec[1]) if rec[1] else None,
            axis_value_linear=float(rec[2]),
            strategy=rec[3], variant=rec[4], user=rec[5], estimator=rec[6],
            value=float(rec[7]), std_err=float(rec[8]),
            n_samples=int(rec[9]), seed=int(rec[10]),
        ))
    return rows


def normalize_timestamp(text: str) -> str:
    """Blank out the generation timestamp so reruns can be compared byte for byte."""
    return "\n".join(TIMESTAMP_PREFIX if ln.startswith(TIMESTAMP_PREFIX) else ln
                     for ln in text.split("\n"))


# --------------------------------------------------------------------------
# sweeps
# --------------------------------------------------------------------------

def _variant(s: StrategyModel) -> str:
    return s.variant or "none"


def _closed_form_user(strategy: StrategyModel, user: int, p: TwoUserParams) -> float:
    if strategy in (OMA, NOMA):
        return ec_numeric_k2(strategy, user, p)
    if strategy == NOMAR_TIMESHARE:
        return ec_nomar_weak_closed(p) if user == 1 else ec_nomar_strong_timeshare(p)
    raise UnsupportedModelError(f"no closed form for {strategy.label}")


class _Point:
    def __init__(self, spec: SweepSpec, value: float):
        self.spec = spec
        self.value = value
        self.cfg = spec.point_config(value)

    def row(self, strategy: str, variant: str, user: str, estimator: str,
            value: float, std_err: float, n: int) -> ResultRow:
        spec = self.spec
        if spec.axis == "snr_db":
            db, lin = self.value, db_to_linear(self.value)
        else:
            db, lin = None, float(self.value)
        return ResultRow(spec.axis, db, lin, strategy, variant, user, estimator,
                         value, std_err, n, spec.seed)

    def failed(self, s: StrategyModel, estimator: str, n: int) -> list[ResultRow]:
        users = [str(u) for u in range(1, self.cfg.k_users + 1)] + ["sum"]
        return [self.row(s.strategy, _variant(s), u, estimator + ERROR_SUFFIX,
                         math.nan, math.nan, n) for u in users]

    def closed_form_rows(self) -> list[ResultRow]:
        out = []
        for s in self.spec.strategies:
            if self.cfg.k_users != 2 or s == NOMAR_EVENT:
                out += self.failed(s, "cf", 0)
                continue
            p = TwoUserParams.from_config(self.cfg)
            vals = [_closed_form_user(s, u, p) for u in (1, 2)]
            for u, v in zip((1, 2), vals):
                out.append(self.row(s.strategy, _variant(s), str(u), "cf", v, 0.0, 0))
            out.append(self.row(s.strategy, _variant(s), "sum", "cf", math.fsum(vals), 0.0, 0))
        return out

    def monte_carlo_rows(self) -> list[ResultRow]:
        spec, k = self.spec, self.cfg.k_users
        usable = [s for s in spec.strategies if not (s == NOMAR_TIMESHARE and k != 2)]
        out = []
        sim = simulate(self.cfg, usable, spec.n, spec.seed, workers=1) if usable else None
        for s in spec.strategies:
            if s not in usable:
                out += self.failed(s, "mc", spec.n)
                continue
            for u in range(1, k + 1):
                e = sim.ec[(s, u)]
                out.append(self.row(s.strategy, _variant(s), str(u), "mc", e.value, e.std_err, e.n))
            total = sim.sum_ec(s, k)
            out.append(self.row(s.strategy, _variant(s), "sum", "mc", total.value,
                                total.std_err, spec.n))
        return out

    def rows(self) -> list[ResultRow]:
        est = self.spec.estimator
        out = []
        if est in ("cf", "both"):
            out += self.closed_form_rows()
        if est in ("mc", "both"):
            out += self.monte_carlo_rows()
        return out


def _map_points(fn, items, workers: int) -> list:
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def run_sweep(spec: SweepSpec, out_path: str | Path | None = None) -> list[ResultRow]:
    """Evaluate every grid point; rows come back (and are written) in grid order."""
    chunks = _map_points(lambda v: _Point(spec, v).rows(), list(spec.grid), spec.workers)
    rows = [r for chunk in chunks for r in chunk]
    if out_path is not None:
        write_csv(rows, out_path)
    return rows


def tau_rows(spec: SweepSpec) -> list[ResultRow]:
    """NOMA-probability rows (closed form and/or Monte Carlo) over an SNR sweep."""
    def one(value):
        pt = _Point(spec, value)
        out = []
        if spec.estimator in ("cf", "both"):
            if pt.cfg.k_users == 2:
                t = tau_closed_form(TwoUserParams.from_config(pt.cfg))
                out.append(pt.row("tau", "none", "sum", "cf", t, 0.0, 0))
            else:
                out.append(pt.row("tau", "none", "sum", "cf" + ERROR_SUFFIX, math.nan, math.nan, 0))
        if spec.estimator in ("mc", "both"):
            est = estimate_tau(pt.cfg, spec.n, spec.seed)
            out.append(pt.row("tau", "none", "sum", "mc", est.value, est.std_err, est.n))
        return out

    return [r for chunk in _map_points(one, list(spec.grid), spec.workers) for r in chunk]


def beta1_crossover(rows: list[ResultRow], axis_template: ResultRow | None = None) -> ResultRow:
    """Largest beta1 where NOMA-R (event) sum EC beats NOMA by more than 3 SE."""
    sums = {}
    for r in rows:
        if r.user == "sum" and r.estimator == "mc" and r.strategy in ("NOMA", "NOMA-R") \
                and r.variant in ("none", "event"):
            sums[(r.strategy, r.axis_value_linear)] = r
    best = None
    for (strategy, b1), r in sums.items():
        if strategy != "NOMA-R" or ("NOMA", b1) not in sums:
            continue
        other = sums[("NOMA", b1)]
        gap = r.value - other.value
        se = math.hypot(r.std_err, other.std_err)
        if gap > 3.0 * se and (best is None or b1 > best[0]):
            best = (b1, gap, se)
    ref = axis_template or rows[0]
    b1, gap, se = best if best else (math.nan, math.nan, math.nan)
    return ResultRow("beta1", None, b1, "crossover", "event", "sum", "mc", gap, se,
                     ref.n_samples, ref.seed)


# --------------------------------------------------------------------------
# figures
# --------------------------------------------------------------------------

def _base(k: int, snr_db: float = 0.0, betas=None) -> NetworkConfig:
    return NetworkConfig(k, DEFAULT_POWERS[k], db_to_linear(snr_db), betas or (-2.0,) * k)


def figure_specs(fig: int, n: int, seed: int, workers: int = 1) -> dict[str, SweepSpec]:
    """Sweep definitions behind each figure, keyed by output file stem."""
    common = dict(n=n, seed=seed, workers=workers)
    if fig == 1:
        return {"fig1_tau": SweepSpec("snr_db", SNR_GRID_FIG1, _base(2), (NOMAR_EVENT,),
                                      estimator="both", **common)}
    if fig == 2:
        return {"fig2_ec_per_user": SweepSpec(
            "snr_db", SNR_GRID_FIG2, _base(2), (OMA, NOMA, NOMAR_EVENT, NOMAR_TIMESHARE),
            estimator="both", **common)}
    if fig == 3:
        return {f"fig3_sum_ec_k{k}": SweepSpec(
            "snr_db", SNR_GRID_FIG3, _base(k), (OMA, NOMA, NOMAR_EVENT),
            estimator="mc", **common) for k in (2, 3, 4)}
    if fig == 4:
        return {f"fig4_sum_ec_beta1_k{k}": SweepSpec(
            "beta1", BETA1_GRID_FIG4, _base(k, 35.0), (OMA, NOMA, NOMAR_EVENT),
            estimator="mc", **common) for k in (2, 3)}
    raise ValueError(f"unknown figure {fig}; expected 1, 2, 3 or 4")


_GNUPLOT_HEAD = """\
set datafile separator ','
set key outside right
set grid
"""


def _series(path: str, xcol: int, strategy: str, variant: str, user: str, estimator: str,
            title: str, style: str = "linespoints") -> str:
    cond = (f'strcol(4) eq "{strategy}" && strcol(5) eq "{variant}" && '
            f'strcol(6) eq "{user}" && strcol(7) eq "{estimator}"')
    return f"'{path}' using {xcol}:(({cond}) ? $8 : 1/0) with {style} title '{title}'"


def gnuplot_script(fig: int, stem: str, csv_name: str) -> str:
    lines = [_GNUPLOT_HEAD, f"set output '{stem}.png'", "set terminal pngcairo size 900,600"]
    s = lambda *a, **kw: _series(csv_name, *a, **kw)  # noqa: E731
    if fig == 1:
        lines += ["set xlabel 'SNR (dB)'", "set ylabel 'Probability of NOMA'",
                  "plot " + ", \\\n     ".join([
                      s(2, "tau", "none", "sum", "cf", "closed form", style="lines"),
                      s(2, "tau", "none", "sum", "mc", "Monte Carlo", style="points")])]
    elif fig == 2:
        series = []
        for user in ("1", "2"):
            for strat, var in (("OMA", "none"), ("NOMA", "none"), ("NOMA-R", "event")):
                series.append(s(2, strat, var, user, "mc", f"{strat} user {user}"))
            series.append(s(2, "NOMA-R", "timeshare", user, "cf", f"NOMA-R (time share, cf) user {user}",
                            style="lines"))
        lines += ["set xlabel 'SNR (dB)'", "set ylabel 'EC (bits/s/Hz)'",
                  "plot " + ", \\\n     ".join(series)]
    else:
        xcol, xlabel = (2, "SNR (dB)") if fig == 3 else (3, "beta_1")
        series = [s(xcol, strat, var, "sum", "mc", strat)
                  for strat, var in (("OMA", "none"), ("NOMA", "none"), ("NOMA-R", "event"))]
        lines += [f"set xlabel '{xlabel}'", "set ylabel 'Sum EC (bits/s/Hz)'",
                  "plot " + ", \\\n     ".join(series)]
    return "\n".join(lines) + "\n"


def reproduce_figure(fig: int, out_dir: str | Path, n: int, seed: int,
                     workers: int = 1) -> list[Path]:
    """Write the CSV (and a gnuplot script) underlying figure 1, 2, 3 or 4."""
    out_dir = Path(out_dir)
    written = []
    for stem, spec in figure_specs(fig, n, seed, workers).items():
        if fig == 1:
            rows = tau_rows(spec)
        else:
            rows = run_sweep(spec)
            if fig == 3:
                # NOMA selection frequency, needed to locate where NOMA-R coincides with NOMA
                rows += tau_rows(SweepSpec(spec.axis, spec.grid, spec.base, spec.strategies,
                                           estimator="mc", n=n, seed=seed, workers=workers))
            if fig == 4:
                rows.append(beta1_crossover(rows))
        csv_path = write_csv(rows, out_dir / f"{stem}.csv")
        gp = out_dir / f"{stem}.gp"
        gp.write_text(gnuplot_script(fig, stem, csv_path.name))
        written += [csv_path, gp]
    return written
