import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nomar_ec.closed_form import NOMA, NOMAR_EVENT, NOMAR_TIMESHARE, OMA
from nomar_ec.config import DEFAULT_POWERS, SweepSpec, db_to_linear
from nomar_ec.harness import (
    CSV_HEADER,
    ResultRow,
    beta1_crossover,
    figure_specs,
    normalize_timestamp,
    read_csv,
    reproduce_figure,
    run_sweep,
    tau_rows,
    write_csv,
)
from nomar_ec.rate_model import ConfigError, NetworkConfig


def base(k=2, db=0.0):
    return NetworkConfig(k, DEFAULT_POWERS[k], db_to_linear(db))


def test_header_is_exact(tmp_path):
    path = write_csv([], tmp_path / "x.csv")
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# generated ")
    assert lines[1] == ("axis,axis_value_db,axis_value_linear,strategy,variant,user,estimator,"
                        "ec_bits_per_s_per_hz,std_err,n_samples,seed")
    assert lines[1] == CSV_HEADER


finite = st.floats(allow_nan=False, allow_infinity=False)


@given(st.lists(st.tuples(finite, finite, finite, finite, st.integers(0, 10**9),
                          st.integers(0, 2**64 - 1)), max_size=20))
def test_csv_round_trip_bit_exact(tmp_path_factory, recs):
    rows = [ResultRow("snr_db", a, b, "NOMA-R", "event", "sum", "mc", c, d, n, s)
            for a, b, c, d, n, s in recs]
    path = write_csv(rows, tmp_path_factory.mktemp("rt") / "r.csv")
    back = read_csv(path)
    assert len(back) == len(rows)
    for r, q in zip(rows, back):
        assert r == q
        assert np.float64(r.value).tobytes() == np.float64(q.value).tobytes()


def test_nan_rows_round_trip(tmp_path):
    row = ResultRow("beta1", None, -1.0, "NOMA-R", "timeshare", "1", "cf:unsupported",
                    math.nan, math.nan, 0, 0)
    back = read_csv(write_csv([row], tmp_path / "n.csv"))[0]
    assert back.failed and math.isnan(back.value) and back.axis_value_db is None


def test_atomic_write_leaves_no_temp_files(tmp_path):
    write_csv([], tmp_path / "a.csv")
    assert [p.name for p in tmp_path.iterdir()] == ["a.csv"]


def test_read_rejects_foreign_csv(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        read_csv(p)


def test_sweep_rows_and_cross_validation():
    spec = SweepSpec("snr_db", (-40.0, 0.0, 20.0, 40.0), base(),
                     (OMA, NOMA, NOMAR_EVENT, NOMAR_TIMESHARE), estimator="both",
                     n=4 * 10**5, seed=1, workers=4)
    rows = run_sweep(spec)
    # one row per point x strategy x (user 1, 2, sum) x estimator
    assert len(rows) == 4 * 4 * 3 * 2
    assert [r.axis_value_db for r in rows[::24]] == [-40.0, 0.0, 20.0, 40.0]
    by = {(r.axis_value_db, r.strategy, r.variant, r.user, r.estimator): r for r in rows}
    for db in spec.grid:
        for strat, var in (("OMA", "none"), ("NOMA", "none"), ("NOMA-R", "timeshare")):
            for user in ("1", "2"):
                cf = by[(db, strat, var, user, "cf")]
                mc = by[(db, strat, var, user, "mc")]
                assert abs(cf.value - mc.value) <= 3.5 * mc.std_err, (db, strat, user)
        assert by[(db, "NOMA-R", "event", "1", "cf:unsupported")].failed


def test_k3_closed_form_marked_unsupported():
    spec = SweepSpec("snr_db", (10.0,), base(3), (NOMA, NOMAR_TIMESHARE), estimator="both",
                     n=1000, seed=0)
    rows = run_sweep(spec)
    cf = [r for r in rows if r.estimator.startswith("cf")]
    assert cf and all(r.failed for r in cf)
    ts_mc = [r for r in rows if r.variant == "timeshare" and r.estimator.startswith("mc")]
    assert ts_mc and all(r.failed for r in ts_mc)
    noma_mc = [r for r in rows if r.strategy == "NOMA" and r.estimator == "mc"]
    assert len(noma_mc) == 4 and all(math.isfinite(r.value) for r in noma_mc)


def test_empty_strategy_set_rejected_before_work():
    with pytest.raises(ConfigError):
        SweepSpec("snr_db", (0.0,), base(), ())


def test_beta1_axis_rows():
    spec = SweepSpec("beta1", (-10.0, -4.0, -0.1), base(2, 35.0), (NOMA, NOMAR_EVENT),
                     estimator="mc", n=10**4, seed=0)
    rows = run_sweep(spec)
    assert sorted({r.axis_value_linear for r in rows}) == [-10.0, -4.0, -0.1]
    assert all(r.axis == "beta1" and r.axis_value_db is None for r in rows)


def test_crossover_summary():
    def row(strategy, variant, b1, value, se=0.01):
        return ResultRow("beta1", None, b1, strategy, variant, "sum", "mc", value, se, 10, 0)
    rows = [row("NOMA", "none", -4.0, 1.0), row("NOMA-R", "event", -4.0, 1.5),
            row("NOMA", "none", -1.0, 2.0), row("NOMA-R", "event", -1.0, 2.2),
            row("NOMA", "none", -0.1, 3.0), row("NOMA-R", "event", -0.1, 3.01)]
    summary = beta1_crossover(rows)
    assert summary.strategy == "crossover" and summary.axis_value_linear == -1.0
    assert summary.value == pytest.approx(0.2)


def test_tau_rows_cf_and_mc():
    spec = SweepSpec("snr_db", (0.0, 30.0), base(), (NOMAR_EVENT,), n=10**5, seed=2)
    rows = tau_rows(spec)
    assert [r.estimator for r in rows] == ["cf", "mc", "cf", "mc"]
    assert all(r.strategy == "tau" and r.user == "sum" for r in rows)


def test_figure_specs_configurations():
    f3 = figure_specs(3, 10, 0)
    assert {s.base.powers for s in f3.values()} == {DEFAULT_POWERS[k] for k in (2, 3, 4)}
    f4 = figure_specs(4, 10, 0)
    for spec in f4.values():
        cfg = spec.point_config(-6.0)
        assert cfg.betas[-1] == -2.0 and set(cfg.betas[:-1]) == {-6.0}
        assert cfg.rho == pytest.approx(10**3.5)
    with pytest.raises(ValueError):
        figure_specs(5, 10, 0)


def test_figure1_files_and_determinism(tmp_path):
    a = reproduce_figure(1, tmp_path / "a", 3 * 10**4, 42, workers=1)
    b = reproduce_figure(1, tmp_path / "b", 3 * 10**4, 42, workers=8)
    assert [p.name for p in a] == ["fig1_tau.csv", "fig1_tau.gp"]
    assert normalize_timestamp(a[0].read_text()) == normalize_timestamp(b[0].read_text())
    script = a[1].read_text()
    assert "fig1_tau.csv" in script and script.startswith("set datafile separator ','")
    assert len(read_csv(a[0])) == 2 * 17


def test_figure4_has_crossover_row(tmp_path):
    paths = reproduce_figure(4, tmp_path, 2000, 1)
    csvs = [p for p in paths if p.suffix == ".csv"]
    assert len(csvs) == 2
    for p in csvs:
        assert read_csv(p)[-1].strategy == "crossover"


def test_normalize_timestamp_only_touches_header():
    text = "# generated 2020-01-01T00:00:00+00:00\na,b\n"
    assert normalize_timestamp(text) == "# generated \na,b\n"
