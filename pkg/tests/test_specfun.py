import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nomar_ec.specfun import (
    QuadratureError,
    QuadratureSpec,
    erf,
    erfc,
    gamma_fn,
    hyper_u_a1,
    integrate,
    integrate_semi_infinite,
    log_erfc,
)


def test_erf_golden():
    assert erf(0.0) == 0.0
    assert abs(erf(1.0) - 0.842700792949715) <= 1e-12
    assert erf(-0.7) == -erf(0.7)


@given(st.floats(-6.0, 6.0))
def test_erf_against_mpmath(x):
    assert abs(erf(x) - float(mpmath.erf(x))) <= 1e-14


@given(st.floats(0.0, 25.0))
def test_erfc_relative_accuracy(x):
    ref = float(mpmath.erfc(x))
    assert abs(erfc(x) - ref) <= 1e-12 * ref


def test_erf_monotone_and_bounded():
    xs = np.linspace(-8, 8, 2001)
    vals = np.array([erf(x) for x in xs])
    assert np.all(np.diff(vals) >= 0)
    assert np.all(np.abs(vals) <= 1.0)


@pytest.mark.parametrize("x", [-3.0, 0.0, 1.0, 5.0, 26.0, 100.0, 1e4])
def test_log_erfc_matches_high_precision(x):
    ref = float(mpmath.log(mpmath.erfc(x)))
    assert log_erfc(x) == pytest.approx(ref, rel=1e-12, abs=1e-15)


def test_log_erfc_finite_where_erfc_underflows():
    assert erfc(40.0) == 0.0 or erfc(40.0) < 1e-300
    assert math.isfinite(log_erfc(40.0))


def test_gamma_golden():
    assert gamma_fn(1.0) == pytest.approx(1.0, rel=1e-14)
    assert gamma_fn(5.0) == pytest.approx(24.0, rel=1e-13)
    assert abs(gamma_fn(0.5) - 1.7724538509) <= 1e-9


@pytest.mark.parametrize("x", np.arange(-3.5, 10.0, 1.0))
def test_gamma_recurrence(x):
    assert gamma_fn(x + 1) == pytest.approx(x * gamma_fn(x), rel=1e-10)


@given(st.floats(-3.99, 9.99).filter(lambda x: min(abs(x - round(x)), 1.0) > 1e-3 or x > 0.5))
def test_gamma_against_mpmath(x):
    ref = float(mpmath.gamma(x))
    assert gamma_fn(x) == pytest.approx(ref, rel=1e-12)


@pytest.mark.parametrize("x", [0.0, -1.0, -2.0, -3.0])
def test_gamma_poles_raise(x):
    with pytest.raises(ValueError):
        gamma_fn(x)


@pytest.mark.parametrize("z", [0.5, 2.0, 10.0])
def test_hyper_u_b2_is_reciprocal(z):
    assert hyper_u_a1(2.0, z) * z == pytest.approx(1.0, abs=1e-10)


def test_hyper_u_exponential_integral():
    # U(1, 1, 1) = e E1(1)
    assert abs(hyper_u_a1(1.0, 1.0) - 0.596347362) <= 1e-8
    assert hyper_u_a1(1.0, 1.0) == pytest.approx(float(mpmath.e * mpmath.e1(1)), rel=1e-10)


def test_hyper_u_large_z_leading_term():
    z = 1e4
    assert abs(z * hyper_u_a1(3.0, z) - 1.0) <= 1e-3


@given(st.floats(-3.0, 4.0), st.floats(0.01, 50.0))
def test_hyper_u_against_mpmath(b, z):
    ref = float(mpmath.hyperu(1, b, z))
    assert hyper_u_a1(b, z) == pytest.approx(ref, rel=1e-9)


@pytest.mark.parametrize("b", [-1.0, 0.5, 2.0, 3.5])
def test_hyper_u_decreasing_in_z(b):
    zs = np.geomspace(0.05, 50, 25)
    vals = [hyper_u_a1(b, z) for z in zs]
    assert all(v2 < v1 for v1, v2 in zip(vals, vals[1:]))


@pytest.mark.parametrize("f", [
    lambda t: np.exp(-t),
    lambda t: 2 * np.exp(-t) * (1 - np.exp(-t)),
    lambda t: t * np.exp(-t),
])
def test_semi_infinite_unit_integrals(f):
    assert integrate_semi_infinite(f) == pytest.approx(1.0, abs=1e-12)


def test_semi_infinite_endpoint_singularity():
    # int t^{-1/2} e^{-t} = sqrt(pi)
    val = integrate_semi_infinite(lambda t: t ** -0.5 * np.exp(-t))
    assert val == pytest.approx(math.sqrt(math.pi), rel=1e-8)


def test_result_stable_under_more_subdivisions():
    f = lambda t: np.exp(-0.3 * t) * np.log1p(t) ** 2  # noqa: E731
    q = QuadratureSpec()
    a = integrate_semi_infinite(f, q)
    b = integrate_semi_infinite(f, QuadratureSpec(max_subdivisions=2 * q.max_subdivisions))
    assert abs(a - b) <= 10 * q.rel_tol * abs(a)


def test_finite_interval():
    assert integrate(np.sin, 0.0, math.pi) == pytest.approx(2.0, rel=1e-12)


def test_quadrature_failure_raises():
    with pytest.raises(QuadratureError):
        integrate(lambda x: np.sin(1.0 / x) / x, 1e-9, 1.0, QuadratureSpec(max_subdivisions=5))


def test_bad_spec_rejected():
    with pytest.raises(ValueError):
        QuadratureSpec(rel_tol=0.0)
