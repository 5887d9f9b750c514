import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from nomar_ec.channel import (
    PDF_JOINT,
    PDF_STRONG,
    PDF_WEAK,
    GainSample,
    block_rng,
    pdf_k2,
    sample_gain_matrix,
    sample_ordered_gains,
)
from nomar_ec.specfun import integrate_semi_infinite


def test_unit_mean_single_user():
    x = sample_gain_matrix(10**6, 1, block_rng(1, 0))
    assert abs(x.mean() - 1.0) <= 0.003


def test_two_user_order_statistic_means():
    x = sample_gain_matrix(10**6, 2, block_rng(2, 0))
    assert abs(x[:, 0].mean() - 0.5) <= 0.002
    assert abs(x[:, 1].mean() - 1.5) <= 0.004


def test_sorted_rows_match_sorting_raw_draws():
    # the sampler is nothing more than sorted iid unit exponentials
    rng_a, rng_b = block_rng(3, 5), block_rng(3, 5)
    x = sample_gain_matrix(1000, 4, rng_a)
    raw = -np.log(1.0 - rng_b.random((1000, 4)))
    np.testing.assert_array_equal(x, np.sort(raw, axis=1))


def test_weak_gain_ks():
    x = sample_gain_matrix(10**6, 2, block_rng(4, 0))[:, 0]
    d, p = stats.kstest(x, lambda t: 1.0 - np.exp(-2.0 * t))
    # 1% critical value of the one-sample KS statistic
    assert d < 1.628 / math.sqrt(x.size)


def test_streams_depend_only_on_seed_and_block():
    a = block_rng(7, 3).random(5)
    b = block_rng(7, 3).random(5)
    c = block_rng(7, 4).random(5)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)


def test_seed_range():
    with pytest.raises(ValueError):
        block_rng(-1, 0)
    with pytest.raises(ValueError):
        block_rng(2**64, 0)


def test_gain_sample_validation():
    s = sample_ordered_gains(3, block_rng(0, 0))
    assert s.k == 3
    with pytest.raises(ValueError):
        GainSample(np.array([2.0, 1.0]))
    with pytest.raises(ValueError):
        GainSample(np.array([-1.0, 1.0]))
    with pytest.raises(ValueError):
        GainSample(np.array([]))
    with pytest.raises(ValueError):
        GainSample(np.array([1.0, np.inf]))


def test_pdf_examples():
    assert pdf_k2(PDF_WEAK, 0.0) == 2.0
    assert pdf_k2(PDF_STRONG, 0.0) == 0.0
    assert pdf_k2(PDF_JOINT, 1.0, 0.5) == 0.0


def test_pdf_rejects_negative():
    with pytest.raises(ValueError):
        pdf_k2(PDF_WEAK, -0.1)


@pytest.mark.parametrize("which", [PDF_WEAK, PDF_STRONG])
def test_marginals_normalized(which):
    f = np.vectorize(lambda x: pdf_k2(which, x))
    assert integrate_semi_infinite(f) == pytest.approx(1.0, abs=1e-9)


@given(st.floats(0.0, 8.0))
def test_weak_marginal_is_joint_integrated(x1):
    tail = integrate_semi_infinite(np.vectorize(lambda u: pdf_k2(PDF_JOINT, x1, x1 + u)))
    assert tail == pytest.approx(pdf_k2(PDF_WEAK, x1), abs=1e-8)
