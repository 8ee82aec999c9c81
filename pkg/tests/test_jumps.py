import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from jumprisk.data import empty_factor, INTRADAY
from jumprisk.jumps import (
    JumpParams, InsufficientDataError, bipower_variation, detect_jumps, estimate_diurnal,
    truncated_variance,
)

finite_returns = arrays(np.float64, st.integers(2, 60),
                        elements=st.floats(-0.05, 0.05, allow_nan=False))


def test_bv_zero_path():
    assert bipower_variation(np.zeros(10)) == 0.0


def test_bv_two_returns():
    assert bipower_variation([0.01, 0.01]) == pytest.approx(np.pi / 2 * 2 * 1e-4, rel=1e-14)


def test_bv_needs_two_returns():
    with pytest.raises(InsufficientDataError):
        bipower_variation([0.01])


def test_bv_robust_to_one_big_return(rng):
    r = rng.normal(0, 0.001, 78)
    bv0, rv0 = bipower_variation(r), np.sum(r ** 2)
    r[40] = 0.05
    assert bipower_variation(r) - bv0 < 0.1 * (np.sum(r ** 2) - rv0)


@settings(max_examples=200, deadline=None)
@given(finite_returns)
def test_bv_matches_direct_loop(r):
    n = len(r)
    direct = np.pi / 2 * n / (n - 1) * sum(abs(r[i - 1]) * abs(r[i]) for i in range(1, n))
    assert bipower_variation(r) == pytest.approx(direct, rel=1e-12, abs=1e-300)


def test_tv_without_binding_truncation_is_sum_of_squares(rng):
    r = rng.normal(0, 0.001, 26)
    assert truncated_variance(r, JumpParams(), bv=1.0) == pytest.approx(np.sum(r ** 2), rel=1e-14)


def test_tv_drops_exactly_the_outlier(rng):
    r = rng.normal(0, 0.001, 26)
    r[7] = 0.2
    p = JumpParams()
    bv = bipower_variation(r)
    assert truncated_variance(r, p, bv) == pytest.approx(np.sum(np.delete(r, 7) ** 2), rel=1e-14)
    assert truncated_variance(np.zeros(26), p, 0.0) == 0.0


@settings(max_examples=200, deadline=None)
@given(finite_returns)
def test_tv_never_exceeds_realized_variance(r):
    p = JumpParams()
    assert truncated_variance(r, p, bipower_variation(r)) <= np.sum(r ** 2) * (1 + 1e-12)


def _factor_with(day_returns):
    day_returns = np.atleast_2d(day_returns)
    f = empty_factor(day_returns.shape[0], day_returns.shape[1], 0)
    f.intraday[:] = day_returns
    return f


def test_constant_zero_factor_has_no_jumps():
    assert len(detect_jumps(_factor_with(np.zeros((5, 26))))) == 0


def test_threshold_example():
    # TV = 1e-4, 26 slots: threshold 3 * 0.01 * (1/26)^0.49 ~ 6.078e-3
    thr = 3 * 0.01 * (1 / 26) ** 0.49
    assert thr == pytest.approx(6.078e-3, abs=1e-6)
    base = np.full(26, np.sqrt(1e-4 / 26))
    base[1::2] *= -1
    for big, flagged in ((0.05, True), (0.005, False)):
        r = base.copy()
        r[10] = big
        js = detect_jumps(_factor_with(r), JumpParams(min_abs_jump=0.0))
        assert (10 in js.slot.tolist()) is flagged


def test_jumpset_ordered_and_filtered(small_world):
    _, factor, _, _ = small_world
    js = detect_jumps(factor)
    assert len(js) > 0
    js.check(min_abs_jump=0.005)


def test_diurnal_flat_and_fallback(rng):
    f = _factor_with(rng.normal(0, 0.001, (250, 26)))
    tau = estimate_diurnal(f, 250)[INTRADAY]
    assert np.all((tau > 0.8) & (tau < 1.25))
    assert tau.mean() == pytest.approx(1.0)
    one = _factor_with(rng.normal(0, 0.001, (1, 26)))
    np.testing.assert_array_equal(estimate_diurnal(one, 250)[INTRADAY], np.ones(26))


def test_diurnal_doubles_variance_at_one_slot(rng):
    r = rng.normal(0, 0.001, (2000, 10))
    r[:, 3] *= np.sqrt(2)
    tau = estimate_diurnal(_factor_with(r), 2000)[INTRADAY]
    assert tau[3] / np.delete(tau, 3).mean() == pytest.approx(2.0, rel=0.1)
