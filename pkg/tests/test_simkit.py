import numpy as np
from scipy import stats

from jumprisk.data import INTRADAY, OVERNIGHT
from jumprisk.simkit import SimConfig, simulate, simulate_factor

from conftest import small_config


def test_degenerate_config_gives_zero_factor():
    cfg = small_config(continuous_vol=0.0, jump_intensity_per_topic=(0.0,) * 5,
                       lambda_c=0.0, lambda_j=(0.0,) * 5)
    factor, _ = simulate_factor(cfg)
    assert np.all(factor.intraday == 0) and np.all(factor.overnight == 0)


def test_jump_count_within_poisson_band():
    cfg = SimConfig(n_assets=2, n_days=1000, intervals_per_day=26, intervals_per_night=8,
                    jump_intensity_per_topic=(1.0, 0, 0, 0, 0), seed=11)
    _, truth = simulate_factor(cfg)
    lo, hi = stats.poisson.ppf([0.005, 0.995], 1000)
    assert lo <= truth.n_jumps(1) <= hi
    assert truth.n_jumps(2) == 0


def test_same_seed_is_bit_identical():
    a = simulate(small_config(seed=7))
    b = simulate(small_config(seed=7))
    assert a[0].intraday.tobytes() == b[0].intraday.tobytes()
    assert a[1].intraday.tobytes() == b[1].intraday.tobytes()
    assert a[1].overnight.tobytes() == b[1].overnight.tobytes()
    c = simulate(small_config(seed=8))
    assert c[0].intraday.tobytes() != a[0].intraday.tobytes()


def test_unit_betas_without_noise_copy_the_factor():
    cfg = small_config(idio_vol=0.0, beta_ranges=((1.0, 1.0),) * 6)
    factor, panel, _ = simulate(cfg)
    np.testing.assert_allclose(panel.intraday, np.broadcast_to(factor.intraday, panel.intraday.shape),
                               atol=1e-15)
    np.testing.assert_allclose(panel.overnight, np.broadcast_to(factor.overnight[:, 0], panel.overnight.shape),
                               atol=1e-15)


def test_asset_scales_topic_jump_by_its_beta():
    cfg = small_config(idio_vol=0.0, continuous_vol=0.0)
    factor, truth = simulate_factor(cfg)
    truth.true_betas[0, 1] = 2.0
    from jumprisk.simkit import simulate_panel
    panel = simulate_panel(factor, truth, cfg)
    d, s = np.nonzero(truth.jump_topic[INTRADAY] == 1)
    assert len(d) > 0
    np.testing.assert_allclose(panel.intraday[0, d, s], 2.0 * truth.jump_size[INTRADAY][d, s], atol=1e-15)


def test_noiseless_regression_recovers_true_betas():
    cfg = small_config(idio_vol=0.0)
    factor, panel, truth = simulate(cfg)
    # regress each asset on the continuous part and every topic's jump series
    cont = truth.continuous_part[INTRADAY].ravel()
    cols = [cont]
    for k in range(1, 6):
        cols.append(np.where(truth.jump_topic[INTRADAY] == k, truth.jump_size[INTRADAY], 0.0).ravel()
                    + truth.topic_drift[k - 1])
    X = np.column_stack(cols)
    Y = panel.intraday.reshape(panel.n_assets, -1).T
    coef = np.linalg.lstsq(X, Y, rcond=None)[0].T
    np.testing.assert_allclose(coef, truth.true_betas, atol=1e-10)


def test_overnight_session_present():
    _, factor_truth = simulate_factor(small_config())
    assert set(factor_truth.jump_topic) == {INTRADAY, OVERNIGHT}
