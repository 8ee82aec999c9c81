import numpy as np
import pytest

from jumprisk.betas import (
    TopicUnavailable, build_beta_panel, continuous_beta, continuous_mask, jump_beta, year_end_days,
)
from jumprisk.jumps import JumpParams, detect_jumps
from jumprisk.simkit import oracle_labels, simulate

from conftest import small_config


def _world(**kw):
    cfg = small_config(**kw)
    factor, panel, truth = simulate(cfg)
    jumps = oracle_labels(detect_jumps(factor, JumpParams(min_abs_jump=0.0)), truth)
    return cfg, factor, panel, truth, jumps.select(jumps.attributed)


def test_asset_equal_to_factor_has_unit_betas():
    cfg, factor, panel, truth, jumps = _world(idio_vol=0.0, beta_ranges=((1.0, 1.0),) * 6)
    b, n = jump_beta(panel, jumps, 1, panel.n_days - 1)
    assert n >= 3
    np.testing.assert_allclose(b, 1.0, atol=1e-12)
    bc = continuous_beta(panel, factor, 21, panel.n_days - 1)
    np.testing.assert_allclose(bc, 1.0, atol=1e-12)


def test_scaled_asset_gives_exact_jump_beta():
    cfg, factor, panel, truth, jumps = _world(idio_vol=0.0, beta_ranges=((1.0, 1.0),) * 6)
    panel.intraday[0] *= 2.0
    panel.overnight[0] *= 2.0
    b, _ = jump_beta(panel, jumps, 2, panel.n_days - 1)
    assert b[0] == pytest.approx(2.0, abs=1e-12)


def test_noiseless_jump_betas_match_truth():
    # no diffusion and no drift: asset returns at topic-k jumps are exactly beta_k times the jump
    cfg, factor, panel, truth, jumps = _world(idio_vol=0.0, continuous_vol=0.0)
    for k in range(1, 6):
        b, _ = jump_beta(panel, jumps, k, panel.n_days - 1)
        np.testing.assert_allclose(b, truth.true_betas[:, k], atol=1e-10)


def test_contaminating_jump_leaves_continuous_beta_unchanged():
    cfg, factor, panel, truth, jumps = _world(jump_intensity_per_topic=(0.0,) * 5)
    d = panel.n_days - 1
    mask = continuous_mask(factor)
    mask[d - 3, 5] = False
    before = continuous_beta(panel, factor, 21, d, mask=mask)
    factor.intraday[d - 3, 5] = 0.08
    panel.intraday[:, d - 3, 5] = 0.08 * truth.true_betas[:, 0]
    after = continuous_beta(panel, factor, 21, d)
    np.testing.assert_allclose(after, before, atol=1e-15)


def test_continuous_beta_one_month_fifteen_minute():
    cfg = small_config(n_assets=1, n_days=21, intervals_per_day=26, intervals_per_night=1,
                       idio_vol=0.0002, continuous_vol=0.001, beta_ranges=((0.7, 0.7),) + ((1, 1),) * 5,
                       jump_intensity_per_topic=(0.0,) * 5, seed=5)
    factor, panel, _ = simulate(cfg)
    b = continuous_beta(panel, factor, 21, 20)
    assert abs(b[0] - 0.7) < 0.05


def test_jump_betas_frozen_within_year():
    cfg, factor, panel, truth, jumps = _world(n_days=504)
    bps = build_beta_panel(panel, factor, jumps)
    ye = set(year_end_days(factor.dates).tolist())
    years = np.asarray([bp.as_of_date for bp in bps], dtype="datetime64[Y]")
    for y in np.unique(years):
        group = [bp for bp, yy in zip(bps, years) if yy == y and bp.as_of not in ye]
        for bp in group[1:]:
            np.testing.assert_array_equal(bp.beta_j, group[0].beta_j)


def test_topic_unavailable_before_first_jump():
    cfg, factor, panel, truth, jumps = _world()
    first = int(jumps.day[jumps.topic == 1].min())
    with pytest.raises(TopicUnavailable):
        jump_beta(panel, jumps, 1, first - 1)
    bps = build_beta_panel(panel, factor, jumps, schedule=[max(first - 1, 0), 200])
    assert 1 not in bps[0].available_topics()


def test_future_data_does_not_leak():
    cfg, factor, panel, truth, jumps = _world()
    as_of = 150
    bps = build_beta_panel(panel, factor, jumps, schedule=[as_of], jump_update_days=[as_of])
    f2, p2 = factor.copy(), type(panel)(panel.asset_ids, panel.dates, panel.intraday.copy(),
                                        panel.overnight.copy(), panel.intraday_ts, panel.overnight_ts)
    rng = np.random.default_rng(0)
    f2.intraday[as_of + 1:] = rng.normal(0, 0.02, f2.intraday[as_of + 1:].shape)
    p2.intraday[:, as_of + 1:] = rng.normal(0, 0.02, p2.intraday[:, as_of + 1:].shape)
    j2 = jumps.select(jumps.day <= as_of)
    bps2 = build_beta_panel(p2, f2, j2, schedule=[as_of], jump_update_days=[as_of])
    np.testing.assert_array_equal(bps[0].beta_c, bps2[0].beta_c)
    np.testing.assert_array_equal(bps[0].beta_j, bps2[0].beta_j)
