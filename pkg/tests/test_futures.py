import numpy as np
import pandas as pd
import pytest

from jumprisk.futures import (
    RollSchedule, Roll, continuous_returns, position_wealth, roll_schedule, synthetic_contracts,
)

DATES = pd.bdate_range("2020-01-06", periods=5)


def test_crossover_rolls_next_day():
    vol = pd.DataFrame({"A": [100, 90, 60, 30, 10], "B": [10, 40, 70, 80, 90]}, index=DATES, dtype=float)
    s = roll_schedule(vol)
    assert len(s) == 1 and s.rolls[0].date == DATES[3] and not s.rolls[0].forced


def test_tie_keeps_front():
    vol = pd.DataFrame({"A": [100, 50, 40, 30, 10], "B": [10, 50, 30, 20, 90]}, index=DATES, dtype=float)
    assert roll_schedule(vol).rolls[0].date == DATES[4]


def test_less_liquid_next_forces_roll_at_expiry():
    vol = pd.DataFrame({"A": [100, 90, 80, np.nan, np.nan], "B": [1, 2, 3, 4, 5]}, index=DATES, dtype=float)
    s = roll_schedule(vol)
    assert len(s) == 1 and s.rolls[0].forced and s.rolls[0].date == DATES[2]


def test_trade_count_used_when_volume_missing():
    vol = pd.DataFrame({"A": [100, np.nan, 80, 70, 60], "B": [10, 20, 30, 40, 50]}, index=DATES, dtype=float)
    trd = pd.DataFrame({"A": [5, 5, 5, 5, 5], "B": [1, 9, 1, 1, 1]}, index=DATES, dtype=float)
    assert roll_schedule(vol, trd).rolls[0].date == DATES[2]


def test_shuffled_columns_give_same_schedule():
    px, vol = synthetic_contracts(4, seed=2)
    a = roll_schedule(vol)
    b = roll_schedule(vol[vol.columns[::-1]])
    assert [(r.date, r.from_contract, r.to_contract) for r in a.rolls] == \
           [(r.date, r.from_contract, r.to_contract) for r in b.rolls]
    order = a.held()
    last = [vol[c].last_valid_index() for c in order]
    assert last == sorted(last)


def test_worked_example_100_110_112_2():
    d = DATES[:3]
    px = pd.DataFrame({"A": [99.0, 100.0, np.nan], "B": [108.0, 110.0, 112.2]}, index=d)
    vol = pd.DataFrame({"A": [10.0, 10.0, np.nan], "B": [20.0, 30.0, 40.0]}, index=d)
    s = roll_schedule(vol, prices=px)
    r = s.rolls[0]
    assert r.date == d[1] and r.scale == pytest.approx(10 / 11)
    ret = continuous_returns(px, s)
    assert ret.iloc[-1] == pytest.approx(0.02, abs=1e-12)
    w = position_wealth(px, s, w0=99.0)
    assert w.iloc[1] == pytest.approx(100.0) and w.iloc[-1] == pytest.approx(102.0, abs=1e-12)


def test_equal_prices_scale_one():
    d = DATES[:3]
    px = pd.DataFrame({"A": [100.0, 101.0, np.nan], "B": [100.0, 101.0, 103.0]}, index=d)
    s = RollSchedule("A", [Roll(d[1], "A", "B")])
    ret = continuous_returns(px, s)
    np.testing.assert_allclose(ret.to_numpy(), [0.01, 103 / 101 - 1])


def test_dual_bookkeeping_three_rolls():
    px, vol = synthetic_contracts(4, seed=9)
    s = roll_schedule(vol, prices=px)
    assert len(s) == 3
    ret = continuous_returns(px, s)
    w = position_wealth(px, s, 1.0)
    comp = np.concatenate([[1.0], np.cumprod(1 + ret.to_numpy())])
    np.testing.assert_allclose(comp, w.to_numpy(), rtol=0, atol=1e-10)
