import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from jumprisk import io
from jumprisk.betas import build_beta_panel
from jumprisk.jumps import detect_jumps
from jumprisk.simkit import oracle_labels


def test_factor_round_trip(tmp_path, small_world):
    _, factor, _, _ = small_world
    io.write_factor(factor, tmp_path / "f.csv")
    g = io.load_factor(tmp_path / "f.csv")
    assert g.intraday.tobytes() == factor.intraday.tobytes()
    assert g.overnight.tobytes() == factor.overnight.tobytes()
    np.testing.assert_array_equal(g.intraday_ts, factor.intraday_ts)
    assert (tmp_path / "f.csv").read_text().splitlines()[0] == "ts_utc,session,ret"


def test_panel_round_trip_with_gap(tmp_path, small_world):
    _, factor, panel, _ = small_world
    p = type(panel)(panel.asset_ids, panel.dates, panel.intraday.copy(), panel.overnight.copy(),
                    panel.intraday_ts, panel.overnight_ts)
    p.intraday[2, 5, 3] = np.nan
    io.write_panel(p, tmp_path / "p.csv")
    q = io.load_panel(tmp_path / "p.csv", factor)
    np.testing.assert_array_equal(q.intraday, p.intraday)
    np.testing.assert_array_equal(q.overnight, p.overnight)


def test_jumps_and_betas_round_trip(tmp_path, small_world):
    _, factor, panel, truth = small_world
    js = oracle_labels(detect_jumps(factor), truth)
    io.write_jumps(js, tmp_path / "j.csv")
    back = io.load_jumps(tmp_path / "j.csv", factor)
    for name in ("day", "slot", "ret", "topic", "attributed"):
        np.testing.assert_array_equal(getattr(back, name), getattr(js, name))
    bps = build_beta_panel(panel, factor, js.select(js.attributed))
    io.write_betas(bps, tmp_path / "b.csv")
    again = io.load_betas(tmp_path / "b.csv", factor.dates)
    assert [b.as_of for b in again] == [b.as_of for b in bps]
    for a, b in zip(again, bps):
        np.testing.assert_array_equal(a.beta_c, b.beta_c)
        np.testing.assert_array_equal(a.beta_j, b.beta_j)


def test_nan_return_rejected_with_row(tmp_path, small_world):
    _, factor, _, _ = small_world
    path = tmp_path / "f.csv"
    io.write_factor(factor, path)
    lines = path.read_text().splitlines()
    ts, sess, _ = lines[5].split(",")
    lines[5] = f"{ts},{sess},nan"
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(io.SchemaError) as exc:
        io.load_factor(path)
    assert exc.value.line == 6 and exc.value.column == "ret"


def test_unsorted_timestamps_rejected(tmp_path, small_world):
    _, factor, _, _ = small_world
    path = tmp_path / "f.csv"
    io.write_factor(factor, path)
    lines = path.read_text().splitlines()
    lines[3], lines[4] = lines[4], lines[3]
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(io.SchemaError, match="increasing"):
        io.load_factor(path)


def test_bad_header_rejected(tmp_path):
    p = tmp_path / "rf.csv"
    p.write_text("month,riskfree\n2000-01,0.001\n")
    with pytest.raises(io.SchemaError):
        io.load_rf(p)


def test_rf_round_trip(tmp_path):
    io.write_rf(["2000-01", "2000-02"], [0.001, 0.0012], tmp_path / "rf.csv")
    rf = io.load_rf(tmp_path / "rf.csv")
    assert rf["2000-02"] == 0.0012


def test_tick_sampling_examples():
    t = np.array(["2020-01-02T09:31", "2020-01-02T09:44"], dtype="datetime64[m]")
    g = np.array(["2020-01-02T09:30", "2020-01-02T09:31", "2020-01-02T09:45"], dtype="datetime64[m]")
    out = io.previous_tick_sample(t, [100.0, 101.0], g)
    assert np.isnan(out[0]) and out[1] == 100.0 and out[2] == 101.0
    assert np.all(np.isnan(io.previous_tick_sample([], [], g)))


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(0, 10_000), min_size=1, max_size=60), st.lists(st.integers(0, 10_000), min_size=1, max_size=30))
def test_tick_sampling_matches_linear_scan(ticks, grid):
    t = np.sort(np.array(ticks)).astype("datetime64[s]")
    p = np.arange(len(t), dtype=float)
    g = np.array(grid).astype("datetime64[s]")
    out = io.previous_tick_sample(t, p, g)
    for k, gt in enumerate(g):
        best = np.nan
        for i in range(len(t)):
            if t[i] <= gt:
                best = p[i]
        assert (np.isnan(out[k]) and np.isnan(best)) or out[k] == best
