"""Continuous futures returns with a liquidity-triggered roll.

The position moves to the next contract on the trading day after the next
contract trades more than the front. The switch happens at that day's
close and the contract count is rescaled by ``f1 / f2`` so notional
exposure, and hence wealth, is unchanged.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd

log = logging.getLogger(__name__)


class RollError(ValueError):
    pass


@dataclass
class Roll:
    date: pd.Timestamp
    from_contract: str
    to_contract: str
    f1: float = np.nan
    f2: float = np.nan
    forced: bool = False

    @property
    def scale(self) -> float:
        return self.f1 / self.f2


@dataclass
class RollSchedule:
    first_contract: str
    rolls: list

    def __len__(self):
        return len(self.rolls)

    def held(self) -> list:
        return [self.first_contract] + [r.to_contract for r in self.rolls]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "roll_date": [r.date for r in self.rolls],
            "from_contract": [r.from_contract for r in self.rolls],
            "to_contract": [r.to_contract for r in self.rolls],
            "f1": [r.f1 for r in self.rolls],
            "f2": [r.f2 for r in self.rolls],
            "scale": [r.scale for r in self.rolls],
            "forced": [r.forced for r in self.rolls],
        })


def _frame(data) -> pd.DataFrame:
    df = data if isinstance(data, pd.DataFrame) else pd.DataFrame(dict(data))
    df = df.sort_index()
    df.columns = [str(c) for c in df.columns]
    return df.astype(float)


def maturity_order(data: pd.DataFrame) -> list:
    """Contracts sorted by their last observed date (ties by name)."""
    last = {c: data[c].last_valid_index() for c in data.columns}
    missing = [c for c, v in last.items() if v is None]
    if missing:
        raise RollError(f"contracts without any observation: {missing}")
    return sorted(data.columns, key=lambda c: (last[c], c))


def roll_schedule(volumes, trades=None, prices=None) -> RollSchedule:
    """Roll dates from same-day liquidity comparisons.

    Liquidity is volume; where either volume is missing the trade counts are
    compared instead. A tie keeps the front contract. Without a crossover
    the roll is forced on the front's last trading day.
    """
    vol = _frame(volumes)
    trd = _frame(trades).reindex(index=vol.index, columns=vol.columns) if trades is not None else None
    px = _frame(prices).reindex(vol.index) if prices is not None else None
    seen = vol.notna() if trd is None else (vol.notna() | trd.notna())
    order = maturity_order(seen.astype(float).where(seen))
    if len(order) < 2:
        raise RollError("need at least two contracts")
    dates = vol.index
    rolls = []
    i = 0
    t = int(np.argmax(seen[order[0]].to_numpy()))
    while i + 1 < len(order):
        front, nxt = order[i], order[i + 1]
        last_front = int(np.nonzero(seen[front].to_numpy())[0][-1])
        roll_at = None
        forced = False
        for d in range(t, last_front + 1):
            a, b = vol[front].iloc[d], vol[nxt].iloc[d]
            if (np.isnan(a) or np.isnan(b)) and trd is not None:
                a, b = trd[front].iloc[d], trd[nxt].iloc[d]
            if np.isfinite(a) and np.isfinite(b) and b > a:
                roll_at = min(d + 1, last_front)
                break
        if roll_at is None:
            roll_at, forced = last_front, True
            log.warning("no liquidity crossover from %s to %s; forced roll on %s",
                        front, nxt, dates[roll_at])
        r = Roll(dates[roll_at], front, nxt, forced=forced)
        if px is not None:
            r.f1, r.f2 = float(px[front].iloc[roll_at]), float(px[nxt].iloc[roll_at])
        rolls.append(r)
        i += 1
        t = roll_at + 1
    return RollSchedule(order[0], rolls)


def _roll_prices(px: pd.DataFrame, schedule: RollSchedule) -> list:
    out = []
    for r in schedule.rolls:
        f1 = px.at[r.date, r.from_contract] if r.date in px.index else np.nan
        f2 = px.at[r.date, r.to_contract] if r.date in px.index else np.nan
        if not (np.isfinite(f1) and np.isfinite(f2)) or f1 <= 0 or f2 <= 0:
            raise RollError(f"missing boundary price for roll {r.from_contract}->{r.to_contract} "
                            f"on {pd.Timestamp(r.date).date()}")
        out.append(Roll(r.date, r.from_contract, r.to_contract, float(f1), float(f2), r.forced))
    return out


def continuous_returns(prices, schedule: RollSchedule) -> pd.Series:
    """Daily returns of the rolled position.

    On day t the return is the held contract's price ratio, where the held
    contract is the one owned at the close of day t-1.
    """
    px = _frame(prices)
    rolls = _roll_prices(px, schedule)
    held = pd.Series(np.nan, index=px.index, dtype=object)
    cur = schedule.first_contract
    start = px[cur].first_valid_index()
    k = 0
    for d in px.index[px.index >= start]:
        held[d] = cur
        if k < len(rolls) and d == rolls[k].date:
            cur = rolls[k].to_contract
            k += 1
            held[d] = cur             # owned at this close
    held = held.dropna()
    end = px[cur].last_valid_index()
    held = held[held.index <= end]
    idx = held.index
    out = np.full(len(idx) - 1, np.nan)
    for n in range(1, len(idx)):
        c = held.iloc[n - 1]
        p0, p1 = px.at[idx[n - 1], c], px.at[idx[n], c]
        if not (np.isfinite(p0) and np.isfinite(p1)):
            raise RollError(f"missing price for {c} between {idx[n - 1]} and {idx[n]}")
        out[n - 1] = p1 / p0 - 1.0
    return pd.Series(out, index=idx[1:], name="ret")


def position_wealth(prices, schedule: RollSchedule, w0: float = 1.0) -> pd.Series:
    """Wealth from explicit contract counts, rescaled by f1/f2 at each roll."""
    px = _frame(prices)
    rolls = _roll_prices(px, schedule)
    cur = schedule.first_contract
    start = px[cur].first_valid_index()
    n = w0 / px.at[start, cur]
    k = 0
    vals, idx = [], []
    end = px[schedule.held()[-1]].last_valid_index()
    for d in px.index[(px.index >= start) & (px.index <= end)]:
        vals.append(n * px.at[d, cur])
        idx.append(d)
        if k < len(rolls) and d == rolls[k].date:
            n *= rolls[k].f1 / rolls[k].f2
            cur = rolls[k].to_contract
            k += 1
    return pd.Series(vals, index=idx, name="wealth")


def synthetic_contracts(n_contracts: int = 4, life: int = 90, overlap: int = 30,
                        seed: int = 0, start="2000-01-03"):
    """Overlapping contracts on a business-day calendar.

    Returns (prices, volumes) frames, NaN outside each contract's life. The
    next contract's volume ramps up and overtakes the front some days before
    the front expires.
    """
    rng = np.random.default_rng(seed)
    step = life - overlap
    n_days = step * (n_contracts - 1) + life
    dates = pd.bdate_range(start, periods=n_days)
    spot = 100 * np.exp(np.cumsum(rng.normal(0, 0.01, n_days)))
    prices = pd.DataFrame(index=dates, dtype=float)
    volumes = pd.DataFrame(index=dates, dtype=float)
    for c in range(n_contracts):
        name = f"C{c + 1:02d}"
        a, b = c * step, c * step + life
        basis = 1.0 + 0.002 * (b - np.arange(a, b)) / life + rng.normal(0, 0.0005, life)
        p = np.full(n_days, np.nan)
        p[a:b] = spot[a:b] * basis
        v = np.full(n_days, np.nan)
        age = np.arange(life)
        ramp = np.minimum(1.0, (age + 1) / overlap)
        fade = np.clip((life - age) / overlap, 0.05, 1.0)
        v[a:b] = np.round(1e4 * ramp * fade * rng.uniform(0.9, 1.1, life))
        prices[name] = p
        volumes[name] = v
    return prices, volumes
