"""Core containers for factor and asset-panel returns on a session-tagged grid.

Every trading day ``d`` is made of two sessions, in time order:

* ``overnight`` -- the night that ends at the open of day ``d``
  (previous close to today's open), sampled on its own grid;
* ``intraday`` -- the regular session of day ``d``.

Returns live in dense arrays indexed by (day, slot); missing observations
are NaN. Timestamps are UTC ``datetime64[s]`` and mark the *end* of each
interval.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

INTRADAY = "intraday"
OVERNIGHT = "overnight"
SESSIONS = (INTRADAY, OVERNIGHT)

TRADING_DAYS_PER_YEAR = 252
DAYS_PER_SIM_MONTH = 21

_OPEN = np.timedelta64(14 * 3600 + 30 * 60, "s")   # 09:30 ET as fixed UTC offset
_CLOSE = np.timedelta64(21 * 3600, "s")            # 16:00 ET


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


def sim_dates(n_days: int, start_year: int = 2000) -> np.ndarray:
    """Synthetic trading calendar with 21-day months and 252-day years.

    Day ``d`` falls on ``start_year + d // 252``, month ``(d // 21) % 12 + 1``,
    day-of-month ``d % 21 + 1``. Calendar months therefore always contain
    exactly 21 trading days.
    """
    d = np.arange(n_days)
    years = start_year + d // TRADING_DAYS_PER_YEAR
    months = (d // DAYS_PER_SIM_MONTH) % 12 + 1
    dom = d % DAYS_PER_SIM_MONTH + 1
    strs = [f"{y:04d}-{m:02d}-{x:02d}" for y, m, x in zip(years, months, dom)]
    return np.array(strs, dtype="datetime64[D]")


def session_grid(dates: np.ndarray, n_intra: int, n_night: int):
    """End-of-interval timestamps for both sessions of every day.

    Intraday spans 14:30-21:00 UTC split evenly; the night spans the previous
    close to today's open, split evenly (so longer gaps get longer steps).
    """
    dates = np.asarray(dates, dtype="datetime64[D]")
    day0 = dates.astype("datetime64[s]")
    open_ = day0 + _OPEN
    span = int((_CLOSE - _OPEN) / np.timedelta64(1, "s"))
    steps = np.round(np.arange(1, n_intra + 1) * span / n_intra).astype("int64")
    intraday_ts = open_[:, None] + steps[None, :].astype("timedelta64[s]")

    prev_close = np.empty_like(day0)
    prev_close[1:] = day0[:-1] + _CLOSE
    if len(dates):
        prev_close[0] = day0[0] - np.timedelta64(1, "D") + _CLOSE
    gap = (open_ - prev_close).astype("int64")
    frac = np.arange(1, n_night + 1) / n_night if n_night else np.zeros(0)
    offs = np.round(gap[:, None] * frac[None, :]).astype("int64")
    overnight_ts = prev_close[:, None] + offs.astype("timedelta64[s]")
    return intraday_ts, overnight_ts


def month_labels(dates: np.ndarray) -> np.ndarray:
    """'YYYY-MM' label per date."""
    return np.asarray(dates, dtype="datetime64[M]").astype(str)


@dataclass
class FactorSeries:
    """Systematic factor returns on the two-session grid.

    ``tau`` optionally holds the diurnal adjustment vector per session
    (mean one); ``None`` means flat.
    """

    dates: np.ndarray
    intraday: np.ndarray
    overnight: np.ndarray
    intraday_ts: np.ndarray
    overnight_ts: np.ndarray
    tau: dict = field(default_factory=dict)

    def __post_init__(self):
        self.dates = np.asarray(self.dates, dtype="datetime64[D]")
        self.intraday = np.asarray(self.intraday, dtype=float)
        self.overnight = np.asarray(self.overnight, dtype=float)
        n = len(self.dates)
        for name in SESSIONS:
            arr = self.returns(name)
            if arr.ndim != 2 or arr.shape[0] != n:
                raise ValueError(f"{name} returns must be (n_days, n_slots), got {arr.shape}")
            if self.timestamps(name).shape != arr.shape:
                raise ValueError(f"{name} timestamps do not match returns shape")

    @property
    def n_days(self) -> int:
        return len(self.dates)

    def returns(self, session: str) -> np.ndarray:
        if session == INTRADAY:
            return self.intraday
        if session == OVERNIGHT:
            return self.overnight
        raise ValueError(f"unknown session {session!r}")

    def timestamps(self, session: str) -> np.ndarray:
        return self.intraday_ts if session == INTRADAY else self.overnight_ts

    def n_slots(self, session: str) -> int:
        return self.returns(session).shape[1]

    def tau_for(self, session: str) -> np.ndarray:
        tau = self.tau.get(session)
        if tau is None:
            return np.ones(self.n_slots(session))
        return np.asarray(tau, dtype=float)

    def months(self) -> np.ndarray:
        return month_labels(self.dates)

    def daily_returns(self) -> np.ndarray:
        """Compounded close-to-close return of each day (night then session)."""
        night = np.nanprod(1.0 + self.overnight, axis=1)
        day = np.nanprod(1.0 + self.intraday, axis=1)
        return night * day - 1.0

    def copy(self) -> "FactorSeries":
        return FactorSeries(
            self.dates.copy(), self.intraday.copy(), self.overnight.copy(),
            self.intraday_ts.copy(), self.overnight_ts.copy(),
            {k: None if v is None else np.array(v) for k, v in self.tau.items()},
        )


@dataclass
class ReturnPanel:
    """Asset returns aligned to a factor grid.

    Intraday returns share the factor's intraday slots; each asset carries a
    single overnight return per day (previous close to open).
    """

    asset_ids: np.ndarray
    dates: np.ndarray
    intraday: np.ndarray          # (n_assets, n_days, n_intra)
    overnight: np.ndarray         # (n_assets, n_days)
    intraday_ts: np.ndarray       # (n_days, n_intra)
    overnight_ts: np.ndarray      # (n_days,), the open of each day

    def __post_init__(self):
        self.asset_ids = np.asarray(self.asset_ids).astype(str)
        self.dates = np.asarray(self.dates, dtype="datetime64[D]")
        self.intraday = np.asarray(self.intraday, dtype=float)
        self.overnight = np.asarray(self.overnight, dtype=float)
        n_a, n_d = len(self.asset_ids), len(self.dates)
        if self.intraday.ndim != 3 or self.intraday.shape[:2] != (n_a, n_d):
            raise ValueError(f"intraday panel must be ({n_a}, {n_d}, n_intra), got {self.intraday.shape}")
        if self.overnight.shape != (n_a, n_d):
            raise ValueError(f"overnight panel must be ({n_a}, {n_d}), got {self.overnight.shape}")
        if len(set(self.asset_ids)) != n_a:
            raise ValueError("duplicate asset ids")

    @property
    def n_assets(self) -> int:
        return len(self.asset_ids)

    @property
    def n_days(self) -> int:
        return len(self.dates)

    def months(self) -> np.ndarray:
        return month_labels(self.dates)

    def period_returns(self, labels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Sum of every interval return per asset within each period label.

        Returns (unique labels in time order, array (n_periods, n_assets)).
        Periods where an asset has no observation at all are NaN.
        """
        labels = np.asarray(labels)
        daily = np.nansum(self.intraday, axis=2) + np.nan_to_num(self.overnight)
        seen = np.isfinite(self.intraday).any(axis=2) | np.isfinite(self.overnight)
        uniq, first = np.unique(labels, return_index=True)
        uniq = uniq[np.argsort(first)]
        out = np.full((len(uniq), self.n_assets), np.nan)
        for k, lab in enumerate(uniq):
            sel = labels == lab
            tot = daily[:, sel].sum(axis=1)
            any_obs = seen[:, sel].any(axis=1)
            out[k] = np.where(any_obs, tot, np.nan)
        return uniq, out


def make_grid(dates, n_intra: int, n_night: int) -> tuple[np.ndarray, np.ndarray]:
    """Convenience wrapper returning (intraday_ts, overnight_ts)."""
    return session_grid(np.asarray(dates, dtype="datetime64[D]"), n_intra, n_night)


def empty_factor(n_days: int, n_intra: int, n_night: int, start_year: int = 2000,
                 dates: Optional[np.ndarray] = None) -> FactorSeries:
    dates = sim_dates(n_days, start_year) if dates is None else dates
    its, ots = session_grid(dates, n_intra, n_night)
    return FactorSeries(dates, np.zeros((n_days, n_intra)), np.zeros((n_days, n_night)), its, ots)
