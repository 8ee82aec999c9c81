"""Real-time topic selection, placebo labels, trading costs, announcement windows."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .crosssec import FMReturns, PERIODS_PER_YEAR
from .data import FactorSeries, ReturnPanel, TRADING_DAYS_PER_YEAR, month_labels
from .jumps import JumpSet

log = logging.getLogger(__name__)

N_CATEGORIES = 6


@dataclass
class CostModel:
    """Proportional cost ``c`` per dollar traded and a per-period risk-free rate."""

    c: float = 0.0
    rf: Optional[np.ndarray] = None

    def __post_init__(self):
        if not (np.isfinite(self.c) and self.c >= 0):
            raise ValueError("cost c must be >= 0")

    def rf_series(self, T: int) -> np.ndarray:
        if self.rf is None:
            return np.zeros(T)
        rf = np.asarray(self.rf, dtype=float)
        if rf.shape != (T,):
            raise ValueError(f"risk-free series has {rf.size} periods, expected {T}")
        return rf


def drifted_weights(w: np.ndarray, r: np.ndarray, rf: float = 0.0) -> np.ndarray:
    """Weights after one period of returns, before any rebalancing."""
    return w * (1.0 + rf + r) / (1.0 + rf + w @ r)


def net_return(gross: float, dW: float, c: float, rf: float = 0.0) -> float:
    """``(1 + rf + gross)(1 - c dW) - (1 + rf)``, expanded so c = 0 returns gross exactly."""
    return gross - c * dW * (1.0 + rf + gross)


@dataclass
class NetResult:
    gross: np.ndarray
    net: np.ndarray
    dW: np.ndarray
    turnover: np.ndarray


def net_returns(weights, asset_returns, cost: CostModel) -> NetResult:
    """Gross and net returns of a rebalanced portfolio.

    ``weights`` has T+1 rows: row t is the target held over period t+1 (row
    0 is the initial position) and ``asset_returns`` has T rows. In period t
    the gross return is ``W_{t-1}'R_t`` and the trade is the L1 distance
    between the new target ``W_t`` and the drifted ``W_{t-1}``. A target row
    that is entirely NaN means no rebalance (trade zero). Missing asset
    returns count as zero. Turnover scales the trade by ``||W_{t-1}||_1`` and
    is NaN when that norm is zero. Building the initial position is free.
    """
    W = np.asarray(weights, dtype=float)
    R = np.nan_to_num(np.asarray(asset_returns, dtype=float))
    T = R.shape[0]
    if W.shape != (T + 1, R.shape[1]):
        raise ValueError(f"weights must be ({T + 1}, {R.shape[1]}), got {W.shape}")
    rf = cost.rf_series(T)
    gross, net, dW, turn = (np.zeros(T) for _ in range(4))
    prev = np.nan_to_num(W[0])
    for t in range(T):
        r = R[t]
        gross[t] = prev @ r
        drift = drifted_weights(prev, r, rf[t])
        target = W[t + 1]
        if np.all(np.isnan(target)):
            target = drift
        target = np.nan_to_num(target)
        dW[t] = np.abs(target - drift).sum()
        norm = np.abs(prev).sum()
        turn[t] = dW[t] / norm if norm > 0 else np.nan
        net[t] = net_return(gross[t], dW[t], cost.c, rf[t])
        prev = target
    return NetResult(gross, net, dW, turn)


def sharpe(x, periods_per_year: int = 12) -> float:
    x = np.asarray(x, dtype=float)
    x = x[np.isfinite(x)]
    if len(x) < 2:
        return np.nan
    sd = np.std(x, ddof=1)
    return float(np.mean(x) * periods_per_year / (np.sqrt(periods_per_year) * sd)) if sd > 0 else np.nan


@dataclass
class Selection:
    day: int
    topic: Optional[int]
    sharpe: dict


@dataclass
class StrategyRecord:
    period: str
    topic: Optional[int]
    gross: float
    net: float = np.nan
    dW: float = np.nan
    turnover: float = np.nan


@dataclass
class StrategyResult:
    selections: list
    records: list
    freq: str = "monthly"

    def series(self, name: str = "gross") -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records], dtype=float)

    def periods(self) -> list:
        return [r.period for r in self.records]

    def topics(self) -> list:
        return [r.topic for r in self.records]


def _period_keys(fm: FMReturns, freq: str, days: np.ndarray) -> np.ndarray:
    dates = fm.dates[days]
    return dates.astype(str) if freq == "daily" else month_labels(dates)


def realtime_topic_select(fm: FMReturns, rebalance: Sequence[int], freq: str = "monthly",
                          min_history: int = 12) -> StrategyResult:
    """Hold, after each rebalance day, the topic portfolio with the best past Sharpe.

    The in-sample Sharpe at rebalance day ``r`` uses FM returns from days
    ``<= r`` only, aggregated to ``freq``. The choice is held from day
    ``r + 1`` to the next rebalance. Ties go to the lowest topic id. A
    rebalance with fewer than ``min_history`` past periods is skipped; a
    rebalance with no usable topic holds nothing (zero return).
    """
    k = PERIODS_PER_YEAR[freq]
    topic_cols = {t: fm.column(f"topic_{t}") for t in fm.topics}
    rebalance = sorted(int(d) for d in rebalance)
    keys_all = _period_keys(fm, freq, fm.day)

    selections = []
    for r in rebalance:
        past = fm.day <= r
        if not past.any():
            continue
        _, X = fm.select(past).aggregate(freq)
        n_hist = int(np.isfinite(X).any(axis=1).sum())
        if n_hist < min_history:
            log.info("rebalance day %d: %d periods of history, need %d", r, n_hist, min_history)
            continue
        srs = {}
        for t, j in topic_cols.items():
            s = sharpe(X[:, j], k)
            if np.isfinite(s):
                srs[t] = s
        if srs:
            best = max(srs.values())
            pick = min(t for t, s in srs.items() if s == best)
        else:
            pick = None
            log.warning("rebalance day %d: no topic portfolio available; holding nothing", r)
        selections.append(Selection(r, pick, srs))

    records = []
    if not selections:
        log.warning("no rebalance day has enough history; strategy is empty")
        return StrategyResult(selections, records, freq)
    sel_days = np.array([s.day for s in selections])
    after = fm.day > sel_days[0]
    sub = fm.select(after)
    labels, X = sub.aggregate(freq)
    first_day = {}
    for key, d in zip(keys_all[after], sub.day):
        first_day.setdefault(key, d)
    for lab, row in zip(labels, X):
        i = int(np.searchsorted(sel_days, first_day[lab], side="left")) - 1
        s = selections[i]
        g = 0.0 if s.topic is None else row[topic_cols[s.topic]]
        records.append(StrategyRecord(str(lab), s.topic, float(np.nan_to_num(g))))
    return StrategyResult(selections, records, freq)


def strategy_weights(result: StrategyResult, fm: FMReturns, panel: ReturnPanel):
    """Target weights (T+1, N) and period asset returns (T, N) for the held portfolios.

    Period t uses the weights of the latest panel formed before its first
    day; the final row is the panel formed on the last day if one exists.
    """
    if result.freq != "monthly":
        raise ValueError("cost accounting is defined on monthly holding periods")
    labels, R_all = panel.period_returns(panel.months())
    pos = {lab: i for i, lab in enumerate(labels)}
    months = panel.months()
    first = {}
    for d, lab in enumerate(months):
        first.setdefault(lab, d)
    ids = {a: i for i, a in enumerate(panel.asset_ids)}
    as_ofs = np.array(sorted(fm.weights))

    def target(day_after: int, topic) -> np.ndarray:
        w = np.zeros(panel.n_assets)
        if topic is None:
            return w
        i = int(np.searchsorted(as_ofs, day_after, side="left")) - 1
        if i < 0:
            return w
        aid, W = fm.weights[int(as_ofs[i])]
        col = W[:, fm.column(f"topic_{topic}")]
        w[[ids[a] for a in aid]] = np.nan_to_num(col)
        return w

    recs = result.records
    T = len(recs)
    Wt = np.full((T + 1, panel.n_assets), np.nan)
    R = np.zeros((T, panel.n_assets))
    for t, rec in enumerate(recs):
        d0 = first[rec.period]
        Wt[t] = target(d0, rec.topic)
        R[t] = R_all[pos[rec.period]]
    last_day = first[recs[-1].period] + np.sum(months == recs[-1].period) - 1
    if last_day in fm.weights:
        Wt[T] = target(last_day + 1, recs[-1].topic)
    return Wt, R


def apply_costs(result: StrategyResult, fm: FMReturns, panel: ReturnPanel,
                cost: CostModel) -> StrategyResult:
    """Copy of ``result`` with net return, trade size and turnover filled in."""
    if not result.records:
        return result
    W, R = strategy_weights(result, fm, panel)
    nr = net_returns(W, R, cost)
    recs = [StrategyRecord(r.period, r.topic, float(g), float(n), float(d), float(tv))
            for r, g, n, d, tv in zip(result.records, nr.gross, nr.net, nr.dW, nr.turnover)]
    return StrategyResult(result.selections, recs, result.freq)


def placebo_assign(jumps: JumpSet, seed: int) -> JumpSet:
    """Every jump relabelled uniformly over categories 1..6."""
    rng = np.random.default_rng(seed)
    labels = rng.integers(1, N_CATEGORIES + 1, size=len(jumps))
    out = jumps.with_labels(labels, np.ones(len(jumps), dtype=bool))
    out.meta["placebo_seed"] = int(seed)
    return out


@dataclass
class AnnouncementResult:
    days: np.ndarray
    returns: np.ndarray
    per_year: float
    adjusted_sharpe: float
    unconditional_sharpe: float


def adjusted_sharpe(mu: float, sigma: float, n_per_year: float) -> float:
    return float(mu / sigma * np.sqrt(n_per_year))


def announcement_window_portfolio(factor: FactorSeries, schedule) -> AnnouncementResult:
    """Hold the factor from the prior close to the close of each announcement day.

    ``schedule`` holds dates (or day indices) on the factor's calendar. The
    adjusted Sharpe ratio scales the per-window mean/std by the square root
    of the average number of windows per year.
    """
    sched = np.asarray(schedule)
    if sched.size == 0:
        raise ValueError("announcement schedule is empty")
    if np.issubdtype(sched.dtype, np.integer):
        days = np.unique(sched.astype(int))
        if days.min() < 0 or days.max() >= factor.n_days:
            raise ValueError("announcement day index outside the factor sample")
    else:
        dates = np.unique(sched.astype("datetime64[D]"))
        pos = np.searchsorted(factor.dates, dates)
        ok = (pos < factor.n_days) & (factor.dates[np.minimum(pos, factor.n_days - 1)] == dates)
        if not ok.all():
            raise ValueError(f"announcement dates not on the factor calendar: {dates[~ok][:3]}")
        days = pos
    daily = factor.daily_returns()
    r = daily[days]
    n_years = factor.n_days / TRADING_DAYS_PER_YEAR
    per_year = len(days) / n_years
    sd = np.std(r, ddof=1)
    if not sd > 0:
        raise ValueError("announcement-window returns have zero variance")
    return AnnouncementResult(days, r, per_year, adjusted_sharpe(np.mean(r), sd, per_year),
                              adjusted_sharpe(np.mean(daily), np.std(daily, ddof=1),
                                              TRADING_DAYS_PER_YEAR))
