"""First-pass beta estimation: jump betas per topic and continuous betas.

Jump betas regress asset returns on the factor at the labelled jump times
(no intercept, expanding window). Continuous betas regress asset returns on
the factor over sub-threshold intraday intervals in a rolling window.
Every estimate at ``as_of`` uses data from days ``<= as_of`` only.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .data import FactorSeries, ReturnPanel, INTRADAY
from .jumps import JumpParams, JumpSet, jump_flags

log = logging.getLogger(__name__)

MIN_JUMPS_PER_TOPIC = 3
MIN_CONTINUOUS_OBS = 50
DEFAULT_WINDOW = 21


class TopicUnavailable(ValueError):
    """Too few labelled jumps to estimate a topic's betas."""


@dataclass
class BetaPanel:
    """Betas formed after the close of day ``as_of`` (a day index).

    Unavailable estimates are NaN; a topic column with too few jumps is NaN
    for every asset.
    """

    as_of: int
    as_of_date: np.datetime64
    asset_ids: np.ndarray
    beta_c: np.ndarray
    beta_j: np.ndarray
    topics: tuple
    window: int = DEFAULT_WINDOW
    jump_counts: dict = field(default_factory=dict)

    def __post_init__(self):
        self.asset_ids = np.asarray(self.asset_ids).astype(str)
        self.beta_c = np.asarray(self.beta_c, dtype=float)
        self.beta_j = np.asarray(self.beta_j, dtype=float).reshape(len(self.asset_ids), len(self.topics))
        self.topics = tuple(int(t) for t in self.topics)

    def available_topics(self) -> tuple:
        return tuple(t for j, t in enumerate(self.topics) if np.isfinite(self.beta_j[:, j]).any())

    def design(self) -> tuple[np.ndarray, np.ndarray, tuple]:
        """Assets with complete betas and the matrix [1, beta_c, beta_j(available)].

        Returns (asset row indices, design matrix, available topics).
        """
        avail = self.available_topics()
        cols = [self.topics.index(t) for t in avail]
        bj = self.beta_j[:, cols]
        ok = np.isfinite(self.beta_c) & np.all(np.isfinite(bj), axis=1)
        rows = np.nonzero(ok)[0]
        X = np.column_stack([np.ones(len(rows)), self.beta_c[rows], bj[rows]])
        return rows, X, avail


def _jump_obs(panel: ReturnPanel, jumps: JumpSet) -> np.ndarray:
    """Asset observation matrix (n_assets, n_jumps) at each jump.

    An overnight jump maps to the asset's whole overnight return of that night.
    """
    R = np.empty((panel.n_assets, len(jumps)))
    intra = jumps.session == INTRADAY
    if intra.any():
        R[:, intra] = panel.intraday[:, jumps.day[intra], jumps.slot[intra]]
    if (~intra).any():
        R[:, ~intra] = panel.overnight[:, jumps.day[~intra]]
    return R


def _no_intercept_ols(x: np.ndarray, R: np.ndarray, min_obs: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-row slope of R on x, dropping missing R entries row by row."""
    ok = np.isfinite(R)
    Rz = np.where(ok, R, 0.0)
    xx = (ok * (x * x)[None, :]).sum(axis=1)
    xr = Rz @ x
    n = ok.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        beta = xr / xx
    beta[(n < min_obs) | (xx <= 0)] = np.nan
    return beta, n


def jump_beta(panel: ReturnPanel, jumps: JumpSet, topic: int, as_of: int,
              min_jumps: int = MIN_JUMPS_PER_TOPIC) -> tuple[np.ndarray, int]:
    """Expanding-window jump beta of every asset for one topic.

    Uses all topic jumps on days ``<= as_of``. Raises ``TopicUnavailable``
    when fewer than ``min_jumps`` exist; assets with fewer than ``min_jumps``
    usable observations get NaN.
    """
    sel = (jumps.topic == topic) & (jumps.day <= as_of)
    n = int(sel.sum())
    if n < min_jumps:
        raise TopicUnavailable(f"topic {topic}: {n} jumps up to day {as_of}, need {min_jumps}")
    sub = jumps.select(sel)
    beta, _ = _no_intercept_ols(sub.ret, _jump_obs(panel, sub), min_jumps)
    return beta, n


def continuous_mask(factor: FactorSeries, params: Optional[JumpParams] = None,
                    flags: Optional[dict] = None) -> np.ndarray:
    """Intraday intervals usable for continuous betas: finite and below threshold."""
    flags = jump_flags(factor, params or JumpParams()) if flags is None else flags
    thr, flag, _ = flags[INTRADAY]
    return np.isfinite(factor.intraday) & np.isfinite(thr) & ~flag


def continuous_beta(panel: ReturnPanel, factor: FactorSeries, window: int, as_of: int,
                    params: Optional[JumpParams] = None, mask: Optional[np.ndarray] = None,
                    min_obs: int = MIN_CONTINUOUS_OBS) -> np.ndarray:
    """Rolling-window continuous beta over days ``(as_of - window, as_of]``.

    Only intraday intervals enter: assets have no observation on the
    factor's overnight sub-intervals. Assets with fewer than ``min_obs``
    usable intervals get NaN.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    mask = continuous_mask(factor, params) if mask is None else mask
    lo = max(0, as_of - window + 1)
    m = mask[lo:as_of + 1]
    x = factor.intraday[lo:as_of + 1][m]
    R = panel.intraday[:, lo:as_of + 1][:, m]
    beta, _ = _no_intercept_ols(x, R, min_obs)
    return beta


def month_end_days(dates: np.ndarray) -> np.ndarray:
    """Index of the last trading day of each calendar month."""
    months = np.asarray(dates, dtype="datetime64[M]")
    last = np.nonzero(months[1:] != months[:-1])[0]
    return np.append(last, len(dates) - 1)


def year_end_days(dates: np.ndarray) -> np.ndarray:
    years = np.asarray(dates, dtype="datetime64[Y]")
    last = np.nonzero(years[1:] != years[:-1])[0]
    return np.append(last, len(dates) - 1)


def _jump_block(panel, jumps, topics, as_of, min_jumps):
    bj = np.full((panel.n_assets, len(topics)), np.nan)
    counts = {}
    for j, t in enumerate(topics):
        try:
            bj[:, j], counts[t] = jump_beta(panel, jumps, t, as_of, min_jumps)
        except TopicUnavailable:
            counts[t] = int(((jumps.topic == t) & (jumps.day <= as_of)).sum())
    return bj, counts


def build_beta_panel(panel: ReturnPanel, factor: FactorSeries, jumps: JumpSet,
                     schedule: Optional[Sequence[int]] = None, *,
                     topics: Sequence[int] = (1, 2, 3, 4, 5),
                     window: int = DEFAULT_WINDOW,
                     jump_update_days: Optional[Sequence[int]] = None,
                     params: Optional[JumpParams] = None,
                     min_jumps: int = MIN_JUMPS_PER_TOPIC,
                     min_obs: int = MIN_CONTINUOUS_OBS,
                     flags: Optional[dict] = None) -> list[BetaPanel]:
    """One BetaPanel per rebalance day.

    ``schedule`` defaults to every month end. Continuous betas come from the
    trailing ``window`` days; jump betas are refreshed on the first
    rebalance and on every ``jump_update_days`` entry (default: year ends)
    and stay frozen in between.
    """
    if panel.n_days != factor.n_days or np.any(panel.dates != factor.dates):
        raise ValueError("panel and factor must share the same trading days")
    topics = tuple(int(t) for t in topics)
    schedule = month_end_days(factor.dates) if schedule is None else np.asarray(schedule, dtype=int)
    updates = set(year_end_days(factor.dates).tolist() if jump_update_days is None
                  else [int(d) for d in jump_update_days])
    mask = continuous_mask(factor, params, flags)

    out = []
    bj, counts = None, {}
    for n, as_of in enumerate(schedule):
        as_of = int(as_of)
        if n == 0 or as_of in updates:
            bj, counts = _jump_block(panel, jumps, topics, as_of, min_jumps)
        bc = continuous_beta(panel, factor, window, as_of, mask=mask, min_obs=min_obs)
        out.append(BetaPanel(as_of, factor.dates[as_of], panel.asset_ids, bc, bj.copy(),
                             topics, window, dict(counts)))
    return out
