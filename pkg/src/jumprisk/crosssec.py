"""Second pass: pure-play factor-mimicking portfolios and their inference.

For a beta matrix ``B = [1, beta_c, beta_j]`` the weights ``W = B (B'B)^-1``
give one portfolio per column with unit exposure to that column and zero
exposure to the others; among all such portfolios each column has the
smallest Euclidean norm.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import pandas as pd
from scipy import linalg, stats

from .betas import BetaPanel
from .data import ReturnPanel, INTRADAY, OVERNIGHT, TRADING_DAYS_PER_YEAR, month_labels

log = logging.getLogger(__name__)

RANK_TOL = 1e-10
MIN_PERIODS = 24
PERIODS_PER_YEAR = {"monthly": 12, "daily": TRADING_DAYS_PER_YEAR}


class DegenerateError(ValueError):
    pass


class CollinearityError(ValueError):
    pass


def fmb_weights(beta_matrix) -> np.ndarray:
    """Pure-play weights ``W = B (B'B)^-1`` for an (N, K+2) beta matrix.

    All-zero columns are dropped and come back as NaN columns. A
    rank-deficient design (smallest singular value below ``1e-10`` times the
    largest) falls back to the pseudo-inverse with a warning.
    """
    B = np.asarray(beta_matrix, dtype=float)
    if B.ndim != 2:
        raise ValueError("beta matrix must be 2-D")
    n, p = B.shape
    live = np.any(B != 0, axis=0)
    W = np.full((n, p), np.nan)
    if not live.any():
        return W
    if not live.all():
        log.warning("dropping all-zero beta column(s) %s", np.nonzero(~live)[0].tolist())
    Bl = B[:, live]
    if n < Bl.shape[1]:
        raise DegenerateError(f"{n} assets cannot identify {Bl.shape[1]} factors")
    sv = np.linalg.svd(Bl, compute_uv=False)
    if sv[-1] < RANK_TOL * sv[0]:
        log.warning("rank-deficient beta matrix (condition %.3g); using pseudo-inverse",
                    sv[0] / max(sv[-1], np.finfo(float).tiny))
        W[:, live] = np.linalg.pinv(Bl, rcond=RANK_TOL).T
        return W
    Q, R = np.linalg.qr(Bl)
    W[:, live] = linalg.solve_triangular(R, Q.T, lower=False).T
    return W


def factor_names(topics: Sequence[int]) -> tuple:
    return ("intercept", "continuous") + tuple(f"topic_{t}" for t in topics)


@dataclass
class FMReturns:
    """Interval returns of the K+2 mimicking portfolios.

    One row per intraday interval and one per overnight (the asset panel has
    a single overnight observation per day; its slot is -1).
    """

    names: tuple
    topics: tuple
    day: np.ndarray
    session: np.ndarray
    slot: np.ndarray
    ts: np.ndarray
    returns: np.ndarray
    dates: np.ndarray
    weights: dict = field(default_factory=dict)
    skipped: int = 0

    def __len__(self):
        return len(self.day)

    def column(self, name: str) -> int:
        return self.names.index(name)

    def aggregate(self, freq: str = "monthly") -> tuple[np.ndarray, np.ndarray]:
        """Sum interval returns to days, then optionally to calendar months.

        A factor with no finite interval in a period is NaN for that period.
        """
        if freq not in PERIODS_PER_YEAR:
            raise ValueError(f"unknown frequency {freq!r}")
        days, daily = _group_sum(self.day, self.returns)
        if freq == "daily":
            return self.dates[days].astype(str), daily
        return _group_sum(month_labels(self.dates[days]), daily)

    def select(self, mask) -> "FMReturns":
        mask = np.asarray(mask)
        return FMReturns(self.names, self.topics, self.day[mask], self.session[mask],
                         self.slot[mask], self.ts[mask], self.returns[mask], self.dates,
                         self.weights, self.skipped)


def _group_sum(keys: np.ndarray, values: np.ndarray):
    """Column sums per key in order of first appearance; NaN where a group has no finite value."""
    idx, uniq = pd.factorize(keys)
    fin = np.isfinite(values)
    clean = np.where(fin, values, 0.0)
    n = len(uniq)
    sums = np.column_stack([np.bincount(idx, clean[:, j], n) for j in range(values.shape[1])])
    cnt = np.column_stack([np.bincount(idx, fin[:, j], n) for j in range(values.shape[1])])
    sums[cnt == 0] = np.nan
    return np.asarray(uniq), sums


def fm_portfolio_returns(betas: Sequence[BetaPanel], panel: ReturnPanel) -> FMReturns:
    """Mimicking-portfolio returns for every interval after the first panel.

    Interval returns on day ``d`` use the latest panel with ``as_of < d``.
    Intervals with fewer than K+3 usable assets are skipped.
    """
    if not betas:
        raise ValueError("no beta panels")
    topics = betas[0].topics
    names = factor_names(topics)
    p = len(names)
    as_ofs = np.array([b.as_of for b in betas])
    if np.any(np.diff(as_ofs) <= 0):
        raise ValueError("beta panels must be strictly increasing in as_of")
    id_pos = {a: i for i, a in enumerate(panel.asset_ids)}
    n_intra = panel.intraday.shape[2]

    rows_day, rows_sess, rows_slot, rows_ts, rows_ret = [], [], [], [], []
    weights = {}
    skipped = 0
    for i, bp in enumerate(betas):
        if bp.topics != topics:
            raise ValueError("all beta panels must share one topic list")
        d0 = bp.as_of + 1
        d1 = as_ofs[i + 1] + 1 if i + 1 < len(betas) else panel.n_days
        if d0 >= d1:
            continue
        try:
            asset_idx = np.array([id_pos[a] for a in bp.asset_ids])
        except KeyError as exc:
            raise ValueError(f"beta panel asset {exc.args[0]} missing from return panel") from None
        rows, X, avail = bp.design()
        cols = [0, 1] + [2 + topics.index(t) for t in avail]
        min_assets = len(cols) + 1
        W_full = np.full((len(rows), p), np.nan)
        if len(rows) >= min_assets:
            W_full[:, cols] = fmb_weights(X)
        weights[bp.as_of] = (bp.asset_ids[rows], W_full)
        src = asset_idx[rows]

        days = np.arange(d0, d1)
        nd = len(days)
        # per day: overnight observation, then the intraday slots
        R = np.concatenate([panel.overnight[src, d0:d1][:, :, None],
                            panel.intraday[src, d0:d1, :]], axis=2)
        R = R.reshape(len(src), -1)
        block = np.full((R.shape[1], p), np.nan)
        if len(rows) >= min_assets:
            ok = np.isfinite(R)
            if ok.all():
                block = (W_full.T @ R).T
            else:
                groups: dict = {}
                for c in range(R.shape[1]):
                    groups.setdefault(ok[:, c].tobytes(), []).append(c)
                for key, cs in groups.items():
                    m = np.frombuffer(key, dtype=bool)
                    if m.sum() < min_assets:
                        skipped += len(cs)
                        continue
                    Wm = np.full((int(m.sum()), p), np.nan)
                    Wm[:, cols] = fmb_weights(X[m])
                    block[cs] = (Wm.T @ R[m][:, cs]).T
        else:
            skipped += R.shape[1]
            log.warning("panel as of day %d has %d complete assets; need %d",
                        bp.as_of, len(rows), min_assets)
        rows_ret.append(block)
        rows_day.append(np.repeat(days, n_intra + 1))
        rows_sess.append(np.tile(np.array([OVERNIGHT] + [INTRADAY] * n_intra, dtype=object), nd))
        rows_slot.append(np.tile(np.arange(-1, n_intra), nd))
        rows_ts.append(np.concatenate([panel.overnight_ts[d0:d1, None],
                                       panel.intraday_ts[d0:d1]], axis=1).ravel())
    if skipped:
        log.warning("skipped %d intervals with too few usable assets", skipped)
    if not rows_ret:
        raise ValueError("beta panels leave no intervals to form portfolios on")
    return FMReturns(names, topics, np.concatenate(rows_day), np.concatenate(rows_sess),
                     np.concatenate(rows_slot), np.concatenate(rows_ts).astype("datetime64[s]"),
                     np.vstack(rows_ret), panel.dates, weights, skipped)


def newey_west_cov(series, lag: int) -> np.ndarray:
    """Bartlett-weighted long-run covariance about the sample mean (1/T scaling)."""
    X = np.asarray(series, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    T = X.shape[0]
    if lag < 0:
        raise ValueError("lag must be >= 0")
    if lag >= T:
        raise ValueError(f"lag {lag} must be smaller than the series length {T}")
    e = X - X.mean(axis=0)
    S = e.T @ e / T
    for ell in range(1, lag + 1):
        G = e[ell:].T @ e[:-ell] / T
        S += (1.0 - ell / (lag + 1.0)) * (G + G.T)
    return S


@dataclass
class RiskPremiaEstimate:
    """Annualised premia (percent per year), HAC errors and Sharpe ratios."""

    names: tuple
    premium: np.ndarray
    std_err: np.ndarray
    sharpe: np.ndarray
    n_periods: int
    start: str
    end: str
    freq: str = "monthly"
    lag: int = 3

    @property
    def t_stat(self) -> np.ndarray:
        return self.premium / self.std_err

    def row(self, name: str) -> tuple[float, float, float]:
        i = self.names.index(name)
        return float(self.premium[i]), float(self.std_err[i]), float(self.sharpe[i])


def annualized_mean(series, periods_per_year: int) -> float:
    return float(periods_per_year * np.mean(series))


def summarize_series(X: np.ndarray, labels, names, lag: int, freq: str) -> RiskPremiaEstimate:
    """Premium / HAC error / Sharpe for already-aggregated period returns."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    k = PERIODS_PER_YEAR[freq]
    prem, se, sr = [], [], []
    n_used = 0
    for j in range(X.shape[1]):
        x = X[:, j][np.isfinite(X[:, j])]
        if len(x) < MIN_PERIODS:
            raise DegenerateError(f"{names[j]}: {len(x)} periods, need {MIN_PERIODS}")
        lrv = newey_west_cov(x, lag)[0, 0]
        sd = np.std(x, ddof=1)
        if np.ptp(x) == 0 or not (lrv > 0 and sd > 0):
            raise DegenerateError(f"{names[j]}: zero variance")
        prem.append(100 * k * x.mean())
        se.append(100 * k * np.sqrt(lrv / len(x)))
        sr.append(k * x.mean() / (np.sqrt(k) * sd))
        n_used = max(n_used, len(x))
    labels = np.asarray(labels)
    return RiskPremiaEstimate(tuple(names), np.array(prem), np.array(se), np.array(sr),
                              n_used, str(labels[0]), str(labels[-1]), freq, lag)


def estimate_premia(fm: FMReturns, lag: int = 3, freq: str = "monthly",
                    include_intercept: bool = False) -> RiskPremiaEstimate:
    """Average mimicking-portfolio returns, annualised, with Newey-West errors.

    Interval returns are summed to days and, for ``freq="monthly"``, to
    calendar months. Premium is ``periods_per_year`` times the period mean;
    the Sharpe ratio divides it by ``sqrt(periods_per_year)`` times the
    period standard deviation. Columns that are entirely NaN (topics never
    available) are left out.
    """
    labels, X = fm.aggregate(freq)
    keep = [j for j, n in enumerate(fm.names)
            if (include_intercept or n != "intercept") and np.isfinite(X[:, j]).any()]
    return summarize_series(X[:, keep], labels, [fm.names[j] for j in keep], lag, freq)


@dataclass
class WaldResult:
    stat: float
    dof: int
    pvalue: float
    lag: int
    n_periods: int = 0


def adjacent_difference_matrix(m: int) -> np.ndarray:
    R = np.zeros((m - 1, m))
    idx = np.arange(m - 1)
    R[idx, idx] = 1.0
    R[idx, idx + 1] = -1.0
    return R


def wald_equal_premia(h, lag: int = 3, freq: str = "monthly") -> WaldResult:
    """Chi-square test that the continuous and all topic premia are equal.

    ``h`` is either an FMReturns (aggregated to ``freq``, intercept dropped)
    or a (T, K+1) array of portfolio returns. The statistic is
    ``T (R m)' (R S R')^-1 (R m)`` with ``m`` the sample mean and ``S`` the
    Newey-West long-run covariance.
    """
    if isinstance(h, FMReturns):
        _, X = h.aggregate(freq)
        keep = [j for j, n in enumerate(h.names) if n != "intercept" and np.isfinite(X[:, j]).any()]
        X = X[:, keep]
    else:
        X = np.asarray(h, dtype=float)
    X = X[np.all(np.isfinite(X), axis=1)]
    T, m = X.shape
    if m < 2:
        raise ValueError("need at least two premia to compare")
    R = adjacent_difference_matrix(m)
    S = newey_west_cov(X, lag)
    d = R @ X.mean(axis=0)
    M = R @ S @ R.T
    sv = np.linalg.svd(M, compute_uv=False)
    if sv[-1] <= RANK_TOL * max(sv[0], np.finfo(float).tiny):
        log.warning("singular restricted covariance in Wald test; using pseudo-inverse")
        Minv = np.linalg.pinv(M, rcond=RANK_TOL) if sv[0] > 0 else np.zeros_like(M)
    else:
        Minv = np.linalg.inv(M)
    W = float(max(T * d @ Minv @ d, 0.0))
    return WaldResult(W, m - 1, float(stats.chi2.sf(W, m - 1)), lag, T)


@dataclass
class AlphaResult:
    names: tuple           # ('alpha', factor names...)
    coef: np.ndarray
    std_err: np.ndarray
    n: int
    lag: int

    @property
    def t_stat(self):
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.coef / self.std_err


def _collinear_columns(X: np.ndarray, names) -> list:
    bad = []
    kept = []
    for j in range(X.shape[1]):
        trial = X[:, kept + [j]]
        sv = np.linalg.svd(trial, compute_uv=False)
        if sv[-1] < RANK_TOL * sv[0] * np.sqrt(X.shape[0]) or sv[-1] == 0:
            bad.append(names[j])
        else:
            kept.append(j)
    return bad


def ts_alpha_regression(portfolio, factors=None, lag: int = 12,
                        factor_names: Optional[Sequence[str]] = None) -> AlphaResult:
    """OLS of a portfolio on an intercept plus factors, with HAC errors.

    The covariance is the sandwich ``(X'X)^-1 T S (X'X)^-1`` where ``S`` is
    the Newey-West long-run covariance of the moment series ``x_t e_t``.
    """
    y = np.asarray(portfolio, dtype=float).ravel()
    T = len(y)
    F = np.zeros((T, 0)) if factors is None else np.asarray(factors, dtype=float).reshape(T, -1)
    names = list(factor_names) if factor_names is not None else [f"f{j + 1}" for j in range(F.shape[1])]
    if len(names) != F.shape[1]:
        raise ValueError("factor_names length does not match factors")
    X = np.column_stack([np.ones(T), F])
    ok = np.all(np.isfinite(X), axis=1) & np.isfinite(y)
    X, y = X[ok], y[ok]
    T = len(y)
    bad = _collinear_columns(X, ["alpha"] + names)
    if bad:
        raise CollinearityError(f"collinear regressors: {', '.join(bad)}")
    if T <= X.shape[1]:
        raise ValueError("too few observations for the regression")
    XtX_inv = np.linalg.inv(X.T @ X)
    coef = XtX_inv @ X.T @ y
    e = y - X @ coef
    g = X * e[:, None]
    S = newey_west_cov(g, lag)
    V = XtX_inv @ (T * S) @ XtX_inv
    se = np.sqrt(np.clip(np.diag(V), 0.0, None))
    return AlphaResult(tuple(["alpha"] + names), coef, se, T, lag)
