"""Agreement between labelings and per-category jump summaries."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
import pandas as pd

from .taxonomy import CATEGORY_IDS, SHORT_NAMES, UNATTRIBUTABLE

TABLE2_COLUMNS = ["Statistic"] + [SHORT_NAMES[c] for c in CATEGORY_IDS] + [SHORT_NAMES[UNATTRIBUTABLE], "All"]
TABLE2_ROWS = ["N", "%", "Prop Pos (%)", "Mean (%)", "Mean Abs (%)", "Std (%)", "IQR (%)",
               "Skew", "R^2"]


def wilson_interval(p_hat: float, n: int, z: float = 1.959963984540054) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0.0 <= p_hat <= 1.0:
        raise ValueError("p_hat must lie in [0, 1]")
    z2 = z * z
    denom = 1.0 + z2 / n
    center = (p_hat + z2 / (2 * n)) / denom
    half = z / denom * np.sqrt(p_hat * (1 - p_hat) / n + z2 / (4 * n * n))
    lo = 0.0 if p_hat == 0.0 else max(0.0, min(p_hat, center - half))
    hi = 1.0 if p_hat == 1.0 else min(1.0, max(p_hat, center + half))
    return lo, hi


@dataclass
class Agreement:
    names: tuple
    pct: np.ndarray          # percent agreement
    lo: np.ndarray           # Wilson bounds, percent
    hi: np.ndarray
    n: int

    def frame(self, decimals: int = 1) -> pd.DataFrame:
        """Table-3 layout: one row per approach, cells 'pct (lo, hi)'."""
        f = f"{{:.{decimals}f}}"
        rows = []
        for i, a in enumerate(self.names):
            cells = [f"{f.format(self.pct[i, j])} ({f.format(self.lo[i, j])}, {f.format(self.hi[i, j])})"
                     for j in range(len(self.names))]
            rows.append([a] + cells)
        return pd.DataFrame(rows, columns=["Approach", *self.names])


def agreement_matrix(labelings: Mapping[str, Sequence[int]], z: float = 1.959963984540054) -> Agreement:
    """Pairwise share of identical labels with Wilson intervals, in percent."""
    names = tuple(labelings)
    arrs = [np.asarray(labelings[k]) for k in names]
    n = len(arrs[0]) if arrs else 0
    if any(len(a) != n for a in arrs):
        raise ValueError("labelings must all have the same length")
    if n == 0:
        raise ValueError("labelings are empty")
    m = len(names)
    pct, lo, hi = (np.zeros((m, m)) for _ in range(3))
    for i in range(m):
        for j in range(m):
            hits = int(np.sum(arrs[i] == arrs[j]))
            l, h = wilson_interval(hits / n, n, z)
            pct[i, j], lo[i, j], hi[i, j] = 100 * hits / n, 100 * l, 100 * h
    return Agreement(names, pct, lo, hi, n)


def round_to_total(values, decimals: int = 2, total: float = 100.0) -> np.ndarray:
    """Round so the rounded entries still add up to ``total`` (largest remainder)."""
    v = np.asarray(values, dtype=float)
    scale = 10 ** decimals
    raw = v * scale
    floor = np.floor(raw)
    short = int(round(total * scale - floor.sum()))
    order = np.argsort(-(raw - floor), kind="stable")
    floor[order[:max(short, 0)]] += 1
    return floor / scale


def _skew(x: np.ndarray) -> float:
    # adjusted Fisher-Pearson, the convention of pandas/Excel SKEW
    return float(pd.Series(x).skew()) if len(x) > 2 else np.nan


def _column(r: np.ndarray, total_n: int, total_ss: float) -> list:
    n = len(r)
    if n == 0:
        return [0, 0.0] + [np.nan] * 6 + [0.0]
    q75, q25 = np.percentile(r, [75, 25])
    return [
        n,
        100.0 * n / total_n,
        100.0 * np.mean(r > 0),
        100.0 * np.mean(r),
        100.0 * np.mean(np.abs(r)),
        100.0 * np.std(r, ddof=1) if n > 1 else np.nan,
        100.0 * (q75 - q25),
        _skew(r),
        100.0 * np.sum(r * r) / total_ss if total_ss > 0 else np.nan,
    ]


def summarize_jumps(jumps, decimals=None) -> pd.DataFrame:
    """Per-category jump statistics in the Table-2 layout.

    Returns are reported in percent. The share and R^2 rows use the sum of
    squared returns over all jumps as denominator. With ``decimals`` the
    table is rounded and the share rows are rounded so they add to 100.
    """
    topic = np.asarray(jumps.topic)
    ret = np.asarray(jumps.ret, dtype=float)
    if len(ret) == 0:
        return pd.DataFrame(columns=TABLE2_COLUMNS)
    bad = ~np.isin(topic, list(CATEGORY_IDS) + [UNATTRIBUTABLE])
    if bad.any():
        raise ValueError(f"jump labels outside 0..6: {sorted(set(topic[bad].tolist()))}")
    total_n, total_ss = len(ret), float(np.sum(ret * ret))
    cols = [_column(ret[topic == c], total_n, total_ss) for c in (*CATEGORY_IDS, UNATTRIBUTABLE)]
    cols.append(_column(ret, total_n, total_ss))
    body = np.array(cols, dtype=float).T
    if decimals is not None:
        body = np.round(body, decimals)
        for row in (1, 8):
            parts = np.array(cols, dtype=float)[:-1, row]
            if np.isfinite(parts).all() and parts.sum() > 0:
                body[row, :-1] = round_to_total(parts, decimals)
                body[row, -1] = 100.0
    df = pd.DataFrame(body, columns=TABLE2_COLUMNS[1:])
    df.insert(0, "Statistic", TABLE2_ROWS)
    return df
