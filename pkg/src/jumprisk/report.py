"""Report tables assembled from stage artifacts."""
from __future__ import annotations

import json
import logging
from pathlib import Path

import numpy as np
import pandas as pd

from . import io
from .crosssec import DegenerateError, summarize_series, ts_alpha_regression
from .data import ConfigError, month_labels
from .strategy import sharpe
from .topics.stats import TABLE2_COLUMNS, agreement_matrix, summarize_jumps
from .topics.taxonomy import SHORT_NAMES

TABLE4_COLUMNS = ["Factor", "Ann RP(%)", "Std Err(%)", "SR"]
TABLE6_COLUMNS = ["Term", "(1)", "(2)", "(3)", "(4)", "(5)", "(6)"]
TABLE7_COLUMNS = ["Cost", "SR", "Ann RP(%)", "SD(%)", "Turnover"]
MACRO_TOPIC = 2
TABLE4_NAMES = {"continuous": "Continuous", "topic_1": "Policy", "topic_2": "Macro",
                "topic_3": "Geopolitics", "topic_4": "Corporate", "topic_5": "International",
                "topic_6": "Unclassified"}

log = logging.getLogger(__name__)


def fmt(x, decimals: int = 2) -> str:
    if x is None or (isinstance(x, float) and not np.isfinite(x)):
        return ""
    return f"{x:.{decimals}f}"


def factor_label(name: str) -> str:
    if name == "continuous":
        return "Continuous"
    if name.startswith("topic_"):
        return SHORT_NAMES.get(int(name[6:]), name)
    return name


def table2(jumps) -> pd.DataFrame:
    df = summarize_jumps(jumps, decimals=2)
    if df.empty:
        return pd.DataFrame(columns=TABLE2_COLUMNS)
    out = df.copy()
    for c in TABLE2_COLUMNS[1:]:
        out[c] = [fmt(v, 0) if s == "N" else fmt(v) for s, v in zip(df["Statistic"], df[c])]
    return out


def table3(labelings: pd.DataFrame) -> pd.DataFrame:
    names = [c for c in labelings.columns if c not in ("ts_utc", "session")]
    return agreement_matrix({n: labelings[n].to_numpy() for n in names}).frame(1)


def _premia_row(label, prem, se, sr):
    return [label, fmt(prem), f"({fmt(se)})" if np.isfinite(se) else "", fmt(sr)]


def table4(premia: pd.DataFrame, extra: dict | None = None, lag: int = 3) -> pd.DataFrame:
    """Premia of the mimicking portfolios, then benchmark rows.

    ``extra`` maps a row label (e.g. the real-time topic strategy or the
    market) to a monthly return series summarised the same way.
    """
    rows = [_premia_row(TABLE4_NAMES.get(n, factor_label(n)), p, e, r)
            for n, p, e, r in zip(premia["factor"], premia["premium_pct"],
                                  premia["std_err_pct"], premia["sharpe"])]
    for label, series in (extra or {}).items():
        x = np.asarray(series, dtype=float)
        x = x[np.isfinite(x)]
        try:
            est = summarize_series(x, np.arange(len(x)), [label], lag, "monthly")
            rows.append(_premia_row(label, *est.row(label)))
        except DegenerateError as exc:
            log.warning("table 4 row %s left blank: %s", label, exc)
            rows.append([label, "", "", ""])
    return pd.DataFrame(rows, columns=TABLE4_COLUMNS)


def _regression_block(y: pd.Series, factors: pd.DataFrame, specs, lag):
    """Coefficient and (SE) strings per term for each nested specification."""
    cols = []
    for spec in specs:
        data = pd.concat([y.rename("y"), factors[spec]], axis=1).dropna()
        if len(data) <= max(lag, len(spec) + 1):
            log.warning("alpha regression on %s skipped: %d months with lag %d",
                        ["intercept"] + list(spec), len(data), lag)
            cols.append({"Months": len(data)})
            continue
        res = ts_alpha_regression(data["y"].to_numpy(), data[spec].to_numpy() if spec else None,
                                  lag, list(spec))
        col = {"Alpha (%)": (100 * res.coef[0], 100 * res.std_err[0])}
        for j, name in enumerate(spec):
            col[name] = (res.coef[j + 1], res.std_err[j + 1])
        col["Months"] = len(data)
        cols.append(col)
    return cols


def table6(macro: pd.Series, realtime: pd.Series, factors: pd.DataFrame, lag: int = 12) -> pd.DataFrame:
    """Alpha regressions of the macro topic and real-time portfolios.

    Specifications: intercept only; market excess return; all factors.
    """
    names = list(factors.columns)
    specs = [[], names[:1], names]
    cols = _regression_block(macro, factors, specs, lag) + _regression_block(realtime, factors, specs, lag)
    rows = []
    for term in ["Alpha (%)"] + names:
        rows.append([term] + [fmt(c[term][0]) if term in c else "" for c in cols])
        rows.append([""] + [f"({fmt(c[term][1])})" if term in c else "" for c in cols])
    rows.append(["Months"] + [str(c["Months"]) for c in cols])
    return pd.DataFrame(rows, columns=TABLE6_COLUMNS)


def table7(strategy: pd.DataFrame) -> pd.DataFrame:
    rows = []
    turnover = float(np.nanmean(strategy["turnover"])) if strategy["turnover"].notna().any() else np.nan
    for col in [c for c in strategy.columns if c.startswith("net_")]:
        r = strategy[col].to_numpy(dtype=float)
        rows.append([f"c = {col[4:]}", fmt(sharpe(r, 12)), fmt(100 * 12 * np.mean(r)),
                     fmt(100 * np.sqrt(12) * np.std(r, ddof=1)), fmt(turnover)])
    return pd.DataFrame(rows, columns=TABLE7_COLUMNS)


def monthly_rf(ctx, months) -> np.ndarray:
    """Risk-free rate per month from ``inputs.rf``; zero when not supplied."""
    p = ctx.cfg.inputs.get("rf")
    if not p:
        return np.zeros(len(months))
    rf = io.load_rf(p)
    missing = [m for m in months if m not in rf.index]
    if missing:
        raise ConfigError(f"inputs.rf: no rate for month(s) {missing[:3]}")
    return rf.reindex(months).to_numpy()


def market_factors(ctx, months) -> pd.DataFrame:
    """Monthly regressors: Mkt-RF from the factor file, plus user factors or the
    continuous mimicking portfolio."""
    factor = ctx.factor("report")
    labels = month_labels(factor.dates)
    mkt = pd.Series(factor.intraday.sum(axis=1) + factor.overnight.sum(axis=1)).groupby(labels).sum()
    given = ctx.cfg.inputs.get("factors")
    rf = pd.Series(monthly_rf(ctx, list(mkt.index)), index=mkt.index)
    out = pd.DataFrame({"Mkt-RF": mkt - rf})
    if given:
        extra = pd.read_csv(given, dtype={"month": str}).set_index("month")
        out = out.join(extra, how="inner")
    else:
        fm = pd.read_csv(ctx.input("report", "fm_monthly"), dtype={"month": str}).set_index("month")
        out["Continuous"] = fm["continuous"]
    return out.reindex(months)


def build_reports(ctx) -> dict:
    out_dir = ctx.out / "reports"
    written = {}
    factor = ctx.factor("report")
    labeled = io.load_jumps(ctx.input("report", "labels"), factor)
    written["table2"] = table2(labeled)
    written["table3"] = table3(pd.read_csv(ctx.input("report", "labelings")))
    fm = pd.read_csv(ctx.input("report", "fm_monthly"), dtype={"month": str}).set_index("month")
    strat = pd.read_csv(ctx.input("report", "strategy"), dtype={"month": str})
    macro = fm.get(f"topic_{MACRO_TOPIC}", pd.Series(np.nan, index=fm.index))
    realtime = strat.set_index("month")["gross"]
    months = sorted(set(fm.index) | set(realtime.index))
    facs = market_factors(ctx, months)
    written["table4"] = table4(pd.read_csv(ctx.input("report", "premia")),
                               {"Realtime Topic": realtime.to_numpy(),
                                "Market": facs["Mkt-RF"].reindex(fm.index).to_numpy()},
                               ctx.cfg.inference.premia_lag)
    written["table6"] = table6(macro.reindex(months), realtime.reindex(months), facs,
                               ctx.cfg.inference.alpha_lag)
    written["table7"] = table7(strat)
    for name, df in written.items():
        io.write_frame(df, out_dir / f"{name}.csv")
    wald = json.loads(Path(ctx.input("report", "wald")).read_text())
    io.write_json({"wald_equal_premia": wald}, out_dir / "tests.json")
    return written
