"""Flat CSV datasets: schemas, validating loaders and atomic writers.

Timestamps are UTC ISO-8601 with a trailing ``Z``. Line numbers in error
messages count the header as line 1.
"""
from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import pandas as pd

from .betas import BetaPanel
from .data import FactorSeries, ReturnPanel, INTRADAY, OVERNIGHT, SESSIONS
from .jumps import JumpSet

PANEL_COLUMNS = ["asset_id", "ts_utc", "session", "ret"]
FACTOR_COLUMNS = ["ts_utc", "session", "ret"]
JUMP_COLUMNS = ["ts_utc", "session", "ret", "topic_id", "attributed"]
BETA_COLUMNS = ["as_of", "asset_id", "beta_name", "value"]
RF_COLUMNS = ["month", "rf"]
SCHEDULE_COLUMNS = ["date"]
_TS_FORMAT = "%Y-%m-%dT%H:%M:%SZ"


class SchemaError(ValueError):
    def __init__(self, path, msg: str, line: Optional[int] = None, column: Optional[str] = None):
        where = str(path)
        if line is not None:
            where += f":{line}"
        if column is not None:
            where += f" [{column}]"
        super().__init__(f"{where}: {msg}")
        self.path, self.line, self.column = str(path), line, column


# writing

def atomic_write_text(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_frame(df: pd.DataFrame, path) -> None:
    atomic_write_text(path, df.to_csv(index=False, lineterminator="\n"))


def write_json(obj, path) -> None:
    atomic_write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def format_ts(ts) -> np.ndarray:
    ts = np.asarray(ts, dtype="datetime64[s]")
    return np.char.add(np.datetime_as_string(ts, unit="s"), "Z")


# reading helpers

def _read(path, columns: Sequence[str]) -> pd.DataFrame:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"missing input file: {path}")
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\r\n")
    if header.split(",") != list(columns):
        raise SchemaError(path, f"header {header!r} does not match {','.join(columns)!r}", 1)
    return pd.read_csv(path, dtype=str, keep_default_na=False)


def _fail_first(path, bad: np.ndarray, column: str, msg: str) -> None:
    if bad.any():
        i = int(np.argmax(bad))
        raise SchemaError(path, msg, i + 2, column)


def _parse_ts(path, s: pd.Series, column: str = "ts_utc") -> np.ndarray:
    ts = pd.to_datetime(s, format=_TS_FORMAT, errors="coerce")
    _fail_first(path, ts.isna().to_numpy(), column, "unparseable UTC timestamp")
    return ts.to_numpy().astype("datetime64[s]")


def _parse_float(path, s: pd.Series, column: str) -> np.ndarray:
    # to_numeric is not correctly rounded, so it only locates bad rows
    chk = pd.to_numeric(s, errors="coerce").to_numpy(dtype=float)
    _fail_first(path, ~np.isfinite(chk), column, "value is not a finite number")
    return s.astype(float).to_numpy()


def _parse_session(path, s: pd.Series) -> np.ndarray:
    v = s.to_numpy(dtype=object)
    _fail_first(path, ~np.isin(v, SESSIONS), "session", f"session must be one of {SESSIONS}")
    return v


def _check_sorted(path, ts: np.ndarray, strict: bool = True) -> None:
    d = np.diff(ts.astype("int64"))
    bad = np.concatenate([[False], d <= 0 if strict else d < 0])
    _fail_first(path, bad, "ts_utc", "timestamps not increasing")


# factor

def write_factor(factor: FactorSeries, path) -> None:
    ts = np.concatenate([factor.overnight_ts, factor.intraday_ts], axis=1).ravel()
    ret = np.concatenate([factor.overnight, factor.intraday], axis=1).ravel()
    n_n, n_i = factor.overnight.shape[1], factor.intraday.shape[1]
    sess = np.tile(np.array([OVERNIGHT] * n_n + [INTRADAY] * n_i, dtype=object), factor.n_days)
    write_frame(pd.DataFrame({"ts_utc": format_ts(ts), "session": sess, "ret": ret}), path)


def load_factor(path, tau: Optional[dict] = None) -> FactorSeries:
    """Rebuild the two-session grid from a complete factor file.

    Overnight rows belong to the next intraday block; every day must carry
    the same number of slots per session.
    """
    df = _read(path, FACTOR_COLUMNS)
    if df.empty:
        raise SchemaError(path, "no rows", 2)
    ts = _parse_ts(path, df["ts_utc"])
    sess = _parse_session(path, df["session"])
    ret = _parse_float(path, df["ret"], "ret")
    _check_sorted(path, ts)
    intra = sess == INTRADAY
    if not intra.any():
        raise SchemaError(path, "no intraday rows")
    if not intra[-1]:
        raise SchemaError(path, "trailing overnight rows without a following session", len(df) + 1, "session")
    # a block starts at every intraday row preceded by an overnight row or a new date
    day_of = ts.astype("datetime64[D]")
    new_block = intra & np.concatenate([[True], ~intra[:-1] | (day_of[1:] != day_of[:-1])])
    day_idx = np.cumsum(new_block) - 1
    # overnight rows belong to the following block
    owner = pd.Series(np.where(intra, day_idx, np.nan)).bfill().to_numpy().astype(int)
    n_days = int(day_idx[-1]) + 1
    n_i = np.bincount(owner[intra], minlength=n_days)
    n_n = np.bincount(owner[~intra], minlength=n_days)
    if len(set(n_i)) != 1 or len(set(n_n)) != 1:
        bad_day = int(np.argmax((n_i != n_i[0]) | (n_n != n_n[0])))
        line = int(np.nonzero(owner == bad_day)[0][0]) + 2
        raise SchemaError(path, "days have differing slot counts", line, "session")
    ni, nn = int(n_i[0]), int(n_n[0])
    dates = day_of[intra].reshape(n_days, ni)[:, 0]
    if len(np.unique(dates)) != n_days:
        raise SchemaError(path, "a date carries more than one intraday block")
    return FactorSeries(dates, ret[intra].reshape(n_days, ni), ret[~intra].reshape(n_days, nn),
                        ts[intra].reshape(n_days, ni), ts[~intra].reshape(n_days, nn),
                        {} if tau is None else dict(tau))


# panel

def write_panel(panel: ReturnPanel, path) -> None:
    n_a, n_d, n_i = panel.intraday.shape
    R = np.concatenate([panel.overnight[:, :, None], panel.intraday], axis=2)   # (a, d, 1+n_i)
    ts = np.concatenate([panel.overnight_ts[:, None], panel.intraday_ts], axis=1)
    R = R.transpose(1, 2, 0).ravel()                                           # day, slot, asset
    ts = np.repeat(ts.ravel(), n_a)
    ids = np.tile(panel.asset_ids, n_d * (1 + n_i))
    sess = np.tile(np.repeat(np.array([OVERNIGHT] + [INTRADAY] * n_i, dtype=object), n_a), n_d)
    keep = np.isfinite(R)
    write_frame(pd.DataFrame({"asset_id": ids[keep], "ts_utc": format_ts(ts[keep]),
                              "session": sess[keep], "ret": R[keep]}), path)


def _grid_lookup(path, ts, keys_ts, column="ts_utc"):
    """Index of each ``ts`` inside the sorted unique ``keys_ts``."""
    k = keys_ts.astype("int64")
    order = np.argsort(k)
    pos = np.searchsorted(k[order], ts.astype("int64"))
    pos = np.minimum(pos, len(k) - 1)
    hit = k[order][pos] == ts.astype("int64")
    _fail_first(path, ~hit, column, "timestamp is not on the factor grid")
    return order[pos]


def load_panel(path, factor: FactorSeries) -> ReturnPanel:
    """Map panel rows onto the factor's grid; absent rows become NaN."""
    df = _read(path, PANEL_COLUMNS)
    ts = _parse_ts(path, df["ts_utc"])
    sess = _parse_session(path, df["session"])
    ret = _parse_float(path, df["ret"], "ret")
    _check_sorted(path, ts, strict=False)
    aid = df["asset_id"].to_numpy(dtype=object)
    _fail_first(path, aid == "", "asset_id", "empty asset id")
    ids, a_idx = np.unique(aid.astype(str), return_inverse=True)
    n_d, n_i = factor.intraday.shape
    intra = np.full((len(ids), n_d, n_i), np.nan)
    night = np.full((len(ids), n_d), np.nan)
    night_ts = factor.overnight_ts[:, -1] if factor.overnight_ts.shape[1] else \
        factor.intraday_ts[:, 0] - np.timedelta64(900, "s")
    m = sess == INTRADAY
    cell = _grid_lookup(path, np.where(m, ts, factor.intraday_ts.ravel()[0]), factor.intraday_ts.ravel())
    dn = _grid_lookup(path, np.where(~m, ts, night_ts[0]), night_ts)
    flat_key = np.where(m, a_idx * (n_d * (n_i + 1)) + cell // n_i * (n_i + 1) + 1 + cell % n_i,
                        a_idx * (n_d * (n_i + 1)) + dn * (n_i + 1))
    _, first = np.unique(flat_key, return_index=True)
    dup = np.ones(len(df), dtype=bool)
    dup[first] = False
    _fail_first(path, dup, "ts_utc", "duplicate (asset_id, ts_utc) row")
    d_i, s_i = np.divmod(cell[m], n_i)
    intra[a_idx[m], d_i, s_i] = ret[m]
    night[a_idx[~m], dn[~m]] = ret[~m]
    return ReturnPanel(ids, factor.dates, intra, night, factor.intraday_ts, night_ts)


# jumps

def write_jumps(jumps: JumpSet, path) -> None:
    write_frame(pd.DataFrame({
        "ts_utc": format_ts(jumps.ts), "session": jumps.session, "ret": jumps.ret,
        "topic_id": jumps.topic, "attributed": np.where(jumps.attributed, "true", "false"),
    }), path)


def load_jumps(path, factor: FactorSeries) -> JumpSet:
    df = _read(path, JUMP_COLUMNS)
    if df.empty:
        return JumpSet.empty()
    ts = _parse_ts(path, df["ts_utc"])
    sess = _parse_session(path, df["session"])
    ret = _parse_float(path, df["ret"], "ret")
    _check_sorted(path, ts)
    topic = pd.to_numeric(df["topic_id"], errors="coerce").to_numpy()
    _fail_first(path, ~np.isin(topic, np.arange(0, 7)), "topic_id", "topic_id must be an integer in 0..6")
    att = df["attributed"].str.lower().to_numpy(dtype=object)
    _fail_first(path, ~np.isin(att, ["true", "false"]), "attributed", "attributed must be true or false")
    day = np.zeros(len(df), dtype=np.int64)
    slot = np.zeros(len(df), dtype=np.int64)
    for s in SESSIONS:
        m = sess == s
        grid = factor.timestamps(s)
        if not m.any():
            continue
        if grid.shape[1] == 0:
            _fail_first(path, m, "session", f"factor has no {s} slots")
        cell = _grid_lookup(path, np.where(m, ts, grid.ravel()[0]), grid.ravel())
        day[m], slot[m] = np.divmod(cell[m], grid.shape[1])
    return JumpSet(day, slot, sess, ret, ts, topic.astype(np.int64), att == "true")


# betas

def write_betas(panels: Sequence[BetaPanel], path) -> None:
    rows = []
    for bp in panels:
        date = str(np.datetime64(bp.as_of_date, "D"))
        cols = [("continuous", bp.beta_c)] + [(f"topic_{t}", bp.beta_j[:, j]) for j, t in enumerate(bp.topics)]
        for name, vals in cols:
            ok = np.isfinite(vals)
            rows.append(pd.DataFrame({"as_of": date, "asset_id": bp.asset_ids[ok],
                                      "beta_name": name, "value": vals[ok]}))
    df = pd.concat(rows, ignore_index=True) if rows else pd.DataFrame(columns=BETA_COLUMNS)
    write_frame(df[BETA_COLUMNS], path)
    meta = [{"as_of": str(np.datetime64(bp.as_of_date, "D")), "window": bp.window,
             "topics": list(bp.topics), "jump_counts": {str(k): v for k, v in bp.jump_counts.items()}}
            for bp in panels]
    write_json(meta, Path(str(path) + ".meta.json"))


def load_betas(path, dates: np.ndarray, asset_ids: Optional[Sequence[str]] = None,
               topics: Optional[Sequence[int]] = None) -> list[BetaPanel]:
    df = _read(path, BETA_COLUMNS)
    meta_path = Path(str(path) + ".meta.json")
    meta = {m["as_of"]: m for m in json.loads(meta_path.read_text())} if meta_path.exists() else {}
    as_of = pd.to_datetime(df["as_of"], format="%Y-%m-%d", errors="coerce")
    _fail_first(path, as_of.isna().to_numpy(), "as_of", "as_of must be YYYY-MM-DD")
    val = _parse_float(path, df["value"], "value")
    names = df["beta_name"].to_numpy(dtype=object)
    ok_name = np.array([n == "continuous" or (n.startswith("topic_") and n[6:].isdigit()) for n in names])
    _fail_first(path, ~ok_name, "beta_name", "beta_name must be 'continuous' or 'topic_<k>'")
    if topics is None:
        found = sorted({int(n[6:]) for n in names if n != "continuous"})
        metas = [tuple(m["topics"]) for m in meta.values()]
        topics = metas[0] if metas else tuple(found)
    topics = tuple(int(t) for t in topics)
    ids = np.unique(df["asset_id"].to_numpy(dtype=str)) if asset_ids is None else np.asarray(asset_ids, dtype=str)
    pos = {a: i for i, a in enumerate(ids)}
    dates = np.asarray(dates, dtype="datetime64[D]")
    day_pos = {str(d): i for i, d in enumerate(dates)}
    out = []
    a_dates = as_of.dt.strftime("%Y-%m-%d").to_numpy()
    for d in sorted(set(a_dates)):
        if d not in day_pos:
            line = int(np.nonzero(a_dates == d)[0][0]) + 2
            raise SchemaError(path, f"as_of {d} is not a trading day of the factor", line, "as_of")
        m = a_dates == d
        bc = np.full(len(ids), np.nan)
        bj = np.full((len(ids), len(topics)), np.nan)
        for a, n, v in zip(df["asset_id"].to_numpy(dtype=str)[m], names[m], val[m]):
            if a not in pos:
                continue
            if n == "continuous":
                bc[pos[a]] = v
            elif int(n[6:]) in topics:
                bj[pos[a], topics.index(int(n[6:]))] = v
        info = meta.get(d, {})
        counts = {int(k): v for k, v in info.get("jump_counts", {}).items()}
        out.append(BetaPanel(day_pos[d], dates[day_pos[d]], ids, bc, bj, topics,
                             info.get("window", 0), counts))
    return out


# small tables

def write_rf(months: Sequence[str], rf: Sequence[float], path) -> None:
    write_frame(pd.DataFrame({"month": list(months), "rf": np.asarray(rf, dtype=float)}), path)


def load_rf(path) -> pd.Series:
    df = _read(path, RF_COLUMNS)
    ok = df["month"].str.fullmatch(r"\d{4}-\d{2}").to_numpy()
    _fail_first(path, ~ok, "month", "month must be YYYY-MM")
    rf = _parse_float(path, df["rf"], "rf")
    if len(df) > 1:
        d = np.diff(pd.PeriodIndex(df["month"], freq="M").asi8)
        _fail_first(path, np.concatenate([[False], d <= 0]), "month", "months not increasing")
    return pd.Series(rf, index=df["month"].to_numpy(), name="rf")


def load_schedule(path) -> np.ndarray:
    df = _read(path, SCHEDULE_COLUMNS)
    d = pd.to_datetime(df["date"], format="%Y-%m-%d", errors="coerce")
    _fail_first(path, d.isna().to_numpy(), "date", "date must be YYYY-MM-DD")
    return d.to_numpy().astype("datetime64[D]")


def previous_tick_sample(tick_times, tick_prices, grid) -> np.ndarray:
    """Last price at or before each grid time; NaN before the first tick."""
    t = np.asarray(tick_times, dtype="datetime64[ns]")
    p = np.asarray(tick_prices, dtype=float)
    g = np.asarray(grid, dtype="datetime64[ns]")
    out = np.full(g.shape, np.nan)
    if t.size == 0:
        return out
    if np.any(np.diff(t.astype("int64")) < 0):
        raise ValueError("ticks must be sorted by time")
    i = np.searchsorted(t, g, side="right") - 1
    ok = i >= 0
    out[ok] = p[i[ok]]
    return out
