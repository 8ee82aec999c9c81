"""Truncated bipower-variation jump identification on the factor.

Each (day, session) is handled on its own: bipower variation sets a first
truncation level, the truncated variance computed under it sets the jump
threshold, and returns at or above the threshold are flagged. A magnitude
filter then keeps the large jumps only.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import pandas as pd

from .data import FactorSeries, INTRADAY, OVERNIGHT, SESSIONS

log = logging.getLogger(__name__)

UNATTRIBUTABLE = 0
MIN_VALID_INTERVALS = 4
_SESSION_ORDER = {OVERNIGHT: 0, INTRADAY: 1}


class InsufficientDataError(ValueError):
    pass


@dataclass
class JumpParams:
    u_n: float = 3.0
    varpi: float = 0.49
    min_abs_jump: float = 0.005
    # per-session interval length as a fraction of the session; None -> 1 / n_slots
    delta_n: Optional[dict] = None
    # per-session tau vectors; None -> use the factor's own (flat if unset)
    diurnal: Optional[dict] = None
    # drop intervals whose wall-clock span exceeds this many seconds
    max_interval_seconds: Optional[float] = None

    def __post_init__(self):
        if not self.u_n > 0:
            raise ValueError("u_n must be > 0")
        if not 0 < self.varpi < 0.5:
            raise ValueError("varpi must lie in (0, 0.5)")
        if self.min_abs_jump < 0:
            raise ValueError("min_abs_jump must be >= 0")
        for tau in (self.diurnal or {}).values():
            if tau is not None and np.any(np.asarray(tau) <= 0):
                raise ValueError("diurnal factors must be > 0")

    def delta(self, session: str, n_slots: int) -> float:
        if self.delta_n and self.delta_n.get(session) is not None:
            return float(self.delta_n[session])
        return 1.0 / n_slots

    def tau(self, factor: FactorSeries, session: str) -> np.ndarray:
        if self.diurnal and self.diurnal.get(session) is not None:
            return np.asarray(self.diurnal[session], dtype=float)
        return factor.tau_for(session)


@dataclass
class JumpSet:
    """Detected factor jumps, time ordered.

    ``topic`` is 1..6 for labelled jumps and ``UNATTRIBUTABLE`` (0) otherwise.
    """

    day: np.ndarray
    slot: np.ndarray
    session: np.ndarray
    ret: np.ndarray
    ts: np.ndarray
    topic: np.ndarray
    attributed: np.ndarray
    skipped: int = 0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.day = np.asarray(self.day, dtype=np.int64)
        self.slot = np.asarray(self.slot, dtype=np.int64)
        self.session = np.asarray(self.session, dtype=object)
        self.ret = np.asarray(self.ret, dtype=float)
        self.ts = np.asarray(self.ts, dtype="datetime64[s]")
        self.topic = np.asarray(self.topic, dtype=np.int64)
        self.attributed = np.asarray(self.attributed, dtype=bool)
        n = len(self.day)
        for name in ("slot", "session", "ret", "ts", "topic", "attributed"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"JumpSet field {name} has wrong length")

    def __len__(self) -> int:
        return len(self.day)

    @classmethod
    def empty(cls) -> "JumpSet":
        z = np.zeros(0)
        return cls(z, z, np.array([], dtype=object), z, np.array([], dtype="datetime64[s]"), z, z.astype(bool))

    def with_labels(self, topic, attributed=None) -> "JumpSet":
        topic = np.asarray(topic, dtype=np.int64)
        if attributed is None:
            attributed = topic != UNATTRIBUTABLE
        return JumpSet(self.day, self.slot, self.session, self.ret, self.ts, topic,
                       attributed, self.skipped, dict(self.meta))

    def select(self, mask) -> "JumpSet":
        mask = np.asarray(mask)
        return JumpSet(self.day[mask], self.slot[mask], self.session[mask], self.ret[mask],
                       self.ts[mask], self.topic[mask], self.attributed[mask],
                       self.skipped, dict(self.meta))

    def keys(self) -> list[tuple[int, str, int]]:
        return list(zip(self.day.tolist(), self.session.tolist(), self.slot.tolist()))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "day": self.day, "slot": self.slot, "session": self.session, "ret": self.ret,
            "ts_utc": self.ts, "topic_id": self.topic, "attributed": self.attributed,
        })

    def check(self, min_abs_jump: float = 0.0) -> None:
        """Assert the set's ordering, uniqueness, and filter invariants."""
        if np.any(np.abs(self.ret) < min_abs_jump):
            raise AssertionError("jump below magnitude filter")
        order = [(d, _SESSION_ORDER[s], k) for d, s, k in self.keys()]
        if order != sorted(order) or len(set(order)) != len(order):
            raise AssertionError("jumps not strictly time ordered")


def bipower_variation(day_returns) -> float:
    """Scaled sum of products of adjacent absolute returns."""
    r = np.abs(np.asarray(day_returns, dtype=float))
    n = r.size
    if n < 2:
        raise InsufficientDataError("bipower variation needs at least 2 intervals")
    return float(np.pi / 2 * n / (n - 1) * np.sum(r[:-1] * r[1:]))


def _threshold_scale(params: JumpParams, tau, delta: float):
    return params.u_n * np.sqrt(tau) * delta ** params.varpi


def truncated_variance(day_returns, params: JumpParams, bv: float, tau=None,
                       delta: Optional[float] = None) -> float:
    """Sum of squares of returns below ``u_n * sqrt(tau_i * bv) * delta**varpi``."""
    if bv < 0:
        raise ValueError("bv must be >= 0")
    r = np.asarray(day_returns, dtype=float)
    tau = np.ones(r.size) if tau is None else np.asarray(tau, dtype=float)
    delta = 1.0 / r.size if delta is None else delta
    keep = np.abs(r) <= _threshold_scale(params, tau, delta) * np.sqrt(bv)
    return float(np.sum(r[keep] ** 2))


def _span_mask(factor: FactorSeries, limit: float) -> dict:
    """True where an interval's wall-clock span is within ``limit`` seconds."""
    n_n = factor.overnight.shape[1]
    ts = np.concatenate([factor.overnight_ts, factor.intraday_ts], axis=1).ravel()
    sec = ts.astype("datetime64[s]").astype("int64")
    span = np.empty(sec.shape, dtype=float)
    span[0] = 0.0
    span[1:] = np.diff(sec)
    ok = (span <= limit).reshape(factor.n_days, -1)
    return {OVERNIGHT: ok[:, :n_n], INTRADAY: ok[:, n_n:]}


def _session_flags(r: np.ndarray, tau: np.ndarray, delta: float, params: JumpParams,
                   usable: np.ndarray):
    """Thresholds and flags for every day of one session.

    Rows with fewer than four usable intervals get NaN thresholds.
    """
    n_days, n = r.shape
    scale = _threshold_scale(params, tau, delta)       # (n,)
    thr = np.full(r.shape, np.nan)
    absr = np.abs(r)
    counts = usable.sum(axis=1)
    full = counts == n
    if n >= MIN_VALID_INTERVALS and full.any():
        a = absr[full]
        bv = np.pi / 2 * n / (n - 1) * np.sum(a[:, :-1] * a[:, 1:], axis=1)
        keep = a <= scale[None, :] * np.sqrt(bv)[:, None]
        tv = np.sum(np.where(keep, a * a, 0.0), axis=1)
        thr[full] = scale[None, :] * np.sqrt(tv)[:, None]
    partial = np.nonzero(~full & (counts >= MIN_VALID_INTERVALS))[0]
    for d in partial:
        m = usable[d]
        x = r[d, m]
        bv = bipower_variation(x)
        tv = truncated_variance(x, params, bv, tau[m], delta)
        row = np.full(n, np.nan)
        row[m] = scale[m] * np.sqrt(tv)
        thr[d] = row
    with np.errstate(invalid="ignore"):
        flags = usable & np.isfinite(thr) & (absr >= thr) & (r != 0)
    skipped = int(np.sum(counts < MIN_VALID_INTERVALS))
    return thr, flags, skipped


def jump_flags(factor: FactorSeries, params: JumpParams) -> dict:
    """Per session: (thresholds, statistical jump flags, skipped day count).

    Zero returns are never flagged; a day whose truncated variance is zero
    cannot separate jumps from the diffusion.
    """
    spans = _span_mask(factor, params.max_interval_seconds) \
        if params.max_interval_seconds is not None else None
    out = {}
    for session in SESSIONS:
        r = factor.returns(session)
        n = r.shape[1]
        if n == 0:
            out[session] = (np.zeros(r.shape), np.zeros(r.shape, dtype=bool), 0)
            continue
        usable = np.isfinite(r)
        if spans is not None:
            usable &= spans[session]
        tau = params.tau(factor, session)
        if tau.shape != (n,):
            raise ValueError(f"{session} diurnal vector must have {n} entries")
        out[session] = _session_flags(np.where(usable, r, 0.0), tau,
                                      params.delta(session, n), params, usable)
    return out


def detect_jumps(factor: FactorSeries, params: Optional[JumpParams] = None,
                 flags: Optional[dict] = None) -> JumpSet:
    """Flag jumps per (day, session) and keep those passing the magnitude filter."""
    params = params or JumpParams()
    flags = jump_flags(factor, params) if flags is None else flags
    rows = []
    skipped = 0
    for session in SESSIONS:
        _, flag, n_skip = flags[session]
        if factor.n_slots(session) < MIN_VALID_INTERVALS:
            if factor.n_slots(session):
                log.info("%s session has %d slots; no jump test possible", session,
                         factor.n_slots(session))
        else:
            skipped += n_skip
        r = factor.returns(session)
        big = flag & (np.abs(np.nan_to_num(r)) >= params.min_abs_jump)
        days, slots = np.nonzero(big)
        ts = factor.timestamps(session)
        for d, s in zip(days, slots):
            rows.append((int(d), _SESSION_ORDER[session], int(s), session, float(r[d, s]), ts[d, s]))
    if skipped:
        log.warning("jump detection skipped %d (day, session) blocks with < %d valid intervals",
                    skipped, MIN_VALID_INTERVALS)
    if not rows:
        js = JumpSet.empty()
        js.skipped = skipped
        return js
    rows.sort(key=lambda x: (x[0], x[1], x[2]))
    day, _, slot, session, ret, ts = zip(*rows)
    n = len(rows)
    return JumpSet(np.array(day), np.array(slot), np.array(session, dtype=object),
                   np.array(ret), np.array(ts, dtype="datetime64[s]"),
                   np.full(n, UNATTRIBUTABLE), np.zeros(n, dtype=bool), skipped,
                   {"u_n": params.u_n, "varpi": params.varpi, "min_abs_jump": params.min_abs_jump})


def estimate_diurnal(factor: FactorSeries, trailing_days: int = 250,
                     end_day: Optional[int] = None) -> dict:
    """Normalised mean squared return per slot over the trailing window.

    ``end_day`` is exclusive; by default the window ends at the last day.
    Fewer than five days of history gives flat factors.
    """
    if trailing_days < 5:
        raise ValueError("trailing_days must be >= 5")
    end = factor.n_days if end_day is None else int(end_day)
    start = max(0, end - trailing_days)
    out = {}
    for session in SESSIONS:
        n = factor.n_slots(session)
        r = factor.returns(session)[start:end]
        if end - start < 5 or n == 0:
            if n:
                log.warning("diurnal estimate for %s has %d days of history; using flat factors",
                            session, end - start)
            out[session] = np.ones(n)
            continue
        ms = np.nanmean(r * r, axis=0)
        if not np.all(np.isfinite(ms)) or ms.mean() <= 0 or np.any(ms <= 0):
            log.warning("degenerate diurnal estimate for %s; using flat factors", session)
            out[session] = np.ones(n)
            continue
        out[session] = ms / ms.mean()
    return out
