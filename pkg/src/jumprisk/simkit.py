"""Synthetic factor and asset-panel generator with known ground truth.

The factor follows a drift plus diffusion plus topic-labelled compound
Poisson process; assets load on the continuous part and on each topic's
jump part with constant betas. All randomness comes from one seeded
``SeedSequence`` split into independent factor and panel streams, so
identical configs reproduce byte-identical paths.
"""
from __future__ import annotations

from dataclasses import dataclass, field, asdict
from typing import Optional, Sequence

import numpy as np

from .data import (
    ConfigError, FactorSeries, ReturnPanel, INTRADAY, OVERNIGHT,
    TRADING_DAYS_PER_YEAR, sim_dates, session_grid,
)


@dataclass
class SimConfig:
    n_assets: int = 50
    n_days: int = 252
    intervals_per_day: int = 26
    intervals_per_night: int = 8
    continuous_vol: float = 0.001
    jump_intensity_per_topic: Sequence[float] = (0.1, 0.1, 0.1, 0.1, 0.1)
    jump_size_vol: Sequence[float] = (0.015, 0.015, 0.015, 0.015, 0.015)
    idio_vol: float = 0.001
    lambda_c: float = 0.0
    lambda_j: Sequence[float] = (0.0, 0.0, 0.0, 0.0, 0.0)
    # one (lo, hi) range for the continuous beta followed by one per topic
    beta_ranges: Sequence[Sequence[float]] = ((0.5, 1.5),) * 6
    diurnal_intraday: Optional[Sequence[float]] = None
    diurnal_overnight: Optional[Sequence[float]] = None
    seed: int = 0
    start_year: int = 2000

    @property
    def n_topics(self) -> int:
        return len(self.jump_intensity_per_topic)

    @property
    def intervals_total(self) -> int:
        return self.intervals_per_day + self.intervals_per_night

    def interval_drift(self) -> float:
        """Per-interval factor drift implied by the annual premia."""
        total = self.lambda_c + float(np.sum(self.lambda_j))
        return total / (TRADING_DAYS_PER_YEAR * self.intervals_total)

    def dt(self) -> float:
        return 1.0 / (TRADING_DAYS_PER_YEAR * self.intervals_total)

    def tau(self, session: str) -> np.ndarray:
        if session == INTRADAY:
            shape, n = self.diurnal_intraday, self.intervals_per_day
        else:
            shape, n = self.diurnal_overnight, self.intervals_per_night
        return np.ones(n) if shape is None else np.asarray(shape, dtype=float)

    def validate(self) -> "SimConfig":
        for name in ("n_assets", "n_days", "intervals_per_day"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.intervals_per_night < 0:
            raise ConfigError("intervals_per_night must be >= 0")
        for name in ("continuous_vol", "idio_vol"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise ConfigError(f"{name} must be a finite value >= 0")
        k = self.n_topics
        lam = np.asarray(self.lambda_j, dtype=float)
        sizes = np.asarray(self.jump_size_vol, dtype=float)
        inten = np.asarray(self.jump_intensity_per_topic, dtype=float)
        if np.any(~np.isfinite(inten)) or np.any(inten < 0):
            raise ConfigError("jump_intensity_per_topic must be >= 0")
        if sizes.shape != (k,):
            raise ConfigError(f"jump_size_vol needs {k} entries")
        if np.any(~np.isfinite(sizes)) or np.any(sizes < 0):
            raise ConfigError("jump_size_vol must be >= 0")
        if lam.shape != (k,):
            raise ConfigError(f"lambda_j needs {k} entries")
        if len(self.beta_ranges) != k + 1:
            raise ConfigError(f"beta_ranges needs {k + 1} (lo, hi) pairs")
        for lo_hi in self.beta_ranges:
            if len(lo_hi) != 2 or lo_hi[0] > lo_hi[1]:
                raise ConfigError("beta_ranges entries must be (lo, hi) with lo <= hi")
        for session, n, name in ((INTRADAY, self.intervals_per_day, "diurnal_intraday"),
                                 (OVERNIGHT, self.intervals_per_night, "diurnal_overnight")):
            tau = self.tau(session)
            if tau.shape != (n,):
                raise ConfigError(f"{name} needs {n} entries")
            if n and (np.any(tau <= 0) or abs(tau.mean() - 1.0) > 1e-12):
                raise ConfigError(f"{name} must be strictly positive with mean 1")
        return self

    def to_dict(self) -> dict:
        d = asdict(self)
        for key, val in d.items():
            if isinstance(val, tuple):
                d[key] = [list(v) if isinstance(v, tuple) else v for v in val]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SimConfig":
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown simulation field(s): {', '.join(sorted(extra))}")
        kw = dict(d)
        for key in ("jump_intensity_per_topic", "jump_size_vol", "lambda_j"):
            if key in kw:
                kw[key] = tuple(float(x) for x in kw[key])
        if "beta_ranges" in kw:
            kw["beta_ranges"] = tuple(tuple(float(x) for x in r) for r in kw["beta_ranges"])
        return cls(**kw)


@dataclass
class SimTruth:
    """Ground truth behind a simulated factor/panel pair.

    ``jump_topic`` grids hold the topic (1..K) of the jump planted in each
    interval, 0 where none; ``jump_size`` holds the raw jump draw there.
    ``continuous_part`` is the continuous drift plus diffusion, so a factor
    interval return is ``continuous_part + topic_drift.sum() + jump_size``.
    """

    true_betas: np.ndarray                      # (n_assets, 1 + K)
    jump_topic: dict = field(default_factory=dict)
    jump_size: dict = field(default_factory=dict)
    continuous_part: dict = field(default_factory=dict)
    topic_drift: np.ndarray = None              # (K,) per-interval lambda_k dt
    continuous_drift: float = 0.0

    def jump_times(self) -> list[tuple[int, int, str, int, float]]:
        """(day, slot, session, topic, jump size) for every planted jump, time ordered."""
        out = []
        for session in (OVERNIGHT, INTRADAY):
            topic = self.jump_topic[session]
            days, slots = np.nonzero(topic)
            for d, s in zip(days, slots):
                k = int(topic[d, s])
                size = float(self.jump_size[session][d, s])
                out.append((int(d), int(s), session, k, size))
        order = {OVERNIGHT: 0, INTRADAY: 1}
        out.sort(key=lambda r: (r[0], order[r[2]], r[1]))
        return out

    def n_jumps(self, topic: int) -> int:
        return int(sum((g == topic).sum() for g in self.jump_topic.values()))


def _streams(seed: int):
    ss = np.random.SeedSequence(seed)
    f, p = ss.spawn(2)
    return np.random.default_rng(f), np.random.default_rng(p)


def simulate_factor(cfg: SimConfig) -> tuple[FactorSeries, SimTruth]:
    """Draw the factor path and its ground truth."""
    cfg.validate()
    rng, _ = _streams(cfg.seed)
    K = cfg.n_topics
    n_d, n_i, n_n = cfg.n_days, cfg.intervals_per_day, cfg.intervals_per_night
    dt = cfg.dt()

    lo = np.array([r[0] for r in cfg.beta_ranges])
    hi = np.array([r[1] for r in cfg.beta_ranges])
    betas = lo + (hi - lo) * rng.random((cfg.n_assets, K + 1))

    # jump placement: Poisson count per topic, spread over distinct intervals
    total = n_d * (n_i + n_n)
    counts = rng.poisson(np.asarray(cfg.jump_intensity_per_topic) * n_d)
    if counts.sum() > total:
        raise ConfigError("jump_intensity_per_topic too high for the interval grid")
    where = rng.permutation(total)[: counts.sum()]
    flat_topic = np.zeros(total, dtype=np.int64)
    flat_size = np.zeros(total)
    start = 0
    for k in range(K):
        idx = where[start:start + counts[k]]
        flat_topic[idx] = k + 1
        flat_size[idx] = rng.normal(0.0, cfg.jump_size_vol[k], size=counts[k])
        start += counts[k]
    # interval layout per day: night slots first, then intraday slots
    topic_day = flat_topic.reshape(n_d, n_n + n_i)
    size_day = flat_size.reshape(n_d, n_n + n_i)

    z_day = rng.standard_normal((n_d, n_n + n_i))
    tau = np.concatenate([cfg.tau(OVERNIGHT), cfg.tau(INTRADAY)])
    cont_drift = cfg.lambda_c * dt
    topic_drift = np.asarray(cfg.lambda_j, dtype=float) * dt
    cont = cont_drift + np.sqrt(tau)[None, :] * cfg.continuous_vol * z_day
    # every topic's premium accrues each interval; the realised jump adds on top
    factor_day = cont + topic_drift.sum() + size_day

    dates = sim_dates(n_d, cfg.start_year)
    its, ots = session_grid(dates, n_i, n_n)
    factor = FactorSeries(
        dates, factor_day[:, n_n:], factor_day[:, :n_n], its, ots,
        tau={INTRADAY: cfg.tau(INTRADAY), OVERNIGHT: cfg.tau(OVERNIGHT)},
    )
    truth = SimTruth(
        true_betas=betas,
        jump_topic={OVERNIGHT: topic_day[:, :n_n].copy(), INTRADAY: topic_day[:, n_n:].copy()},
        jump_size={OVERNIGHT: size_day[:, :n_n].copy(), INTRADAY: size_day[:, n_n:].copy()},
        continuous_part={OVERNIGHT: cont[:, :n_n].copy(), INTRADAY: cont[:, n_n:].copy()},
        topic_drift=topic_drift,
        continuous_drift=cont_drift,
    )
    return factor, truth


def _asset_interval_returns(cont, topic_grid, size_grid, topic_drift, betas, eps):
    """beta_c * continuous + sum_k beta_k * (lambda_k dt + topic-k jump) + noise."""
    b_c = betas[:, 0][:, None, None]
    out = b_c * cont[None] + eps
    # drift of every topic accrues each interval
    out += (betas[:, 1:] @ topic_drift)[:, None, None]
    rows, cols = np.nonzero(topic_grid)
    if len(rows):
        k = topic_grid[rows, cols] - 1
        out[:, rows, cols] += betas[:, 1 + k] * size_grid[rows, cols][None, :]
    return out


def simulate_panel(factor: FactorSeries, truth: SimTruth, cfg: SimConfig) -> ReturnPanel:
    """Asset returns driven by the factor components in ``truth``."""
    cfg.validate()
    betas = truth.true_betas
    if betas.shape != (cfg.n_assets, cfg.n_topics + 1):
        raise ValueError(f"true_betas shape {betas.shape} does not match config "
                         f"({cfg.n_assets}, {cfg.n_topics + 1})")
    if factor.intraday.shape != (cfg.n_days, cfg.intervals_per_day) or \
            factor.overnight.shape != (cfg.n_days, cfg.intervals_per_night):
        raise ValueError("factor grid does not match config dimensions")
    _, rng = _streams(cfg.seed)
    td = truth.topic_drift

    out = {}
    for session, n in ((INTRADAY, cfg.intervals_per_day), (OVERNIGHT, cfg.intervals_per_night)):
        eps = cfg.idio_vol * rng.standard_normal((cfg.n_assets, cfg.n_days, n))
        topic = truth.jump_topic[session]
        size = truth.jump_size[session]
        out[session] = _asset_interval_returns(
            truth.continuous_part[session], topic, size, td, betas, eps)

    night = out[OVERNIGHT]
    if night.shape[2] == 0:
        overnight = np.zeros((cfg.n_assets, cfg.n_days))
    elif night.shape[2] == 1:
        overnight = night[:, :, 0]
    else:
        overnight = np.prod(1.0 + night, axis=2) - 1.0
    ots = factor.overnight_ts[:, -1] if factor.overnight_ts.shape[1] else \
        factor.intraday_ts[:, 0] - np.timedelta64(900, "s")
    ids = np.array([f"A{m:04d}" for m in range(cfg.n_assets)])
    return ReturnPanel(ids, factor.dates, out[INTRADAY], overnight, factor.intraday_ts, ots)


def simulate(cfg: SimConfig) -> tuple[FactorSeries, ReturnPanel, SimTruth]:
    factor, truth = simulate_factor(cfg)
    return factor, simulate_panel(factor, truth, cfg), truth


def oracle_labels(jumps, truth: SimTruth):
    """Label detected jumps with the topic planted in the same interval.

    Detections that do not coincide with a planted jump are unattributable.
    """
    from .jumps import UNATTRIBUTABLE

    topic = np.full(len(jumps), UNATTRIBUTABLE, dtype=np.int64)
    for n, (d, s, sess) in enumerate(zip(jumps.day, jumps.slot, jumps.session)):
        topic[n] = truth.jump_topic[sess][d, s]
    return jumps.with_labels(topic, topic != UNATTRIBUTABLE)


def truth_beta_panels(truth: SimTruth, panel: ReturnPanel, as_of_days: Sequence[int],
                      topics: Optional[Sequence[int]] = None):
    """BetaPanels carrying the true betas, for oracle checks of the second pass."""
    from .betas import BetaPanel

    K = truth.true_betas.shape[1] - 1
    topics = tuple(range(1, K + 1)) if topics is None else tuple(topics)
    out = []
    for d in as_of_days:
        out.append(BetaPanel(
            as_of=int(d), as_of_date=panel.dates[d], asset_ids=panel.asset_ids,
            beta_c=truth.true_betas[:, 0].copy(),
            beta_j=truth.true_betas[:, list(topics)].copy(), topics=topics,
            window=0, jump_counts={t: truth.n_jumps(t) for t in topics},
        ))
    return out
