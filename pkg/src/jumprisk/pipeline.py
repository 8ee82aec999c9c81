"""Stage orchestration. Each stage reads declared inputs and writes into ``out``."""
from __future__ import annotations

import logging
from pathlib import Path

import numpy as np
import pandas as pd

from . import io
from .betas import build_beta_panel
from .config import RunConfig
from .crosssec import estimate_premia, fm_portfolio_returns, wald_equal_premia
from .data import ConfigError, INTRADAY
from .futures import continuous_returns, position_wealth, roll_schedule, synthetic_contracts
from .jumps import JumpSet, detect_jumps, estimate_diurnal
from .simkit import simulate
from .strategy import (
    CostModel, announcement_window_portfolio, apply_costs, placebo_assign, realtime_topic_select, sharpe,
)
from .topics.lda import LdaModel, classify_text
from .topics.prompts import FakeLlm, classify_jump_llm, jump_context
from .topics.synthetic import keyword_responder, synthetic_news, toy_lda_model
from .betas import year_end_days
from . import report

log = logging.getLogger(__name__)

STAGES = ("simulate", "detect", "classify", "betas", "fmb", "strategy", "rollover", "report")

FILES = {
    "factor": "factor.csv", "panel": "panel.csv", "truth_jumps": "truth_jumps.csv",
    "truth_betas": "truth_betas.csv", "jumps": "jumps.csv", "labelings": "labelings.csv",
    "labels": "labeled_jumps.csv", "betas": "betas.csv", "fm_returns": "fm_returns.csv",
    "fm_monthly": "fm_monthly.csv", "premia": "premia.csv", "wald": "wald.json",
    "selections": "selections.csv", "strategy": "strategy_monthly.csv",
    "placebo": "placebo.csv", "placebo_monthly": "placebo_monthly.csv",
    "announcement": "announcement.json",
    "roll_schedule": "roll_schedule.csv", "futures": "futures_returns.csv",
}


class StageInputError(FileNotFoundError):
    def __init__(self, stage: str, path):
        super().__init__(f"stage '{stage}': missing input {path}")
        self.stage, self.path = stage, str(path)


class Context:
    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.out = Path(cfg.out)

    def path(self, key: str) -> Path:
        return self.out / FILES[key]

    def input(self, stage: str, key: str, input_key=None) -> Path:
        """User-supplied input if configured, else the artifact of an earlier stage."""
        given = self.cfg.inputs.get(input_key or key)
        p = Path(given) if given else self.path(key)
        if not p.exists():
            raise StageInputError(stage, p)
        return p

    def factor(self, stage):
        f = io.load_factor(self.input(stage, "factor"))
        if self.cfg.jumps.diurnal == "estimate":
            f.tau = estimate_diurnal(f, self.cfg.jumps.diurnal_window)
        return f

    def panel(self, stage, factor):
        return io.load_panel(self.input(stage, "panel"), factor)


# stages

def run_simulate(ctx: Context) -> None:
    sim = ctx.cfg.sim_config()
    factor, panel, truth = simulate(sim)
    io.write_factor(factor, ctx.path("factor"))
    io.write_panel(panel, ctx.path("panel"))
    rows = truth.jump_times()
    ts = [factor.timestamps(s)[d, k] for d, k, s, _, _ in rows]
    planted = JumpSet([r[0] for r in rows], [r[1] for r in rows], [r[2] for r in rows],
                      [r[4] for r in rows], ts, [r[3] for r in rows], np.ones(len(rows), bool)) \
        if rows else JumpSet.empty()
    io.write_jumps(planted, ctx.path("truth_jumps"))
    k = sim.n_topics
    tb = pd.DataFrame({
        "as_of": str(factor.dates[-1]),
        "asset_id": np.repeat(panel.asset_ids, k + 1),
        "beta_name": np.tile(["continuous"] + [f"topic_{t}" for t in range(1, k + 1)], panel.n_assets),
        "value": truth.true_betas.ravel(),
    })
    io.write_frame(tb, ctx.path("truth_betas"))
    io.write_json(sim.to_dict(), ctx.out / "sim_config.json")


def run_detect(ctx: Context) -> None:
    factor = ctx.factor("detect")
    jumps = detect_jumps(factor, ctx.cfg.jumps.params(factor.tau or None))
    io.write_jumps(jumps, ctx.path("jumps"))


def _key(ts, sess):
    return list(zip(np.asarray(ts, dtype="datetime64[s]").astype("int64").tolist(), list(sess)))


def _truth_labels(ctx, factor, jumps):
    given = ctx.cfg.inputs.get("labels")
    p = Path(given) if given else ctx.path("truth_jumps")
    if not p.exists():
        return None
    ref = io.load_jumps(p, factor)
    lookup = dict(zip(_key(ref.ts, ref.session), ref.topic.tolist()))
    return np.array([lookup.get(k, 0) for k in _key(jumps.ts, jumps.session)], dtype=np.int64)


def _news(ctx, jumps, truth):
    given = ctx.cfg.inputs.get("news")
    if given:
        df = pd.read_csv(given, dtype={"ts_utc": str, "news_id": int, "headline": str},
                         keep_default_na=False)
        if list(df.columns) != ["ts_utc", "news_id", "headline"]:
            raise io.SchemaError(given, "header must be ts_utc,news_id,headline", 1)
        by_ts = {}
        for t, i, h in df.itertuples(index=False):
            by_ts.setdefault(t, []).append((int(i), h))
        return [by_ts.get(t, []) for t in io.format_ts(jumps.ts)]
    if truth is not None:
        return synthetic_news(truth, ctx.cfg.classify.news_seed)
    return None


def _interval_start(factor, jumps):
    """Start time of each jump interval: the end of the interval before it."""
    n_n = factor.overnight.shape[1]
    ts = np.concatenate([factor.overnight_ts, factor.intraday_ts], axis=1)
    flat = ts.ravel()
    pos = jumps.day * ts.shape[1] + np.where(jumps.session == INTRADAY, n_n + jumps.slot, jumps.slot)
    first = flat[0] - (flat[1] - flat[0]) if flat.size > 1 else flat[0]
    return [flat[i - 1] if i > 0 else first for i in pos]


def run_classify(ctx: Context) -> None:
    cfg = ctx.cfg
    factor = ctx.factor("classify")
    jumps = io.load_jumps(ctx.input("classify", "jumps"), factor)
    truth = _truth_labels(ctx, factor, jumps)
    labelings = {}
    if truth is not None:
        labelings["truth"] = truth
    news = _news(ctx, jumps, truth)
    if news is not None:
        llm = FakeLlm(keyword_responder)
        starts = _interval_start(factor, jumps)
        labelings["llm"] = np.array([
            classify_jump_llm(llm, jump_context(st, en, r, items)).category
            for st, en, r, items in zip(starts, jumps.ts, jumps.ret, news)], dtype=np.int64)
        model = LdaModel.load(cfg.inputs["lda_model"]) if cfg.inputs.get("lda_model") else toy_lda_model()
        labelings["lda"] = np.array([classify_text(" ".join(h for _, h in items), model).category
                                     for items in news], dtype=np.int64)
    labelings["placebo"] = placebo_assign(jumps, cfg.classify.placebo_seed).topic
    if cfg.classify.mode not in labelings:
        raise ConfigError(f"classify.mode '{cfg.classify.mode}' needs inputs that are not available")
    df = pd.DataFrame({"ts_utc": io.format_ts(jumps.ts), "session": jumps.session})
    for name, lab in labelings.items():
        df[name] = lab
    io.write_frame(df, ctx.path("labelings"))
    chosen = labelings[cfg.classify.mode]
    attributed = chosen != 0
    io.write_jumps(jumps.with_labels(chosen, attributed), ctx.path("labels"))


def _beta_panels(ctx, stage, panel, factor, jumps):
    b = ctx.cfg.betas
    return build_beta_panel(panel, factor, jumps, topics=b.topics, window=b.window,
                            params=ctx.cfg.jumps.params(factor.tau or None),
                            min_jumps=b.min_jumps, min_obs=b.min_obs)


def run_betas(ctx: Context) -> None:
    factor = ctx.factor("betas")
    panel = ctx.panel("betas", factor)
    jumps = io.load_jumps(ctx.input("betas", "labels", "jumps"), factor)
    io.write_betas(_beta_panels(ctx, "betas", panel, factor, jumps), ctx.path("betas"))


def _fm(ctx, stage):
    factor = ctx.factor(stage)
    panel = ctx.panel(stage, factor)
    bps = io.load_betas(ctx.input(stage, "betas"), factor.dates, panel.asset_ids,
                        ctx.cfg.betas.topics)
    return factor, panel, fm_portfolio_returns(bps, panel)


def run_fmb(ctx: Context) -> None:
    inf = ctx.cfg.inference
    factor, panel, fm = _fm(ctx, "fmb")
    df = pd.DataFrame(fm.returns, columns=list(fm.names))
    df.insert(0, "session", fm.session)
    df.insert(0, "ts_utc", io.format_ts(fm.ts))
    io.write_frame(df, ctx.path("fm_returns"))
    labels, X = fm.aggregate("monthly")
    mdf = pd.DataFrame(X, columns=list(fm.names))
    mdf.insert(0, "month", labels)
    io.write_frame(mdf, ctx.path("fm_monthly"))
    est = estimate_premia(fm, inf.premia_lag, inf.freq)
    io.write_frame(pd.DataFrame({
        "factor": est.names, "premium_pct": est.premium, "std_err_pct": est.std_err,
        "sharpe": est.sharpe, "t_stat": est.t_stat, "n_periods": est.n_periods,
        "start": est.start, "end": est.end, "freq": est.freq, "lag": est.lag,
    }), ctx.path("premia"))
    w = wald_equal_premia(fm, inf.premia_lag, inf.freq)
    io.write_json({"stat": w.stat, "dof": w.dof, "pvalue": w.pvalue, "lag": w.lag,
                   "n_periods": w.n_periods}, ctx.path("wald"))


def run_strategy(ctx: Context) -> None:
    cfg = ctx.cfg
    factor, panel, fm = _fm(ctx, "strategy")
    rebal = year_end_days(factor.dates)
    res = realtime_topic_select(fm, rebal, "monthly", cfg.strategy.min_history)
    if not res.records:
        raise ValueError("strategy has no out-of-sample periods; extend the sample")
    io.write_frame(pd.DataFrame({
        "rebalance_date": [str(factor.dates[s.day]) for s in res.selections],
        "topic": [s.topic if s.topic is not None else 0 for s in res.selections],
        **{f"sr_topic_{t}": [s.sharpe.get(t, np.nan) for s in res.selections] for t in fm.topics},
    }), ctx.path("selections"))
    months = res.periods()
    rf = report.monthly_rf(ctx, months)
    out = pd.DataFrame({"month": months, "topic": [t or 0 for t in res.topics()],
                        "gross": res.series("gross")})
    for bps in cfg.strategy.costs_bps:
        r = apply_costs(res, fm, panel, CostModel(bps / 1e4, rf))
        out["dW"] = r.series("dW")
        out["turnover"] = r.series("turnover")
        out[f"net_{bps:g}bps"] = r.series("net")
    io.write_frame(out, ctx.path("strategy"))

    # placebo runs: uniform labels, same machinery
    labeled = ctx.input("strategy", "labels", "jumps")
    jumps = io.load_jumps(labeled, factor)
    monthly = pd.DataFrame({"month": months, "informed": res.series("gross")})
    rows = [("informed", sharpe(res.series("gross")))]
    for seed in cfg.strategy.placebo_seeds:
        pj = placebo_assign(jumps, seed)
        bps = _beta_panels(ctx, "strategy", panel, factor, pj)
        pres = realtime_topic_select(fm_portfolio_returns(bps, panel), rebal, "monthly",
                                     cfg.strategy.min_history)
        g = pd.Series(pres.series("gross"), index=pres.periods()).reindex(months)
        monthly[f"seed_{seed}"] = g.to_numpy()
        rows.append((f"seed_{seed}", sharpe(g.to_numpy())))
    io.write_frame(pd.DataFrame(rows, columns=["run", "sharpe"]), ctx.path("placebo"))
    io.write_frame(monthly, ctx.path("placebo_monthly"))

    sched = cfg.inputs.get("schedule")
    if sched:
        ann = announcement_window_portfolio(factor, io.load_schedule(sched))
        io.write_json({"n_windows": int(len(ann.days)), "per_year": ann.per_year,
                       "adjusted_sharpe": ann.adjusted_sharpe,
                       "unconditional_sharpe": ann.unconditional_sharpe}, ctx.path("announcement"))


def _wide(path) -> pd.DataFrame:
    df = pd.read_csv(path)
    if df.columns[0] != "date":
        raise io.SchemaError(path, "first column must be 'date'", 1)
    return df.set_index(pd.to_datetime(df.pop("date"), format="%Y-%m-%d"))


def run_rollover(ctx: Context) -> None:
    cfg = ctx.cfg
    if cfg.inputs.get("futures_prices"):
        prices = _wide(ctx.input("rollover", "futures_prices"))
        volumes = _wide(ctx.input("rollover", "futures_volumes"))
    else:
        r = cfg.rollover
        prices, volumes = synthetic_contracts(r.n_contracts, r.life, r.overlap, cfg.seed)
    sched = roll_schedule(volumes, prices=prices)
    sdf = sched.to_frame()
    sdf["roll_date"] = pd.to_datetime(sdf["roll_date"]).dt.strftime("%Y-%m-%d")
    io.write_frame(sdf, ctx.path("roll_schedule"))
    ret = continuous_returns(prices, sched)
    wealth = position_wealth(prices, sched)
    io.write_frame(pd.DataFrame({
        "date": ret.index.strftime("%Y-%m-%d"), "ret": ret.to_numpy(),
        "wealth": wealth.reindex(ret.index).to_numpy(),
    }), ctx.path("futures"))


def run_report(ctx: Context) -> None:
    report.build_reports(ctx)


RUNNERS = {
    "simulate": run_simulate, "detect": run_detect, "classify": run_classify,
    "betas": run_betas, "fmb": run_fmb, "strategy": run_strategy,
    "rollover": run_rollover, "report": run_report,
}


def run_pipeline(cfg: RunConfig, command: str) -> None:
    """Run one stage, or every stage in order for ``all``."""
    ctx = Context(cfg)
    ctx.out.mkdir(parents=True, exist_ok=True)
    stages = STAGES if command == "all" else (command,)
    for s in stages:
        if s not in RUNNERS:
            raise ConfigError(f"unknown command {s!r}")
        log.info("stage %s", s)
        try:
            RUNNERS[s](ctx)
        except Exception as exc:
            if not hasattr(exc, "stage"):
                exc.stage = s
            raise
