"""Run configuration: one JSON document, every field optional."""
from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict, fields
from pathlib import Path
from typing import Optional

from .data import ConfigError
from .jumps import JumpParams
from .simkit import SimConfig

CLASSIFY_MODES = ("truth", "llm", "lda", "placebo")
INPUT_KEYS = ("panel", "factor", "jumps", "labels", "schedule", "lda_model", "rf", "news",
              "futures_prices", "futures_volumes", "factors")


def default_simulation() -> dict:
    """A small economy where only the macro topic carries a premium."""
    return {
        "n_assets": 60, "n_days": 252 * 4, "intervals_per_day": 13, "intervals_per_night": 4,
        "continuous_vol": 0.0012, "idio_vol": 0.001,
        "jump_intensity_per_topic": [0.06] * 5, "jump_size_vol": [0.012] * 5,
        "lambda_c": 0.02, "lambda_j": [0.0, 0.10, 0.0, 0.0, 0.0],
    }


@dataclass
class JumpSection:
    u_n: float = 3.0
    varpi: float = 0.49
    min_abs_jump: float = 0.005
    diurnal: str = "flat"            # "flat" or "estimate"
    diurnal_window: int = 250

    def params(self, tau: Optional[dict] = None) -> JumpParams:
        return JumpParams(self.u_n, self.varpi, self.min_abs_jump, diurnal=tau)


@dataclass
class BetaSection:
    window: int = 21
    min_jumps: int = 3
    min_obs: int = 50
    topics: list = field(default_factory=lambda: [1, 2, 3, 4, 5])


@dataclass
class InferenceSection:
    premia_lag: int = 3
    alpha_lag: int = 12
    freq: str = "monthly"


@dataclass
class StrategySection:
    costs_bps: list = field(default_factory=lambda: [10, 20, 50])
    min_history: int = 12
    placebo_seeds: list = field(default_factory=lambda: list(range(1, 21)))


@dataclass
class ClassifySection:
    mode: str = "truth"
    placebo_seed: int = 1
    news_seed: int = 0


@dataclass
class RolloverSection:
    n_contracts: int = 4
    life: int = 90
    overlap: int = 30


@dataclass
class RunConfig:
    seed: int = 0
    out: str = "out"
    simulation: dict = field(default_factory=default_simulation)
    inputs: dict = field(default_factory=dict)
    jumps: JumpSection = field(default_factory=JumpSection)
    betas: BetaSection = field(default_factory=BetaSection)
    inference: InferenceSection = field(default_factory=InferenceSection)
    strategy: StrategySection = field(default_factory=StrategySection)
    classify: ClassifySection = field(default_factory=ClassifySection)
    rollover: RolloverSection = field(default_factory=RolloverSection)

    def sim_config(self) -> SimConfig:
        d = dict(self.simulation)
        d["seed"] = self.seed
        return SimConfig.from_dict(d).validate()

    def validate(self, check_inputs: bool = True) -> "RunConfig":
        unknown = set(self.inputs) - set(INPUT_KEYS)
        if unknown:
            raise ConfigError(f"inputs: unknown key(s) {sorted(unknown)}")
        if check_inputs:
            for k, v in self.inputs.items():
                if v is not None and not Path(v).exists():
                    raise ConfigError(f"inputs.{k}: file not found: {v}")
        try:
            self.jumps.params()
        except ValueError as exc:
            raise ConfigError(f"jumps: {exc}") from None
        if self.jumps.diurnal not in ("flat", "estimate"):
            raise ConfigError("jumps.diurnal must be 'flat' or 'estimate'")
        if self.betas.window < 1 or self.betas.min_jumps < 1 or self.betas.min_obs < 1:
            raise ConfigError("betas.window, betas.min_jumps and betas.min_obs must be >= 1")
        if not self.betas.topics or any(int(t) not in range(1, 7) for t in self.betas.topics):
            raise ConfigError("betas.topics must be a non-empty subset of 1..6")
        if self.inference.premia_lag < 0 or self.inference.alpha_lag < 0:
            raise ConfigError("inference lags must be >= 0")
        if self.inference.freq not in ("monthly", "daily"):
            raise ConfigError("inference.freq must be 'monthly' or 'daily'")
        if any(c < 0 for c in self.strategy.costs_bps):
            raise ConfigError("strategy.costs_bps must be >= 0")
        if self.classify.mode not in CLASSIFY_MODES:
            raise ConfigError(f"classify.mode must be one of {CLASSIFY_MODES}")
        if self.rollover.n_contracts < 2 or not 0 < self.rollover.overlap < self.rollover.life:
            raise ConfigError("rollover needs >= 2 contracts and 0 < overlap < life")
        if not self.inputs.get("panel") and not self.inputs.get("factor"):
            self.sim_config()
        return self

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        sections = {"jumps": JumpSection, "betas": BetaSection, "inference": InferenceSection,
                    "strategy": StrategySection, "classify": ClassifySection,
                    "rollover": RolloverSection}
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown config key(s): {sorted(extra)}")
        kw = {}
        for k, v in d.items():
            if k in sections:
                if not isinstance(v, dict):
                    raise ConfigError(f"{k} must be an object")
                names = {f.name for f in fields(sections[k])}
                bad = set(v) - names
                if bad:
                    raise ConfigError(f"{k}: unknown key(s) {sorted(bad)}")
                kw[k] = sections[k](**v)
            elif k == "simulation":
                sim = default_simulation()
                sim.update(v)
                kw[k] = sim
            else:
                kw[k] = v
        return cls(**kw)

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            d = json.loads(Path(path).read_text())
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(d)
