"""Topic-labelled jump risk: detection, betas, mimicking portfolios and premia."""
from .data import FactorSeries, ReturnPanel, ConfigError, INTRADAY, OVERNIGHT
from .simkit import SimConfig, SimTruth, simulate, simulate_factor, simulate_panel
from .jumps import JumpParams, JumpSet, detect_jumps, bipower_variation, truncated_variance
from .betas import BetaPanel, build_beta_panel, jump_beta, continuous_beta
from .crosssec import (
    FMReturns, RiskPremiaEstimate, WaldResult, fmb_weights, fm_portfolio_returns,
    estimate_premia, newey_west_cov, wald_equal_premia, ts_alpha_regression,
)
from .strategy import (
    CostModel, StrategyRecord, realtime_topic_select, placebo_assign, net_returns,
    announcement_window_portfolio,
)
from .futures import RollSchedule, roll_schedule, continuous_returns

__version__ = "0.1.0"

__all__ = [
    "FactorSeries",
    "ReturnPanel",
    "ConfigError",
    "INTRADAY",
    "OVERNIGHT",
    "SimConfig",
    "SimTruth",
    "simulate",
    "simulate_factor",
    "simulate_panel",
    "JumpParams",
    "JumpSet",
    "detect_jumps",
    "bipower_variation",
    "truncated_variance",
    "BetaPanel",
    "build_beta_panel",
    "jump_beta",
    "continuous_beta",
    "FMReturns",
    "RiskPremiaEstimate",
    "WaldResult",
    "fmb_weights",
    "fm_portfolio_returns",
    "estimate_premia",
    "newey_west_cov",
    "wald_equal_premia",
    "ts_alpha_regression",
    "CostModel",
    "StrategyRecord",
    "realtime_topic_select",
    "placebo_assign",
    "net_returns",
    "announcement_window_portfolio",
    "RollSchedule",
    "roll_schedule",
    "continuous_returns",
]
