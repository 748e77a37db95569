"""Dynamic Black-Litterman portfolio construction and backtesting."""

from .backtest import (
    BacktestConfig,
    BacktestResult,
    WindowPolicy,
    adjust_window,
    apply_turnover_cost,
    compare_strategies,
    run_backtest,
)
from .black_litterman import (
    BlEstimate,
    BlInputs,
    StackedSystem,
    bl_closed_form,
    bl_elastic_net,
    ewma_covariance,
    implied_returns,
    sample_covariance,
)
from .data import (
    FactorPanel,
    PricePanel,
    ReturnPanel,
    align,
    compute_returns,
    load_factor_csv,
    load_price_csv,
)
from .factor_model import (
    FactorFit,
    RegularizationParams,
    ViewSet,
    fit_elastic_net,
    fit_factor_model,
    generate_views,
)
from .metrics import Metrics, compute_metrics, max_drawdown
from .optimizer import MvConfig, PortfolioWeights, kkt_residual, solve_mean_variance
from .simulate import GbmParams, flip_prices, load_gbm_params_csv, simulate_gbm

__version__ = "0.1.0"

__all__ = [
    "BacktestConfig",
    "BacktestResult",
    "BlEstimate",
    "BlInputs",
    "FactorFit",
    "FactorPanel",
    "GbmParams",
    "Metrics",
    "MvConfig",
    "PortfolioWeights",
    "PricePanel",
    "RegularizationParams",
    "ReturnPanel",
    "StackedSystem",
    "ViewSet",
    "WindowPolicy",
    "adjust_window",
    "align",
    "apply_turnover_cost",
    "bl_closed_form",
    "bl_elastic_net",
    "compare_strategies",
    "compute_metrics",
    "compute_returns",
    "ewma_covariance",
    "fit_elastic_net",
    "fit_factor_model",
    "flip_prices",
    "generate_views",
    "implied_returns",
    "kkt_residual",
    "load_factor_csv",
    "load_gbm_params_csv",
    "load_price_csv",
    "max_drawdown",
    "run_backtest",
    "sample_covariance",
    "simulate_gbm",
    "solve_mean_variance",
]
