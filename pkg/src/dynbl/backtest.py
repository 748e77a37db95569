"""Rolling-window backtests of the dynamic Black-Litterman strategy.

Each block estimates on the last ``M`` return rows, trades once at the close
of the last estimation day and then holds the resulting share quantities for
the next ``M`` days. After a full block the window length is resized from
the ratio of this block's realized volatility to the previous block's.
"""

from __future__ import annotations

import datetime as dt
import math
from dataclasses import dataclass, field, replace
from typing import Literal

import numpy as np

from . import black_litterman as bl
from .data import FactorPanel, PricePanel, ReturnPanel, align, compute_returns
from .errors import (
    DataError,
    DimensionMismatch,
    DynBLError,
    InsufficientData,
    NumericalError,
)
from .factor_model import (
    DEFAULT_VARIANCE_FLOOR,
    RegularizationParams,
    fit_factor_model,
    generate_views,
)
from .metrics import Metrics, compute_metrics
from .optimizer import MvConfig, PortfolioWeights, solve_mean_variance

MODES = ("dynamic_bl", "dynamic_mv_no_bl", "static_mv", "market_equal_weight")
Trigger = Literal["shrink", "grow", "hold"]


@dataclass(frozen=True)
class WindowPolicy:
    m_init: int = 60
    h: float = 0.1
    c_minus: float = 0.16
    c_plus: float = 1.16
    m_min: int | None = None  # None -> number of factors + 5
    m_max: int = 252

    def __post_init__(self) -> None:
        if not 0 < self.h < 1:
            raise ValueError("h must lie in (0, 1)")
        if not 0 < self.c_minus < 1:
            raise ValueError("c_minus must lie in (0, 1)")
        if not self.c_plus >= 1:
            raise ValueError("c_plus must be >= 1")
        if self.m_min is not None and not self.m_min <= self.m_init:
            raise ValueError("m_min must not exceed m_init")
        if not self.m_init <= self.m_max:
            raise ValueError("m_init must not exceed m_max")

    def resolved(self, n_factors: int) -> "WindowPolicy":
        """Fill in ``m_min`` and check it against the factor count."""
        m_min = n_factors + 5 if self.m_min is None else self.m_min
        if m_min < n_factors + 2:
            raise ValueError(f"m_min={m_min} is below the {n_factors + 2} rows a {n_factors}-factor fit needs")
        if m_min > self.m_init:
            raise ValueError(f"m_min={m_min} exceeds m_init={self.m_init}")
        return replace(self, m_min=m_min)


@dataclass(frozen=True)
class BacktestConfig:
    window: WindowPolicy = field(default_factory=WindowPolicy)
    reg: RegularizationParams = field(default_factory=RegularizationParams)
    eta: float = 0.94
    tau: float = bl.DEFAULT_TAU
    mv: MvConfig = field(default_factory=MvConfig)
    fee_rate: float = 0.01
    initial_cash: float = 1_000_000.0
    mode: str = "dynamic_bl"
    # penalty for the posterior-mean fit; None reuses ``reg``
    bl_reg: RegularizationParams | None = None
    variance_floor: float = DEFAULT_VARIANCE_FLOOR
    max_views: int | None = None
    ew_daily_rebalance: bool = False

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        if not 0 <= self.fee_rate < 1:
            raise ValueError("fee_rate must lie in [0, 1)")
        if not self.initial_cash > 0:
            raise ValueError("initial_cash must be positive")
        if not 0 <= self.eta <= 1:
            raise ValueError("eta must lie in [0, 1]")
        if not self.tau > 0:
            raise ValueError("tau must be positive")


@dataclass
class BacktestResult:
    mode: str
    tickers: tuple[str, ...]
    dates: tuple[dt.date, ...]
    account_values: np.ndarray
    fees: np.ndarray
    window_sizes: np.ndarray
    triggers: tuple[str, ...]
    asset_returns: np.ndarray  # row k: returns from dates[k] to dates[k + 1]
    held_weights: np.ndarray  # row k: weights held over that same interval
    rf: np.ndarray  # aligned with asset_returns
    weight_history: list[tuple[dt.date, PortfolioWeights]]
    window_history: list[tuple[dt.date, int, str]]
    metrics: Metrics
    total_fees: float

    @property
    def portfolio_returns(self) -> np.ndarray:
        v = self.account_values
        return v[1:] / v[:-1] - 1.0

    @property
    def resize_events(self) -> int:
        return sum(1 for _, _, trig in self.window_history if trig != "hold")


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def adjust_window(sigma_now: float, sigma_prev: float, policy: WindowPolicy, m: int) -> tuple[int, Trigger]:
    """Resize the window from the change in realized block volatility.

    Shrinks by ``c_minus`` when volatility rose by at least ``h``, grows by
    ``c_plus`` when it fell by at least ``h``, and otherwise keeps ``m``. A
    triggered resize moves by at least one row, and the result is clamped to
    ``[m_min, m_max]``.
    """
    if sigma_now < 0 or sigma_prev < 0:
        raise ValueError("volatilities must be non-negative")
    m_min = policy.m_min if policy.m_min is not None else 1
    if sigma_now == sigma_prev:
        new, trig = m, "hold"
    elif sigma_now >= (1 + policy.h) * sigma_prev:
        new, trig = min(round_half_up((1 - policy.c_minus) * m), m - 1), "shrink"
    elif sigma_now <= (1 - policy.h) * sigma_prev:
        new, trig = max(round_half_up(policy.c_plus * m), m + 1), "grow"
    else:
        new, trig = m, "hold"
    return min(max(new, m_min), policy.m_max), trig


def apply_turnover_cost(prev_holdings, new_holdings, fee_rate: float) -> float:
    """Proportional fee on the total currency value traded."""
    prev = np.asarray(prev_holdings, dtype=float)
    new = np.asarray(new_holdings, dtype=float)
    if prev.shape != new.shape:
        raise DimensionMismatch(f"holdings shapes differ: {prev.shape} vs {new.shape}")
    if not 0 <= fee_rate < 1:
        raise ValueError("fee_rate must lie in [0, 1)")
    if fee_rate == 0:
        return 0.0
    return float(fee_rate * np.abs(new - prev).sum())


def _rebalance(holdings: np.ndarray, value: float, w: np.ndarray, fee_rate: float) -> tuple[np.ndarray, float]:
    """Trade to weights ``w`` paying the fee out of the account.

    The fee depends on the post-fee holdings, so it is found by fixed-point
    iteration; the map contracts at rate ``fee_rate * ||w||_1``.
    """
    if fee_rate == 0:
        return w * value, 0.0
    if fee_rate * np.abs(w).sum() >= 1:
        raise NumericalError("fee rate too large for the gross exposure; turnover fee has no fixed point")
    fee = apply_turnover_cost(holdings, w * value, fee_rate)
    for _ in range(500):
        new_fee = apply_turnover_cost(holdings, w * (value - fee), fee_rate)
        if abs(new_fee - fee) <= 1e-15 * value:
            fee = new_fee
            break
        fee = new_fee
    return w * (value - fee), fee


def _wrap(exc: DynBLError, date: dt.date) -> DynBLError:
    cls = DataError if isinstance(exc, DataError) else NumericalError
    return cls(f"{date.isoformat()}: {exc}")


class _Estimator:
    def __init__(self, cfg: BacktestConfig, returns: ReturnPanel, factors: FactorPanel, w_mkt: np.ndarray):
        self.cfg = cfg
        self.returns = returns
        self.factors = factors
        self.w_mkt = w_mkt

    def weights(self, lo: int, hi: int) -> np.ndarray:
        cfg = self.cfg
        n = self.returns.returns.shape[1]
        if cfg.mode == "market_equal_weight":
            return np.full(n, 1.0 / n)
        window = self.returns.returns[lo:hi]
        if cfg.mode in ("static_mv", "dynamic_mv_no_bl"):
            mu = window.mean(axis=0)
            sigma = bl.sample_covariance(window)
            return solve_mean_variance(mu, sigma, cfg.mv).w
        fw = self.factors.values[lo:hi]
        fit = fit_factor_model(window, fw, cfg.reg)
        views = generate_views(fit, fw[-1], variance_floor=cfg.variance_floor, max_views=cfg.max_views)
        sigma = bl.sample_covariance(window)
        pi = bl.implied_returns(sigma, self.w_mkt, cfg.mv.rho)
        inputs = bl.BlInputs(pi, sigma, cfg.tau, views)
        mu = bl.bl_elastic_net(bl.StackedSystem.from_inputs(inputs), cfg.bl_reg or cfg.reg)
        sigma_hat = bl.bl_closed_form(inputs).sigma_hat
        sigma_ewma = bl.ewma_covariance(sigma_hat, window[-1], cfg.eta)
        return solve_mean_variance(mu, sigma_ewma, cfg.mv).w


def run_backtest(
    cfg: BacktestConfig,
    prices: PricePanel,
    factors: FactorPanel,
    w_mkt=None,
) -> BacktestResult:
    """Run one strategy over the aligned price and factor history.

    Parameters
    ----------
    cfg : BacktestConfig
    prices : PricePanel
    factors : FactorPanel
        Factor realizations and risk-free rate, dated like the returns.
    w_mkt : array-like, optional
        Market weights for the equilibrium prior; equal weights if omitted.

    Returns
    -------
    BacktestResult
        The trajectory starts at the close of the first estimation window,
        right after the initial allocation.
    """
    returns, factors = align(compute_returns(prices), factors)
    R = returns.returns
    T, n = R.shape
    policy = cfg.window.resolved(factors.n_factors)
    if T < policy.m_init + 1:
        raise InsufficientData(
            f"{T} aligned return rows; need at least m_init + 1 = {policy.m_init + 1}"
        )
    if w_mkt is None:
        w_mkt = np.full(n, 1.0 / n)
    else:
        w_mkt = np.asarray(w_mkt, dtype=float)
        if w_mkt.shape != (n,):
            raise DimensionMismatch(f"market weights have {w_mkt.size} entries for {n} assets")
    est = _Estimator(cfg, returns, factors, w_mkt)

    t0 = policy.m_init
    n_days = T - t0 + 1  # trajectory points: allocation close + each held day
    values = np.empty(n_days)
    fees = np.zeros(n_days)
    sizes = np.zeros(n_days, dtype=int)
    triggers = [""] * n_days
    held = np.empty((n_days - 1, n))
    weight_history: list[tuple[dt.date, PortfolioWeights]] = []
    window_history: list[tuple[dt.date, int, str]] = []

    holdings = np.zeros(n)
    value = float(cfg.initial_cash)
    t, m = t0, policy.m_init
    trigger: str = "hold"
    prev_sigma: float | None = None
    single_block = cfg.mode == "static_mv" or (cfg.mode == "market_equal_weight" and not cfg.ew_daily_rebalance)
    daily = cfg.mode == "market_equal_weight" and cfg.ew_daily_rebalance
    w = None
    while t < T:
        date = returns.dates[t - 1]
        k = t - t0  # trajectory index of the rebalance close
        try:
            if w is None or not (single_block or daily):
                w = est.weights(max(0, t - m), t)
        except DynBLError as exc:
            raise _wrap(exc, date) from exc
        holdings, fee = _rebalance(holdings, value, w, cfg.fee_rate)
        value -= fee
        values[k] = value
        fees[k] = fee
        weight_history.append((date, PortfolioWeights(w)))
        if not daily:
            window_history.append((date, m, trigger))
        sizes[k], triggers[k] = m, trigger

        end = T if single_block else min(t + (1 if daily else m), T)
        block_returns = np.empty(end - t)
        for s in range(t, end):
            j = s - t0
            held[j] = holdings / value
            block_returns[s - t] = held[j] @ R[s]
            holdings = holdings * (1.0 + R[s])
            value = float(holdings.sum())
            if not value > 0:
                raise NumericalError(f"{returns.dates[s].isoformat()}: account value fell to {value!r}")
            values[j + 1] = value
            sizes[j + 1] = m

        if not (single_block or daily) and end < T:
            sigma = float(block_returns.std(ddof=1))
            if prev_sigma is None:
                trigger = "hold"
            else:
                m, trigger = adjust_window(sigma, prev_sigma, policy, m)
            prev_sigma = sigma
        t = end

    dates = returns.dates[t0 - 1 :]
    rf = factors.rf[t0:]
    port = values[1:] / values[:-1] - 1.0
    metrics = compute_metrics(port, rf, values)
    return BacktestResult(
        mode=cfg.mode,
        tickers=returns.tickers,
        dates=tuple(dates),
        account_values=values,
        fees=fees,
        window_sizes=sizes,
        triggers=tuple(triggers),
        asset_returns=R[t0:].copy(),
        held_weights=held,
        rf=rf.copy(),
        weight_history=weight_history,
        window_history=window_history,
        metrics=metrics,
        total_fees=float(fees.sum()),
    )


@dataclass(frozen=True)
class SummaryRow:
    mode: str
    mean_excess_pct: float
    vol_daily: float
    sharpe_daily: float
    sharpe_annualized: float
    max_drawdown_pct: float
    total_fees: float
    final_value: float
    resize_events: int

    @classmethod
    def from_result(cls, res: BacktestResult) -> "SummaryRow":
        m = res.metrics
        return cls(
            res.mode,
            100.0 * m.mean_excess_daily,
            m.vol_daily,
            m.sharpe_daily,
            m.sharpe_annualized,
            100.0 * m.max_drawdown,
            res.total_fees,
            float(res.account_values[-1]),
            res.resize_events,
        )


SUMMARY_COLUMNS = (
    "mode",
    "mean_excess_pct",
    "vol_daily",
    "sharpe_daily",
    "sharpe_annualized",
    "max_drawdown_pct",
    "total_fees",
    "final_value",
    "resize_events",
)

STRATEGY_ORDER = ("market_equal_weight", "static_mv", "dynamic_mv_no_bl", "dynamic_bl")


def compare_strategies(
    cfg: BacktestConfig,
    prices: PricePanel,
    factors: FactorPanel,
    w_mkt=None,
) -> list[SummaryRow]:
    """Run the four strategies on the same data, one summary row each."""
    return [
        SummaryRow.from_result(run_backtest(replace(cfg, mode=mode), prices, factors, w_mkt))
        for mode in STRATEGY_ORDER
    ]
