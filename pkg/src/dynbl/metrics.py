"""Performance statistics of an account-value trajectory."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, EmptySeries, ZeroVolatility

TRADING_DAYS = 252


@dataclass(frozen=True)
class Metrics:
    """Daily excess-return statistics.

    When the excess returns have zero volatility the Sharpe ratios are
    reported as ``+inf``/``-inf`` following the sign of the mean, or ``0.0``
    when the mean is zero as well.
    """

    mean_excess_daily: float
    vol_daily: float
    sharpe_daily: float
    sharpe_annualized: float
    max_drawdown: float


def max_drawdown(account_values) -> float:
    """Largest peak-to-trough decline as a fraction of the running peak."""
    v = np.asarray(account_values, dtype=float)
    if v.size == 0:
        raise EmptySeries("empty account-value series")
    if np.any(v <= 0) or not np.all(np.isfinite(v)):
        raise ValueError("account values must be positive and finite")
    peak = np.maximum.accumulate(v)
    return float(np.max((peak - v) / peak))


def compute_metrics(portfolio_returns, rf, account_values, *, strict: bool = False) -> Metrics:
    """Excess-return mean, volatility, Sharpe ratios and max drawdown.

    ``strict=True`` raises ``ZeroVolatility`` instead of returning the
    infinite Sharpe sentinel.
    """
    r = np.asarray(portfolio_returns, dtype=float).reshape(-1)
    rf = np.asarray(rf, dtype=float).reshape(-1)
    if r.shape != rf.shape:
        raise DimensionMismatch(f"{r.size} returns but {rf.size} risk-free rates")
    if r.size == 0:
        raise EmptySeries("no returns to evaluate")
    excess = r - rf
    mean = float(excess.mean())
    vol = float(excess.std(ddof=1)) if excess.size > 1 else 0.0
    dd = max_drawdown(account_values)
    if vol == 0.0 or vol <= 1e-12 * abs(mean):
        if strict:
            raise ZeroVolatility("excess returns have zero volatility; Sharpe ratio undefined")
        sharpe = math.copysign(math.inf, mean) if mean != 0.0 else 0.0
        vol = 0.0
    else:
        sharpe = mean / vol
    return Metrics(mean, vol, sharpe, sharpe * math.sqrt(TRADING_DAYS), dd)
