"""Per-asset factor regressions and the views they generate."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import FactorPanel, ReturnPanel
from .elastic_net import DEFAULT_MAX_SWEEPS, DEFAULT_TOL, coordinate_descent
from .errors import DimensionMismatch, DynBLError, NonFiniteInput, WindowTooShort

DEFAULT_VARIANCE_FLOOR = 1e-10


@dataclass(frozen=True)
class RegularizationParams:
    """Elastic Net penalty.

    ``lambda1`` and ``lambda2`` are mixing weights summing to 1 (or both 0 to
    switch regularization off); ``strength`` scales the whole penalty.
    """

    lambda1: float = 0.5
    lambda2: float = 0.5
    strength: float = 1.0
    penalize_intercept: bool = True

    def __post_init__(self) -> None:
        for name in ("lambda1", "lambda2", "strength"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be finite and non-negative, got {v!r}")
        total = self.lambda1 + self.lambda2
        if not (total == 0 or math.isclose(total, 1.0, rel_tol=0, abs_tol=1e-12)):
            raise ValueError(f"lambda1 + lambda2 must be 0 or 1, got {total!r}")

    @property
    def l1(self) -> float:
        return self.strength * self.lambda1

    @property
    def l2(self) -> float:
        return self.strength * self.lambda2


OLS = RegularizationParams(0.0, 0.0)


@dataclass(frozen=True)
class FactorFit:
    alpha: np.ndarray
    beta: np.ndarray
    resid_var: np.ndarray

    def __post_init__(self) -> None:
        alpha = np.asarray(self.alpha, dtype=float)
        beta = np.asarray(self.beta, dtype=float)
        resid_var = np.asarray(self.resid_var, dtype=float)
        n = alpha.shape[0]
        if beta.ndim != 2 or beta.shape[0] != n or resid_var.shape != (n,):
            raise DimensionMismatch("alpha, beta and resid_var disagree on the number of assets")
        if np.any(resid_var < 0):
            raise ValueError("residual variances must be non-negative")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "resid_var", resid_var)

    @property
    def n_assets(self) -> int:
        return self.alpha.shape[0]


@dataclass(frozen=True)
class ViewSet:
    """Views ``pick @ mu = q`` with (diagonal) confidence matrix ``omega``."""

    q: np.ndarray
    pick: np.ndarray
    omega: np.ndarray

    def __post_init__(self) -> None:
        q = np.asarray(self.q, dtype=float).reshape(-1)
        pick = np.asarray(self.pick, dtype=float)
        omega = np.asarray(self.omega, dtype=float)
        k = q.shape[0]
        if pick.ndim != 2 or pick.shape[0] != k or omega.shape != (k, k):
            raise DimensionMismatch(
                f"inconsistent view shapes: q {q.shape}, pick {pick.shape}, omega {omega.shape}"
            )
        if k > pick.shape[1]:
            raise ValueError(f"{k} views exceed the {pick.shape[1]} assets")
        if k and not np.allclose(omega, omega.T, rtol=0, atol=1e-15):
            raise ValueError("omega must be symmetric")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "pick", pick)
        object.__setattr__(self, "omega", omega)

    @property
    def k(self) -> int:
        return self.q.shape[0]

    @classmethod
    def empty(cls, n: int) -> "ViewSet":
        return cls(np.zeros(0), np.zeros((0, n)), np.zeros((0, 0)))


def fit_elastic_net(
    X,
    y,
    reg: RegularizationParams = OLS,
    *,
    tol: float = DEFAULT_TOL,
    max_iters: int = DEFAULT_MAX_SWEEPS,
    return_info: bool = False,
):
    """Elastic Net regression of ``y`` on ``X`` with an intercept.

    Minimizes ``||y - (a + X b)||^2 + strength * (lambda2 * ||[a; b]||^2 +
    lambda1 * ||[a; b]||_1)``. The intercept is penalized together with the
    slopes unless ``reg.penalize_intercept`` is false.

    Returns
    -------
    ndarray, shape (p + 1,)
        Intercept followed by the slope coefficients. With
        ``return_info=True`` a ``(coef, DescentInfo)`` pair is returned.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or y.shape != (X.shape[0],):
        raise DimensionMismatch(f"X shape {X.shape} incompatible with y shape {y.shape}")
    if X.shape[0] < 2:
        raise ValueError("need at least 2 observations")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise NonFiniteInput("non-finite entries in regression inputs")
    Z = np.column_stack([np.ones(X.shape[0]), X])
    l1 = np.full(Z.shape[1], reg.l1)
    l2 = np.full(Z.shape[1], reg.l2)
    if not reg.penalize_intercept:
        l1[0] = l2[0] = 0.0
    coef, info = coordinate_descent(Z, y, l1, l2, tol=tol, max_sweeps=max_iters, record=return_info)
    if return_info:
        return coef, info
    return coef


class AssetFitError(DynBLError):
    """Wraps a regression failure with the offending asset."""

    def __init__(self, index: int, ticker: str | None, cause: Exception):
        self.index = index
        self.cause = cause
        label = f"{index} ({ticker})" if ticker else str(index)
        super().__init__(f"factor regression failed for asset {label}: {cause}")


def fit_factor_model(
    r: ReturnPanel | np.ndarray,
    f: FactorPanel | np.ndarray,
    reg: RegularizationParams = OLS,
    **kwargs,
) -> FactorFit:
    """Fit ``r_i = alpha_i + F beta_i + eps_i`` for every asset column.

    ``r`` and ``f`` are the estimation window (already aligned). Residual
    variances use the ``M - 1`` denominator.
    """
    R = r.returns if isinstance(r, ReturnPanel) else np.asarray(r, dtype=float)
    F = f.values if isinstance(f, FactorPanel) else np.asarray(f, dtype=float)
    tickers = r.tickers if isinstance(r, ReturnPanel) else None
    if R.ndim != 2 or F.ndim != 2 or R.shape[0] != F.shape[0]:
        raise DimensionMismatch(f"returns {R.shape} and factors {F.shape} are not aligned")
    m, n = R.shape
    j = F.shape[1]
    if m < j + 2:
        raise WindowTooShort(f"window of {m} rows is too short for {j} factors (need {j + 2})")

    alpha = np.empty(n)
    beta = np.empty((n, j))
    resid_var = np.empty(n)
    for i in range(n):
        y = R[:, i]
        try:
            coef = fit_elastic_net(F, y, reg, **kwargs)
        except DynBLError as exc:
            raise AssetFitError(i, tickers[i] if tickers else None, exc) from exc
        alpha[i] = coef[0]
        beta[i] = coef[1:]
        resid = y - coef[0] - F @ coef[1:]
        resid_var[i] = resid.var(ddof=1)
    return FactorFit(alpha, beta, resid_var)


def generate_views(
    fit: FactorFit,
    f_current,
    *,
    variance_floor: float = DEFAULT_VARIANCE_FLOOR,
    max_views: int | None = None,
) -> ViewSet:
    """Absolute per-asset views from the fitted factor model.

    ``q = alpha + beta @ f_current`` with an identity pick matrix and
    ``omega = diag(max(resid_var, variance_floor))``. ``max_views`` keeps only
    the assets with the smallest residual variance.
    """
    f_current = np.asarray(f_current, dtype=float).reshape(-1)
    if f_current.shape != (fit.beta.shape[1],):
        raise DimensionMismatch(f"f_current has {f_current.size} entries, expected {fit.beta.shape[1]}")
    if not np.all(np.isfinite(f_current)):
        raise NonFiniteInput("f_current must be finite")
    n = fit.n_assets
    q = fit.alpha + fit.beta @ f_current
    var = np.maximum(fit.resid_var, variance_floor)
    keep = np.arange(n)
    if max_views is not None and max_views < n:
        if max_views < 0:
            raise ValueError("max_views must be non-negative")
        keep = np.sort(np.argsort(var, kind="stable")[:max_views])
    pick = np.eye(n)[keep]
    return ViewSet(q[keep], pick, np.diag(var[keep]))
