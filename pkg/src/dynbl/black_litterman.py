"""Black-Litterman posterior estimates.

Two routes to the posterior mean are provided: the closed form and a
penalized weighted least-squares fit of the stacked system

    [pi; q] = [I; P] mu + eps,   eps ~ N(0, blockdiag(tau * Sigma, Omega)),

which reduces to the closed form when the penalty is switched off.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .data import ReturnPanel
from .elastic_net import coordinate_descent
from .errors import CholeskyFailure, DimensionMismatch, SingularMatrix, WindowTooShort
from .factor_model import OLS, RegularizationParams, ViewSet

DEFAULT_TAU = 0.025
COND_LIMIT = 1e12
COV_JITTER = 1e-8


@dataclass(frozen=True)
class BlInputs:
    pi: np.ndarray
    sigma: np.ndarray
    tau: float
    views: ViewSet

    def __post_init__(self) -> None:
        pi = np.asarray(self.pi, dtype=float).reshape(-1)
        sigma = np.asarray(self.sigma, dtype=float)
        n = pi.shape[0]
        if sigma.shape != (n, n):
            raise DimensionMismatch(f"sigma shape {sigma.shape} does not match {n} assets")
        if self.views.pick.shape[1] != n:
            raise DimensionMismatch(f"views cover {self.views.pick.shape[1]} assets, expected {n}")
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if not np.allclose(sigma, sigma.T, rtol=1e-10, atol=1e-14):
            raise ValueError("sigma must be symmetric")
        object.__setattr__(self, "pi", pi)
        object.__setattr__(self, "sigma", sigma)

    @property
    def q_mat(self) -> np.ndarray:
        """Prior covariance of the implied returns, ``tau * sigma``."""
        return self.tau * self.sigma

    @property
    def n(self) -> int:
        return self.pi.shape[0]


@dataclass(frozen=True)
class StackedSystem:
    y: np.ndarray
    b: np.ndarray
    v: np.ndarray

    def __post_init__(self) -> None:
        y = np.asarray(self.y, dtype=float).reshape(-1)
        b = np.asarray(self.b, dtype=float)
        v = np.asarray(self.v, dtype=float)
        if b.ndim != 2 or b.shape[0] != y.shape[0] or v.shape != (y.shape[0], y.shape[0]):
            raise DimensionMismatch(f"stacked shapes disagree: y {y.shape}, B {b.shape}, V {v.shape}")
        n = b.shape[1]
        if b.shape[0] < n or not np.array_equal(b[:n], np.eye(n)):
            raise ValueError("top block of B must be the identity")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "v", v)

    @property
    def n(self) -> int:
        return self.b.shape[1]

    @classmethod
    def from_inputs(cls, inputs: BlInputs) -> "StackedSystem":
        n, k = inputs.n, inputs.views.k
        v = np.zeros((n + k, n + k))
        v[:n, :n] = inputs.q_mat
        v[n:, n:] = inputs.views.omega
        return cls(
            np.concatenate([inputs.pi, inputs.views.q]),
            np.vstack([np.eye(n), inputs.views.pick]),
            v,
        )


@dataclass(frozen=True)
class BlEstimate:
    mu_hat: np.ndarray
    sigma_hat: np.ndarray


def implied_returns(sigma, w_mkt, rho: float) -> np.ndarray:
    """Equilibrium returns under which ``w_mkt`` maximizes ``mu'w - rho w'Sigma w``.

    Returns ``2 * rho * sigma @ w_mkt``.
    """
    sigma = np.asarray(sigma, dtype=float)
    w = np.asarray(w_mkt, dtype=float).reshape(-1)
    if sigma.shape != (w.size, w.size):
        raise DimensionMismatch(f"sigma shape {sigma.shape} does not match {w.size} weights")
    if not rho > 0:
        raise ValueError("rho must be positive")
    if abs(w.sum() - 1.0) > 1e-8:
        raise ValueError(f"market weights must sum to 1, got {w.sum()!r}")
    return 2.0 * rho * (sigma @ w)


def _view_gain(q_mat, pick, omega):
    """Return ``Q P' (P Q P' + Omega)^-1`` via a Cholesky solve."""
    S = pick @ q_mat @ pick.T + omega
    S = 0.5 * (S + S.T)
    if np.linalg.cond(S) > COND_LIMIT:
        raise SingularMatrix(f"P Q P' + Omega is ill-conditioned (cond > {COND_LIMIT:g})")
    try:
        factor = linalg.cho_factor(S, lower=True)
    except linalg.LinAlgError as exc:
        raise SingularMatrix(f"P Q P' + Omega is not positive definite: {exc}") from None
    return linalg.cho_solve(factor, pick @ q_mat).T


def bl_closed_form(inputs: BlInputs) -> BlEstimate:
    """Closed-form posterior mean and covariance.

    The covariance correction ``(Q^-1 + P' Omega^-1 P)^-1`` is evaluated in
    its equivalent form ``Q - Q P' (P Q P' + Omega)^-1 P Q`` so that only the
    K x K view system is factored.
    """
    views = inputs.views
    Q = inputs.q_mat
    if views.k == 0:
        return BlEstimate(inputs.pi.copy(), inputs.sigma + Q)
    gain = _view_gain(Q, views.pick, views.omega)
    mu = inputs.pi + gain @ (views.q - views.pick @ inputs.pi)
    correction = Q - gain @ views.pick @ Q
    correction = 0.5 * (correction + correction.T)
    return BlEstimate(mu, inputs.sigma + correction)


def _block_cholesky(sys: StackedSystem) -> np.ndarray:
    n = sys.n
    v = 0.5 * (sys.v + sys.v.T)
    blocks = [v]
    if sys.v.shape[0] > n and not np.any(v[:n, n:]):
        blocks = [v[:n, :n], v[n:, n:]]
    factors = []
    for block in blocks:
        try:
            factors.append(linalg.cholesky(block, lower=True))
        except linalg.LinAlgError as exc:
            raise CholeskyFailure(f"V is not positive definite: {exc}") from None
    return linalg.block_diag(*factors)


def bl_elastic_net(sys: StackedSystem, reg: RegularizationParams = OLS, **kwargs) -> np.ndarray:
    """Penalized weighted least-squares posterior mean.

    Minimizes ``(y - B mu)' V^-1 (y - B mu) + strength * (lambda2 ||mu||^2 +
    lambda1 ||mu||_1)`` by whitening with the Cholesky factor of ``V`` and
    running coordinate descent without an intercept.
    """
    L = _block_cholesky(sys)
    y_w = linalg.solve_triangular(L, sys.y, lower=True)
    b_w = linalg.solve_triangular(L, sys.b, lower=True)
    mu, _ = coordinate_descent(b_w, y_w, reg.l1, reg.l2, **kwargs)
    return mu


def ewma_covariance(sigma_hat, r, eta: float) -> np.ndarray:
    """``eta * sigma_hat + (1 - eta) * r r'`` for the latest return vector ``r``."""
    sigma_hat = np.asarray(sigma_hat, dtype=float)
    r = np.asarray(r, dtype=float).reshape(-1)
    if sigma_hat.shape != (r.size, r.size):
        raise DimensionMismatch(f"sigma_hat shape {sigma_hat.shape} does not match return vector of {r.size}")
    if not 0.0 <= eta <= 1.0:
        raise ValueError("eta must lie in [0, 1]")
    if eta == 1.0:
        return sigma_hat.copy()
    if eta == 0.0:
        return np.outer(r, r)
    return eta * sigma_hat + (1.0 - eta) * np.outer(r, r)


def sample_covariance(r: ReturnPanel | np.ndarray, jitter: float = COV_JITTER) -> np.ndarray:
    """Unbiased sample covariance of a return window.

    A ridge ``jitter * I`` is added when the smallest eigenvalue is below
    ``jitter`` (rank-deficient or numerically indefinite windows).
    """
    R = r.returns if isinstance(r, ReturnPanel) else np.asarray(r, dtype=float)
    if R.ndim == 1:
        R = R[:, None]
    if R.shape[0] < 2:
        raise WindowTooShort(f"need at least 2 rows for a sample covariance, got {R.shape[0]}")
    centered = R - R.mean(axis=0)
    cov = centered.T @ centered / (R.shape[0] - 1)
    cov = 0.5 * (cov + cov.T)
    if np.linalg.eigvalsh(cov)[0] < jitter:
        cov = cov + jitter * np.eye(cov.shape[0])
    return cov
