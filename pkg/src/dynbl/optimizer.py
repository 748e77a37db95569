"""Box-constrained mean-variance allocation.

Solves

    max_w  mu'w - rho * w' Sigma w
    s.t.   sum(w) = 1,  -box <= w_i <= box

with a primal active-set method specialised to one budget row plus simple
bounds. Every iterate is feasible, each step solves a small equality-
constrained KKT system on the free coordinates.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DidNotConverge, DimensionMismatch, Infeasible, NotPsd

FEAS_TOL = 1e-10
MAX_ITERS = 50_000
PSD_JITTER = 1e-10


@dataclass(frozen=True)
class MvConfig:
    rho: float = 2.5
    box: float = 0.1

    def __post_init__(self) -> None:
        if not (math.isfinite(self.rho) and self.rho > 0):
            raise ValueError("rho must be positive")
        if not (0 < self.box <= 1):
            raise ValueError("box must lie in (0, 1]")
        if not 1 <= self.rho <= 10:
            warnings.warn(f"risk aversion {self.rho} outside the usual [1, 10] range", stacklevel=3)


@dataclass(frozen=True)
class PortfolioWeights:
    w: np.ndarray

    def __post_init__(self) -> None:
        w = np.asarray(self.w, dtype=float).reshape(-1).copy()
        w.setflags(write=False)
        object.__setattr__(self, "w", w)

    def check(self, box: float | None = None) -> None:
        if abs(self.w.sum() - 1.0) > 1e-8:
            raise AssertionError(f"weights sum to {self.w.sum()!r}, not 1")
        if box is not None and np.max(np.abs(self.w)) > box + FEAS_TOL:
            raise AssertionError(f"weight {np.max(np.abs(self.w))!r} exceeds box {box}")


def objective(w, mu, sigma, rho: float) -> float:
    w = np.asarray(w, dtype=float)
    return float(mu @ w - rho * w @ sigma @ w)


def repair_psd(sigma) -> np.ndarray:
    """Symmetrize and clip negative eigenvalues, then add a tiny jitter."""
    sigma = np.asarray(sigma, dtype=float)
    if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
        raise DimensionMismatch(f"covariance must be square, got {sigma.shape}")
    if not np.all(np.isfinite(sigma)):
        raise NotPsd("covariance has non-finite entries")
    s = 0.5 * (sigma + sigma.T)
    vals, vecs = np.linalg.eigh(s)
    scale = max(1.0, float(np.abs(vals).max(initial=0.0)))
    if vals[0] < -1e-8 * scale:
        raise NotPsd(f"covariance has a negative eigenvalue {vals[0]:.3e}")
    if vals[0] < 0:
        s = (vecs * np.clip(vals, 0.0, None)) @ vecs.T
        s = 0.5 * (s + s.T)
    return s + PSD_JITTER * np.eye(s.shape[0])


def _free_step(H, grad, free):
    """Minimize 0.5 p'Hp + grad'p over p with p_fixed = 0 and sum(p) = 0.

    Returns the step on all coordinates and the budget multiplier.
    """
    f = np.flatnonzero(free)
    k = f.size
    step = np.zeros(grad.size)
    if k == 0:
        return step, None
    kkt = np.zeros((k + 1, k + 1))
    kkt[:k, :k] = H[np.ix_(f, f)]
    kkt[:k, k] = 1.0
    kkt[k, :k] = 1.0
    rhs = np.concatenate([-grad[f], [0.0]])
    sol = np.linalg.solve(kkt, rhs)
    step[f] = sol[:k]
    return step, sol[k]


def _budget_multiplier_interval(g, upper, lower):
    # At a vertex with no free coordinates, nu must satisfy
    # g_i + nu <= 0 on upper bounds and g_i + nu >= 0 on lower bounds.
    hi = np.min(-g[upper]) if upper.any() else np.inf
    lo = np.max(-g[lower]) if lower.any() else -np.inf
    return lo, hi


def solve_mean_variance(mu, sigma, cfg: MvConfig = MvConfig(), *, tol: float = 1e-8,
                        max_iters: int = MAX_ITERS) -> PortfolioWeights:
    """Optimal weights for the box-constrained mean-variance problem."""
    mu = np.asarray(mu, dtype=float).reshape(-1)
    n = mu.size
    sigma = np.asarray(sigma, dtype=float)
    if sigma.shape != (n, n):
        raise DimensionMismatch(f"sigma shape {sigma.shape} does not match {n} expected returns")
    if not np.all(np.isfinite(mu)):
        raise ValueError("expected returns must be finite")
    box = cfg.box
    if n * box < 1 - 1e-12:
        raise Infeasible(f"{n} assets with box {box} cannot satisfy the budget (n * box < 1)")

    # minimize 0.5 w'Hw - mu'w
    H = 2.0 * cfg.rho * repair_psd(sigma)
    w = np.full(n, 1.0 / n)
    at_upper = np.zeros(n, dtype=bool)
    at_lower = np.zeros(n, dtype=bool)
    if n * box <= 1 + 1e-12:
        at_upper[:] = True
        w[:] = box
    scale = max(1.0, float(np.abs(mu).max()), float(np.abs(H).max()))

    for _ in range(max_iters):
        free = ~(at_upper | at_lower)
        grad = H @ w - mu
        step, nu = _free_step(H, grad, free)
        # step towards the subspace minimizer, stopping at the first bound hit
        alpha = 1.0
        block = -1
        for i in np.flatnonzero(free & (step != 0)):
            limit = box if step[i] > 0 else -box
            t = (limit - w[i]) / step[i]
            if t < alpha:
                alpha, block = max(t, 0.0), i
        w = w + alpha * step
        if block >= 0:
            if step[block] > 0:
                w[block] = box
                at_upper[block] = True
            else:
                w[block] = -box
                at_lower[block] = True
            continue
        grad = H @ w - mu
        if nu is None:
            lo, hi = _budget_multiplier_interval(grad, at_upper, at_lower)
            if lo <= hi:
                break
            nu = 0.5 * (lo + hi)
        # multipliers of the active bounds, all >= 0 at the optimum
        lam = np.full(n, np.inf)
        lam[at_upper] = -(grad[at_upper] + nu)
        lam[at_lower] = grad[at_lower] + nu
        j = int(np.argmin(lam))
        if lam[j] >= -tol * scale:
            break
        at_upper[j] = at_lower[j] = False
    else:
        raise DidNotConverge(f"active-set QP did not converge within {max_iters} iterations")

    w = np.clip(w, -box, box)
    free = ~(at_upper | at_lower)
    drift = 1.0 - w.sum()
    if drift != 0.0:
        # push the rounding residue onto coordinates with room to move
        room = np.flatnonzero(free) if free.any() else np.arange(n)
        w[room] += drift / room.size
        w = np.clip(w, -box, box)
    out = PortfolioWeights(w)
    out.check(box)
    return out


def kkt_residual(w, mu, sigma, cfg: MvConfig, *, bound_tol: float = 1e-9) -> float:
    """Max-norm of the stationarity residual at a feasible point.

    The budget multiplier is the least-squares fit over the coordinates
    strictly inside the box; bound multipliers absorb the residual only with
    the sign allowed by their constraint.
    """
    w = np.asarray(w.w if isinstance(w, PortfolioWeights) else w, dtype=float)
    mu = np.asarray(mu, dtype=float)
    sigma = 0.5 * (np.asarray(sigma, dtype=float) + np.asarray(sigma, dtype=float).T)
    box = cfg.box
    # ascent direction of the objective; stationarity: g = nu + lam_up - lam_lo
    g = mu - 2.0 * cfg.rho * sigma @ w
    upper = w >= box - bound_tol
    lower = w <= -box + bound_tol
    free = ~(upper | lower)
    if free.any():
        nu = float(np.mean(g[free]))
    else:
        # nu <= g_i on upper bounds and nu >= g_i on lower bounds
        lo = float(np.max(g[lower])) if lower.any() else -np.inf
        hi = float(np.min(g[upper])) if upper.any() else np.inf
        if np.isfinite(lo) and np.isfinite(hi):
            nu = 0.5 * (lo + hi)
        else:
            nu = lo if np.isfinite(lo) else hi
    resid = g - nu
    resid = np.where(upper, np.minimum(resid, 0.0), resid)
    resid = np.where(lower, np.maximum(resid, 0.0), resid)
    return float(np.max(np.abs(resid)))
