import warnings

import numpy as np
import pytest

from dynbl.errors import DimensionMismatch, Infeasible, NotPsd
from dynbl.optimizer import MvConfig, kkt_residual, objective, repair_psd, solve_mean_variance

from conftest import random_pd


def grid_optimum(mu, sigma, rho, box, step=1e-3):
    """Best objective over the budget plane sampled at ``step`` inside the box (n = 3)."""
    g = np.round(np.arange(-box, box + step / 2, step), 12)
    w1, w2 = np.meshgrid(g, g, indexing="ij")
    w3 = 1.0 - w1 - w2
    ok = np.abs(w3) <= box + 1e-12
    W = np.stack([w1[ok], w2[ok], w3[ok]], axis=1)
    vals = W @ mu - rho * np.einsum("ij,jk,ik->i", W, sigma, W)
    return float(vals.max())


def equality_closed_form(mu, sigma, rho):
    # w = (2 rho Sigma)^-1 (mu + nu 1) with nu from the budget
    A = np.linalg.inv(2 * rho * sigma)
    one = np.ones(mu.size)
    nu = (1 - one @ A @ mu) / (one @ A @ one)
    return A @ (mu + nu * one)


def test_two_asset_closed_form():
    mu = np.array([0.10, 0.05])
    sigma = 0.04 * np.eye(2)
    w = solve_mean_variance(mu, sigma, MvConfig(2.5, 1.0)).w
    # (2 rho Sigma)^-1 = 5 I; 5 (0.10 + nu) + 5 (0.05 + nu) = 1 gives nu = 0.025
    np.testing.assert_allclose(w, [0.625, 0.375], atol=1e-12)
    np.testing.assert_allclose(w, equality_closed_form(mu, sigma, 2.5), atol=1e-12)


def test_symmetric_problem_gives_equal_weights():
    for n in (2, 5, 10):
        w = solve_mean_variance(np.full(n, 0.03), 0.02 * np.eye(n), MvConfig(3.0, 1.0 / n)).w
        np.testing.assert_allclose(w, np.full(n, 1.0 / n), atol=1e-12)
        w = solve_mean_variance(np.full(n, 0.03), 0.02 * np.eye(n), MvConfig(3.0, 0.9)).w
        np.testing.assert_allclose(w, np.full(n, 1.0 / n), atol=1e-12)


def test_grid_search_oracle(rng):
    for _ in range(10):
        mu = rng.normal(0, 0.05, 3)
        sigma = random_pd(rng, 3, 0.1)
        rho = float(rng.uniform(1, 10))
        w = solve_mean_variance(mu, sigma, MvConfig(rho, 0.5)).w
        best = grid_optimum(mu, sigma, rho, 0.5)
        got = objective(w, mu, sigma, rho)
        assert got >= best - 1e-12
        assert got - best < 1e-5


def test_interior_solution_matches_closed_form(rng):
    hits = 0
    for _ in range(200):
        n = int(rng.integers(2, 8))
        mu = rng.normal(0, 0.02, n)
        sigma = random_pd(rng, n, 0.1)
        w_eq = equality_closed_form(mu, sigma, 5.0)
        if np.max(np.abs(w_eq)) >= 0.99:
            continue
        hits += 1
        w = solve_mean_variance(mu, sigma, MvConfig(5.0, 1.0)).w
        np.testing.assert_allclose(w, w_eq, atol=1e-8)
    assert hits > 20


def test_feasibility_and_kkt(rng):
    for _ in range(200):
        n = int(rng.integers(1, 15))
        box = float(rng.uniform(1.0 / n, 1.0))
        mu = rng.normal(0, 0.05, n)
        sigma = random_pd(rng, n, 0.1, cond=1e3)
        cfg = MvConfig(float(rng.uniform(1, 10)), box)
        w = solve_mean_variance(mu, sigma, cfg)
        assert abs(w.w.sum() - 1) < 1e-10
        assert np.max(np.abs(w.w)) <= box + 1e-10
        assert kkt_residual(w, mu, sigma, cfg) < 1e-6


def test_kkt_residual_detects_suboptimal_points():
    mu = np.array([0.10, 0.05])
    sigma = 0.04 * np.eye(2)
    cfg = MvConfig(2.5, 1.0)
    assert kkt_residual([0.5, 0.5], mu, sigma, cfg) > 1e-3
    w = solve_mean_variance(mu, sigma, cfg).w
    base = kkt_residual(w, mu, sigma, cfg)
    assert base < 1e-10
    bumped = w + np.array([1e-3, -1e-3])
    assert kkt_residual(bumped, mu, sigma, cfg) > base


def test_scaling_invariance(rng):
    # (c mu, c rho) has the same maximizer as (mu, rho)
    mu = rng.normal(0, 0.05, 6)
    sigma = random_pd(rng, 6, 0.1)
    w1 = solve_mean_variance(mu, sigma, MvConfig(2.0, 0.3)).w
    w2 = solve_mean_variance(3 * mu, sigma, MvConfig(6.0, 0.3)).w
    np.testing.assert_allclose(w1, w2, atol=1e-9)


def test_deterministic(rng):
    mu = rng.normal(0, 0.05, 8)
    sigma = random_pd(rng, 8, 0.1)
    a = solve_mean_variance(mu, sigma, MvConfig(2.5, 0.2)).w
    b = solve_mean_variance(mu, sigma, MvConfig(2.5, 0.2)).w
    np.testing.assert_array_equal(a, b)


def test_singular_covariance_is_handled():
    mu = np.array([0.01, 0.02, 0.03])
    sigma = np.ones((3, 3)) * 0.01  # rank one
    w = solve_mean_variance(mu, sigma, MvConfig(2.5, 0.5)).w
    assert abs(w.sum() - 1) < 1e-10 and np.max(np.abs(w)) <= 0.5 + 1e-10


def test_errors():
    with pytest.raises(Infeasible):
        solve_mean_variance(np.zeros(5), np.eye(5), MvConfig(2.5, 0.1))
    with pytest.raises(DimensionMismatch):
        solve_mean_variance(np.zeros(3), np.eye(2), MvConfig(2.5, 0.5))
    with pytest.raises(NotPsd):
        repair_psd(np.diag([1.0, -1.0]))
    with pytest.raises(ValueError):
        MvConfig(0.0, 0.5)
    with pytest.raises(ValueError):
        MvConfig(2.5, 0.0)


def test_rho_range_warning():
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        MvConfig(20.0, 0.5)
    assert any("risk aversion" in str(w.message) for w in caught)
