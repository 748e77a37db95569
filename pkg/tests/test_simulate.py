import datetime as dt

import numpy as np
import pytest

from dynbl.errors import NegativeVol
from dynbl.metrics import compute_metrics
from dynbl.simulate import (
    GbmParams,
    default_params_path,
    business_days,
    flip_prices,
    load_gbm_params_csv,
    simulate_gbm,
    simulate_log_paths,
)

from conftest import make_prices


def test_zero_vol_is_deterministic():
    p = GbmParams(("A", "B"), [0.05, -0.02], [0.0, 0.0], [100.0, 50.0], horizon_steps=20)
    panel = simulate_gbm(p)[0]
    t = np.arange(21)[:, None] / 252
    np.testing.assert_allclose(panel.prices, np.array([100.0, 50.0]) * np.exp(np.array([0.05, -0.02]) * t), rtol=1e-14)


def test_aapl_moments():
    params = load_gbm_params_csv(default_params_path(), n_paths=2000, horizon_steps=252, seed=11).subset(["AAPL"])
    logs = simulate_log_paths(params)[:, :, 0]
    mu, sig = 0.00744, 0.3694
    terminal = logs[:, -1]
    se = terminal.std(ddof=1) / np.sqrt(terminal.size)
    assert abs(terminal.mean() - (mu - 0.5 * sig**2)) < 3 * se
    steps = np.diff(logs, axis=1)
    assert abs(steps.var(ddof=1) / (sig**2 / 252) - 1) < 0.05


def test_determinism_and_path_independence():
    p = GbmParams(("A", "B", "C"), 0.05, 0.3, 100.0, horizon_steps=30, n_paths=5, seed=99)
    a = simulate_gbm(p)
    b = simulate_gbm(p)
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x.prices, y.prices)
    # any single path is reproducible on its own and in any order
    only = simulate_gbm(p, path_indices=[3, 1])
    np.testing.assert_array_equal(only[0].prices, a[3].prices)
    np.testing.assert_array_equal(only[1].prices, a[1].prices)
    # dropping an asset does not change the others
    sub = simulate_gbm(p.subset(["A", "B"]))
    np.testing.assert_array_equal(sub[0].prices, a[0].prices[:, :2])
    other = simulate_gbm(GbmParams(("A", "B", "C"), 0.05, 0.3, 100.0, horizon_steps=30, n_paths=1, seed=100))
    assert not np.array_equal(other[0].prices, a[0].prices)


def test_business_days():
    d = business_days(dt.date(2020, 1, 3), 3)
    assert d == (dt.date(2020, 1, 3), dt.date(2020, 1, 6), dt.date(2020, 1, 7))


def test_params_csv_examples(tmp_path):
    p = load_gbm_params_csv(default_params_path())
    i = p.tickers.index("AAPL")
    assert p.drift_annual[i] == pytest.approx(0.00744, abs=1e-15)
    assert p.vol_annual[i] == pytest.approx(0.3694, abs=1e-15)
    j = p.tickers.index("TSLA")
    assert p.drift_annual[j] == pytest.approx(0.014, abs=1e-15)
    assert p.vol_annual[j] == pytest.approx(0.7226, abs=1e-15)
    assert len(p.tickers) >= 100

    f = tmp_path / "p.csv"
    f.write_text("ticker,drift_pct,vol_pct,s0\nX,1.5,20,42\n")
    q = load_gbm_params_csv(f)
    assert q.drift_annual[0] == pytest.approx(0.015) and q.vol_annual[0] == pytest.approx(0.2)
    assert q.s0[0] == 42.0

    f.write_text("ticker,drift,vol\nX,1%,-5%\n")
    with pytest.raises(NegativeVol):
        load_gbm_params_csv(f)
    with pytest.raises(NegativeVol):
        GbmParams(("X",), 0.0, -0.1, 1.0)


def test_flip():
    panel = make_prices([100.0, 120.0, 90.0])
    flipped = flip_prices(panel)
    np.testing.assert_array_equal(flipped.prices[:, 0], [90.0, 120.0, 100.0])
    assert flipped.dates == panel.dates
    single = make_prices([[5.0, 6.0]])
    np.testing.assert_array_equal(flip_prices(single).prices, single.prices)


def test_flip_involution(rng):
    for _ in range(100):
        T, n = int(rng.integers(1, 40)), int(rng.integers(1, 6))
        panel = make_prices(np.exp(rng.normal(0, 0.1, (T, n))) * 100)
        twice = flip_prices(flip_prices(panel))
        np.testing.assert_array_equal(twice.prices, panel.prices)
        assert twice.dates == panel.dates and twice.tickers == panel.tickers


def test_flip_turns_rally_into_drawdown():
    v = np.linspace(100, 150, 30)
    r = v[1:] / v[:-1] - 1
    assert compute_metrics(r, np.zeros(29), v).max_drawdown == 0.0
    fv = v[::-1]
    fr = fv[1:] / fv[:-1] - 1
    assert compute_metrics(fr, np.zeros(29), fv).max_drawdown > 0.0
