import datetime as dt
from pathlib import Path

import numpy as np
import pytest

from dynbl.data import FactorPanel, PricePanel

FIXTURES = Path(__file__).resolve().parents[1] / "src" / "dynbl" / "fixtures"


def random_pd(rng, n, scale=1.0, cond=50.0):
    """Random SPD matrix with eigenvalues in [scale / cond, scale]."""
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    eig = scale * np.exp(rng.uniform(np.log(1.0 / cond), 0.0, n))
    m = (q * eig) @ q.T
    return 0.5 * (m + m.T)


def bdays(n, start=dt.date(2021, 1, 4)):
    out, d = [], start
    while len(out) < n:
        if d.weekday() < 5:
            out.append(d)
        d += dt.timedelta(days=1)
    return tuple(out)


def make_prices(values, tickers=None, start=dt.date(2021, 1, 4)):
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    tickers = tickers or tuple(f"A{i}" for i in range(values.shape[1]))
    return PricePanel(bdays(values.shape[0], start), tickers, values)


def make_factors(dates, values=None, rf=None, names=("MKTRF", "SMB", "HML", "RMW", "CMA"), seed=7):
    rng = np.random.default_rng(seed)
    if values is None:
        values = 0.01 * rng.standard_normal((len(dates), len(names)))
    if rf is None:
        rf = np.zeros(len(dates))
    return FactorPanel(tuple(dates), names, values, rf)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def fixtures_dir():
    return FIXTURES


# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
