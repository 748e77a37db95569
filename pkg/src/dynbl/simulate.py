"""GBM scenario generation and the price-flip transform."""

from __future__ import annotations

import datetime as dt
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .data import PricePanel, read_rows
from .errors import MalformedHeader, MalformedRow, NegativeVol

TRADING_DAYS = 252
DEFAULT_START = dt.date(2020, 1, 2)


@dataclass(frozen=True)
class GbmParams:
    tickers: tuple[str, ...]
    drift_annual: np.ndarray
    vol_annual: np.ndarray
    s0: np.ndarray
    dt: float = 1.0 / TRADING_DAYS
    horizon_steps: int = TRADING_DAYS
    n_paths: int = 1
    seed: int = 0

    def __post_init__(self) -> None:
        n = len(self.tickers)
        object.__setattr__(self, "tickers", tuple(self.tickers))
        for name in ("drift_annual", "vol_annual", "s0"):
            arr = np.asarray(getattr(self, name), dtype=float).reshape(-1)
            if arr.size == 1 and n > 1:
                arr = np.full(n, arr[0])
            if arr.shape != (n,):
                raise ValueError(f"{name} has {arr.size} entries for {n} tickers")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} must be finite")
            object.__setattr__(self, name, arr)
        if np.any(self.vol_annual < 0):
            raise NegativeVol("volatility must be non-negative")
        if np.any(self.s0 <= 0):
            raise ValueError("initial prices must be positive")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.horizon_steps < 0 or self.n_paths < 1:
            raise ValueError("need horizon_steps >= 0 and n_paths >= 1")

    def subset(self, tickers: Sequence[str]) -> "GbmParams":
        idx = [self.tickers.index(t) for t in tickers]
        return GbmParams(
            tuple(tickers),
            self.drift_annual[idx],
            self.vol_annual[idx],
            self.s0[idx],
            self.dt,
            self.horizon_steps,
            self.n_paths,
            self.seed,
        )


def stream(seed: int, path_index: int, asset_index: int) -> np.random.Generator:
    """Independent generator for one (path, asset) pair.

    The key mixes the run seed with both indices, so a pair's draws do not
    depend on which other pairs are generated or in what order.
    """
    ss = np.random.SeedSequence(seed, spawn_key=(path_index, asset_index))
    return np.random.Generator(np.random.Philox(ss))


def business_days(start: dt.date, count: int) -> tuple[dt.date, ...]:
    days = np.busday_offset(np.datetime64(start, "D"), np.arange(count), roll="forward")
    return tuple(d.astype(object) for d in days)


def simulate_log_paths(params: GbmParams, path_indices: Sequence[int] | None = None) -> np.ndarray:
    """Log-price increments relative to ``s0``: shape (paths, steps + 1, assets)."""
    paths = range(params.n_paths) if path_indices is None else path_indices
    steps = params.horizon_steps
    n = len(params.tickers)
    drift = (params.drift_annual - 0.5 * params.vol_annual**2) * params.dt
    diffusion = params.vol_annual * np.sqrt(params.dt)
    k = np.arange(steps + 1, dtype=float)
    out = np.empty((len(paths), steps + 1, n))
    for p_pos, p in enumerate(paths):
        for a in range(n):
            z = stream(params.seed, p, a).standard_normal(steps)
            cum = np.concatenate([[0.0], np.cumsum(z)])
            out[p_pos, :, a] = drift[a] * k + diffusion[a] * cum
    return out


def simulate_gbm(
    params: GbmParams,
    start: dt.date = DEFAULT_START,
    path_indices: Sequence[int] | None = None,
) -> list[PricePanel]:
    """Exact log-normal GBM price panels, one per path.

    ``S_t = s0 * exp((mu - vol^2 / 2) * dt * t + vol * sqrt(dt) * W_t)`` where
    ``W_t`` is the running sum of standard normal draws.
    """
    logs = simulate_log_paths(params, path_indices)
    dates = business_days(start, params.horizon_steps + 1)
    panels = []
    for lp in logs:
        prices = params.s0 * np.exp(lp)
        if not np.all(prices > 0):
            raise FloatingPointError("simulated price underflowed to zero")
        panels.append(PricePanel(dates, params.tickers, prices))
    return panels


def _parse_rate(text: str, percent: bool, lineno: int, column: str, path) -> float:
    raw = text.strip()
    scale = 1.0
    if raw.endswith("%"):
        raw, scale = raw[:-1].strip(), 0.01
    elif percent:
        scale = 0.01
    try:
        return float(raw) * scale
    except ValueError:
        raise MalformedRow(f"{path}:{lineno}: bad {column} value {text!r}") from None


def load_gbm_params_csv(path: str | os.PathLike, **overrides) -> GbmParams:
    """Read ``ticker,drift,vol[,s0]`` rows of annualized GBM parameters.

    Values may carry a ``%`` suffix; a ``_pct`` suffix on the drift/vol
    header names marks bare numbers as percentages. Keyword overrides set
    the remaining ``GbmParams`` fields (``horizon_steps``, ``n_paths``...).
    """
    header, rows = read_rows(path)
    cols = [h.lower() for h in header]
    if not cols or cols[0] != "ticker":
        raise MalformedHeader(f"{path}: first column must be 'ticker'")

    def find(base):
        for i, c in enumerate(cols):
            if c == base or c == f"{base}_pct":
                return i, c.endswith("_pct")
        raise MalformedHeader(f"{path}: missing column {base!r}")

    di, d_pct = find("drift")
    vi, v_pct = find("vol")
    si = cols.index("s0") if "s0" in cols else None
    tickers, drift, vol, s0 = [], [], [], []
    for r, row in enumerate(rows):
        lineno = r + 2
        if len(row) != len(cols):
            raise MalformedRow(f"{path}:{lineno}: expected {len(cols)} fields, got {len(row)}")
        ticker = row[0].strip()
        if not ticker:
            raise MalformedRow(f"{path}:{lineno}: empty ticker")
        v = _parse_rate(row[vi], v_pct, lineno, "vol", path)
        if v < 0:
            raise NegativeVol(f"{path}:{lineno}: negative volatility for {ticker}")
        tickers.append(ticker)
        drift.append(_parse_rate(row[di], d_pct, lineno, "drift", path))
        vol.append(v)
        if si is None:
            s0.append(100.0)
        else:
            try:
                s0.append(float(row[si]))
            except ValueError:
                raise MalformedRow(f"{path}:{lineno}: bad s0 {row[si]!r}") from None
    if len(set(tickers)) != len(tickers):
        raise MalformedRow(f"{path}: duplicate tickers")
    return GbmParams(tuple(tickers), np.array(drift), np.array(vol), np.array(s0), **overrides)


def flip_prices(p: PricePanel) -> PricePanel:
    """Reverse every price series in time, keeping the dates ascending."""
    return PricePanel(p.dates, p.tickers, p.prices[::-1].copy())


def default_params_path() -> Path:
    return Path(__file__).with_name("fixtures") / "gbm_params.csv"
