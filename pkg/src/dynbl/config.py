"""Strict JSON run configuration for the command-line tools.

Relative paths are resolved against the directory of the config file.
Unknown keys are rejected so that a typo never silently falls back to a
default.

Example::

    {
      "prices": "prices.csv",
      "factors": "ff5.csv",
      "factor_model": "ff5",
      "output_dir": "out",
      "mode": "dynamic_bl",
      "window": {"m_init": 60, "h": 0.1, "c_minus": 0.16, "c_plus": 1.16},
      "regularization": {"lambda1": 0.5, "lambda2": 0.5, "strength": 1.0},
      "rho": 2.5, "box": 0.1, "tau": 0.025, "eta": 0.94, "fee_rate": 0.01
    }
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any

import numpy as np

from .backtest import BacktestConfig, WindowPolicy
from .data import FACTOR_MODELS, read_rows
from .errors import ConfigError, DataError, MalformedValue
from .factor_model import RegularizationParams
from .optimizer import MvConfig

_WINDOW_KEYS = {"m_init", "h", "c_minus", "c_plus", "m_min", "m_max"}
_REG_KEYS = {"lambda1", "lambda2", "strength", "penalize_intercept"}
_TOP_KEYS = {
    "prices",
    "factors",
    "factor_model",
    "cap_weights",
    "output_dir",
    "mode",
    "window",
    "regularization",
    "bl_regularization",
    "eta",
    "tau",
    "rho",
    "box",
    "fee_rate",
    "initial_cash",
    "variance_floor",
    "max_views",
    "ew_daily_rebalance",
}
_PATH_KEYS = ("prices", "factors", "cap_weights")


@dataclass(frozen=True)
class RunConfig:
    backtest: BacktestConfig
    prices: Path
    factors: Path
    factor_model: str = "ff5"
    cap_weights: Path | None = None
    output_dir: Path = Path("out")

    def with_overrides(self, *, fee_rate: float | None = None, output_dir: str | os.PathLike | None = None) -> "RunConfig":
        cfg = self
        if fee_rate is not None:
            try:
                cfg = replace(cfg, backtest=replace(cfg.backtest, fee_rate=fee_rate))
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
        if output_dir is not None:
            cfg = replace(cfg, output_dir=Path(output_dir))
        return cfg


def _check_keys(section: str, data: Any, allowed: set[str]) -> dict:
    if not isinstance(data, dict):
        raise ConfigError(f"{section}: expected an object, got {type(data).__name__}")
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise ConfigError(f"{section}: unknown key(s) {', '.join(repr(k) for k in unknown)}")
    return data


def _regularization(section: str, data: Any) -> RegularizationParams:
    data = _check_keys(section, data, _REG_KEYS)
    try:
        return RegularizationParams(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{section}: {exc}") from None


def parse_config(data: Any, base_dir: str | os.PathLike = ".") -> RunConfig:
    data = _check_keys("config", data, _TOP_KEYS)
    base = Path(base_dir)
    for key in ("prices", "factors"):
        if key not in data:
            raise ConfigError(f"config: missing required key {key!r}")
    paths: dict[str, Path | None] = {}
    for key in _PATH_KEYS:
        raw = data.get(key)
        if raw is None:
            paths[key] = None
            continue
        if not isinstance(raw, str):
            raise ConfigError(f"config: {key!r} must be a path string")
        p = Path(raw)
        p = p if p.is_absolute() else base / p
        if not p.is_file():
            raise ConfigError(f"config: {key!r} file does not exist: {p}")
        paths[key] = p

    model = str(data.get("factor_model", "ff5")).lower()
    if model not in FACTOR_MODELS:
        raise ConfigError(f"config: factor_model must be one of {sorted(FACTOR_MODELS)}, got {model!r}")

    try:
        window = WindowPolicy(**_check_keys("window", data.get("window", {}), _WINDOW_KEYS))
        reg = _regularization("regularization", data.get("regularization", {}))
        bl_reg = data.get("bl_regularization")
        bl_reg = None if bl_reg is None else _regularization("bl_regularization", bl_reg)
        mv = MvConfig(rho=float(data.get("rho", 2.5)), box=float(data.get("box", 0.1)))
        extra = {
            key: data[key]
            for key in ("eta", "tau", "fee_rate", "initial_cash", "mode", "variance_floor", "max_views", "ew_daily_rebalance")
            if key in data
        }
        bt = BacktestConfig(window=window, reg=reg, mv=mv, bl_reg=bl_reg, **extra)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"config: {exc}") from None

    out = data.get("output_dir", "out")
    out = Path(out) if Path(out).is_absolute() else base / out
    return RunConfig(bt, paths["prices"], paths["factors"], model, paths["cap_weights"], out)


def load_config(path: str | os.PathLike) -> RunConfig:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file does not exist: {p}")
    try:
        data = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{p}: invalid JSON: {exc}") from None
    return parse_config(data, p.parent)


def load_cap_weights(path: str | os.PathLike, tickers) -> np.ndarray:
    """Read ``ticker,weight`` rows and return weights in ``tickers`` order, summing to 1."""
    header, rows = read_rows(path)
    if [h.lower() for h in header[:2]] != ["ticker", "weight"]:
        raise DataError(f"{path}: header must be 'ticker,weight'")
    weights = {}
    for i, row in enumerate(rows):
        try:
            weights[row[0].strip()] = float(row[1])
        except (IndexError, ValueError):
            raise MalformedValue(f"{path}:{i + 2}: bad row {row!r}") from None
    missing = [t for t in tickers if t not in weights]
    if missing:
        raise DataError(f"{path}: no cap weight for {', '.join(missing)}")
    w = np.array([weights[t] for t in tickers])
    if np.any(w < 0) or w.sum() <= 0:
        raise DataError(f"{path}: cap weights must be non-negative with a positive total")
    return w / w.sum()
