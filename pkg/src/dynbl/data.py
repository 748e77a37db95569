"""Price, return and factor panels plus their CSV readers/writers.

Prices use a wide layout (``date,<ticker>...``); factor files carry the
factor columns of one model and a ``rf`` column, all in decimals.
"""

from __future__ import annotations

import csv
import datetime as dt
import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    DuplicateDate,
    EmptyIntersection,
    MalformedHeader,
    MalformedValue,
    MissingColumn,
    MissingFile,
    NonPositivePrice,
    TooFewRows,
)

FACTOR_MODELS: dict[str, tuple[str, ...]] = {
    "ff5": ("MKTRF", "SMB", "HML", "RMW", "CMA"),
    "carhart4": ("MKTRF", "SMB", "HML", "UMD"),
}


def _model_key(model: str) -> str:
    key = model.lower().replace("-", "").replace("_", "")
    if key not in FACTOR_MODELS:
        raise ValueError(f"unknown factor model {model!r}; expected one of {sorted(FACTOR_MODELS)}")
    return key


def _check_dates(dates: Sequence[dt.date]) -> None:
    for a, b in zip(dates, dates[1:]):
        if b == a:
            raise DuplicateDate(f"duplicate date {a.isoformat()}")
        if b < a:
            raise ValueError("dates must be strictly increasing")


@dataclass(frozen=True)
class PricePanel:
    """Adjusted closing prices, one column per ticker."""

    dates: tuple[dt.date, ...]
    tickers: tuple[str, ...]
    prices: np.ndarray

    def __post_init__(self) -> None:
        prices = np.asarray(self.prices, dtype=float)
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "tickers", tuple(self.tickers))
        if prices.ndim != 2 or prices.shape != (len(self.dates), len(self.tickers)):
            raise DimensionMismatch(
                f"prices shape {prices.shape} does not match {len(self.dates)} dates x {len(self.tickers)} tickers"
            )
        _check_dates(self.dates)
        bad = ~(np.isfinite(prices) & (prices > 0))
        if bad.any():
            r, c = map(int, np.argwhere(bad)[0])
            raise NonPositivePrice(r, self.tickers[c], float(prices[r, c]))
        prices.setflags(write=False)
        object.__setattr__(self, "prices", prices)

    @property
    def n_assets(self) -> int:
        return len(self.tickers)

    def __len__(self) -> int:
        return len(self.dates)


@dataclass(frozen=True)
class ReturnPanel:
    """Simple per-period returns; row t is dated at the later price."""

    dates: tuple[dt.date, ...]
    tickers: tuple[str, ...]
    returns: np.ndarray

    def __post_init__(self) -> None:
        r = np.asarray(self.returns, dtype=float)
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "tickers", tuple(self.tickers))
        if r.ndim != 2 or r.shape != (len(self.dates), len(self.tickers)):
            raise DimensionMismatch(f"returns shape {r.shape} does not match dates/tickers")
        _check_dates(self.dates)
        if not np.all(np.isfinite(r)) or np.any(r <= -1.0):
            raise MalformedValue("returns must be finite and greater than -1")
        r.setflags(write=False)
        object.__setattr__(self, "returns", r)

    def __len__(self) -> int:
        return len(self.dates)

    def take(self, rows) -> "ReturnPanel":
        idx = np.arange(len(self))[rows]
        return ReturnPanel(tuple(self.dates[i] for i in idx), self.tickers, self.returns[idx])


@dataclass(frozen=True)
class FactorPanel:
    """Factor realizations and the per-period risk-free rate."""

    dates: tuple[dt.date, ...]
    factor_names: tuple[str, ...]
    values: np.ndarray
    rf: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=float)
        rf = np.asarray(self.rf, dtype=float)
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "factor_names", tuple(self.factor_names))
        if v.ndim != 2 or v.shape != (len(self.dates), len(self.factor_names)):
            raise DimensionMismatch(f"factor values shape {v.shape} does not match dates/factors")
        if rf.shape != (len(self.dates),):
            raise DimensionMismatch(f"rf shape {rf.shape} does not match {len(self.dates)} dates")
        _check_dates(self.dates)
        if not (np.all(np.isfinite(v)) and np.all(np.isfinite(rf))):
            raise MalformedValue("factor panel entries must be finite")
        v.setflags(write=False)
        rf.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "rf", rf)

    @property
    def n_factors(self) -> int:
        return len(self.factor_names)

    def __len__(self) -> int:
        return len(self.dates)

    def take(self, rows) -> "FactorPanel":
        idx = np.arange(len(self))[rows]
        return FactorPanel(
            tuple(self.dates[i] for i in idx), self.factor_names, self.values[idx], self.rf[idx]
        )


# -- CSV readers -------------------------------------------------------------


def read_rows(path: str | os.PathLike) -> tuple[list[str], list[list[str]]]:
    p = Path(path)
    if not p.is_file():
        raise MissingFile(f"no such file: {p}")
    with p.open(newline="", encoding="utf-8") as fh:
        rows = [row for row in csv.reader(fh) if row and any(cell.strip() for cell in row)]
    if not rows:
        raise MalformedHeader(f"{p}: empty file, header row required")
    header = [h.strip() for h in rows[0]]
    if header and header[0].startswith("﻿"):
        header[0] = header[0][1:]
    return header, rows[1:]


def parse_date(text: str, path, lineno: int) -> dt.date:
    try:
        return dt.date.fromisoformat(text.strip())
    except ValueError:
        raise MalformedValue(f"{path}:{lineno}: bad ISO-8601 date {text!r}") from None


def parse_float(text: str, path, lineno: int, column: str) -> float:
    try:
        value = float(text.strip())
    except ValueError:
        raise MalformedValue(f"{path}:{lineno}: bad number {text!r} in column {column!r}") from None
    if not math.isfinite(value):
        raise MalformedValue(f"{path}:{lineno}: non-finite value in column {column!r}")
    return value


def _sorted_unique(dates: list[dt.date], values: np.ndarray, path) -> tuple[list[dt.date], np.ndarray]:
    order = sorted(range(len(dates)), key=dates.__getitem__)
    dates = [dates[i] for i in order]
    for a, b in zip(dates, dates[1:]):
        if a == b:
            raise DuplicateDate(f"{path}: duplicate date {a.isoformat()}")
    return dates, values[order]


def load_price_csv(path: str | os.PathLike) -> PricePanel:
    """Read a wide price file ``date,<ticker>...`` into a validated panel.

    Rows are re-sorted by date. Missing cells, zero/negative prices and
    repeated dates are errors; nothing is imputed.
    """
    header, rows = read_rows(path)
    if len(header) < 2 or header[0].lower() != "date":
        raise MalformedHeader(f"{path}: first header column must be 'date' followed by tickers")
    tickers = header[1:]
    if len(set(tickers)) != len(tickers) or any(not t for t in tickers):
        raise MalformedHeader(f"{path}: ticker names must be non-empty and unique")
    dates: list[dt.date] = []
    values = np.empty((len(rows), len(tickers)))
    for r, row in enumerate(rows):
        lineno = r + 2
        if len(row) != len(header):
            raise MalformedValue(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
        dates.append(parse_date(row[0], path, lineno))
        for c, cell in enumerate(row[1:]):
            if not cell.strip():
                raise MalformedValue(f"{path}:{lineno}: missing value in column {tickers[c]!r}")
            try:
                values[r, c] = float(cell)
            except ValueError:
                raise MalformedValue(f"{path}:{lineno}: bad number {cell!r} in column {tickers[c]!r}") from None
            if not (math.isfinite(values[r, c]) and values[r, c] > 0):
                raise NonPositivePrice(lineno, tickers[c], values[r, c], str(path))
    dates, values = _sorted_unique(dates, values, path)
    return PricePanel(tuple(dates), tuple(tickers), values)


def load_factor_csv(path: str | os.PathLike, model: str = "ff5") -> FactorPanel:
    """Read ``date,<factors...>,rf`` for the given factor model.

    Columns are returned in the model's canonical order regardless of the
    order in the file; extra columns are ignored.
    """
    names = FACTOR_MODELS[_model_key(model)]
    header, rows = read_rows(path)
    lookup = {h.upper(): i for i, h in enumerate(header)}
    for required in ("DATE", *names, "RF"):
        if required not in lookup:
            raise MissingColumn("rf" if required == "RF" else ("date" if required == "DATE" else required), str(path))
    cols = [lookup[name] for name in names]
    dates: list[dt.date] = []
    values = np.empty((len(rows), len(names)))
    rf = np.empty(len(rows))
    for r, row in enumerate(rows):
        lineno = r + 2
        if len(row) != len(header):
            raise MalformedValue(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
        dates.append(parse_date(row[lookup["DATE"]], path, lineno))
        for j, c in enumerate(cols):
            values[r, j] = parse_float(row[c], path, lineno, names[j])
        rf[r] = parse_float(row[lookup["RF"]], path, lineno, "rf")
    order = sorted(range(len(dates)), key=dates.__getitem__)
    dates = [dates[i] for i in order]
    for a, b in zip(dates, dates[1:]):
        if a == b:
            raise DuplicateDate(f"{path}: duplicate date {a.isoformat()}")
    return FactorPanel(tuple(dates), names, values[order], rf[order])


# -- CSV writers -------------------------------------------------------------


def atomic_write_text(path: str | os.PathLike, text: str) -> None:
    """Write via a temp file in the same directory and rename into place."""
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    tmp = p.with_name(f".{p.name}.tmp{os.getpid()}")
    with tmp.open("w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    os.replace(tmp, p)


def format_price_csv(panel: PricePanel, digits: int = 15) -> str:
    lines = [",".join(("date", *panel.tickers))]
    fmt = f"{{:.{digits}g}}"
    for d, row in zip(panel.dates, panel.prices):
        lines.append(",".join((d.isoformat(), *(fmt.format(x) for x in row))))
    return "\n".join(lines) + "\n"


def write_price_csv(panel: PricePanel, path: str | os.PathLike, digits: int = 15) -> None:
    atomic_write_text(path, format_price_csv(panel, digits))


def write_factor_csv(panel: FactorPanel, path: str | os.PathLike, digits: int = 15) -> None:
    fmt = f"{{:.{digits}g}}"
    lines = [",".join(("date", *panel.factor_names, "rf"))]
    for d, row, rf in zip(panel.dates, panel.values, panel.rf):
        lines.append(",".join((d.isoformat(), *(fmt.format(x) for x in row), fmt.format(rf))))
    atomic_write_text(path, "\n".join(lines) + "\n")


# -- transforms --------------------------------------------------------------


def compute_returns(p: PricePanel) -> ReturnPanel:
    """Simple returns ``prices[t+1] / prices[t] - 1``, dated at ``t+1``."""
    if len(p) < 2:
        raise TooFewRows(f"need at least 2 price rows to compute returns, got {len(p)}")
    r = p.prices[1:] / p.prices[:-1] - 1.0
    return ReturnPanel(p.dates[1:], p.tickers, r)


def align(r: ReturnPanel, f: FactorPanel) -> tuple[ReturnPanel, FactorPanel]:
    """Restrict both panels to their common dates."""
    common = sorted(set(r.dates) & set(f.dates))
    if len(common) < 2:
        raise EmptyIntersection(
            f"return and factor panels share {len(common)} dates; at least 2 required"
        )
    if len(common) == len(r) == len(f):
        return r, f
    keep = set(common)
    ri = [i for i, d in enumerate(r.dates) if d in keep]
    fi = [i for i, d in enumerate(f.dates) if d in keep]
    return r.take(ri), f.take(fi)
