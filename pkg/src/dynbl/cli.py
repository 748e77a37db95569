"""Command-line interface.

Exit codes: 0 success, 1 configuration error, 2 data error, 3 numerical
failure. Every failure prints a single diagnostic line on stderr. Numbers in
output files are written with 10 significant digits.
"""

from __future__ import annotations

import argparse
import csv
import datetime as dt
import io
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from .backtest import SUMMARY_COLUMNS, BacktestResult, compare_strategies, run_backtest
from .config import RunConfig, load_cap_weights, load_config
from .data import atomic_write_text, format_price_csv, load_factor_csv, load_price_csv
from .errors import ConfigError, DataError, DynBLError, MalformedHeader, MalformedValue, NumericalError
from .metrics import Metrics, compute_metrics
from .simulate import default_params_path, flip_prices, load_gbm_params_csv, simulate_gbm

DIGITS = 10


def fmt(x) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return f"{float(x):.{DIGITS}g}"


def _csv_text(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


METRIC_COLUMNS = ("mean_excess_pct", "vol_daily", "sharpe_daily", "sharpe_annualized", "max_drawdown_pct")


def _metric_row(m: Metrics) -> list[str]:
    return [
        fmt(100 * m.mean_excess_daily),
        fmt(m.vol_daily),
        fmt(m.sharpe_daily),
        fmt(m.sharpe_annualized),
        fmt(100 * m.max_drawdown),
    ]


def trajectory_csv(res: BacktestResult) -> str:
    rows = [
        [d.isoformat(), fmt(v), str(int(m)), trig]
        for d, v, m, trig in zip(res.dates, res.account_values, res.window_sizes, res.triggers)
    ]
    return _csv_text(("date", "account_value", "M", "trigger"), rows)


def window_history_csv(res: BacktestResult) -> str:
    return _csv_text(("date", "M", "trigger"), [[d.isoformat(), str(m), t] for d, m, t in res.window_history])


def metrics_csv(res: BacktestResult) -> str:
    row = [res.mode, *_metric_row(res.metrics), fmt(res.total_fees), fmt(res.account_values[-1])]
    return _csv_text(("mode", *METRIC_COLUMNS, "total_fees", "final_value"), [row])


def weights_csv(res: BacktestResult) -> str:
    rows = [[d.isoformat(), *(fmt(x) for x in w.w)] for d, w in res.weight_history]
    return _csv_text(("date", *res.tickers), rows)


def summary_csv(rows) -> str:
    out = []
    for r in rows:
        out.append([r.mode, *(fmt(getattr(r, c)) for c in SUMMARY_COLUMNS[1:])])
    return _csv_text(SUMMARY_COLUMNS, out)


def _load_inputs(cfg: RunConfig):
    prices = load_price_csv(cfg.prices)
    factors = load_factor_csv(cfg.factors, cfg.factor_model)
    w_mkt = load_cap_weights(cfg.cap_weights, prices.tickers) if cfg.cap_weights else None
    return prices, factors, w_mkt


def cmd_backtest(args) -> int:
    cfg = load_config(args.config).with_overrides(fee_rate=args.fee_rate, output_dir=args.out)
    prices, factors, w_mkt = _load_inputs(cfg)
    res = run_backtest(cfg.backtest, prices, factors, w_mkt)
    out = cfg.output_dir
    atomic_write_text(out / "trajectory.csv", trajectory_csv(res))
    atomic_write_text(out / "metrics.csv", metrics_csv(res))
    atomic_write_text(out / "window_history.csv", window_history_csv(res))
    atomic_write_text(out / "weights.csv", weights_csv(res))
    print(metrics_csv(res), end="")
    return 0


def cmd_compare(args) -> int:
    cfg = load_config(args.config).with_overrides(fee_rate=args.fee_rate, output_dir=args.out)
    prices, factors, w_mkt = _load_inputs(cfg)
    rows = compare_strategies(cfg.backtest, prices, factors, w_mkt)
    text = summary_csv(rows)
    atomic_write_text(cfg.output_dir / "summary.csv", text)
    print(text, end="")
    return 0


def cmd_simulate(args) -> int:
    overrides = {"n_paths": args.paths, "seed": args.seed, "horizon_steps": args.steps}
    params_path = args.params or default_params_path()
    try:
        params = load_gbm_params_csv(params_path, **overrides)
    except ValueError as exc:
        if isinstance(exc, DynBLError):
            raise
        raise ConfigError(str(exc)) from None
    if args.tickers:
        names = [t.strip() for t in args.tickers.split(",") if t.strip()]
        unknown = [t for t in names if t not in params.tickers]
        if unknown:
            raise ConfigError(f"unknown ticker(s): {', '.join(unknown)}")
        params = params.subset(names)
    out = Path(args.out)
    start = dt.date.fromisoformat(args.start)
    width = max(5, len(str(params.n_paths - 1)))
    for i in range(params.n_paths):
        (panel,) = simulate_gbm(params, start, path_indices=[i])
        atomic_write_text(out / f"path_{i:0{width}d}.csv", format_price_csv(panel))
    return 0


def cmd_flip(args) -> int:
    out = args.out_path or args.out
    if not out:
        raise ConfigError("flip needs an output path")
    panel = load_price_csv(args.prices)
    atomic_write_text(out, format_price_csv(flip_prices(panel)))
    return 0


def _load_trajectory(path):
    from .data import parse_date, parse_float, read_rows

    header, rows = read_rows(path)
    cols = [h.lower() for h in header]
    if "date" not in cols or "account_value" not in cols:
        raise MalformedHeader(f"{path}: need 'date' and 'account_value' columns")
    di, vi = cols.index("date"), cols.index("account_value")
    dates = [parse_date(r[di], path, i + 2) for i, r in enumerate(rows)]
    values = np.array([parse_float(r[vi], path, i + 2, "account_value") for i, r in enumerate(rows)])
    if len(values) < 2:
        raise MalformedValue(f"{path}: need at least 2 account values")
    if np.any(values <= 0):
        raise MalformedValue(f"{path}: account values must be positive")
    return dates, values


def cmd_metrics(args) -> int:
    dates, values = _load_trajectory(args.trajectory)
    rf = np.zeros(len(values) - 1)
    if args.factors:
        factors = load_factor_csv(args.factors, args.factor_model)
        lookup = dict(zip(factors.dates, factors.rf))
        missing = [d for d in dates[1:] if d not in lookup]
        if missing:
            raise DataError(f"{args.factors}: no risk-free rate for {missing[0].isoformat()}")
        rf = np.array([lookup[d] for d in dates[1:]])
    m = compute_metrics(values[1:] / values[:-1] - 1.0, rf, values)
    text = _csv_text(METRIC_COLUMNS, [_metric_row(m)])
    if args.out:
        atomic_write_text(args.out, text)
    print(text, end="")
    return 0


class _Parser(argparse.ArgumentParser):
    # usage errors are configuration errors (exit 1), not argparse's default 2
    def error(self, message):
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dynbl", description="Dynamic Black-Litterman portfolio backtester")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=False):
        if config:
            p.add_argument("--config", required=True, help="JSON run configuration")
            p.add_argument("--fee-rate", type=float, default=None, help="override the turnover fee rate")
        p.add_argument("--out", default=None, help="output directory or file")
        p.add_argument("--seed", type=int, default=0, help="random seed (simulation only)")

    p = sub.add_parser("backtest", help="run one strategy and write its trajectory")
    common(p, config=True)
    p.set_defaults(func=cmd_backtest)

    p = sub.add_parser("compare", help="run all four strategies and write a summary table")
    common(p, config=True)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("simulate", help="generate GBM price panels")
    p.add_argument("params", nargs="?", default=None, help="ticker,drift,vol CSV (default: shipped parameter table)")
    common(p)
    p.add_argument("--paths", type=int, default=1)
    p.add_argument("--steps", type=int, default=252)
    p.add_argument("--tickers", default=None, help="comma-separated subset of tickers")
    p.add_argument("--start", default="2020-01-02", help="first date (ISO-8601)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("flip", help="reverse price series in time")
    p.add_argument("prices")
    p.add_argument("out_path", nargs="?", default=None)
    common(p)
    p.set_defaults(func=cmd_flip)

    p = sub.add_parser("metrics", help="performance metrics of a trajectory CSV")
    p.add_argument("trajectory")
    p.add_argument("--factors", default=None, help="factor CSV supplying rf")
    p.add_argument("--factor-model", default="ff5")
    common(p)
    p.set_defaults(func=cmd_metrics)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "simulate" and args.out is None:
            raise ConfigError("simulate needs --out DIR")
        return args.func(args)
    except ConfigError as exc:
        code, msg = 1, exc
    except DataError as exc:
        code, msg = 2, exc
    except (NumericalError, DynBLError) as exc:
        code, msg = 3, exc
    except (ValueError, OSError) as exc:
        code, msg = 1, exc
    print(f"dynbl {args.command}: error: {str(msg).splitlines()[0] if str(msg) else type(msg).__name__}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
