"""Regenerate the synthetic desk-scale fixtures shipped in src/dynbl/fixtures/.

Prices: 10 independent GBM assets using the shipped drift/volatility table.
Factors: a seeded synthetic daily factor history with slowly varying
volatility regimes, written once per factor model.
"""

import json
from pathlib import Path

import numpy as np

from dynbl.data import FACTOR_MODELS, FactorPanel, write_factor_csv, write_price_csv
from dynbl.simulate import default_params_path, load_gbm_params_csv, simulate_gbm

OUT = Path(__file__).resolve().parents[1] / "src" / "dynbl" / "fixtures"
TICKERS = ["AAPL", "MSFT", "JPM", "JNJ", "XOM", "PG", "KO", "GOOGL", "UNH", "TSLA"]
N_RETURNS = 756
SEED = 20200102

FACTOR_MEAN = {"MKTRF": 4e-4, "SMB": 0.0, "HML": -1e-4, "RMW": 1e-4, "CMA": 0.0, "UMD": 2e-4}
FACTOR_VOL = {"MKTRF": 0.012, "SMB": 0.006, "HML": 0.008, "RMW": 0.005, "CMA": 0.004, "UMD": 0.009}


def main() -> None:
    params = load_gbm_params_csv(default_params_path(), horizon_steps=N_RETURNS, n_paths=1, seed=SEED)
    (prices,) = simulate_gbm(params.subset(TICKERS))
    write_price_csv(prices, OUT / "synthetic_prices.csv")

    rng = np.random.default_rng(SEED)
    t = np.arange(len(prices.dates))
    regime = 1.0 + 0.6 * np.sin(2 * np.pi * t / 180.0) ** 2
    names = list(FACTOR_MEAN)
    raw = np.column_stack(
        [FACTOR_MEAN[k] + FACTOR_VOL[k] * regime * rng.standard_normal(t.size) for k in names]
    )
    rf = 5e-5 + 2e-5 * np.sin(2 * np.pi * t / 500.0)
    for model, cols in FACTOR_MODELS.items():
        idx = [names.index(c) for c in cols]
        panel = FactorPanel(prices.dates, cols, raw[:, idx], rf)
        write_factor_csv(panel, OUT / f"synthetic_{model}.csv")

    for model in FACTOR_MODELS:
        cfg = {
            "prices": "synthetic_prices.csv",
            "factors": f"synthetic_{model}.csv",
            "factor_model": model,
            "output_dir": f"out_{model}",
            "mode": "dynamic_bl",
            "window": {"m_init": 60, "h": 0.1, "c_minus": 0.16, "c_plus": 1.16, "m_max": 252},
            "regularization": {"lambda1": 0.5, "lambda2": 0.5, "strength": 1e-4},
            "bl_regularization": {"lambda1": 0.5, "lambda2": 0.5, "strength": 1.0},
            "rho": 2.5,
            "box": 0.25,
            "tau": 0.025,
            "eta": 0.94,
            "fee_rate": 0.01,
            "initial_cash": 1000000,
        }
        (OUT / f"fixture_{model}.json").write_text(json.dumps(cfg, indent=2) + "\n")


if __name__ == "__main__":
    main()
