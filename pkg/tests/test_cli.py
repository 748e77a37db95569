import csv
import json
import shutil

import numpy as np
import pytest

from dynbl.cli import main
from dynbl.data import load_price_csv


@pytest.fixture
def workspace(tmp_path, fixtures_dir):
    for name in ("synthetic_prices.csv", "synthetic_ff5.csv", "synthetic_carhart4.csv", "fixture_ff5.json"):
        shutil.copy(fixtures_dir / name, tmp_path / name)
    return tmp_path


def write_config(ws, **changes):
    data = json.loads((ws / "fixture_ff5.json").read_text())
    data.update(changes)
    path = ws / "run.json"
    path.write_text(json.dumps(data))
    return path


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_backtest_happy_path(workspace, capsys):
    out = workspace / "bt"
    assert main(["backtest", "--config", str(workspace / "fixture_ff5.json"), "--out", str(out)]) == 0
    for name in ("trajectory.csv", "metrics.csv", "window_history.csv"):
        assert (out / name).is_file()
    traj = read_csv(out / "trajectory.csv")
    assert traj[0] == ["date", "account_value", "M", "trigger"]
    assert len(traj) > 600
    assert "dynamic_bl" in capsys.readouterr().out


def test_output_dir_from_config_is_relative_to_config(workspace):
    assert main(["backtest", "--config", str(workspace / "fixture_ff5.json")]) == 0
    assert (workspace / "out_ff5" / "trajectory.csv").is_file()


def test_unknown_key_is_named(workspace, capsys):
    cfg = write_config(workspace, regularization={"lamda1": 0.5, "lambda2": 0.5})
    assert main(["backtest", "--config", str(cfg)]) == 1
    err = capsys.readouterr().err
    assert "lamda1" in err and len(err.strip().splitlines()) == 1


def test_missing_config_is_config_error(workspace):
    assert main(["backtest", "--config", str(workspace / "nope.json")]) == 1


def test_zero_price_is_data_error(workspace, capsys):
    lines = (workspace / "synthetic_prices.csv").read_text().splitlines()
    fields = lines[5].split(",")
    fields[2] = "0.0"
    lines[5] = ",".join(fields)
    (workspace / "bad.csv").write_text("\n".join(lines) + "\n")
    cfg = write_config(workspace, prices="bad.csv")
    assert main(["backtest", "--config", str(cfg)]) == 2
    assert len(capsys.readouterr().err.strip().splitlines()) == 1


def test_numerical_failure_exit_code(workspace, monkeypatch, capsys):
    import dynbl.cli as cli
    from dynbl.errors import NotPsd

    def boom(*args, **kwargs):
        raise NotPsd("covariance has a negative eigenvalue")

    monkeypatch.setattr(cli, "run_backtest", boom)
    assert main(["backtest", "--config", str(workspace / "fixture_ff5.json")]) == 3
    assert "negative eigenvalue" in capsys.readouterr().err


def test_compare_table_and_determinism(workspace):
    cfg = str(workspace / "fixture_ff5.json")
    assert main(["compare", "--config", cfg, "--out", str(workspace / "a")]) == 0
    assert main(["compare", "--config", cfg, "--out", str(workspace / "b")]) == 0
    a = (workspace / "a" / "summary.csv").read_bytes()
    assert a == (workspace / "b" / "summary.csv").read_bytes()
    rows = read_csv(workspace / "a" / "summary.csv")
    assert len(rows) == 5
    for row in rows[1:]:
        nums = [float(x) for x in row[1:]]
        assert len(nums) == 8 and all(np.isfinite(nums))


def test_compare_fee_override(workspace):
    cfg = str(workspace / "fixture_ff5.json")
    assert main(["compare", "--config", cfg, "--fee-rate", "0", "--out", str(workspace / "f0")]) == 0
    assert main(["compare", "--config", cfg, "--fee-rate", "0.01", "--out", str(workspace / "f1")]) == 0
    i = read_csv(workspace / "f0" / "summary.csv")[0].index("total_fees")
    assert all(float(r[i]) == 0 for r in read_csv(workspace / "f0" / "summary.csv")[1:])
    assert all(float(r[i]) > 0 for r in read_csv(workspace / "f1" / "summary.csv")[1:])


def test_carhart_config(workspace):
    cfg = write_config(workspace, factors="synthetic_carhart4.csv", factor_model="carhart4")
    assert main(["backtest", "--config", str(cfg), "--out", str(workspace / "c4")]) == 0


def test_simulate(workspace):
    out = workspace / "sim"
    args = ["simulate", "--out", str(out), "--paths", "3", "--seed", "7", "--steps", "20", "--tickers", "AAPL,TSLA"]
    assert main(args) == 0
    files = sorted(out.glob("path_*.csv"))
    assert len(files) == 3
    first = files[0].read_bytes()
    assert main(args) == 0
    assert files[0].read_bytes() == first
    panel = load_price_csv(files[0])
    assert panel.tickers == ("AAPL", "TSLA") and panel.prices.shape == (21, 2)


def test_simulate_zero_vol(workspace):
    params = workspace / "p.csv"
    params.write_text("ticker,drift,vol\nX,5%,0%\n")
    assert main(["simulate", str(params), "--out", str(workspace / "z"), "--steps", "5"]) == 0
    panel = load_price_csv(workspace / "z" / "path_00000.csv")
    np.testing.assert_allclose(panel.prices[:, 0], 100 * np.exp(0.05 * np.arange(6) / 252), rtol=1e-14)


def test_simulate_errors(workspace):
    assert main(["simulate", "--paths", "1"]) == 1
    assert main(["simulate", "--out", str(workspace / "s"), "--tickers", "NOPE"]) == 1
    params = workspace / "neg.csv"
    params.write_text("ticker,drift,vol\nX,5%,-5%\n")
    assert main(["simulate", str(params), "--out", str(workspace / "s")]) == 2


def test_flip_commands(workspace):
    src = workspace / "three.csv"
    src.write_text("date,A\n2021-01-04,100\n2021-01-05,120\n2021-01-06,90\n")
    assert main(["flip", str(src), str(workspace / "f1.csv")]) == 0
    assert load_price_csv(workspace / "f1.csv").prices[:, 0].tolist() == [90.0, 120.0, 100.0]
    assert main(["flip", str(workspace / "f1.csv"), "--out", str(workspace / "f2.csv")]) == 0
    assert load_price_csv(workspace / "f2.csv").prices[:, 0].tolist() == [100.0, 120.0, 90.0]

    prices = workspace / "synthetic_prices.csv"
    assert main(["flip", str(prices), str(workspace / "p1.csv")]) == 0
    assert main(["flip", str(workspace / "p1.csv"), str(workspace / "p2.csv")]) == 0
    np.testing.assert_array_equal(load_price_csv(workspace / "p2.csv").prices, load_price_csv(prices).prices)

    single = workspace / "one.csv"
    single.write_text("date,A,B\n2021-01-04,1.5,2.5\n")
    assert main(["flip", str(single), str(workspace / "one_f.csv")]) == 0
    assert load_price_csv(workspace / "one_f.csv").prices.tolist() == [[1.5, 2.5]]


def test_metrics_command(workspace, capsys):
    traj = workspace / "t.csv"
    traj.write_text("date,account_value\n2021-01-04,100\n2021-01-05,120\n2021-01-06,90\n2021-01-07,110\n")
    assert main(["metrics", str(traj), "--out", str(workspace / "m.csv")]) == 0
    rows = read_csv(workspace / "m.csv")
    assert float(rows[1][rows[0].index("max_drawdown_pct")]) == pytest.approx(25.0)
    capsys.readouterr()
    bad = workspace / "bad_t.csv"
    bad.write_text("date,value\n2021-01-04,1\n")
    assert main(["metrics", str(bad)]) == 2


def test_usage_error_is_config_error():
    with pytest.raises(SystemExit) as exc:
        main(["backtest"])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        main(["simulate", "--paths", "many"])
    assert exc.value.code == 1
