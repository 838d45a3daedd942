import json
import os

import numpy as np
import pytest

from cpcast.cli import main
from cpcast.runstore import RunStore

MARKET = {"n_advertisers": 5, "n_clusters": 2, "n_days": 240, "seed": 5,
          "start_date": "2020-01-01"}
GRID = {"grid": [["snaive", "univar"], ["gbdt", "multivar"]],
        "horizons": [7], "encoder": 28, "seed": 0,
        "config_overrides": {
            "gbdt": {"gbdt": {"rounds": 8, "depth": 2, "lr": 0.2, "reg_lambda": 1.0,
                              "gamma": 0.0, "min_child": 2.0, "lags": [1, 7]}}}}


def write_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh)
    return str(path)


@pytest.fixture()
def run(tmp_path):
    cfg = write_json(tmp_path / "market.json", MARKET)
    out = str(tmp_path / "run")
    assert main(["simulate", "--config", cfg, "--out", out]) == 0
    return out, tmp_path


def test_simulate_then_cluster_writes_distance_assignment(run):
    out, _ = run
    assert main(["cluster", "--run", out, "--method", "dist", "--k", "2"]) == 0
    with open(os.path.join(out, "clusters.json")) as fh:
        record = json.load(fh)
    assert record["method"] == "distance"
    assert len(record["labels"]) == 5


def test_backtest_untrained_run_exits_one(run, capsys):
    out, _ = run
    assert main(["backtest", "--run", out]) == 1
    assert "no trained models" in capsys.readouterr().err


def test_train_then_backtest_writes_reports(run):
    out, tmp = run
    grid = write_json(tmp / "grid.json", GRID)
    assert main(["train", "--run", out, "--grid", grid]) == 0
    assert main(["backtest", "--run", out]) == 0
    store = RunStore.open(out)
    summary = store.read_report_csv("summary.csv")
    assert {r["config"] for r in summary} == {"snaive.univar", "gbdt.multivar"}
    detail = store.read_report_csv("backtest.csv")
    assert len(detail) == 2 * 5  # configs x advertisers


def test_whatif_cli_prints_delta(run, tmp_path, capsys):
    out, tmp = run
    grid = write_json(tmp / "grid.json", GRID)
    assert main(["train", "--run", out, "--grid", grid]) == 0
    store = RunStore.open(out)
    panel = store.panel()
    start = panel.dates[-1] + np.timedelta64(1, "D")
    plan = {"config_tag": "gbdt.multivar", "horizon": 7,
            "budget_plan": [{"date": str(start + np.timedelta64(i, "D")),
                             "amount": 9000.0} for i in range(7)]}
    plan_path = write_json(tmp_path / "plan.json", plan)
    capsys.readouterr()  # drain training progress output
    assert main(["whatif", "--run", out, "--advertiser", "adv000",
                 "--plan", plan_path]) == 0
    body = json.loads(capsys.readouterr().out)
    assert "delta" in body and len(body["delta"]) == 7


def test_unknown_flag_exits_one(capsys):
    assert main(["cluster", "--run", "x", "--nonsense"]) == 1
    assert "usage" in capsys.readouterr().err


def test_unknown_command_exits_one():
    assert main(["transmogrify"]) == 1


def test_ingest_round_trip(tmp_path):
    cfg = write_json(tmp_path / "market.json", MARKET)
    sim_out = str(tmp_path / "sim")
    assert main(["simulate", "--config", cfg, "--out", sim_out]) == 0
    csv_path = os.path.join(sim_out, "dataset.csv")
    ing_out = str(tmp_path / "ingested")
    assert main(["ingest", "--csv", csv_path, "--out", ing_out]) == 0
    a = RunStore.open(sim_out).panel()
    b = RunStore.open(ing_out).panel()
    assert a.ids() == b.ids()
    for aid in a.ids():
        assert np.allclose(a[aid].cpc, b[aid].cpc)


def test_end_to_end_determinism_small(tmp_path):
    cfg = write_json(tmp_path / "market.json", MARKET)
    grid = write_json(tmp_path / "grid.json", GRID)
    outputs = []
    for name in ("runA", "runB"):
        out = str(tmp_path / name)
        assert main(["simulate", "--config", cfg, "--out", out]) == 0
        assert main(["cluster", "--run", out, "--method", "cat"]) == 0
        assert main(["train", "--run", out, "--grid", grid]) == 0
        assert main(["backtest", "--run", out]) == 0
        with open(os.path.join(out, "reports", "summary.csv"), "rb") as fh:
            outputs.append(fh.read())
    assert outputs[0] == outputs[1]


def test_manifest_tamper_detected(run):
    out, _ = run
    store = RunStore.open(out)
    payload = store.read_config()
    payload["config"]["market"]["seed"] = 999
    with open(store.config_path, "w") as fh:
        json.dump(payload, fh)
    with pytest.raises(ValueError, match="manifest"):
        RunStore.open(out)


def test_robustness_requires_shocked_run(run, capsys):
    out, _ = run
    assert main(["robustness", "--run", out]) == 1
    assert "shock" in capsys.readouterr().err
