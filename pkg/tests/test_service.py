import json
import threading
import urllib.error
import urllib.request
from http.server import ThreadingHTTPServer

import numpy as np
import pytest

from cpcast import pipeline, service
from cpcast.cluster import category_clusters, distance_clusters
from cpcast.models import fit
from cpcast.runstore import RunStore
from cpcast.simgen import MarketConfig, simulate


@pytest.fixture(scope="module")
def run_dir(tmp_path_factory):
    root = str(tmp_path_factory.mktemp("run"))
    panel, truth = simulate(MarketConfig(n_advertisers=5, n_clusters=2, n_days=320, seed=9))
    store = RunStore.create(root, {"market": {"seed": 9}}, panel, truth)
    store.save_clusters(category_clusters(panel))
    store.save_clusters(distance_clusters(panel, seed=0, k=2))

    origin = panel.dates[-1] + np.timedelta64(1, "D")
    overrides = {"hidden": 8, "heads": 2, "epochs": 3, "max_windows": 4}
    aid = panel.ids()[0]
    jobs = [(aid, "tft", "multivar.comp.dist", 14, 90),
            (aid, "tft", "multivar", 14, 90),
            (aid, "lstm", "univar", 14, 28)]
    for advertiser, kind, comp, horizon, encoder in jobs:
        composition = pipeline.CompositionKind(comp)
        clusters = store.load_clusters().get(composition.cluster_method) \
            if composition.cluster_method else None
        model_input = pipeline.compose(panel, advertiser, composition, clusters,
                                       origin=origin, horizon=horizon)
        config = pipeline.make_config(kind, horizon, encoder, 0, overrides)
        store.save_model(advertiser, pipeline.config_tag(kind, comp), horizon,
                         fit(model_input, config))
    store.update_config(experiment={"horizons": [14], "encoder": 90, "seed": 0})

    report = pipeline.backtest(panel, [("snaive", "univar")], horizons=(7,),
                               encoder=28, origin=panel.dates[-7])
    store.save_report_csv("backtest.csv", report.detail_rows(),
                          ["config", "horizon", "advertiser", "mae", "smape"])
    store.save_report_csv("summary.csv", report.summary_rows(),
                          ["config", "horizon", "mae_mean", "mae_std",
                           "smape_mean", "smape_std"])
    return root


@pytest.fixture(scope="module")
def svc(run_dir):
    return service.PlannerService(RunStore.open(run_dir))


def test_list_advertisers_matches_panel(svc):
    body = svc.list_advertisers()
    service.validate_schema(body, service.SCHEMAS["advertisers"])
    assert len(body["advertisers"]) == 5


def test_history_spans_panel_range(svc):
    body = svc.history("adv000")
    service.validate_schema(body, service.SCHEMAS["history"])
    assert len(body["dates"]) == 320
    assert body["dates"][0] == str(svc.panel.dates[0])
    assert body["dates"][-1] == str(svc.panel.dates[-1])


def test_history_unknown_advertiser_404(svc):
    with pytest.raises(service.ServiceError) as err:
        svc.history("nope")
    assert err.value.status == 404


def test_clusters_cover_every_advertiser_with_contingency(svc):
    body = svc.cluster_view()
    service.validate_schema(body, service.SCHEMAS["clusters"])
    for record in body["assignments"].values():
        assert set(record["labels"]) == set(svc.panel.ids())
    dist = body["contingency_vs_category"]["distance"]
    assert np.asarray(dist["table"]).sum() == 5


def test_backtest_report_round_trip(svc):
    body = svc.backtest_report()
    service.validate_schema(body, service.SCHEMAS["backtest_report"])
    assert body["summary"][0]["config"] == "snaive.univar"
    assert len(body["detail"]) == 5


def test_forecast_without_plan_has_no_delta(svc):
    body = svc.forecast({"advertiser_id": "adv000", "config_tag": "tft.multivar.comp.dist",
                         "horizon": 14})
    service.validate_schema(body, service.SCHEMAS["forecast"])
    assert "delta" not in body and "scenario" not in body
    assert len(body["point"]) == 14


def test_forecast_attention_length_is_encoder_90(svc):
    body = svc.forecast({"advertiser_id": "adv000", "config_tag": "tft.multivar",
                         "horizon": 14})
    assert len(body["attention"]) == 90


def test_identity_plan_gives_zero_delta(svc):
    base = svc.forecast({"advertiser_id": "adv000", "config_tag": "tft.multivar",
                         "horizon": 14})
    model_input = svc._compose_current("adv000", "multivar", 14)
    stored = model_input.known_future[model_input.n_days:, 0]
    plan = [{"date": d, "amount": float(v)} for d, v in zip(base["dates"], stored)]
    body = svc.forecast({"advertiser_id": "adv000", "config_tag": "tft.multivar",
                         "horizon": 14, "budget_plan": plan})
    assert body["delta"] == [0.0] * 14
    assert body["scenario"]["dates"] == body["dates"]


def test_repeated_requests_identical(svc):
    req = {"advertiser_id": "adv000", "config_tag": "tft.multivar.comp.dist", "horizon": 14}
    assert svc.forecast(req) == svc.forecast(req)


def test_univariate_model_with_plan_is_422(svc):
    plan = [{"date": "2020-12-01", "amount": 10.0}]
    with pytest.raises(service.ServiceError) as err:
        svc.forecast({"advertiser_id": "adv000", "config_tag": "lstm.univar",
                      "horizon": 14, "budget_plan": plan})
    assert err.value.status == 422
    assert "no budget channel" in str(err.value)


def test_unknown_advertiser_forecast_404(svc):
    with pytest.raises(service.ServiceError) as err:
        svc.forecast({"advertiser_id": "ghost", "config_tag": "tft.multivar", "horizon": 14})
    assert err.value.status == 404


def test_unconfigured_horizon_rejected(svc):
    with pytest.raises(service.ServiceError) as err:
        svc.forecast({"advertiser_id": "adv000", "config_tag": "tft.multivar", "horizon": 60})
    assert err.value.status == 422


def test_malformed_request_rejected(svc):
    with pytest.raises(service.ServiceError) as err:
        svc.forecast({"advertiser_id": "adv000"})
    assert err.value.status == 400


def test_non_contiguous_plan_rejected(svc):
    base = svc.forecast({"advertiser_id": "adv000", "config_tag": "tft.multivar",
                         "horizon": 14})
    plan = [{"date": base["dates"][0], "amount": 1.0},
            {"date": base["dates"][2], "amount": 1.0}]
    with pytest.raises(service.ServiceError) as err:
        svc.forecast({"advertiser_id": "adv000", "config_tag": "tft.multivar",
                      "horizon": 14, "budget_plan": plan})
    assert err.value.status == 422


def test_plan_outside_horizon_rejected(svc):
    with pytest.raises(service.ServiceError) as err:
        svc.forecast({"advertiser_id": "adv000", "config_tag": "tft.multivar",
                      "horizon": 14, "budget_plan": [{"date": "2031-01-01", "amount": 1.0}]})
    assert err.value.status == 422


def test_schema_validator_rejects_bad_payloads():
    with pytest.raises(service.SchemaError, match="missing required"):
        service.validate_schema({}, service.SCHEMAS["advertisers"])
    with pytest.raises(service.SchemaError, match="expected number"):
        service.validate_schema({"advertiser_id": "a", "config_tag": "b",
                                 "horizon": 7,
                                 "budget_plan": [{"date": "x", "amount": "y"}]},
                                service.SCHEMAS["forecast_request"])


def test_http_round_trip(run_dir):
    svc_obj = service.PlannerService(RunStore.open(run_dir))
    server = ThreadingHTTPServer(("127.0.0.1", 0), service.make_handler(svc_obj))
    port = server.server_address[1]
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        with urllib.request.urlopen(f"http://127.0.0.1:{port}/advertisers") as resp:
            assert resp.status == 200
            assert resp.headers["Content-Type"].startswith("application/json")
            body = json.load(resp)
        assert len(body["advertisers"]) == 5

        req = urllib.request.Request(
            f"http://127.0.0.1:{port}/forecast",
            data=json.dumps({"advertiser_id": "adv000", "config_tag": "tft.multivar",
                             "horizon": 14}).encode(),
            headers={"Content-Type": "application/json"}, method="POST")
        with urllib.request.urlopen(req) as resp:
            fc = json.load(resp)
        assert len(fc["point"]) == 14

        bad = urllib.request.Request(f"http://127.0.0.1:{port}/advertisers/ghost/history")
        with pytest.raises(urllib.error.HTTPError) as err:
            urllib.request.urlopen(bad)
        assert err.value.code == 404
    finally:
        server.shutdown()
        server.server_close()


def test_published_schema_files_match_module():
    import os
    root = os.path.join(os.path.dirname(__file__), "..", "schemas")
    for name, schema in service.SCHEMAS.items():
        with open(os.path.join(root, f"{name}.json")) as fh:
            assert json.load(fh) == schema
