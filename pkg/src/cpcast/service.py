"""Read-only HTTP API over a run directory for the scenario planner.

Endpoints (all JSON, UTF-8):

    GET  /advertisers
    GET  /advertisers/{id}/history
    GET  /clusters
    GET  /reports/backtest
    POST /forecast        {advertiser_id, config_tag, horizon, budget_plan?}

Every response is validated against the schemas in ``SCHEMAS`` (also
published under schemas/ in the repository) before it is sent. The service
never mutates run artifacts; model checkpoints load once into an in-memory
cache guarded by a single writer lock, and repeated identical requests
return identical responses because prediction is deterministic.

What-if semantics: a budget_plan overlays the stored known-future budget
for its contiguous date run; the response then carries the baseline
forecast, the scenario forecast, and their point-forecast delta.
"""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np

from . import pipeline
from .cluster import category_clusters, compare_assignments
from .models import interpret_tft
from .runstore import RunStore

FORECAST_FIELDS = {
    "dates": {"type": "array", "items": {"type": "string"}},
    "point": {"type": "array", "items": {"type": "number"}},
    "quantiles": {"type": "array", "items": {"type": "number"}},
    "quantile_band": {"type": "array",
                      "items": {"type": "array", "items": {"type": "number"}}},
    "encoder_importance": {"type": "object", "values": {"type": "number"}},
    "decoder_importance": {"type": "object", "values": {"type": "number"}},
    "attention": {"type": "array", "items": {"type": "number"}},
    "model_kind": {"type": "string"},
}

SCHEMAS = {
    "advertisers": {
        "type": "object", "required": ["advertisers"],
        "properties": {"advertisers": {
            "type": "array",
            "items": {"type": "object", "required": ["id", "category"],
                      "properties": {"id": {"type": "string"},
                                     "category": {"type": "string"}}}}},
    },
    "history": {
        "type": "object",
        "required": ["id", "category", "dates", "cpc", "adbudget", "adclicks"],
        "properties": {
            "id": {"type": "string"}, "category": {"type": "string"},
            "dates": {"type": "array", "items": {"type": "string"}},
            "cpc": {"type": "array", "items": {"type": "number"}},
            "adbudget": {"type": "array", "items": {"type": "number"}},
            "adclicks": {"type": "array", "items": {"type": "number"}},
            "impressions": {"type": "array", "items": {"type": "number"}},
        },
    },
    "clusters": {
        "type": "object", "required": ["assignments", "contingency_vs_category"],
        "properties": {
            "assignments": {"type": "object", "values": {
                "type": "object", "required": ["method", "k", "labels"],
                "properties": {"method": {"type": "string"},
                               "k": {"type": "integer"},
                               "labels": {"type": "object", "values": {"type": "integer"}},
                               "wcss_by_k": {"type": "object", "values": {"type": "number"}}}}},
            "contingency_vs_category": {"type": "object", "values": {
                "type": "object", "required": ["table", "ari"],
                "properties": {
                    "table": {"type": "array",
                              "items": {"type": "array", "items": {"type": "integer"}}},
                    "ari": {"type": "number"}}}},
        },
    },
    "backtest_report": {
        "type": "object", "required": ["summary", "detail"],
        "properties": {
            "summary": {"type": "array", "items": {
                "type": "object",
                "required": ["config", "horizon", "mae_mean", "smape_mean"],
                "properties": {"config": {"type": "string"},
                               "horizon": {"type": "integer"},
                               "mae_mean": {"type": "number"},
                               "mae_std": {"type": "number"},
                               "smape_mean": {"type": "number"},
                               "smape_std": {"type": "number"}}}},
            "detail": {"type": "array", "items": {
                "type": "object",
                "required": ["config", "horizon", "advertiser", "mae", "smape"],
                "properties": {"config": {"type": "string"},
                               "horizon": {"type": "integer"},
                               "advertiser": {"type": "string"},
                               "mae": {"type": "number"},
                               "smape": {"type": "number"}}}},
        },
    },
    "forecast_request": {
        "type": "object", "required": ["advertiser_id", "config_tag", "horizon"],
        "properties": {
            "advertiser_id": {"type": "string"},
            "config_tag": {"type": "string"},
            "horizon": {"type": "integer"},
            "budget_plan": {"type": "array", "items": {
                "type": "object", "required": ["date", "amount"],
                "properties": {"date": {"type": "string"},
                               "amount": {"type": "number"}}}},
        },
    },
    "forecast": {
        "type": "object",
        "required": ["advertiser_id", "config_tag", "horizon"] + list(FORECAST_FIELDS),
        "properties": {
            "advertiser_id": {"type": "string"},
            "config_tag": {"type": "string"},
            "horizon": {"type": "integer"},
            "competitors_total": {"type": "number"},
            **FORECAST_FIELDS,
            "scenario": {"type": "object", "required": list(FORECAST_FIELDS),
                         "properties": dict(FORECAST_FIELDS)},
            "delta": {"type": "array", "items": {"type": "number"}},
        },
    },
    "error": {
        "type": "object", "required": ["error"],
        "properties": {"error": {"type": "string"}},
    },
}


class SchemaError(ValueError):
    pass


def validate_schema(obj, schema, path="$") -> None:
    """Check ``obj`` against the minimal schema dialect used in SCHEMAS."""
    kind = schema.get("type")
    if kind == "object":
        if not isinstance(obj, dict):
            raise SchemaError(f"{path}: expected object, got {type(obj).__name__}")
        for key in schema.get("required", []):
            if key not in obj:
                raise SchemaError(f"{path}: missing required key {key!r}")
        props = schema.get("properties", {})
        values_schema = schema.get("values")
        for key, value in obj.items():
            if key in props:
                validate_schema(value, props[key], f"{path}.{key}")
            elif values_schema is not None:
                validate_schema(value, values_schema, f"{path}.{key}")
    elif kind == "array":
        if not isinstance(obj, list):
            raise SchemaError(f"{path}: expected array, got {type(obj).__name__}")
        items = schema.get("items")
        if items:
            for i, value in enumerate(obj):
                validate_schema(value, items, f"{path}[{i}]")
    elif kind == "string":
        if not isinstance(obj, str):
            raise SchemaError(f"{path}: expected string, got {type(obj).__name__}")
    elif kind == "integer":
        if not isinstance(obj, int) or isinstance(obj, bool):
            raise SchemaError(f"{path}: expected integer, got {type(obj).__name__}")
    elif kind == "number":
        if not isinstance(obj, (int, float)) or isinstance(obj, bool):
            raise SchemaError(f"{path}: expected number, got {type(obj).__name__}")
    elif kind == "boolean":
        if not isinstance(obj, bool):
            raise SchemaError(f"{path}: expected boolean, got {type(obj).__name__}")


class ServiceError(Exception):
    def __init__(self, status: int, message: str):
        super().__init__(message)
        self.status = status


class PlannerService:
    """Request handlers over one fully-loaded, immutable run."""

    def __init__(self, store: RunStore):
        self.store = store
        self.panel = store.panel()
        self.clusters = store.load_clusters()
        self.config = store.read_config()["config"]
        self._model_cache: dict = {}
        self._cache_lock = threading.Lock()

    # -- reads --------------------------------------------------------------
    def list_advertisers(self) -> dict:
        return {"advertisers": [{"id": aid, "category": self.panel[aid].category}
                                for aid in self.panel.ids()]}

    def history(self, advertiser_id: str) -> dict:
        if advertiser_id not in self.panel.advertisers:
            raise ServiceError(404, f"unknown advertiser {advertiser_id!r}")
        s = self.panel[advertiser_id]
        return {"id": advertiser_id, "category": s.category,
                "dates": [str(d) for d in s.dates],
                "cpc": s.cpc.tolist(), "adbudget": s.adbudget.tolist(),
                "adclicks": s.adclicks.tolist(), "impressions": s.impressions.tolist()}

    def cluster_view(self) -> dict:
        if not self.clusters:
            raise ServiceError(404, "clusters not computed yet")
        reference = category_clusters(self.panel)
        assignments = {}
        contingency = {}
        for method, assignment in self.clusters.items():
            assignments[method] = {
                "method": method, "k": assignment.k, "labels": assignment.labels,
                "wcss_by_k": {str(k): float(v)
                              for k, v in (assignment.wcss_by_k or {}).items()}}
            comparison = compare_assignments(assignment, reference)
            contingency[method] = {"table": comparison["contingency"].tolist(),
                                   "ari": comparison["ari"]}
        return {"assignments": assignments, "contingency_vs_category": contingency}

    def backtest_report(self) -> dict:
        try:
            summary = self.store.read_report_csv("summary.csv")
            detail = self.store.read_report_csv("backtest.csv")
        except FileNotFoundError as exc:
            raise ServiceError(404, str(exc)) from None
        return {
            "summary": [{"config": r["config"], "horizon": int(r["horizon"]),
                         "mae_mean": float(r["mae_mean"]), "mae_std": float(r["mae_std"]),
                         "smape_mean": float(r["smape_mean"]),
                         "smape_std": float(r["smape_std"])} for r in summary],
            "detail": [{"config": r["config"], "horizon": int(r["horizon"]),
                        "advertiser": r["advertiser"], "mae": float(r["mae"]),
                        "smape": float(r["smape"])} for r in detail],
        }

    # -- forecasting --------------------------------------------------------
    def _load_model(self, advertiser_id: str, tag: str, horizon: int):
        key = (advertiser_id, tag, horizon)
        with self._cache_lock:
            if key not in self._model_cache:
                try:
                    self._model_cache[key] = self.store.load_model(*key)
                except FileNotFoundError:
                    raise ServiceError(404, f"no trained model for {advertiser_id!r} "
                                            f"config {tag!r} horizon {horizon}") from None
            return self._model_cache[key]

    def _compose_current(self, advertiser_id: str, comp_tag: str, horizon: int):
        composition = pipeline.CompositionKind(comp_tag)
        assignment = None
        if composition.cluster_method is not None:
            assignment = self.clusters.get(composition.cluster_method)
            if assignment is None:
                raise ServiceError(404, f"{composition.cluster_method} clusters "
                                        "not computed yet")
        origin = self.panel.dates[-1] + np.timedelta64(1, "D")
        seed = int(self.config.get("experiment", {}).get("seed", 0))
        return pipeline.compose(self.panel, advertiser_id, composition, assignment,
                                origin=origin, horizon=horizon, seed=seed)

    def forecast(self, request: dict) -> dict:
        try:
            validate_schema(request, SCHEMAS["forecast_request"])
        except SchemaError as exc:
            raise ServiceError(400, f"malformed request: {exc}") from None
        advertiser_id = request["advertiser_id"]
        tag = request["config_tag"]
        horizon = int(request["horizon"])
        if advertiser_id not in self.panel.advertisers:
            raise ServiceError(404, f"unknown advertiser {advertiser_id!r}")
        configured = self.config.get("experiment", {}).get("horizons")
        if configured and horizon not in configured:
            raise ServiceError(422, f"horizon {horizon} not in configured set {configured}")
        kind, _, comp_tag = tag.partition(".")
        if not comp_tag:
            raise ServiceError(400, f"config_tag {tag!r} must look like kind.composition")

        model = self._load_model(advertiser_id, tag, horizon)
        model_input = self._compose_current(advertiser_id, comp_tag, horizon)

        plan = request.get("budget_plan")
        if plan is not None and pipeline.BUDGET_PLAN not in model.feature_names.get("known", []):
            raise ServiceError(422, "model has no budget channel")

        from . import models as model_api
        baseline = model_api.predict(model, model_input)
        body = {"advertiser_id": advertiser_id, "config_tag": tag, "horizon": horizon,
                **baseline.to_dict()}
        if model.kind == "tft":
            body["competitors_total"] = interpret_tft(model, model_input)["competitors_total"]
        if plan is not None:
            overlay = self._plan_overlay(model_input, plan, horizon)
            outcome = pipeline.whatif(model, model_input, overlay)
            body["scenario"] = outcome["scenario"].to_dict()
            body["delta"] = outcome["delta"].tolist()
        return body

    def _plan_overlay(self, model_input, plan: list, horizon: int) -> np.ndarray:
        horizon_dates = model_input.dates[model_input.n_days:]
        budget_col = model_input.known_names.index(pipeline.BUDGET_PLAN)
        overlay = model_input.known_future[model_input.n_days:, budget_col].copy()
        if not plan:
            raise ServiceError(400, "budget_plan is empty")
        dates = [np.datetime64(p["date"], "D") for p in plan]
        for a, b in zip(dates, dates[1:]):
            if b - a != np.timedelta64(1, "D"):
                raise ServiceError(422, "budget_plan dates must be contiguous")
        for date, entry in zip(dates, plan):
            idx = np.searchsorted(horizon_dates, date)
            if idx >= horizon or horizon_dates[idx] != date:
                raise ServiceError(422, f"budget_plan date {entry['date']} outside horizon")
            overlay[idx] = float(entry["amount"])
        return overlay


# ---------------------------------------------------------------------------
# HTTP wiring
# ---------------------------------------------------------------------------

def make_handler(service: PlannerService):
    class Handler(BaseHTTPRequestHandler):
        def log_message(self, fmt, *args):  # quiet by default
            pass

        def _send(self, status: int, body: dict, schema: str) -> None:
            validate_schema(body, SCHEMAS[schema])
            data = json.dumps(body).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json; charset=utf-8")
            self.send_header("Content-Length", str(len(data)))
            self.send_header("Access-Control-Allow-Origin", "*")
            self.end_headers()
            self.wfile.write(data)

        def _send_error(self, status: int, message: str) -> None:
            self._send(status, {"error": message}, "error")

        def do_OPTIONS(self):
            self.send_response(204)
            self.send_header("Access-Control-Allow-Origin", "*")
            self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
            self.send_header("Access-Control-Allow-Headers", "Content-Type")
            self.end_headers()

        def do_GET(self):
            try:
                parts = [p for p in self.path.split("?")[0].split("/") if p]
                if parts == ["advertisers"]:
                    self._send(200, service.list_advertisers(), "advertisers")
                elif len(parts) == 3 and parts[0] == "advertisers" and parts[2] == "history":
                    self._send(200, service.history(parts[1]), "history")
                elif parts == ["clusters"]:
                    self._send(200, service.cluster_view(), "clusters")
                elif parts == ["reports", "backtest"]:
                    self._send(200, service.backtest_report(), "backtest_report")
                else:
                    self._send_error(404, f"no such endpoint: {self.path}")
            except ServiceError as exc:
                self._send_error(exc.status, str(exc))
            except Exception as exc:  # pragma: no cover - defensive
                self._send_error(500, f"internal error: {exc}")

        def do_POST(self):
            try:
                if self.path.split("?")[0].rstrip("/") != "/forecast":
                    self._send_error(404, f"no such endpoint: {self.path}")
                    return
                length = int(self.headers.get("Content-Length", 0))
                try:
                    request = json.loads(self.rfile.read(length) or b"{}")
                except json.JSONDecodeError as exc:
                    self._send_error(400, f"invalid JSON body: {exc}")
                    return
                self._send(200, service.forecast(request), "forecast")
            except ServiceError as exc:
                self._send_error(exc.status, str(exc))
            except Exception as exc:  # pragma: no cover - defensive
                self._send_error(500, f"internal error: {exc}")

    return Handler


def serve(run_dir: str, port: int, ready_event: threading.Event | None = None):
    """Blocking server loop; ``ready_event`` fires once the socket listens."""
    service = PlannerService(RunStore.open(run_dir))
    server = ThreadingHTTPServer(("127.0.0.1", port), make_handler(service))
    if ready_event is not None:
        ready_event.set()
    try:
        server.serve_forever()
    finally:
        server.server_close()
    return server
