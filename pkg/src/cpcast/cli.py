"""Umbrella command line: simulate, ingest, cluster, train, backtest,
robustness, whatif, serve.

Exit codes: 0 success, 1 validation/usage error, 2 internal error.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import pipeline, service
from .cluster import category_clusters, distance_clusters, extracted_clusters
from .models import TrainedModel
from .panel import ParseError, clean_panel, ingest_csv
from .runstore import RunStore
from .simgen import MarketConfig, ShockConfig, inject_shock_window_labels, simulate

METHOD_ALIASES = {"cat": "category", "extr": "extracted", "dist": "distance"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit(1)


def _market_config(raw: dict) -> MarketConfig:
    raw = dict(raw)
    shock = raw.pop("shock", None)
    if shock is not None:
        shock = ShockConfig(**{**shock,
                               "affected_categories": tuple(shock.get("affected_categories", ()))})
    for key in ("weekly_amp_range",):
        if key in raw:
            raw[key] = tuple(raw[key])
    if "special_days" in raw:
        raw["special_days"] = tuple(tuple(x) for x in raw["special_days"])
    return MarketConfig(**raw, shock=shock)


def cmd_simulate(args) -> int:
    with open(args.config, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    config = _market_config(raw)
    panel, truth = simulate(config)
    RunStore.create(args.out, {"market": raw}, panel, truth)
    print(f"simulated {len(panel.advertisers)} advertisers x {panel.n_days} days "
          f"into {args.out}")
    return 0


def cmd_ingest(args) -> int:
    panel = clean_panel(ingest_csv(args.csv), max_missing_frac=args.max_missing_frac)
    RunStore.create(args.out, {"source_csv": args.csv,
                               "max_missing_frac": args.max_missing_frac}, panel)
    print(f"ingested {len(panel.advertisers)} advertisers x {panel.n_days} days "
          f"into {args.out}")
    return 0


def cmd_cluster(args) -> int:
    store = RunStore.open(args.run)
    panel = store.panel()
    method = METHOD_ALIASES[args.method]
    if method == "category":
        assignment = category_clusters(panel)
    elif method == "extracted":
        assignment = extracted_clusters(panel, seed=args.seed, k=args.k)
    else:
        assignment = distance_clusters(panel, seed=args.seed, k=args.k)
    store.save_clusters(assignment)
    print(f"{method} clustering: k={assignment.k} over {len(assignment.labels)} advertisers")
    return 0


def _read_grid(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        spec = json.load(fh)
    grid = spec.get("grid", "full")
    if grid == "full":
        spec["grid"] = pipeline.full_grid()
    else:
        spec["grid"] = [tuple(cell) for cell in grid]
    overrides = spec.get("config_overrides", {})
    for kind, kw in overrides.items():
        if "sarima" in kw and isinstance(kw["sarima"], list):
            kw["sarima"] = tuple(kw["sarima"])
    return spec


def _required_clusters(store: RunStore, grid) -> dict:
    clusters = store.load_clusters()
    needed = {pipeline.CLUSTER_METHOD_FOR_TAG[comp] for _, comp in grid
              if comp in pipeline.CLUSTER_METHOD_FOR_TAG}
    missing = needed - set(clusters)
    if missing:
        raise ValueError(f"missing cluster assignments {sorted(missing)}; "
                         f"run `cpcast cluster` first")
    return clusters


def cmd_train(args) -> int:
    store = RunStore.open(args.run)
    panel = store.panel()
    spec = _read_grid(args.grid)
    horizons = tuple(spec.get("horizons", pipeline.DEFAULT_HORIZONS))
    encoder = int(spec.get("encoder", 90))
    seed = int(spec.get("seed", 0))
    origin = spec.get("origin") or str(panel.dates[-1] - np.timedelta64(max(horizons) - 1, "D"))
    overrides = spec.get("config_overrides", {})
    clusters = _required_clusters(store, spec["grid"])

    trained = 0
    for kind, comp_tag in spec["grid"]:
        composition = pipeline.CompositionKind(comp_tag)
        assignment = clusters.get(composition.cluster_method) if composition.cluster_method else None
        for horizon in horizons:
            config = pipeline.make_config(kind, horizon, encoder, seed, overrides.get(kind))
            for aid in panel.ids():
                from . import models as model_api
                model_input = pipeline.compose(panel, aid, composition, assignment,
                                               origin=origin, horizon=horizon, seed=seed)
                model = model_api.fit(model_input, config)
                store.save_model(aid, pipeline.config_tag(kind, comp_tag), horizon, model)
                trained += 1
    store.update_config(experiment={"horizons": list(horizons), "encoder": encoder,
                                    "seed": seed, "origin": origin,
                                    "grid": [list(g) for g in spec["grid"]],
                                    "config_overrides": overrides})
    print(f"trained {trained} models (origin {origin})")
    return 0


class _DiskModelStore:
    def __init__(self, store: RunStore):
        self.store = store
        self.index = store.trained_models()

    def get(self, key):
        path = self.index.get(key)
        return TrainedModel.load(path) if path else None


def cmd_backtest(args) -> int:
    store = RunStore.open(args.run)
    panel = store.panel()
    experiment = store.read_config()["config"].get("experiment")
    if not experiment:
        raise ValueError("no trained models: run `cpcast train` first")
    model_store = _DiskModelStore(store)
    if not model_store.index:
        raise ValueError("no trained models: run `cpcast train` first")
    horizons = (tuple(int(h) for h in args.horizons.split(","))
                if args.horizons else tuple(experiment["horizons"]))
    grid = [tuple(g) for g in experiment["grid"]]
    clusters = _required_clusters(store, grid)
    report = pipeline.backtest(panel, grid, clusters=clusters, horizons=horizons,
                               encoder=int(experiment["encoder"]),
                               origin=experiment["origin"],
                               seed=int(experiment["seed"]),
                               model_store=model_store)
    store.save_report_csv("backtest.csv", report.detail_rows(),
                          ["config", "horizon", "advertiser", "mae", "smape"])
    store.save_report_csv("summary.csv", report.summary_rows(),
                          ["config", "horizon", "mae_mean", "mae_std",
                           "smape_mean", "smape_std"])
    print(f"backtest: {len(report.rows)} grid cells over {len(panel.advertisers)} "
          f"advertisers in {report.elapsed_seconds:.1f}s -> reports/")
    return 0


def cmd_robustness(args) -> int:
    store = RunStore.open(args.run)
    panel = store.panel()
    config = store.read_config()["config"]
    truth = store.ground_truth()
    market = config.get("market")
    if not market or not market.get("shock") or truth is None:
        raise ValueError("robustness experiment needs a simulated run with a shock")
    windows = inject_shock_window_labels(_market_config(market))
    experiment = config.get("experiment", {})
    overrides = experiment.get("config_overrides", {})
    table = pipeline.robustness_experiment(
        panel, truth.affected_categories, windows, model_kind=args.model,
        clusters=store.load_clusters() or None,
        encoder=int(experiment.get("encoder", 90)),
        seed=int(experiment.get("seed", 0)),
        config_overrides=overrides)
    rows = []
    for window, per_comp in table.items():
        for comp, cell in per_comp.items():
            rows.append({"window": window, "config": pipeline.config_tag(args.model, comp),
                         "smape_mean": cell["smape_mean"], "smape_std": cell["smape_std"],
                         "n_advertisers": cell["n_advertisers"]})
    store.save_report_csv("robustness.csv", rows,
                          ["window", "config", "smape_mean", "smape_std", "n_advertisers"])
    print(f"robustness: {len(table)} windows x {len(next(iter(table.values())))} configs "
          "-> reports/robustness.csv")
    return 0


def cmd_whatif(args) -> int:
    store = RunStore.open(args.run)
    svc = service.PlannerService(store)
    with open(args.plan, "r", encoding="utf-8") as fh:
        plan = json.load(fh)
    request = {"advertiser_id": args.advertiser,
               "config_tag": plan.get("config_tag", args.config_tag),
               "horizon": int(plan.get("horizon", args.horizon)),
               "budget_plan": plan["budget_plan"]}
    try:
        body = svc.forecast(request)
    except service.ServiceError as exc:
        raise ValueError(str(exc)) from None
    json.dump(body, sys.stdout, indent=2)
    print()
    return 0


def cmd_serve(args) -> int:
    print(f"serving run {args.run} on http://127.0.0.1:{args.port}")
    service.serve(args.run, args.port)
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="cpcast", description="CPC forecasting toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic market run")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("ingest", help="load a panel CSV into a run")
    p.add_argument("--csv", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--max-missing-frac", type=float, default=0.01)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("cluster", help="compute a cluster assignment")
    p.add_argument("--run", required=True)
    p.add_argument("--method", required=True, choices=sorted(METHOD_ALIASES))
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("train", help="fit every grid model at the run's origin")
    p.add_argument("--run", required=True)
    p.add_argument("--grid", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("backtest", help="score trained models on held-out days")
    p.add_argument("--run", required=True)
    p.add_argument("--horizons", default=None)
    p.set_defaults(func=cmd_backtest)

    p = sub.add_parser("robustness", help="shock-window policy experiment")
    p.add_argument("--run", required=True)
    p.add_argument("--model", default="tft")
    p.set_defaults(func=cmd_robustness)

    p = sub.add_parser("whatif", help="forecast under a user budget plan")
    p.add_argument("--run", required=True)
    p.add_argument("--advertiser", required=True)
    p.add_argument("--plan", required=True)
    p.add_argument("--config-tag", default="tft.multivar")
    p.add_argument("--horizon", type=int, default=14)
    p.set_defaults(func=cmd_whatif)

    p = sub.add_parser("serve", help="HTTP API for the scenario planner")
    p.add_argument("--run", required=True)
    p.add_argument("--port", type=int, default=8787)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ValueError, ParseError, FileNotFoundError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        return 1
    except Exception as exc:  # noqa: BLE001 - last-resort boundary
        print(f"internal error: {exc!r}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
