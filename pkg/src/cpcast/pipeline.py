"""Feature composition, metrics, rolling-origin backtesting, what-if runs.

Compositions build ModelInputs from a panel window that ends strictly
before the forecast origin; normalization stats come from that window
alone, and cluster assignments are computed once on training data and
frozen for the whole experiment. The full study grid is one univariate
SARIMA plus {gbdt, lstm, tft} x {univar, multivar, three competition
variants} = 16 configurations, scored by MAE and SMAPE per advertiser and
aggregated as mean and standard deviation.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import models
from .cluster import ClusterAssignment, smooth
from .dtw import dtw_many
from .models import ModelConfig, ModelInput, TrainedModel, compute_stats
from .panel import CalendarFrame, PanelDataset

COMPOSITION_TAGS = ("univar", "multivar", "multivar.comp.cat",
                    "multivar.comp.extr", "multivar.comp.dist")
CLUSTER_METHOD_FOR_TAG = {"multivar.comp.cat": "category",
                          "multivar.comp.extr": "extracted",
                          "multivar.comp.dist": "distance"}
MULTIVAR_PAST = ("adcost", "adclicks", "impressions", "adbudget")
CALENDAR_KNOWN = ("dow", "doy", "month")
BUDGET_PLAN = "adbudget_plan"
DEFAULT_HORIZONS = (14, 30, 60)


@dataclass
class CompositionKind:
    tag: str
    peer_limit: int = 5
    append_cluster_mean: bool = True

    def __post_init__(self):
        if self.tag not in COMPOSITION_TAGS:
            raise ValueError(f"unknown composition {self.tag!r}")
        if self.peer_limit < 0:
            raise ValueError("peer_limit must be nonnegative")

    @property
    def cluster_method(self) -> str | None:
        return CLUSTER_METHOD_FOR_TAG.get(self.tag)


def full_grid() -> list[tuple[str, str]]:
    """The 16-configuration study grid; SARIMA stays univariate."""
    grid = [("sarima", "univar")]
    for kind in ("gbdt", "lstm", "tft"):
        for tag in COMPOSITION_TAGS:
            grid.append((kind, tag))
    return grid


def config_tag(kind: str, composition: str) -> str:
    return f"{kind}.{composition}"


# ---------------------------------------------------------------------------
# composition
# ---------------------------------------------------------------------------

def _extended_calendar(panel: PanelDataset, n_extra: int) -> CalendarFrame:
    if n_extra <= 0:
        return panel.calendar
    dates = np.arange(panel.dates[0], panel.dates[-1] + np.timedelta64(n_extra + 1, "D"))
    return CalendarFrame.from_dates(dates)


def _budget_plan(series, i0: int, i_end: int) -> np.ndarray:
    """Realized monthly budget as the known-future plan, carried forward
    past the panel's end."""
    n = len(series.adbudget)
    if i_end <= n:
        return series.adbudget[i0:i_end]
    return np.r_[series.adbudget[i0:], np.full(i_end - n, series.adbudget[-1])]


def _select_peers(panel, advertiser_id, members, kind, i0, i1, seed) -> list[str]:
    others = [m for m in members if m != advertiser_id]
    if not others:
        return []
    m = min(kind.peer_limit, len(others))
    if m == 0:
        return []
    if kind.cluster_method == "category":
        rng = np.random.default_rng([seed, len(advertiser_id)])
        return sorted(rng.choice(others, size=m, replace=False).tolist())
    # nearest by DTW on the (smoothed, scale-free) training window
    target = smooth(panel[advertiser_id].cpc[i0:i1])
    target = (target - target.mean()) / (target.std() or 1.0)
    rows = []
    for aid in others:
        y = smooth(panel[aid].cpc[i0:i1])
        rows.append((y - y.mean()) / (y.std() or 1.0))
    distances = dtw_many(np.stack(rows), target)
    order = np.argsort(distances, kind="stable")
    return [others[i] for i in order[:m]]


def compose(panel: PanelDataset, advertiser_id: str, kind: CompositionKind,
            clusters: ClusterAssignment | None = None, *, origin, horizon: int,
            start=None, seed: int = 0) -> ModelInput:
    """Bundle one advertiser's channels over [start, origin) plus known futures.

    The window ends strictly before ``origin``; known-future channels
    (budget plan and calendar fields) extend ``horizon`` days past it.
    """
    if kind.cluster_method is not None:
        if clusters is None:
            raise ValueError(f"composition {kind.tag} requires a cluster assignment")
        if clusters.method != kind.cluster_method:
            raise ValueError(f"composition {kind.tag} needs method "
                             f"{kind.cluster_method!r}, got {clusters.method!r}")
    series = panel[advertiser_id]
    dates = panel.dates
    origin = np.datetime64(origin, "D")
    start = dates[0] if start is None else np.datetime64(start, "D")
    i0 = int(np.searchsorted(dates, start))
    i1 = int(np.searchsorted(dates, origin))
    if i1 <= i0:
        raise ValueError(f"empty window: start {start}, origin {origin}")
    i_end = i1 + horizon

    past_cols = [series.cpc[i0:i1], series.lag7_cpc[i0:i1]]
    past_names = ["cpc", "lag7_cpc"]
    known_cols = []
    known_names = []
    flags = []

    if kind.tag != "univar":
        for ch in MULTIVAR_PAST:
            past_cols.append(getattr(series, ch)[i0:i1])
            past_names.append(ch)
        known_cols.append(_budget_plan(series, i0, i_end))
        known_names.append(BUDGET_PLAN)

    if kind.cluster_method is not None:
        members = clusters.members(clusters.labels[advertiser_id])
        peers = _select_peers(panel, advertiser_id, members, kind, i0, i1, seed)
        for aid in peers:
            past_cols.append(panel[aid].cpc[i0:i1])
            past_names.append(f"peer_{aid}")
        if kind.append_cluster_mean:
            others = [m for m in members if m != advertiser_id]
            if others:
                mean_cpc = np.mean([panel[a].cpc[i0:i1] for a in others], axis=0)
            else:
                mean_cpc = series.cpc[i0:i1].copy()
                flags.append("alone in cluster: cluster mean degrades to own cpc")
                warnings.warn(f"{advertiser_id} is alone in its cluster; "
                              "competition channels degrade to its own cpc")
            past_cols.append(mean_cpc)
            past_names.append("cluster_mean_cpc")

    cal = _extended_calendar(panel, i_end - len(dates))
    for name in CALENDAR_KNOWN:
        known_cols.append(getattr(cal, name)[i0:i_end].astype(np.float64))
        known_names.append(name)

    past = np.column_stack(past_cols)
    known = np.column_stack(known_cols)
    past_mean, past_std = compute_stats(past)
    known_mean, known_std = compute_stats(known[:i1 - i0])  # training rows only

    categories = list(panel.categories)
    static = np.zeros(len(categories))
    static[categories.index(series.category)] = 1.0

    return ModelInput(past_observed=past, known_future=known, static=static,
                      past_names=tuple(past_names), known_names=tuple(known_names),
                      static_names=tuple(categories), past_mean=past_mean,
                      past_std=past_std, known_mean=known_mean, known_std=known_std,
                      dates=cal.dates[i0:i_end], horizon=horizon, flags=tuple(flags))


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------

def mae(actual, pred) -> float:
    actual = np.asarray(actual, dtype=np.float64)
    pred = np.asarray(pred, dtype=np.float64)
    if actual.shape != pred.shape or actual.size == 0:
        raise ValueError(f"length mismatch: {actual.shape} vs {pred.shape}")
    return float(np.mean(np.abs(actual - pred)))


def smape(actual, pred) -> float:
    """Symmetric MAPE on the [0, 2] scale; 0/0 terms count as 0."""
    actual = np.asarray(actual, dtype=np.float64)
    pred = np.asarray(pred, dtype=np.float64)
    if actual.shape != pred.shape or actual.size == 0:
        raise ValueError(f"length mismatch: {actual.shape} vs {pred.shape}")
    denom = np.abs(actual) + np.abs(pred)
    terms = np.where(denom > 0, 2.0 * np.abs(pred - actual) / np.where(denom > 0, denom, 1.0), 0.0)
    return float(terms.mean())


# ---------------------------------------------------------------------------
# backtesting
# ---------------------------------------------------------------------------

@dataclass
class BacktestReport:
    rows: dict = field(default_factory=dict)  # (kind, comp, horizon) -> cell
    horizons: tuple = ()
    origin: str = ""
    elapsed_seconds: float = 0.0

    def cell(self, kind: str, comp: str, horizon: int) -> dict:
        return self.rows[(kind, comp, horizon)]

    def summary_rows(self) -> list[dict]:
        out = []
        for (kind, comp, horizon), cell in sorted(self.rows.items()):
            out.append({"config": config_tag(kind, comp), "horizon": horizon,
                        "mae_mean": cell["mae_mean"], "mae_std": cell["mae_std"],
                        "smape_mean": cell["smape_mean"], "smape_std": cell["smape_std"]})
        return out

    def detail_rows(self) -> list[dict]:
        out = []
        for (kind, comp, horizon), cell in sorted(self.rows.items()):
            for aid in sorted(cell["per_advertiser"]):
                metrics = cell["per_advertiser"][aid]
                out.append({"config": config_tag(kind, comp), "horizon": horizon,
                            "advertiser": aid, "mae": metrics["mae"],
                            "smape": metrics["smape"]})
        return out


def _aggregate(per_advertiser: dict) -> dict:
    maes = np.array([m["mae"] for m in per_advertiser.values()])
    smapes = np.array([m["smape"] for m in per_advertiser.values()])
    return {"per_advertiser": per_advertiser,
            "mae_mean": float(maes.mean()), "mae_std": float(maes.std()),
            "smape_mean": float(smapes.mean()), "smape_std": float(smapes.std())}


def make_config(kind: str, horizon: int, encoder: int, seed: int,
                overrides: dict | None = None) -> ModelConfig:
    kwargs = dict(kind=kind, horizon=horizon, encoder=encoder, seed=seed)
    if overrides:
        kwargs.update({k: v for k, v in overrides.items() if k not in ("kind", "horizon")})
    return ModelConfig(**kwargs)


def backtest(panel: PanelDataset, grid: list[tuple[str, str]],
             clusters: dict[str, ClusterAssignment] | None = None,
             horizons=DEFAULT_HORIZONS, encoder: int = 90, origin=None,
             seed: int = 0, config_overrides: dict | None = None,
             model_store=None, advertisers=None) -> BacktestReport:
    """Train strictly before ``origin``, forecast [origin, origin+H), score.

    ``model_store``, when given, maps (advertiser, config_tag, horizon) to a
    TrainedModel and bypasses fitting (the CLI trains and scores in separate
    passes); composition inputs are rebuilt identically either way.
    """
    started = time.time()
    horizons = tuple(int(h) for h in horizons)
    dates = panel.dates
    if origin is None:
        origin = dates[-1] - np.timedelta64(max(horizons) - 1, "D")
    origin = np.datetime64(origin, "D")
    max_h = max(horizons)
    if origin + np.timedelta64(max_h - 1, "D") > dates[-1]:
        shortfall = (origin + np.timedelta64(max_h - 1, "D") - dates[-1]).astype(int)
        raise ValueError(f"panel ends {shortfall} days before origin + max horizon")
    i1 = int(np.searchsorted(dates, origin))
    if i1 < encoder + max_h + 14:
        raise ValueError(f"only {i1} training days before origin; need at least "
                         f"{encoder + max_h + 14}")

    advertisers = list(advertisers or panel.ids())
    overrides = config_overrides or {}
    report = BacktestReport(horizons=horizons, origin=str(origin))

    for kind, comp_tag in grid:
        if kind == "sarima" and comp_tag != "univar":
            raise ValueError("sarima runs only in the univariate configuration")
        composition = CompositionKind(comp_tag)
        assignment = None
        if composition.cluster_method is not None:
            if not clusters or composition.cluster_method not in clusters:
                raise ValueError(f"composition {comp_tag} needs a "
                                 f"{composition.cluster_method!r} cluster assignment")
            assignment = clusters[composition.cluster_method]
        for horizon in horizons:
            per_advertiser = {}
            for aid in advertisers:
                model_input = compose(panel, aid, composition, assignment,
                                      origin=origin, horizon=horizon, seed=seed)
                tag = config_tag(kind, comp_tag)
                model = None
                if model_store is not None:
                    model = model_store.get((aid, tag, horizon))
                    if model is None:
                        raise ValueError(f"no trained model for ({aid}, {tag}, {horizon})")
                if model is None:
                    config = make_config(kind, horizon, encoder, seed,
                                         overrides.get(kind))
                    model = models.fit(model_input, config)
                result = models.predict(model, model_input)
                actual = panel[aid].cpc[i1:i1 + horizon]
                per_advertiser[aid] = {"mae": mae(actual, result.point),
                                       "smape": smape(actual, result.point)}
            report.rows[(kind, comp_tag, horizon)] = _aggregate(per_advertiser)
    report.elapsed_seconds = time.time() - started
    return report


# ---------------------------------------------------------------------------
# policy experiments
# ---------------------------------------------------------------------------

def robustness_experiment(panel: PanelDataset, shocked_categories,
                          windows, model_kind: str = "tft",
                          compositions=("multivar", "multivar.comp.dist"),
                          clusters: dict[str, ClusterAssignment] | None = None,
                          encoder: int = 90, seed: int = 0,
                          config_overrides: dict | None = None) -> dict:
    """Mean +/- stdev SMAPE per (evaluation window x composition).

    Windows are (start, end) day pairs (inclusive); each is forecast from
    its start with a horizon covering the whole window, training strictly
    before it, restricted to advertisers in the shocked categories.
    """
    shocked = [aid for aid in panel.ids()
               if panel[aid].category in set(shocked_categories)]
    if not shocked:
        raise ValueError("no advertisers in the shocked categories")
    dates = panel.dates
    overrides = (config_overrides or {}).get(model_kind)
    table: dict = {}
    for window in windows:
        w_start, w_end = (np.datetime64(window[0], "D"), np.datetime64(window[1], "D"))
        horizon = int((w_end - w_start).astype(int)) + 1
        i1 = int(np.searchsorted(dates, w_start))
        label = f"{w_start}..{w_end}"
        table[label] = {}
        for comp_tag in compositions:
            composition = CompositionKind(comp_tag)
            assignment = clusters.get(composition.cluster_method) if (
                clusters and composition.cluster_method) else None
            smapes = []
            for aid in shocked:
                model_input = compose(panel, aid, composition, assignment,
                                      origin=w_start, horizon=horizon, seed=seed)
                config = make_config(model_kind, horizon, encoder, seed, overrides)
                model = models.fit(model_input, config)
                result = models.predict(model, model_input)
                actual = panel[aid].cpc[i1:i1 + horizon]
                smapes.append(smape(actual, result.point))
            smapes = np.array(smapes)
            table[label][comp_tag] = {"smape_mean": float(smapes.mean()),
                                      "smape_std": float(smapes.std()),
                                      "n_advertisers": len(shocked)}
    return table


def whatif(model: TrainedModel, model_input: ModelInput, budget_plan) -> dict:
    """Re-forecast under a user budget plan substituted into the known future."""
    known = model.feature_names.get("known", [])
    if BUDGET_PLAN not in known:
        raise ValueError("model has no budget channel")
    baseline = models.predict(model, model_input)
    scenario_input = model_input.replace_known_channel(BUDGET_PLAN, budget_plan)
    scenario = models.predict(model, scenario_input)
    return {"baseline": baseline, "scenario": scenario,
            "delta": scenario.point - baseline.point}
