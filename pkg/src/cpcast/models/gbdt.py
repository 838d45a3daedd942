"""Gradient-boosted regression trees with exact greedy splits.

Squared-error boosting from a zero base score: per round the gradient is
(prediction - target) and the hessian is 1, so leaf values are
-G / (H + lambda) and split gain is

    0.5 * (GL^2/(HL+l) + GR^2/(HR+l) - G^2/(H+l)) - gamma

Multi-step forecasting restructures the series into one supervised problem
per horizon step (lagged targets, lagged covariates, calendar fields and
the known budget at the target date) and fits an independent model per
step under one TrainedModel.
"""

from __future__ import annotations

import numpy as np

from .common import (ForecastResult, GbdtParams, ModelConfig, ModelInput,
                     TrainedModel, uniform_importance)

CALENDAR_CHANNELS = ("dow", "doy", "month")
BUDGET_CHANNEL = "adbudget_plan"


# ---------------------------------------------------------------------------
# single trees
# ---------------------------------------------------------------------------

def _best_split(X: np.ndarray, g: np.ndarray, params: GbdtParams):
    """Exact greedy scan over every feature and threshold; returns the best
    (gain, feature, threshold) or None when no split clears gamma."""
    n = len(g)
    G, H = g.sum(), float(n)
    lam = params.reg_lambda
    parent = G * G / (H + lam)
    best = None
    for j in range(X.shape[1]):
        order = np.argsort(X[:, j], kind="stable")
        xs = X[order, j]
        gs = g[order]
        gl = np.cumsum(gs)[:-1]
        hl = np.arange(1, n, dtype=np.float64)
        gr = G - gl
        hr = H - hl
        valid = (xs[1:] != xs[:-1]) & (hl >= params.min_child) & (hr >= params.min_child)
        if not valid.any():
            continue
        gain = 0.5 * (gl ** 2 / (hl + lam) + gr ** 2 / (hr + lam) - parent) - params.gamma
        gain[~valid] = -np.inf
        i = int(np.argmax(gain))
        if gain[i] > 0 and (best is None or gain[i] > best[0]):
            best = (float(gain[i]), j, float((xs[i] + xs[i + 1]) / 2.0))
    return best


def _build_tree(X: np.ndarray, g: np.ndarray, params: GbdtParams, depth: int) -> dict:
    G, H = g.sum(), float(len(g))
    if depth >= params.depth or len(g) < 2 * params.min_child:
        return {"leaf": float(-G / (H + params.reg_lambda))}
    split = _best_split(X, g, params)
    if split is None:
        return {"leaf": float(-G / (H + params.reg_lambda))}
    gain, j, thr = split
    left = X[:, j] <= thr
    return {"feature": int(j), "threshold": thr, "gain": gain,
            "left": _build_tree(X[left], g[left], params, depth + 1),
            "right": _build_tree(X[~left], g[~left], params, depth + 1)}


def _tree_predict(node: dict, X: np.ndarray) -> np.ndarray:
    out = np.empty(len(X))
    idx = np.arange(len(X))
    stack = [(node, idx)]
    while stack:
        nd, rows = stack.pop()
        if not len(rows):
            continue
        if "leaf" in nd:
            out[rows] = nd["leaf"]
            continue
        left = X[rows, nd["feature"]] <= nd["threshold"]
        stack.append((nd["left"], rows[left]))
        stack.append((nd["right"], rows[~left]))
    return out


def fit_gbdt(X, y, params: GbdtParams | None = None) -> list[dict]:
    """Boosted tree list; predictions start from a zero base score."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.size == 0 or len(y) == 0:
        raise ValueError("empty training data")
    params = params or GbdtParams()
    trees = []
    pred = np.zeros(len(y))
    for _ in range(params.rounds):
        g = pred - y
        tree = _build_tree(X, g, params, depth=0)
        trees.append(tree)
        pred = pred + params.lr * _tree_predict(tree, X)
    return trees


def predict_gbdt(trees: list[dict], X, lr: float) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    out = np.zeros(len(X))
    for tree in trees:
        out += lr * _tree_predict(tree, X)
    return out


def gbdt_gain_by_feature(trees: list[dict], n_features: int) -> np.ndarray:
    gains = np.zeros(n_features)
    stack = list(trees)
    while stack:
        nd = stack.pop()
        if "leaf" in nd:
            continue
        gains[nd["feature"]] += nd["gain"]
        stack.extend((nd["left"], nd["right"]))
    return gains


# ---------------------------------------------------------------------------
# series restructuring
# ---------------------------------------------------------------------------

def tabularize(model_input: ModelInput, step: int, lags=None):
    """One row per as-of date; the label is the target ``step`` days ahead."""
    lags = tuple(sorted(lags or GbdtParams().lags))
    past = model_input.past_observed
    known = model_input.known_future
    t_len = past.shape[0]
    if not 1 <= step <= model_input.horizon:
        raise ValueError(f"step {step} outside 1..{model_input.horizon}")
    if lags[0] < 1 or lags[-1] > t_len:
        raise ValueError(f"lags {lags} outside [1, {t_len}]")
    first = lags[-1] - 1
    last = t_len - 1 - step
    if last < first:
        raise ValueError(f"insufficient history: need more than {lags[-1] + step} days")
    rows = np.arange(first, last + 1)

    blocks, names = [], []
    for v, channel in enumerate(model_input.past_names):
        for lag in lags:
            blocks.append(past[rows - lag + 1, v])
            names.append(f"{channel}_lag{lag}")
    for name in CALENDAR_CHANNELS + (BUDGET_CHANNEL,):
        if name in model_input.known_names:
            col = model_input.known_names.index(name)
            blocks.append(known[rows + step, col])
            names.append(f"{name}@target")
    X = np.column_stack(blocks)
    y = past[rows + step, 0]
    return X, y, names


def fit_gbdt_model(model_input: ModelInput, config: ModelConfig) -> TrainedModel:
    """Independent boosted model per forecast step, one TrainedModel overall."""
    params = config.gbdt
    steps = {}
    names = None
    for step in range(1, config.horizon + 1):
        X, y, names = tabularize(model_input, step, params.lags)
        steps[str(step)] = fit_gbdt(X, y, params)
    return TrainedModel(
        kind="gbdt", config=config,
        params={"steps": steps, "n_features": len(names)},
        feature_names={"past": list(model_input.past_names),
                       "known": list(model_input.known_names),
                       "static": list(model_input.static_names),
                       "tabular": names},
        norm={"past_mean": model_input.past_mean, "past_std": model_input.past_std,
              "known_mean": model_input.known_mean, "known_std": model_input.known_std},
        training_log=[])


def gbdt_importance(model: TrainedModel) -> dict[str, float]:
    """Total split gain per tabular feature across all steps, normalized."""
    names = model.feature_names["tabular"]
    gains = np.zeros(len(names))
    for trees in model.params["steps"].values():
        gains += gbdt_gain_by_feature(trees, len(names))
    total = gains.sum()
    if total <= 0:
        return uniform_importance(names)
    return {n: float(w) for n, w in zip(names, gains / total)}


def _channel_importance(model: TrainedModel, tab_importance: dict[str, float]):
    """Roll per-feature gains up to the source channels."""
    enc = {}
    dec = {}
    for name, w in tab_importance.items():
        if name.endswith("@target"):
            channel = name[:-len("@target")]
            dec[channel] = dec.get(channel, 0.0) + w
            enc[channel] = enc.get(channel, 0.0) + w
        else:
            channel = name.rsplit("_lag", 1)[0]
            enc[channel] = enc.get(channel, 0.0) + w

    def norm(d):
        total = sum(d.values())
        if total <= 0:
            return uniform_importance(d or ["cpc"])
        return {k: v / total for k, v in d.items()}

    return norm(enc), norm(dec)


def predict_gbdt_model(model: TrainedModel, model_input: ModelInput,
                       dates=None) -> ForecastResult:
    """Forecast from the window's final as-of date, one model per step."""
    params = GbdtParams(**model.config.gbdt.__dict__) if not isinstance(model.config.gbdt, GbdtParams) \
        else model.config.gbdt
    lags = tuple(sorted(params.lags))
    past = model_input.past_observed
    known = model_input.known_future
    t = past.shape[0] - 1
    if t + 1 < lags[-1]:
        raise ValueError("window shorter than the largest lag")
    horizon = model.config.horizon
    point = np.empty(horizon)
    for step in range(1, horizon + 1):
        feats = []
        for v in range(past.shape[1]):
            for lag in lags:
                feats.append(past[t - lag + 1, v])
        for name in CALENDAR_CHANNELS + (BUDGET_CHANNEL,):
            if name in model_input.known_names:
                col = model_input.known_names.index(name)
                feats.append(known[t + step, col])
        row = np.asarray(feats)[None, :]
        point[step - 1] = predict_gbdt(model.params["steps"][str(step)], row, params.lr)[0]

    band = np.tile(point[:, None], (1, len(model.config.quantiles)))
    enc, dec = _channel_importance(model, gbdt_importance(model))
    att_len = min(model.config.encoder, past.shape[0])
    if dates is None:
        dates = model_input.dates[past.shape[0]:past.shape[0] + horizon]
    return ForecastResult(dates=np.asarray(dates), point=point, quantile_band=band,
                          quantiles=tuple(model.config.quantiles),
                          encoder_importance=enc, decoder_importance=dec,
                          attention=np.full(att_len, 1.0 / att_len),
                          model_kind="gbdt")
