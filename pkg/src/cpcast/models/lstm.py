"""Single-layer LSTM forecaster.

The encoder consumes the standardized past channels concatenated with the
known-future channels over the encoder window; a linear head maps the
final hidden state to horizon x quantile outputs trained with pinball
loss. Interpretability exports are flat (the architecture carries none).
"""

from __future__ import annotations

import numpy as np

from .. import autodiff as ad
from .common import (ForecastResult, ModelConfig, ModelInput, TrainedModel,
                     sort_quantile_rows, uniform_importance)
from . import neural as nn


def _encoder_inputs(model_input: ModelInput, norm: dict) -> np.ndarray:
    past = nn.standardize_with(model_input.past_observed, norm["past_mean"], norm["past_std"])
    known = nn.standardize_with(model_input.known_future, norm["known_mean"], norm["known_std"])
    return np.concatenate([past, known[:past.shape[0]]], axis=1)


def _forward(store: ad.ParamStore, slab: np.ndarray, hidden: int) -> ad.Value:
    """slab is (B, E, V); returns (B, H*Q) head output."""
    b, e, _ = slab.shape
    h = ad.Value(np.zeros((b, hidden)))
    c = ad.Value(np.zeros((b, hidden)))
    for t in range(e):
        x = ad.Value(slab[:, t, :])
        h, c = nn.lstm_step(store, "lstm", x, h, c, hidden)
    return nn.linear(store, "head", h)


def fit_lstm(model_input: ModelInput, config: ModelConfig) -> TrainedModel:
    rng = np.random.default_rng(config.seed)
    norm = nn.model_norm(model_input)
    inputs = _encoder_inputs(model_input, norm)
    target = nn.standardize_with(model_input.past_observed[:, 0],
                                 norm["past_mean"][0], norm["past_std"][0])
    positions = nn.window_positions(model_input.n_days, config.encoder, config.horizon,
                                    config.window_stride, config.max_windows)
    train_pos, val_pos = nn.split_validation(positions)
    q = tuple(config.quantiles)

    store = ad.ParamStore()
    nn.lstm_init(store, "lstm", inputs.shape[1], config.hidden, rng)
    nn.linear_init(store, "head", config.hidden, config.horizon * len(q), rng)

    def batch(positions):
        slab = nn.stack_windows(inputs, positions, 0, config.encoder)
        targets = np.concatenate([target[p + 1: p + 1 + config.horizon] for p in positions])
        return slab, targets

    train_slab, train_targets = batch(train_pos)
    val_slab, val_targets = batch(val_pos)

    def train_loss():
        out = _forward(store, train_slab, config.hidden)
        pred = ad.reshape(out, (len(train_pos) * config.horizon, len(q)))
        return nn.pinball_loss(pred, train_targets, q, config.loss)

    def val_loss():
        out = _forward(store, val_slab, config.hidden)
        pred = ad.reshape(out, (len(val_pos) * config.horizon, len(q)))
        return float(nn.pinball_loss(pred, val_targets, q, config.loss).data)

    log = nn.fit_loop(store, train_loss, val_loss, config)
    return TrainedModel(kind="lstm", config=config, params=store.state_dict(),
                        feature_names={"past": list(model_input.past_names),
                                       "known": list(model_input.known_names),
                                       "static": list(model_input.static_names)},
                        norm=norm, training_log=log)


def predict_lstm(model: TrainedModel, model_input: ModelInput) -> ForecastResult:
    config = model.config
    norm = {k: np.asarray(v) for k, v in model.norm.items()}
    store = ad.ParamStore()
    store.load_state_dict({k: np.asarray(v) for k, v in model.params.items()})
    inputs = _encoder_inputs(model_input, norm)
    e = config.encoder
    if inputs.shape[0] < e:
        raise ValueError(f"window of {inputs.shape[0]} days shorter than encoder {e}")
    slab = inputs[None, -e:, :]
    q = tuple(config.quantiles)
    out = _forward(store, slab, config.hidden).data.reshape(config.horizon, len(q))
    band = sort_quantile_rows(out) * norm["past_std"][0] + norm["past_mean"][0]
    point = band[:, config.median_index]
    names = list(model_input.past_names) + list(model_input.known_names)
    return ForecastResult(
        dates=model_input.dates[model_input.n_days:model_input.n_days + config.horizon],
        point=point, quantile_band=band, quantiles=q,
        encoder_importance=uniform_importance(names),
        decoder_importance=uniform_importance(model_input.known_names),
        attention=np.full(e, 1.0 / e), model_kind="lstm")
