"""Forecaster families: seasonal-naive, SARIMA, boosted trees, LSTM, TFT."""

from .common import (DEFAULT_QUANTILES, ForecastResult, GbdtParams, ModelConfig,
                     ModelInput, TrainedModel, compute_stats, pinball,
                     sort_quantile_rows, uniform_importance)
from .gbdt import (fit_gbdt, fit_gbdt_model, gbdt_importance, predict_gbdt,
                   predict_gbdt_model, tabularize)
from .lstm import fit_lstm, predict_lstm
from .sarima import SarimaError, fit_sarima, forecast_sarima
from .snaive import snaive
from .tft import fit_tft, interpret_tft, predict_tft


def fit(model_input: ModelInput, config: ModelConfig) -> TrainedModel:
    """Train the configured model kind on one composed input."""
    if config.kind == "snaive":
        return TrainedModel(kind="snaive", config=config, params={},
                            feature_names={"past": list(model_input.past_names),
                                           "known": list(model_input.known_names),
                                           "static": list(model_input.static_names)},
                            norm={}, training_log=[])
    if config.kind == "sarima":
        return fit_sarima(model_input.past_observed[:, 0], config)
    if config.kind == "gbdt":
        return fit_gbdt_model(model_input, config)
    if config.kind == "lstm":
        return fit_lstm(model_input, config)
    if config.kind == "tft":
        return fit_tft(model_input, config)
    raise ValueError(f"no trainer for model kind {config.kind!r}")


def predict(model: TrainedModel, model_input: ModelInput) -> ForecastResult:
    """Forecast the input window's horizon with a trained model."""
    if model.kind == "snaive" or model.config.kind == "snaive":
        return snaive(model_input.past_observed[:, 0], model.config.horizon,
                      dates=model_input.dates[model_input.n_days:
                                              model_input.n_days + model.config.horizon],
                      quantiles=model.config.quantiles)
    if model.kind == "sarima":
        return forecast_sarima(model, model.config.horizon,
                               dates=model_input.dates[model_input.n_days:
                                                       model_input.n_days + model.config.horizon])
    if model.kind == "gbdt":
        return predict_gbdt_model(model, model_input)
    if model.kind == "lstm":
        return predict_lstm(model, model_input)
    if model.kind == "tft":
        return predict_tft(model, model_input)
    raise ValueError(f"no predictor for model kind {model.kind!r}")
