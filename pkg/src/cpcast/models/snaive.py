"""Seasonal-naive baseline: repeat the last observed cycle."""

from __future__ import annotations

import numpy as np

from .common import DEFAULT_QUANTILES, ForecastResult, uniform_importance


def snaive(history, horizon: int, period: int = 7, dates=None,
           quantiles=DEFAULT_QUANTILES) -> ForecastResult:
    """forecast[t] = history[n - period + (t mod period)]; no quantile spread."""
    history = np.asarray(history, dtype=np.float64)
    if len(history) < period:
        raise ValueError(f"history shorter than period {period}")
    idx = len(history) - period + (np.arange(horizon) % period)
    point = history[idx]
    if dates is None:
        dates = np.arange(horizon)
    band = np.tile(point[:, None], (1, len(quantiles)))
    return ForecastResult(dates=np.asarray(dates), point=point, quantile_band=band,
                          quantiles=tuple(quantiles),
                          encoder_importance=uniform_importance(["cpc"]),
                          decoder_importance=uniform_importance(["dow"]),
                          attention=np.full(period, 1.0 / period),
                          model_kind="snaive")
