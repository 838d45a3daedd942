"""Seasonal ARIMA fit by conditional sum of squares and simplex descent.

The model is the multiplicative (p, d, q)(P, D, Q) with weekly season s=7.
Residuals come from the rational filter ar(B)/ma(B) applied to the
differenced (and mean-centered, when d = D = 0) series, conditioning on
zero pre-sample residuals; the optimizer is derivative-free Nelder-Mead
over unconstrained parameters mapped through partial autocorrelations so
AR roots stay stationary and MA roots invertible.

"auto" order search scans p, q, P, Q in {0, 1, 2} and d, D in {0, 1},
keeping the fit with minimal AIC.
"""

from __future__ import annotations

import itertools

import numpy as np
from scipy.optimize import minimize
from scipy.signal import lfilter
from scipy.stats import norm

from .common import (DEFAULT_QUANTILES, ForecastResult, ModelConfig, TrainedModel,
                     uniform_importance)

SEASON = 7
AUTO_GRID = tuple(itertools.product((0, 1, 2), (0, 1), (0, 1, 2),
                                    (0, 1, 2), (0, 1), (0, 1, 2)))


class SarimaError(RuntimeError):
    """Non-convergence; carries best-so-far diagnostics."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


def _pacf_to_coef(pacf: np.ndarray) -> np.ndarray:
    """Durbin-Levinson: partial autocorrelations -> AR coefficients.

    Keeping every |pacf| < 1 guarantees the polynomial 1 - sum(c_i B^i)
    has all roots outside the unit circle.
    """
    coef = np.array(pacf, dtype=np.float64)
    for j in range(1, len(pacf)):
        coef[:j] = coef[:j] - pacf[j] * coef[:j][::-1]
    return coef


def _unpack(theta: np.ndarray, order) -> dict:
    p, d, q, P, D, Q = order
    off = 0
    out = {}
    for key, count in (("ar", p), ("ma", q), ("sar", P), ("sma", Q)):
        raw = theta[off:off + count]
        out[key] = _pacf_to_coef(np.tanh(raw)) if count else np.empty(0)
        off += count
    return out


def _polynomials(coefs: dict) -> tuple[np.ndarray, np.ndarray]:
    """Combined AR and MA lag polynomials (index = lag, entry 0 = 1)."""
    ar = np.r_[1.0, -coefs["ar"]]
    sar = np.zeros(SEASON * len(coefs["sar"]) + 1)
    sar[0] = 1.0
    for j, c in enumerate(coefs["sar"], start=1):
        sar[SEASON * j] = -c
    ma = np.r_[1.0, coefs["ma"]]
    sma = np.zeros(SEASON * len(coefs["sma"]) + 1)
    sma[0] = 1.0
    for j, c in enumerate(coefs["sma"], start=1):
        sma[SEASON * j] = c
    return np.convolve(ar, sar), np.convolve(ma, sma)


def _difference(y: np.ndarray, d: int, D: int) -> np.ndarray:
    w = np.array(y, dtype=np.float64)
    for _ in range(d):
        w = np.diff(w)
    for _ in range(D):
        w = w[SEASON:] - w[:-SEASON]
    return w


def _css(theta: np.ndarray, w_centered: np.ndarray, order) -> float:
    coefs = _unpack(theta, order)
    ar_poly, ma_poly = _polynomials(coefs)
    resid = lfilter(ar_poly, ma_poly, w_centered)
    n_cond = len(ar_poly) - 1
    tail = resid[n_cond:]
    if len(tail) < 8:
        return np.inf
    return float(np.dot(tail, tail))


def _fit_one(y: np.ndarray, order) -> dict:
    p, d, q, P, D, Q = order
    w = _difference(y, d, D)
    mu = float(w.mean()) if (d == 0 and D == 0) else 0.0
    w_c = w - mu
    n_params = p + q + P + Q
    if len(y) < 10 * (p + q + P + Q + 2):
        raise ValueError(f"series too short for order {order}: need "
                         f"{10 * (p + q + P + Q + 2)} points, have {len(y)}")
    if n_params == 0:
        theta = np.empty(0)
        sse = _css(theta, w_c, order)
        converged = True
    else:
        res = minimize(_css, np.zeros(n_params), args=(w_c, order),
                       method="Nelder-Mead",
                       options={"maxiter": 150 * n_params, "xatol": 1e-5, "fatol": 1e-9})
        theta, sse, converged = res.x, float(res.fun), bool(res.success)
    coefs = _unpack(theta, order)
    ar_poly, ma_poly = _polynomials(coefs)
    n_eff = len(w_c) - (len(ar_poly) - 1)
    sigma2 = max(sse / max(n_eff, 1), 1e-300)
    aic = n_eff * np.log(sigma2) + 2.0 * (n_params + 1)
    return {"order": list(order), "mu": mu, "sigma2": sigma2, "aic": float(aic),
            "sse": sse, "converged": converged,
            **{k: v.tolist() for k, v in coefs.items()}}


def fit_sarima(y, config: ModelConfig) -> TrainedModel:
    """Fit one explicit order, or scan the auto grid for minimal AIC."""
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if config.sarima == "auto":
        best = None
        skipped = []
        for order in AUTO_GRID:
            try:
                fit = _fit_one(y, order)
            except ValueError:
                skipped.append(order)
                continue
            if not fit["converged"]:
                continue
            if best is None or fit["aic"] < best["aic"]:
                best = fit
        if best is None:
            raise SarimaError("no auto-grid order converged",
                              {"skipped": skipped, "n": len(y)})
        fit = best
    else:
        order = tuple(config.sarima)
        if len(order) != 6:
            raise ValueError(f"sarima order must be (p, d, q, P, D, Q), got {order}")
        fit = _fit_one(y, order)
        if not fit["converged"]:
            raise SarimaError(f"CSS minimization did not converge for order {order}", fit)
    params = dict(fit)
    params["y"] = y.tolist()
    return TrainedModel(kind="sarima", config=config, params=params,
                        feature_names={"past": ["cpc"], "known": [], "static": []},
                        norm={}, training_log=[fit["sse"]])


def _psi_weights(ar_poly: np.ndarray, ma_poly: np.ndarray, d: int, D: int,
                 horizon: int) -> np.ndarray:
    """Impulse response of the full (integrated) transfer function."""
    ar_full = np.array(ar_poly)
    for _ in range(d):
        ar_full = np.convolve(ar_full, [1.0, -1.0])
    for _ in range(D):
        seasonal = np.zeros(SEASON + 1)
        seasonal[0], seasonal[SEASON] = 1.0, -1.0
        ar_full = np.convolve(ar_full, seasonal)
    impulse = np.zeros(horizon)
    impulse[0] = 1.0
    return lfilter(ma_poly, ar_full, impulse)


def forecast_sarima(model: TrainedModel, horizon: int, dates=None) -> ForecastResult:
    """Iterated-expectation forecast, un-differenced back to levels."""
    params = model.params
    order = tuple(params["order"])
    p, d, q, P, D, Q = order
    y = np.asarray(params["y"], dtype=np.float64)
    coefs = {k: np.asarray(params[k], dtype=np.float64) for k in ("ar", "ma", "sar", "sma")}
    ar_poly, ma_poly = _polynomials(coefs)
    mu = params["mu"]

    w = _difference(y, d, D)
    w_c = w - mu
    resid = lfilter(ar_poly, ma_poly, w_c)
    n_cond = len(ar_poly) - 1
    if n_cond:
        resid[:n_cond] = 0.0

    # iterate the ARMA recursion with future residuals at zero
    w_ext = np.r_[w_c, np.zeros(horizon)]
    e_ext = np.r_[resid, np.zeros(horizon)]
    n = len(w_c)
    for h in range(horizon):
        t = n + h
        acc = 0.0
        for lag in range(1, len(ar_poly)):
            if t - lag >= 0:
                acc -= ar_poly[lag] * w_ext[t - lag]
        for lag in range(1, len(ma_poly)):
            if t - lag >= 0:
                acc += ma_poly[lag] * e_ext[t - lag]
        w_ext[t] = acc
    w_fore = w_ext[n:] + mu

    # climb the differencing ladder back to levels, inverting ops in reverse
    ops = ["d"] * d + ["D"] * D
    ladder = [np.array(y, dtype=np.float64)]
    for op in ops:
        cur = ladder[-1]
        ladder.append(np.diff(cur) if op == "d" else cur[SEASON:] - cur[:-SEASON])
    fore = np.array(w_fore)
    for level, op in zip(reversed(ladder[:-1]), reversed(ops)):
        hist = list(level)
        out = np.empty_like(fore)
        for h, v in enumerate(fore):
            nxt = v + (hist[-1] if op == "d" else hist[-SEASON])
            hist.append(nxt)
            out[h] = nxt
        fore = out

    point = fore
    sigma = np.sqrt(params["sigma2"])
    psi = _psi_weights(ar_poly, ma_poly, d, D, horizon)
    scale = sigma * np.sqrt(np.cumsum(psi ** 2))
    quantiles = tuple(model.config.quantiles) if model.config else DEFAULT_QUANTILES
    band = point[:, None] + scale[:, None] * norm.ppf(np.asarray(quantiles))[None, :]
    if dates is None:
        dates = np.arange(horizon)
    att_len = min(len(y), model.config.encoder)
    return ForecastResult(dates=np.asarray(dates), point=point, quantile_band=band,
                          quantiles=quantiles,
                          encoder_importance=uniform_importance(["cpc"]),
                          decoder_importance=uniform_importance(["dow"]),
                          attention=np.full(att_len, 1.0 / att_len),
                          model_kind="sarima")
