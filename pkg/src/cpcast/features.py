"""Fourteen summary features of a daily series, for feature-space clustering.

The decomposition behind the strength features is classical and additive:
trend is a centered 7-day moving average, the seasonal component is the
per-weekday mean of the detrended series (re-centered), and the remainder
is what is left. Degenerate inputs (constant series) map every ratio-based
feature to 0 by convention rather than erroring.

Population variance (ddof=0) is used throughout, including the acf_1
denominator and z-normalization.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

FEATURE_NAMES = ("mean", "variance", "acf_1", "trend", "linearity", "curvature",
                 "season", "peak", "trough", "entropy", "lumpiness", "spikiness",
                 "f_spots", "c_points")

LUMPINESS_BLOCK = 28  # days per non-overlapping variance block
FLAT_SPOT_BINS = 10


@dataclass
class FeatureVector14:
    mean: float
    variance: float
    acf_1: float
    trend: float
    linearity: float
    curvature: float
    season: float
    peak: float
    trough: float
    entropy: float
    lumpiness: float
    spikiness: float
    f_spots: float
    c_points: float

    def to_array(self) -> np.ndarray:
        return np.array([getattr(self, f.name) for f in fields(self)])


def _decompose(y: np.ndarray, period: int):
    """Centered-MA trend, per-phase seasonal, remainder, over the valid interior.

    The trend window is three periods when the series is long enough (a
    period-length window lets 1/period of any noise variance leak into the
    trend component, overstating trend strength on noise); a multiple of
    the period keeps the moving average blind to the seasonal cycle.
    """
    window = 3 * period if len(y) >= 5 * period else period
    half = window // 2
    kernel = np.full(window, 1.0 / window)
    trend = np.convolve(y, kernel, mode="valid")  # aligned to y[half : n-half]
    interior = y[half:len(y) - half]
    phases = (np.arange(half, len(y) - half)) % period
    detrended = interior - trend
    seasonal_means = np.array(
        [detrended[phases == p].mean() if (phases == p).any() else 0.0 for p in range(period)])
    seasonal_means = seasonal_means - seasonal_means.mean()
    seasonal = seasonal_means[phases]
    remainder = detrended - seasonal
    return trend, seasonal_means, seasonal, remainder


def _strength(remainder: np.ndarray, base: np.ndarray) -> float:
    denom = np.var(base)
    if denom <= 0:
        return 0.0
    return float(min(1.0, max(0.0, 1.0 - np.var(remainder) / denom)))


def _orthogonal_poly_coefs(trend: np.ndarray) -> tuple[float, float]:
    t = np.linspace(-1.0, 1.0, len(trend))
    vander = np.column_stack([np.ones_like(t), t, t * t])
    q, r = np.linalg.qr(vander)
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    q = q * signs
    coefs = q.T @ trend
    return float(coefs[1]), float(coefs[2])


def _spectral_entropy(y: np.ndarray) -> float:
    power = np.abs(np.fft.rfft(y - y.mean())[1:]) ** 2
    total = power.sum()
    if total <= 0 or len(power) < 2:
        return 0.0
    p = power / total
    p = p[p > 0]
    return float(-(p * np.log(p)).sum() / np.log(len(power)))


def _lumpiness(y: np.ndarray) -> float:
    std = np.std(y)
    if std <= 0:
        return 0.0
    z = (y - y.mean()) / std
    n_blocks = len(z) // LUMPINESS_BLOCK
    if n_blocks < 2:
        return 0.0
    blocks = z[:n_blocks * LUMPINESS_BLOCK].reshape(n_blocks, LUMPINESS_BLOCK)
    return float(np.var(blocks.var(axis=1)))


def _spikiness(remainder: np.ndarray) -> float:
    r = remainder
    n = len(r)
    if n < 3:
        return 0.0
    s1, s2 = r.sum(), (r * r).sum()
    loo_var = (s2 - r * r) / (n - 1) - ((s1 - r) / (n - 1)) ** 2
    return float(np.var(loo_var))


def _flat_spots(y: np.ndarray) -> int:
    lo, hi = y.min(), y.max()
    if hi <= lo:
        return len(y)
    bins = np.minimum((((y - lo) / (hi - lo)) * FLAT_SPOT_BINS).astype(np.int64),
                      FLAT_SPOT_BINS - 1)
    longest = run = 1
    for a, b in zip(bins[:-1], bins[1:]):
        run = run + 1 if a == b else 1
        longest = max(longest, run)
    return longest


def _crossing_points(y: np.ndarray) -> int:
    above = y > np.median(y)
    return int(np.sum(above[1:] != above[:-1]))


def _acf1(y: np.ndarray) -> float:
    z = y - y.mean()
    denom = (z * z).sum()
    if denom <= 0:
        return 0.0
    return float((z[:-1] * z[1:]).sum() / denom)


def extract_features(y, period: int = 7) -> FeatureVector14:
    """Summarize one daily series as a FeatureVector14."""
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if len(y) < 3 * period:
        raise ValueError(f"need at least {3 * period} points, got {len(y)}")
    if np.isnan(y).any():
        raise ValueError("series contains missing values")
    if np.var(y) == 0.0:
        # constant series: every ratio-based feature takes its degenerate value
        return FeatureVector14(mean=float(y.mean()), variance=0.0, acf_1=0.0,
                               trend=0.0, linearity=0.0, curvature=0.0, season=0.0,
                               peak=0.0, trough=0.0, entropy=0.0, lumpiness=0.0,
                               spikiness=0.0, f_spots=float(len(y)), c_points=0.0)

    trend_comp, seasonal_means, seasonal, remainder = _decompose(y, period)
    linearity, curvature = _orthogonal_poly_coefs(trend_comp)
    return FeatureVector14(
        mean=float(y.mean()),
        variance=float(np.var(y)),
        acf_1=_acf1(y),
        trend=_strength(remainder, trend_comp + remainder),
        linearity=linearity,
        curvature=curvature,
        season=_strength(remainder, seasonal + remainder),
        peak=float(seasonal_means.max()),
        trough=float(-seasonal_means.min()),
        entropy=_spectral_entropy(y),
        lumpiness=_lumpiness(y),
        spikiness=_spikiness(remainder),
        f_spots=float(_flat_spots(y)),
        c_points=float(_crossing_points(y)),
    )


def znormalize(vectors) -> np.ndarray:
    """Stack feature vectors and scale each coordinate to mean 0, stdev 1.

    Zero-variance coordinates map to 0. Population stdev, so two values
    {1, 3} become {-1, +1}.
    """
    if len(vectors) < 2:
        raise ValueError("need at least 2 vectors to normalize")
    rows = [v.to_array() if isinstance(v, FeatureVector14) else np.asarray(v, dtype=np.float64)
            for v in vectors]
    m = np.stack(rows)
    mean = m.mean(axis=0)
    std = m.std(axis=0)
    out = np.where(std > 0, (m - mean) / np.where(std > 0, std, 1.0), 0.0)
    return out
