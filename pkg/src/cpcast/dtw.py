"""Dynamic time warping: distances, alignment paths, barycenter averaging.

Local cost is the squared pointwise difference; the reported distance is
the square root of the minimal accumulated cost over monotone alignment
paths with steps {(1,0), (0,1), (1,1)}, so equal-length series under a
zero-width band reduce to plain Euclidean distance. An optional
Sakoe-Chiba band of radius ``window`` constrains |i - j|.

The DP sweeps anti-diagonals with vectorized gathers, which keeps long
panel series (a few thousand points) fast without a compiled extension.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class BandError(ValueError):
    """Sakoe-Chiba band too narrow to align the two series."""


def _validate(x, y) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if x.size == 0 or y.size == 0:
        raise ValueError("dtw: empty series")
    return x, y


def _check_band(n: int, m: int, window) -> None:
    if window is not None and abs(n - m) > window:
        raise BandError(f"band radius {window} cannot align lengths {n} and {m}")


def _accumulated_cost(x: np.ndarray, y: np.ndarray, window, x_weights=None) -> np.ndarray:
    """Padded (n+1, m+1) accumulated-cost matrix; [0, 0] = 0, borders inf."""
    n, m = len(x), len(y)
    local = (x[:, None] - y[None, :]) ** 2
    if x_weights is not None:
        local = local * np.asarray(x_weights, dtype=np.float64)[:, None]
    acc = np.full((n + 1, m + 1), np.inf)
    acc[0, 0] = 0.0
    for d in range(2, n + m + 2):
        # cells (i, j) with i + j = d in padded coordinates
        lo, hi = max(1, d - m), min(n, d - 1)
        if window is not None:
            # |(i-1) - (j-1)| = |2i - d| <= window
            lo = max(lo, -((window - d) // 2))  # ceil((d - window) / 2)
            hi = min(hi, (d + window) // 2)
        if lo > hi:
            continue
        i = np.arange(lo, hi + 1)
        j = d - i
        best = np.minimum(acc[i - 1, j], acc[i, j - 1])
        np.minimum(best, acc[i - 1, j - 1], out=best)
        acc[i, j] = local[i - 1, j - 1] + best
    return acc


def dtw(x, y, window: int | None = None) -> float:
    """Alignment distance between two series."""
    x, y = _validate(x, y)
    _check_band(len(x), len(y), window)
    acc = _accumulated_cost(x, y, window)
    total = acc[len(x), len(y)]
    if not np.isfinite(total):
        raise BandError(f"band radius {window} leaves no feasible alignment")
    return float(np.sqrt(total))


def dtw_path(x, y, window: int | None = None) -> list[tuple[int, int]]:
    """Minimal-cost monotone alignment path as 0-indexed (i, j) pairs.

    The path starts at (0, 0), ends at (len(x)-1, len(y)-1), and its summed
    squared differences equal ``dtw(x, y) ** 2``. Cost ties resolve
    diagonal first, then the x-advancing step.
    """
    x, y = _validate(x, y)
    _check_band(len(x), len(y), window)
    acc = _accumulated_cost(x, y, window)
    i, j = len(x), len(y)
    if not np.isfinite(acc[i, j]):
        raise BandError(f"band radius {window} leaves no feasible alignment")
    path = [(i - 1, j - 1)]
    while (i, j) != (1, 1):
        steps = ((acc[i - 1, j - 1], (i - 1, j - 1)),
                 (acc[i - 1, j], (i - 1, j)),
                 (acc[i, j - 1], (i, j - 1)))
        _, (i, j) = min(steps, key=lambda s: s[0])
        path.append((i - 1, j - 1))
    return path[::-1]


def dtw_many(batch, y, window: int | None = None, y_weights=None) -> np.ndarray:
    """Distances from every row of ``batch`` to ``y`` in one rolling DP sweep.

    ``y_weights``, when given, scales the squared difference at each ``y``
    position (used by timestamp-weighted clustering).
    """
    X = np.asarray(batch, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if X.shape[1] == 0 or y.size == 0:
        raise ValueError("dtw: empty series")
    n, m = X.shape[1], y.size
    _check_band(n, m, window)
    w = None if y_weights is None else np.asarray(y_weights, dtype=np.float64)

    # rolling anti-diagonals of the padded DP, indexed by padded i
    b = X.shape[0]
    prev = np.full((b, n + 1), np.inf)
    prev[:, 0] = 0.0  # diagonal d = 0 holds only acc[0, 0]
    prev2 = np.full((b, n + 1), np.inf)
    for d in range(1, n + m + 1):
        cur = np.full((b, n + 1), np.inf)
        lo, hi = max(1, d - m), min(n, d - 1)
        if window is not None:
            lo = max(lo, -((window - d) // 2))
            hi = min(hi, (d + window) // 2)
        if lo <= hi:
            i = np.arange(lo, hi + 1)
            j = d - i
            best = np.minimum(prev[:, i - 1], prev[:, i])
            np.minimum(best, prev2[:, i - 1], out=best)
            local = (X[:, i - 1] - y[j - 1][None, :]) ** 2
            if w is not None:
                local = local * w[j - 1][None, :]
            cur[:, i] = local + best
        prev2, prev = prev, cur
    total = prev[:, n]
    if not np.all(np.isfinite(total)):
        raise BandError(f"band radius {window} leaves no feasible alignment")
    return np.sqrt(total)


@dataclass
class DistanceMatrix:
    """Symmetric pairwise distances over an ordered set of advertisers."""

    ids: list[str]
    d: np.ndarray

    def __post_init__(self):
        n = len(self.ids)
        if self.d.shape != (n, n):
            raise ValueError(f"distance matrix shape {self.d.shape} != ({n}, {n})")
        if not np.allclose(self.d, self.d.T) or not np.allclose(np.diag(self.d), 0.0):
            raise ValueError("distance matrix must be symmetric with zero diagonal")
        if (self.d < 0).any():
            raise ValueError("distances must be nonnegative")


def pairwise_matrix(series: dict[str, np.ndarray] | list, window: int | None = None) -> DistanceMatrix:
    """All-pairs DTW distances, batched per anchor row."""
    if isinstance(series, dict):
        ids = list(series.keys())
        X = np.asarray([series[k] for k in ids], dtype=np.float64)
    else:
        ids = [str(i) for i in range(len(series))]
        X = np.asarray(series, dtype=np.float64)
    n = len(ids)
    d = np.zeros((n, n))
    for i in range(n - 1):
        d[i, i + 1:] = dtw_many(X[i + 1:], X[i], window=window)
    d = d + d.T
    return DistanceMatrix(ids=ids, d=d)


def medoid_index(X: np.ndarray, window: int | None = None) -> int:
    """Index of the series minimizing the sum of squared DTW distances."""
    totals = np.empty(len(X))
    for i in range(len(X)):
        totals[i] = float(np.sum(dtw_many(X, X[i], window=window) ** 2))
    return int(np.argmin(totals))


def dba(series_set, init=None, max_iter: int = 30, tol: float = 1e-6,
        weights=None) -> tuple[np.ndarray, list[float]]:
    """DTW barycenter averaging.

    Starting from ``init`` (default: the DTW medoid of the set), each
    iteration aligns every series to the barycenter and replaces each
    barycenter coordinate with the mean of the points aligned to it. The
    returned objective trace Sum of dtw(barycenter, s)^2 is non-increasing.

    ``weights`` (per barycenter coordinate) switch the alignments to
    weighted DTW; the coordinate update is unchanged because the weight
    factors out of each coordinate's least-squares mean.
    """
    X = np.asarray(series_set, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("dba: need a non-empty set of equal-length series")
    b = np.array(X[medoid_index(X)] if init is None else init, dtype=np.float64)
    objectives: list[float] = []
    for _ in range(max_iter):
        sums = np.zeros(len(b))
        counts = np.zeros(len(b))
        total = 0.0
        for s in X:
            acc = _accumulated_cost(b, s, None, x_weights=weights)
            total += float(acc[len(b), len(s)])
            i, j = len(b), len(s)
            while True:
                sums[i - 1] += s[j - 1]
                counts[i - 1] += 1
                if (i, j) == (1, 1):
                    break
                steps = ((acc[i - 1, j - 1], (i - 1, j - 1)),
                         (acc[i - 1, j], (i - 1, j)),
                         (acc[i, j - 1], (i, j - 1)))
                _, (i, j) = min(steps, key=lambda st: st[0])
        objectives.append(total)
        if len(objectives) >= 2:
            prev = objectives[-2]
            if prev > 0 and (prev - total) / prev < tol:
                break
        b = sums / np.maximum(counts, 1.0)
    return b, objectives
