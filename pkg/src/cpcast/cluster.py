"""Competitor discovery via three clustering routes.

- native advertiser categories
- k-means over 14 extracted features (z-normalized)
- DTW-based time-series k-means with barycenter centroids and optional
  per-timestamp weights

Each route yields a ClusterAssignment; assignments are compared through a
contingency table and the adjusted Rand index.

Series enter distance computations smoothed by a centered 7-day moving
average by default (raw mode available); cluster counts come from the
elbow (maximum curvature) of a WCSS-versus-k curve.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

import numpy as np

from . import dtw as _dtw
from .features import extract_features, znormalize

DEFAULT_SMOOTH_WINDOW = 7


@dataclass
class ClusterAssignment:
    """One clustering of the panel's advertisers."""

    method: str  # category | extracted | distance
    k: int
    labels: dict[str, int]
    centroids: np.ndarray | None = None
    timestamp_weights: np.ndarray | None = None
    wcss: float | None = None
    wcss_by_k: dict[int, float] | None = None
    objective_history: tuple = ()

    def __post_init__(self):
        if self.method not in ("category", "extracted", "distance"):
            raise ValueError(f"unknown clustering method {self.method!r}")
        used = set(self.labels.values())
        if used != set(range(self.k)):
            raise ValueError(f"cluster ids must be dense in [0, {self.k}), got {sorted(used)}")
        if self.timestamp_weights is not None:
            length = self.timestamp_weights.shape[1]
            sums = self.timestamp_weights.sum(axis=1)
            if not np.allclose(sums, length):
                raise ValueError("timestamp weights must sum to the series length per cluster")

    def members(self, cluster: int) -> list[str]:
        return [aid for aid, c in self.labels.items() if c == cluster]


def smooth(y: np.ndarray, window: int = DEFAULT_SMOOTH_WINDOW) -> np.ndarray:
    """Centered moving average with edge windows shrunk to the data."""
    if window <= 1:
        return np.asarray(y, dtype=np.float64)
    kernel = np.ones(window)
    summed = np.convolve(y, kernel, mode="same")
    counts = np.convolve(np.ones(len(y)), kernel, mode="same")
    return summed / counts


# ---------------------------------------------------------------------------
# category route
# ---------------------------------------------------------------------------

def category_clusters(panel) -> ClusterAssignment:
    """One cluster per distinct category, ids assigned in sorted order."""
    cats = sorted({s.category for s in panel.advertisers.values()})
    index = {c: i for i, c in enumerate(cats)}
    labels = {aid: index[s.category] for aid, s in panel.advertisers.items()}
    return ClusterAssignment(method="category", k=len(cats), labels=labels)


# ---------------------------------------------------------------------------
# k-means on points
# ---------------------------------------------------------------------------

def _kmeanspp_init(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = len(points)
    centers = [points[rng.integers(n)]]
    d2 = np.sum((points - centers[0]) ** 2, axis=1)
    for _ in range(1, k):
        total = d2.sum()
        if total <= 0:
            centers.append(points[rng.integers(n)])
            continue
        probs = d2 / total
        centers.append(points[rng.choice(n, p=probs)])
        d2 = np.minimum(d2, np.sum((points - centers[-1]) ** 2, axis=1))
    return np.stack(centers)


def _lloyd(points: np.ndarray, centers: np.ndarray, max_iter: int):
    """Lloyd iterations to a label fixpoint; returns labels, centers, WCSS trace."""
    n, k = len(points), len(centers)
    labels = np.full(n, -1)
    history = []
    for _ in range(max_iter):
        d2 = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new_labels = d2.argmin(axis=1)
        # re-seed empty clusters with the farthest point from its center
        for c in range(k):
            if not (new_labels == c).any():
                far = int(d2[np.arange(n), new_labels].argmax())
                new_labels[far] = c
                centers[c] = points[far]
                d2[:, c] = ((points - centers[c]) ** 2).sum(axis=1)
        history.append(float(d2[np.arange(n), new_labels].sum()))
        if (new_labels == labels).all():
            labels = new_labels
            break
        labels = new_labels
        for c in range(k):
            centers[c] = points[labels == c].mean(axis=0)
    wcss = float(((points - centers[labels]) ** 2).sum())
    return labels, centers, wcss, history


def kmeans(points, k: int, seed: int, ids=None, max_iter: int = 300,
           init_centers=None) -> ClusterAssignment:
    """Lloyd k-means from a k-means++ start; reports final WCSS."""
    points = np.asarray(points, dtype=np.float64)
    if k > len(points):
        raise ValueError(f"k={k} exceeds number of points {len(points)}")
    rng = np.random.default_rng(seed)
    centers = (np.array(init_centers, dtype=np.float64) if init_centers is not None
               else _kmeanspp_init(points, k, rng))
    labels, centers, wcss, history = _lloyd(points, centers.copy(), max_iter)
    ids = [str(i) for i in range(len(points))] if ids is None else list(ids)
    labels, centers = _densify(labels, centers)
    return ClusterAssignment(method="extracted", k=k, labels=dict(zip(ids, labels)),
                             centroids=centers, wcss=wcss,
                             objective_history=(tuple(history),))


def _densify(labels: np.ndarray, centers: np.ndarray):
    """Renumber cluster ids to be dense in [0, k) while keeping k fixed."""
    used = sorted(set(int(c) for c in labels))
    if len(used) == len(centers):
        remap = {c: i for i, c in enumerate(used)}
        return np.array([remap[int(c)] for c in labels]), centers[used]
    return labels, centers  # empty-cluster reseeding already guarantees density


def wcss_curve_kmeans(points: np.ndarray, seed: int, k_min: int = 2, k_max: int = 12,
                      restarts: int = 4) -> tuple[dict[int, float], dict[int, ClusterAssignment]]:
    """WCSS for each k, non-increasing by construction.

    For every k the best of several seeded k-means++ restarts competes with
    a nested start grown from the previous k's centers plus the farthest
    point, so adding a cluster can never report a worse WCSS.
    """
    points = np.asarray(points, dtype=np.float64)
    curve: dict[int, float] = {}
    best_by_k: dict[int, ClusterAssignment] = {}
    prev_centers = None
    for k in range(k_min, min(k_max, len(points)) + 1):
        candidates = [kmeans(points, k, seed + 101 * r) for r in range(restarts)]
        if prev_centers is not None:
            d2 = ((points[:, None, :] - prev_centers[None, :, :]) ** 2).sum(axis=2).min(axis=1)
            grown = np.vstack([prev_centers, points[int(d2.argmax())]])
            candidates.append(kmeans(points, k, seed, init_centers=grown))
        best = min(candidates, key=lambda a: a.wcss)
        curve[k] = best.wcss
        best_by_k[k] = best
        prev_centers = best.centroids
    return curve, best_by_k


def elbow(wcss_by_k: dict[int, float], k_min: int = 2, k_max: int = 12) -> int:
    """k at the maximum curvature (second difference) of the WCSS curve."""
    ks = list(range(k_min, k_max + 1))
    missing = [k for k in ks if k not in wcss_by_k]
    if missing:
        raise ValueError(f"wcss_by_k missing entries for k={missing}")
    w = np.array([float(wcss_by_k[k]) for k in ks])
    tol = 1e-9 * max(1.0, float(np.abs(w).max()))
    if (np.diff(w) > tol).any():
        raise ValueError("WCSS must be non-increasing in k; clustering run looks broken")
    second = w[:-2] - 2.0 * w[1:-1] + w[2:]
    # argmax takes the first maximum, so ties resolve to the smaller interior k
    return ks[1 + int(np.argmax(second))]


# ---------------------------------------------------------------------------
# extracted-features route
# ---------------------------------------------------------------------------

def extracted_clusters(panel, seed: int = 0, k: int | None = None,
                       k_min: int = 2, k_max: int = 12) -> ClusterAssignment:
    """z-normalized FeatureVector14 per advertiser, k-means, elbow for k."""
    ids = panel.ids()
    vectors = [extract_features(panel[a].cpc) for a in ids]
    points = znormalize(vectors)
    k_max = min(k_max, len(ids) - 1) if len(ids) > 2 else 2
    curve, best_by_k = wcss_curve_kmeans(points, seed, k_min=k_min, k_max=k_max)
    chosen = k if k is not None else elbow(curve, k_min=k_min, k_max=k_max)
    base = best_by_k.get(chosen) or kmeans(points, chosen, seed)
    return ClusterAssignment(method="extracted", k=chosen,
                             labels={aid: int(base.labels[str(i)]) for i, aid in enumerate(ids)},
                             centroids=base.centroids, wcss=base.wcss,
                             wcss_by_k=curve, objective_history=base.objective_history)


# ---------------------------------------------------------------------------
# distance route: time-series k-means with DTW + barycenters
# ---------------------------------------------------------------------------

def _greedy_medoid_wcss(dm: np.ndarray, k_min: int, k_max: int):
    """WCSS(k) and medoid sets from nested greedy medoids on squared distances.

    Grows the medoid set one element at a time (each addition minimizes the
    resulting WCSS) and refines by alternating assignment and per-cluster
    medoid recomputation; nesting makes the curve non-increasing in k.
    """
    d2 = dm ** 2
    n = len(d2)
    curve: dict[int, float] = {}
    medoids_by_k: dict[int, list[int]] = {}

    def refine(meds: list[int]) -> tuple[list[int], float]:
        meds = list(meds)
        for _ in range(20):
            assign = np.argmin(d2[:, meds], axis=1)
            new_meds = []
            for c in range(len(meds)):
                members = np.where(assign == c)[0]
                if len(members) == 0:
                    new_meds.append(meds[c])
                    continue
                sub = d2[np.ix_(members, members)]
                new_meds.append(int(members[sub.sum(axis=1).argmin()]))
            if new_meds == meds:
                break
            meds = new_meds
        assign = np.argmin(d2[:, meds], axis=1)
        return meds, float(d2[np.arange(n), np.array(meds)[assign]].sum())

    # growing each k from the refined (k-1)-set guarantees WCSS(k) <= WCSS(k-1)
    medoids = [int(d2.sum(axis=1).argmin())]
    for k in range(2, k_max + 1):
        current = d2[:, medoids].min(axis=1)
        gains = [np.inf if cand in medoids else float(np.minimum(current, d2[:, cand]).sum())
                 for cand in range(n)]
        medoids.append(int(np.argmin(gains)))
        medoids, wcss = refine(medoids)
        if k >= k_min:
            curve[k] = wcss
            medoids_by_k[k] = list(medoids)
    return curve, medoids_by_k


def tskmeans(series_set, k: int, seed: int, weighted: bool = False, ids=None,
             window: int | None = None, max_iter: int = 12,
             dba_iter: int = 3, init_indices=None) -> ClusterAssignment:
    """Time-series k-means: DTW assignment, barycenter (DBA) centroids.

    Starts from ``init_indices`` when given (e.g. medoids of a precomputed
    distance matrix), otherwise k-means++-style seeding under DTW. With
    ``weighted``, a second phase re-runs the alternation under fixed
    per-cluster timestamp weights proportional to the inverse within-cluster
    variance at each position (normalized to sum to the series length).
    The recorded objective trace is non-increasing within each phase.
    """
    X = np.asarray(series_set, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("tskmeans expects equal-length series")
    n, length = X.shape
    if k > n:
        raise ValueError(f"k={k} exceeds number of series {n}")
    rng = np.random.default_rng(seed)

    if init_indices is not None:
        if len(init_indices) != k:
            raise ValueError(f"init_indices must have length k={k}")
        centroid_idx = [int(i) for i in init_indices]
    else:
        # k-means++-style seeding under DTW
        centroid_idx = [int(rng.integers(n))]
        d2 = _dtw.dtw_many(X, X[centroid_idx[0]], window=window) ** 2
        for _ in range(1, k):
            total = d2.sum()
            pick = int(rng.choice(n, p=d2 / total)) if total > 0 else int(rng.integers(n))
            centroid_idx.append(pick)
            d2 = np.minimum(d2, _dtw.dtw_many(X, X[pick], window=window) ** 2)
    centroids = X[centroid_idx].copy()

    def run_phase(centroids, weights):
        labels = np.full(n, -1)
        history = []
        for _ in range(max_iter):
            dist = np.stack([
                _dtw.dtw_many(X, centroids[c], window=window,
                              y_weights=None if weights is None else weights[c])
                for c in range(k)], axis=1)
            new_labels = dist.argmin(axis=1)
            for c in range(k):
                if not (new_labels == c).any():
                    far = int(dist[np.arange(n), new_labels].argmax())
                    new_labels[far] = c
                    centroids[c] = X[far]
                    dist[:, c] = _dtw.dtw_many(
                        X, centroids[c], window=window,
                        y_weights=None if weights is None else weights[c])
            history.append(float((dist[np.arange(n), new_labels] ** 2).sum()))
            if (new_labels == labels).all():
                labels = new_labels
                break
            labels = new_labels
            for c in range(k):
                members = X[labels == c]
                centroids[c], _ = _dtw.dba(
                    members, init=centroids[c], max_iter=dba_iter,
                    weights=None if weights is None else weights[c])
        return labels, centroids, history

    labels, centroids, history_1 = run_phase(centroids, None)
    phases = [tuple(history_1)]
    weights = None
    if weighted:
        weights = np.empty((k, length))
        for c in range(k):
            members = X[labels == c]
            var = members.var(axis=0) if len(members) > 1 else np.zeros(length)
            raw = 1.0 / (var + 1e-3 * max(var.mean(), 1e-12) + 1e-30)
            weights[c] = raw * (length / raw.sum())
        labels, centroids, history_2 = run_phase(centroids, weights)
        phases.append(tuple(history_2))

    ids = [str(i) for i in range(n)] if ids is None else list(ids)
    label_arr, centroids = _densify(labels, centroids)
    return ClusterAssignment(method="distance", k=k,
                             labels=dict(zip(ids, (int(c) for c in label_arr))),
                             centroids=centroids, timestamp_weights=weights,
                             wcss=phases[-1][-1], objective_history=tuple(phases))


def distance_clusters(panel, seed: int = 0, k: int | None = None, k_min: int = 2,
                      k_max: int = 12, weighted: bool = True, normalize: bool = True,
                      smooth_window: int = DEFAULT_SMOOTH_WINDOW) -> ClusterAssignment:
    """DTW-based route: smooth (and z-scale) CPC, pick k by elbow, run tskmeans.

    Per-series z-normalization makes the route cluster by shape rather than
    by CPC level, which differs across advertisers by an order of magnitude.
    The WCSS-versus-k curve comes from nested greedy medoids on the
    precomputed DTW distance matrix; the full alternating algorithm then
    runs once at the chosen k, initialized at those medoids.
    """
    ids = panel.ids()
    X = np.stack([smooth(panel[a].cpc, smooth_window) for a in ids])
    if normalize:
        mu = X.mean(axis=1, keepdims=True)
        sd = X.std(axis=1, keepdims=True)
        X = (X - mu) / np.where(sd > 0, sd, 1.0)
    k_max = min(k_max, len(ids) - 1) if len(ids) > 2 else 2
    dm = _dtw.pairwise_matrix(dict(zip(ids, X)))
    curve, medoids_by_k = _greedy_medoid_wcss(dm.d, k_min, k_max)
    chosen = k if k is not None else elbow(curve, k_min=k_min, k_max=k_max)
    init = medoids_by_k.get(chosen)
    assignment = tskmeans(X, chosen, seed, weighted=weighted, ids=ids, init_indices=init)
    assignment.wcss_by_k = curve
    return assignment


# ---------------------------------------------------------------------------
# assignment comparison
# ---------------------------------------------------------------------------

def compare_assignments(a: ClusterAssignment, b: ClusterAssignment) -> dict:
    """Adjusted Rand index plus the k_a x k_b contingency table."""
    if set(a.labels) != set(b.labels):
        raise ValueError("assignments cover different advertiser sets")
    ids = sorted(a.labels)
    table = np.zeros((a.k, b.k), dtype=np.int64)
    for aid in ids:
        table[a.labels[aid], b.labels[aid]] += 1
    n = len(ids)
    sum_cells = sum(comb(int(x), 2) for x in table.reshape(-1))
    sum_rows = sum(comb(int(x), 2) for x in table.sum(axis=1))
    sum_cols = sum(comb(int(x), 2) for x in table.sum(axis=0))
    expected = sum_rows * sum_cols / comb(n, 2) if n >= 2 else 0.0
    max_index = 0.5 * (sum_rows + sum_cols)
    denom = max_index - expected
    if denom == 0:
        # degenerate partitions: identical ones agree perfectly
        identical = (np.count_nonzero(table, axis=0) <= 1).all() and \
                    (np.count_nonzero(table, axis=1) <= 1).all()
        ari = 1.0 if identical else 0.0
    else:
        ari = (sum_cells - expected) / denom
    return {"ari": float(ari), "contingency": table}
