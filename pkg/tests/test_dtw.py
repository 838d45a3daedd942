import numpy as np
import pytest

from cpcast import dtw as dwt
from _oracles import exhaustive_dtw


def test_identity_distance_is_zero():
    rng = np.random.default_rng(0)
    for _ in range(3):
        x = rng.normal(size=rng.integers(2, 30))
        assert dwt.dtw(x, x) == 0.0


def test_zero_band_reduces_to_euclidean():
    assert dwt.dtw([0.0, 0.0], [1.0, 1.0], window=0) == pytest.approx(np.sqrt(2.0))
    rng = np.random.default_rng(1)
    x, y = rng.normal(size=12), rng.normal(size=12)
    assert dwt.dtw(x, y, window=0) == pytest.approx(np.linalg.norm(x - y))


def test_spec_fixture_three_vs_two():
    assert dwt.dtw([1.0, 2.0, 3.0], [2.0, 3.0]) == 1.0


def test_spec_fixture_path():
    cost, path = exhaustive_dtw([1.0, 2.0, 3.0], [2.0, 3.0])
    assert cost == 1.0 and path == [(0, 0), (1, 0), (2, 1)]
    assert dwt.dtw_path([1.0, 2.0, 3.0], [2.0, 3.0]) == [(0, 0), (1, 0), (2, 1)]


def test_equal_series_give_diagonal_path():
    x = np.array([3.0, 1.0, 4.0, 1.0, 5.0])
    assert dwt.dtw_path(x, x) == [(i, i) for i in range(5)]


def test_path_endpoints_monotone_and_cost_consistent():
    rng = np.random.default_rng(2)
    for _ in range(20):
        x = rng.normal(size=rng.integers(2, 15))
        y = rng.normal(size=rng.integers(2, 15))
        path = dwt.dtw_path(x, y)
        assert path[0] == (0, 0) and path[-1] == (len(x) - 1, len(y) - 1)
        steps = {(a2 - a1, b2 - b1) for (a1, b1), (a2, b2) in zip(path, path[1:])}
        assert steps <= {(1, 0), (0, 1), (1, 1)}
        path_cost = sum((x[i] - y[j]) ** 2 for i, j in path)
        assert path_cost == pytest.approx(dwt.dtw(x, y) ** 2)


def test_matches_exhaustive_oracle_bitwise():
    rng = np.random.default_rng(3)
    for _ in range(60):
        x = rng.normal(size=rng.integers(1, 9))
        y = rng.normal(size=rng.integers(1, 9))
        cost, _ = exhaustive_dtw(x, y)
        assert dwt.dtw(x, y) == np.sqrt(cost)


def test_banded_matches_banded_oracle():
    rng = np.random.default_rng(4)
    for _ in range(30):
        n = int(rng.integers(3, 8))
        x, y = rng.normal(size=n), rng.normal(size=n)
        for w in (1, 2):
            cost, _ = exhaustive_dtw(x, y, window=w)
            assert dwt.dtw(x, y, window=w) == np.sqrt(cost)


def test_symmetry_and_euclidean_upper_bound():
    rng = np.random.default_rng(5)
    for _ in range(10):
        x, y = rng.normal(size=20), rng.normal(size=20)
        assert dwt.dtw(x, y) == pytest.approx(dwt.dtw(y, x))
        assert dwt.dtw(x, y) <= np.linalg.norm(x - y) + 1e-12
        assert dwt.dtw(x, y) >= 0.0


def test_empty_series_rejected():
    with pytest.raises(ValueError, match="empty"):
        dwt.dtw([], [1.0])


def test_infeasible_band_rejected():
    with pytest.raises(dwt.BandError):
        dwt.dtw([1.0, 2.0, 3.0, 4.0], [1.0], window=1)


def test_dtw_many_agrees_with_single_calls():
    rng = np.random.default_rng(6)
    X = rng.normal(size=(7, 25))
    y = rng.normal(size=25)
    batch = dwt.dtw_many(X, y)
    single = np.array([dwt.dtw(row, y) for row in X])
    assert np.array_equal(batch, single)
    batch_band = dwt.dtw_many(X, y, window=3)
    single_band = np.array([dwt.dtw(row, y, window=3) for row in X])
    assert np.array_equal(batch_band, single_band)


def test_weighted_dtw_many_matches_weighted_oracle():
    rng = np.random.default_rng(7)
    for _ in range(15):
        x = rng.normal(size=6)
        y = rng.normal(size=6)
        w = rng.uniform(0.2, 2.0, size=6)
        got = dwt.dtw_many(x, y, y_weights=w)[0]
        # weighted oracle: scale squared differences at each y position
        best = np.inf
        stack = [(0, 0, 0.0)]
        while stack:
            i, j, cost = stack.pop()
            cost = cost + w[j] * (x[i] - y[j]) ** 2
            if i == 5 and j == 5:
                best = min(best, cost)
                continue
            if i < 5 and j < 5:
                stack.append((i + 1, j + 1, cost))
            if i < 5:
                stack.append((i + 1, j, cost))
            if j < 5:
                stack.append((i, j + 1, cost))
        assert got == pytest.approx(np.sqrt(best), rel=1e-12)


def test_pairwise_matrix_structure():
    rng = np.random.default_rng(8)
    series = {f"a{i}": rng.normal(size=15) for i in range(5)}
    dm = dwt.pairwise_matrix(series)
    assert dm.ids == list(series.keys())
    assert np.allclose(dm.d, dm.d.T)
    assert np.allclose(np.diag(dm.d), 0.0)
    assert dm.d[1, 3] == pytest.approx(dwt.dtw(series["a1"], series["a3"]))


def test_medoid_of_obvious_fixture():
    X = np.array([[0.0, 0.0], [1.0, 1.0], [10.0, 10.0]])
    assert dwt.medoid_index(X) == 1


def test_dba_of_identical_series_is_the_series():
    x = np.array([1.0, 3.0, 2.0, 5.0])
    b, _ = dwt.dba(np.stack([x, x]))
    assert np.array_equal(b, x)


def test_dba_constant_series_average():
    b, objectives = dwt.dba(np.array([[0.0, 0.0, 0.0], [2.0, 2.0, 2.0]]))
    assert np.allclose(b, [1.0, 1.0, 1.0])
    assert objectives[-1] <= objectives[0]


def test_dba_objective_non_increasing():
    for seed in range(5):
        rng = np.random.default_rng(seed)
        X = rng.normal(size=(6, 18)) + rng.normal(size=(6, 1))
        _, objectives = dwt.dba(X, max_iter=12)
        diffs = np.diff(objectives)
        assert (diffs <= 1e-9).all(), objectives


def test_dba_empty_set_rejected():
    with pytest.raises(ValueError, match="non-empty"):
        dwt.dba(np.empty((0, 5)))
