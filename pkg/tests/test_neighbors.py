import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from flowbalance.dataset import Dataset
from flowbalance.errors import ParameterError
from flowbalance.neighbors import (
    NeighborQuery,
    knn,
    knn_table,
    majority_count_in_knn,
    standardize,
)


def plain_dataset(features, labels=None):
    features = np.asarray(features, dtype=np.float64)
    if features.ndim == 1:
        features = features[:, None]
    if labels is None:
        labels = np.zeros(features.shape[0], dtype=np.int64)
    names = tuple(f"f{j}" for j in range(features.shape[1]))
    return Dataset(features, np.asarray(labels, dtype=np.int64), names)


def brute_force_knn(scaled, i, scope_idx, k):
    """Reference: exhaustive sort by (distance, index), self excluded."""
    cands = [j for j in scope_idx if j != i]
    d = [(float(np.sum((scaled[j] - scaled[i]) ** 2)), j) for j in cands]
    d.sort()
    return np.array([j for _, j in d[:k]], dtype=np.int64)


class TestStandardize:
    def test_hand_zscores(self):
        view = standardize(plain_dataset([1.0, 2.0, 3.0]))
        want = np.array([-1.224744871391589, 0.0, 1.224744871391589])
        assert np.allclose(view.scaled[:, 0], want, atol=1e-12)

    def test_constant_column_maps_to_zero(self):
        view = standardize(plain_dataset([[5.0, 1.0], [5.0, 2.0], [5.0, 3.0]]))
        assert np.all(view.scaled[:, 0] == 0.0)
        assert view.stds[0] == 1.0

    def test_idempotent(self):
        rng = np.random.default_rng(0)
        ds = plain_dataset(rng.normal(3.0, 10.0, size=(40, 3)))
        once = standardize(ds)
        twice = standardize(plain_dataset(once.scaled))
        assert np.allclose(once.scaled, twice.scaled, atol=1e-9)

    def test_raw_view_keeps_coordinates(self):
        ds = plain_dataset([[1.0, 10.0], [2.0, 20.0], [3.0, 30.0]])
        view = standardize(ds, raw=True)
        assert np.array_equal(view.scaled, ds.features)

    def test_population_statistics(self):
        rng = np.random.default_rng(5)
        ds = plain_dataset(rng.random((100, 4)))
        view = standardize(ds)
        assert np.allclose(view.scaled.mean(axis=0), 0.0, atol=1e-12)
        assert np.allclose(view.scaled.std(axis=0), 1.0, atol=1e-12)

    def test_needs_two_rows(self):
        with pytest.raises(ParameterError):
            standardize(plain_dataset([1.0]))


class TestKnn:
    def test_three_point_line(self):
        view = standardize(plain_dataset([0.0, 1.0, 10.0]))
        assert list(knn(view, 0, NeighborQuery(1))) == [1]
        assert list(knn(view, 1, NeighborQuery(1))) == [0]
        assert list(knn(view, 2, NeighborQuery(1))) == [1]
        assert list(knn(view, 0, NeighborQuery(2))) == [1, 2]

    def test_distance_tie_prefers_lower_index(self):
        # rows 1 and 2 are both at distance 1 from row 0
        view = standardize(plain_dataset([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [9.0, 9.0]]),)
        assert list(knn(view, 0, NeighborQuery(1))) == [1]
        assert list(knn(view, 0, NeighborQuery(2))) == [1, 2]

    def test_duplicate_points_tie(self):
        view = standardize(plain_dataset([2.0, 2.0, 2.0, 50.0]))
        assert list(knn(view, 2, NeighborQuery(2))) == [0, 1]

    def test_matches_brute_force_on_random_data(self):
        rng = np.random.default_rng(17)
        ds = plain_dataset(rng.normal(size=(200, 5)))
        view = standardize(ds)
        scope = np.arange(200)
        for i in range(200):
            got = knn(view, i, NeighborQuery(5))
            want = brute_force_knn(view.scaled, i, scope, 5)
            assert np.array_equal(got, want), f"row {i}"

    def test_minority_scope(self):
        labels = np.array([1, 0, 1, 0, 1, 0, 1])
        feats = np.arange(7.0)
        view = standardize(plain_dataset(feats, labels))
        got = knn(view, 2, NeighborQuery(2, scope="minority"))
        # minority rows are {0, 2, 4, 6}; nearest to row 2 are 0 and 4 (tie
        # in distance, lower index first)
        assert list(got) == [0, 4]

    def test_query_outside_scope(self):
        labels = np.array([1, 0, 1, 1])
        view = standardize(plain_dataset(np.arange(4.0), labels))
        with pytest.raises(ParameterError):
            knn(view, 1, NeighborQuery(1, scope="minority"))

    def test_k_too_large(self):
        view = standardize(plain_dataset(np.arange(4.0)))
        with pytest.raises(ParameterError):
            knn(view, 0, NeighborQuery(4))
        with pytest.raises(ParameterError):
            knn_table(view, np.arange(4), 4, scope="all")

    def test_bad_query_params(self):
        with pytest.raises(ParameterError):
            NeighborQuery(0)
        with pytest.raises(ParameterError):
            NeighborQuery(3, scope="everything")

    def test_table_agrees_with_single_queries(self):
        rng = np.random.default_rng(3)
        labels = (rng.random(60) < 0.4).astype(np.int64)
        labels[:3] = 1
        labels[-3:] = 0
        ds = plain_dataset(rng.normal(size=(60, 4)), labels)
        view = standardize(ds)
        minority = view.scope_indices("minority")
        table = knn_table(view, minority, 3, scope="minority")
        for row, i in enumerate(minority):
            assert np.array_equal(table[row], knn(view, int(i), NeighborQuery(3, scope="minority")))

    @given(
        n=st.integers(min_value=6, max_value=500),
        d=st.integers(min_value=1, max_value=4),
        k=st.integers(min_value=1, max_value=5),
        seed=st.integers(min_value=0, max_value=10_000),
    )
    @settings(max_examples=25, deadline=None)
    def test_property_matches_brute_force(self, n, d, k, seed):
        rng = np.random.default_rng(seed)
        # round to a coarse grid so distance ties actually happen
        feats = np.round(rng.normal(size=(n, d)), 1)
        view = standardize(plain_dataset(feats))
        scope = np.arange(n)
        picks = rng.choice(n, size=min(n, 12), replace=False)
        for i in picks:
            got = knn(view, int(i), NeighborQuery(k))
            want = brute_force_knn(view.scaled, int(i), scope, k)
            assert np.array_equal(got, want)


class TestMajorityCount:
    def test_surrounded_by_own_class(self):
        labels = np.array([1, 1, 1, 1, 0])
        feats = np.array([0.0, 0.1, 0.2, 0.3, 99.0])
        view = standardize(plain_dataset(feats, labels))
        assert majority_count_in_knn(view, 0, 3, labels) == 0

    def test_surrounded_by_majority(self):
        labels = np.array([1, 0, 0, 0, 0])
        feats = np.array([0.0, 0.1, 0.2, 0.3, 0.4])
        view = standardize(plain_dataset(feats, labels))
        assert majority_count_in_knn(view, 0, 4, labels) == 4

    def test_against_recount(self):
        rng = np.random.default_rng(23)
        labels = (rng.random(80) < 0.3).astype(np.int64)
        labels[0] = 1
        feats = rng.normal(size=(80, 3))
        view = standardize(plain_dataset(feats, labels))
        for i in np.flatnonzero(labels == 1):
            neigh = knn(view, int(i), NeighborQuery(5))
            want = int(np.sum(labels[neigh] == 0))
            assert majority_count_in_knn(view, int(i), 5, labels) == want
