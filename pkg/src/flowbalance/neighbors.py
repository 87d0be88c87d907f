"""Exact k-nearest-neighbor queries on standardized features.

Every neighbor-based oversampler shares this machinery. Search is exact
(a full distance scan), which keeps desk-scale runs fast enough and makes
brute-force test oracles trivial. Distances are Euclidean in z-scored
space by default; a raw-space view is available for comparison.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import Dataset
from .errors import ParameterError

STD_FLOOR = 1e-12


@dataclass(frozen=True)
class StandardizedView:
    """A dataset together with its z-scored copy."""

    source: Dataset
    means: np.ndarray
    stds: np.ndarray  # floored; constant columns keep scale 1
    scaled: np.ndarray

    def scope_indices(self, scope: str) -> np.ndarray:
        if scope == "all":
            return np.arange(self.source.n)
        if scope == "minority":
            return np.flatnonzero(self.source.labels == 1)
        raise ParameterError(f"unknown scope {scope!r}")


@dataclass(frozen=True)
class NeighborQuery:
    """k nearest Euclidean neighbors within a scope of rows."""

    k: int
    scope: str = "all"  # "all" | "minority"

    def __post_init__(self):
        if self.k < 1:
            raise ParameterError("k must be at least 1")
        if self.scope not in ("all", "minority"):
            raise ParameterError(f"unknown scope {self.scope!r}")


def standardize(dataset: Dataset, raw: bool = False) -> StandardizedView:
    """Z-score a dataset with population statistics.

    Columns whose standard deviation falls below ``STD_FLOOR`` are treated
    as constant and scaled by 1, so they map to all zeros. With ``raw``
    the view keeps the original coordinates (identity scaling).
    """
    if dataset.n < 2:
        raise ParameterError("standardize needs at least 2 rows")
    if raw:
        means = np.zeros(dataset.d)
        stds = np.ones(dataset.d)
        return StandardizedView(dataset, means, stds, dataset.features)
    means = dataset.features.mean(axis=0)
    stds = dataset.features.std(axis=0)
    stds = np.where(stds <= STD_FLOOR, 1.0, stds)
    scaled = (dataset.features - means) / stds
    return StandardizedView(dataset, means, stds, scaled)


def _exact_topk(dists: np.ndarray, k: int) -> np.ndarray:
    """Indices of the k smallest entries, ties broken by ascending index.

    Rows are laid out in index order, so a stable sort on distance alone
    realizes the tie rule.
    """
    n = dists.shape[-1]
    if n <= 2048 or k * 4 >= n:
        order = np.argsort(dists, axis=-1, kind="stable")
        return order[..., :k]
    # argpartition then verify the boundary is strict; fall back per row
    pad = min(n - 1, k + 32)
    part = np.argpartition(dists, pad, axis=-1)[..., : pad + 1]
    part_d = np.take_along_axis(dists, part, axis=-1)
    # stable order inside the candidate set: sort by (distance, index)
    sub = np.lexsort((part, part_d), axis=-1)
    cand = np.take_along_axis(part, sub, axis=-1)
    cand_d = np.take_along_axis(part_d, sub, axis=-1)
    out = cand[..., :k]
    unsafe = cand_d[..., k - 1] >= cand_d[..., -1]
    if np.any(unsafe):
        rows = np.nonzero(unsafe)
        for idx in zip(*rows):
            full = np.argsort(dists[idx], kind="stable")
            out[idx] = full[:k]
    return out


def _knn_block(
    scaled: np.ndarray,
    query_rows: np.ndarray,
    scope_idx: np.ndarray,
    k: int,
    exclude: np.ndarray | None = None,
) -> np.ndarray:
    """k nearest scope rows for each query point, vectorized in chunks.

    Distances are squared differences summed over features, the same
    arithmetic as the naive per-pair formula, so rows that tie under the
    naive computation tie here too and the ascending-index rule applies
    identically. The faster expanded form (|s|^2 - 2 q.s + |q|^2) rounds
    differently and can turn a near-tie into a spurious exact tie.

    ``exclude`` holds, per query, one global row index to mask (normally
    the query itself). Returns global row indices, shape (m, k).
    """
    scope_pts = scaled[scope_idx]
    m = query_rows.shape[0]
    n_scope, d = scope_pts.shape
    out = np.empty((m, k), dtype=np.int64)
    # keep the (chunk, n_scope, d) difference tensor around 32 MB
    chunk = max(1, int(4e6) // max(1, n_scope * d))
    for start in range(0, m, chunk):
        stop = min(start + chunk, m)
        diff = query_rows[start:stop, None, :] - scope_pts[None, :, :]
        d2 = (diff * diff).sum(axis=2)
        if exclude is not None:
            hit = scope_idx[None, :] == exclude[start:stop, None]
            d2[hit] = np.inf
        picks = _exact_topk(d2, k)
        out[start:stop] = scope_idx[picks]
    return out


def knn(view: StandardizedView, query_index: int, query: NeighborQuery) -> np.ndarray:
    """The k nearest neighbors of one row, excluding the row itself.

    Returns global row indices ordered by ascending distance, ties broken
    by ascending index.

    Raises:
        ParameterError: query outside the scope, or k >= scope size.
    """
    scope_idx = view.scope_indices(query.scope)
    if query_index not in scope_idx:
        raise ParameterError(f"query row {query_index} is outside scope {query.scope!r}")
    if query.k >= scope_idx.size:
        raise ParameterError(
            f"k={query.k} must be smaller than the scope size {scope_idx.size}"
        )
    q = view.scaled[query_index][None, :]
    return _knn_block(view.scaled, q, scope_idx, query.k,
                      exclude=np.array([query_index]))[0]


def knn_table(view: StandardizedView, query_indices: np.ndarray, k: int, scope: str) -> np.ndarray:
    """Neighbor lists for many query rows at once (one row per query)."""
    scope_idx = view.scope_indices(scope)
    if k >= scope_idx.size:
        raise ParameterError(f"k={k} must be smaller than the scope size {scope_idx.size}")
    query_indices = np.asarray(query_indices, dtype=np.int64)
    return _knn_block(view.scaled, view.scaled[query_indices], scope_idx, k,
                      exclude=query_indices)


def majority_count_in_knn(
    view: StandardizedView,
    query_index: int,
    k: int,
    labels: np.ndarray,
) -> int:
    """Number of majority-class rows among the k all-rows neighbors."""
    neigh = knn(view, query_index, NeighborQuery(k, scope="all"))
    return int(np.sum(labels[neigh] == 0))
