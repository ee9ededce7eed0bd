"""Shared representation space learned by per-sensor k-means clustering.

Each sensor group of the multi-sensor feature table is clustered
independently (k-means++ init, Lloyd iterations, restarts). Encoding a row
concatenates one block per sensor: a one-hot over that sensor's clusters
(hard mode) or a softmax of negative squared distances (soft mode). The
output dimension d is the sum of the per-sensor cluster counts.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .core import FeatureTable, child_rng

__all__ = ["kmeans", "ClusterRepresentation"]


def _kmeans_pp_init(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    centroids = np.empty((k, X.shape[1]))
    first = rng.integers(n)
    centroids[0] = X[first]
    closest_sq = np.sum((X - centroids[0]) ** 2, axis=1)
    for i in range(1, k):
        total = closest_sq.sum()
        if total <= 0:
            # All remaining points coincide with a centroid; pick any.
            idx = rng.integers(n)
        else:
            idx = rng.choice(n, p=closest_sq / total)
        centroids[i] = X[idx]
        closest_sq = np.minimum(closest_sq, np.sum((X - centroids[i]) ** 2, axis=1))
    return centroids


def _assign(X: np.ndarray, centroids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Nearest centroid per row (ties to the lowest index) and squared distances."""
    d2 = ((X[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    return d2.argmin(axis=1), d2


def _lloyd(X: np.ndarray, centroids: np.ndarray, max_iter: int, tol: float
           ) -> tuple[np.ndarray, float, list[float]]:
    history = []
    for _ in range(max_iter):
        assign, d2 = _assign(X, centroids)
        inertia = float(d2[np.arange(len(X)), assign].sum())
        if history:
            assert inertia <= history[-1] + 1e-9, "k-means inertia increased"
        history.append(inertia)
        new_centroids = centroids.copy()
        for j in range(centroids.shape[0]):
            members = assign == j
            if members.any():
                new_centroids[j] = X[members].mean(axis=0)
            else:
                # Reseed an empty cluster at the point farthest from its
                # assigned centroid.
                farthest = int(d2[np.arange(len(X)), assign].argmax())
                new_centroids[j] = X[farthest]
        shift = float(np.sqrt(((new_centroids - centroids) ** 2).sum(axis=1)).max())
        centroids = new_centroids
        if shift < tol:
            break
    assign, d2 = _assign(X, centroids)
    inertia = float(d2[np.arange(len(X)), assign].sum())
    return centroids, inertia, history


def kmeans(X: np.ndarray, k: int, rng: np.random.Generator,
           n_restarts: int = 10, max_iter: int = 300, tol: float = 1e-6
           ) -> tuple[np.ndarray, float, list[float]]:
    """k-means with k-means++ init and restarts; keeps the lowest inertia.

    Returns (centroids, inertia, per-iteration inertia history of the
    winning restart). Deterministic given ``rng`` state.
    """
    X = np.asarray(X, dtype=float)
    if not np.all(np.isfinite(X)):
        raise ValueError("k-means input contains non-finite values")
    n_distinct = len(np.unique(X, axis=0))
    if n_distinct < k:
        raise ValueError(
            f"need at least {k} distinct rows for k={k}, got {n_distinct}"
        )
    best = None
    for restart in range(n_restarts):
        init = _kmeans_pp_init(X, k, rng)
        centroids, inertia, history = _lloyd(X, init, max_iter, tol)
        if best is None or inertia < best[1]:  # ties keep the earlier restart
            best = (centroids, inertia, history)
    return best


class ClusterRepresentation(BaseEstimator, TransformerMixin):
    """Per-sensor k-means realizing the multi-sensor representation space.

    fit() consumes a (standardized) multi-sensor :class:`FeatureTable`;
    labels are not required. transform() encodes rows into R^d where
    d = sum of per-sensor cluster counts.
    """

    def __init__(self, k_per_sensor: int = 3, encoding_mode: str = "hard",
                 n_restarts: int = 10, max_iter: int = 300, tol: float = 1e-6,
                 seed: int = 0):
        self.k_per_sensor = k_per_sensor
        self.encoding_mode = encoding_mode
        self.n_restarts = n_restarts
        self.max_iter = max_iter
        self.tol = tol
        self.seed = seed

    def fit(self, table: FeatureTable, y=None):
        if self.encoding_mode not in ("hard", "soft"):
            raise ValueError(f"unknown encoding_mode {self.encoding_mode!r}")
        if self.k_per_sensor < 1:
            raise ValueError("k_per_sensor must be >= 1")
        self.groups_ = dict(table.column_groups)
        self.centroids_ = {}
        for sensor_id in table.sensor_ids:
            X = table.rows[:, table.group_columns(sensor_id)]
            rng = child_rng(self.seed, f"representation/{sensor_id}")
            centroids, _, _ = kmeans(
                X, self.k_per_sensor, rng,
                n_restarts=self.n_restarts, max_iter=self.max_iter, tol=self.tol,
            )
            self.centroids_[sensor_id] = centroids
        return self

    @property
    def output_dim(self) -> int:
        self._check_fitted()
        return self.k_per_sensor * len(self.centroids_)

    def _check_fitted(self):
        if not hasattr(self, "centroids_"):
            raise NotFittedError("ClusterRepresentation is not fitted")

    def _check_groups(self, table: FeatureTable):
        got = {s: tuple(r) for s, r in table.column_groups.items()}
        want = {s: tuple(r) for s, r in self.groups_.items()}
        if got != want:
            raise ValueError(
                f"column groups {got} do not match the fitted groups {want}"
            )

    def transform(self, table: FeatureTable) -> np.ndarray:
        """Encode rows; each sensor's k-block is nonnegative and sums to 1."""
        self._check_fitted()
        self._check_groups(table)
        blocks = []
        for sensor_id in self.groups_:
            X = table.rows[:, table.group_columns(sensor_id)]
            centroids = self.centroids_[sensor_id]
            d2 = ((X[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
            if self.encoding_mode == "hard":
                block = np.zeros_like(d2)
                block[np.arange(len(X)), d2.argmin(axis=1)] = 1.0
            else:
                # Softmax of negative squared distances, temperature 1.
                z = -d2
                z = z - z.max(axis=1, keepdims=True)
                e = np.exp(z)
                block = e / e.sum(axis=1, keepdims=True)
            blocks.append(block)
        return np.hstack(blocks)
