"""Mapping from single-sensor features into the representation space.

One independent regressor per representation dimension: ridge least
squares in closed form (linear kind) or binary logistic regression by
gradient descent (logistic kind, targets thresholded at 0.5).
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .core import FeatureTable
from .optim import minimize_gd

__all__ = ["RepresentationMapper", "sigmoid", "logistic_loss_grad"]


def sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=float)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _log1p_exp(z: np.ndarray) -> np.ndarray:
    """log(1 + exp(z)), overflow-safe."""
    return np.logaddexp(0.0, z)


def logistic_loss_grad(wb: np.ndarray, X: np.ndarray, t: np.ndarray,
                       lam: float) -> tuple[float, np.ndarray]:
    """Mean binary cross-entropy + (lam / 2n) ||w||^2, intercept unpenalized.

    ``wb`` is the weight vector with the intercept appended last.
    """
    n = X.shape[0]
    w, b = wb[:-1], wb[-1]
    z = X @ w + b
    loss = float(np.mean(_log1p_exp(z) - t * z)) + 0.5 * lam / n * float(w @ w)
    p = sigmoid(z)
    resid = (p - t) / n
    grad = np.empty_like(wb)
    grad[:-1] = X.T @ resid + (lam / n) * w
    grad[-1] = resid.sum()
    return loss, grad


def _ridge_solve(X: np.ndarray, T: np.ndarray, lam: float) -> np.ndarray:
    """Closed-form ridge with unpenalized intercept.

    Returns a (m + 1) x d matrix; the last row is the intercept.
    """
    n, m = X.shape
    Xa = np.hstack([X, np.ones((n, 1))])
    if lam == 0:
        W, *_ = np.linalg.lstsq(Xa, T, rcond=None)
        return W
    A = Xa.T @ Xa
    A[np.arange(m), np.arange(m)] += lam
    return np.linalg.solve(A, Xa.T @ T)


class RepresentationMapper(BaseEstimator, TransformerMixin):
    """d independent regressors from single-sensor features to encodings.

    ``fit(single, targets)`` pairs the single-sensor rows with encode()
    outputs of the same windows (same order). ``transform`` returns raw
    affine outputs (linear kind) or sigmoid probabilities (logistic kind).
    """

    def __init__(self, kind: str = "linear", lam: float | None = None,
                 max_epochs: int = 2000, grad_tol: float = 1e-6):
        self.kind = kind
        self.lam = lam
        self.max_epochs = max_epochs
        self.grad_tol = grad_tol

    def _effective_lam(self) -> float:
        if self.lam is not None:
            return self.lam
        return 1e-3 if self.kind == "linear" else 1.0

    def fit(self, single, targets):
        if self.kind not in ("linear", "logistic"):
            raise ValueError(f"unknown mapping kind {self.kind!r}")
        if isinstance(single, FeatureTable):
            X = single.rows
            self.input_sensor_ids_ = single.sensor_ids
        else:
            X = np.asarray(single, dtype=float)
            self.input_sensor_ids_ = None
        T = np.asarray(targets, dtype=float)
        if T.ndim != 2 or X.shape[0] != T.shape[0]:
            raise ValueError(
                f"row mismatch: {X.shape[0]} inputs vs "
                f"{T.shape[0] if T.ndim == 2 else T.shape} targets"
            )
        lam = self._effective_lam()
        self.n_inputs_ = X.shape[1]
        if self.kind == "linear":
            W = _ridge_solve(X, T, lam)
            self.weights_ = W[:-1, :].copy()  # (m, d)
            self.intercepts_ = W[-1, :].copy()
        else:
            n, m = X.shape
            d = T.shape[1]
            self.weights_ = np.zeros((m, d))
            self.intercepts_ = np.zeros(d)
            binary = (T >= 0.5).astype(float)
            for j in range(d):  # per-dimension fits are independent
                t = binary[:, j]
                if t.min() == t.max():
                    # Degenerate target: constant predictor at the
                    # (smoothed) empirical rate.
                    rate = (t.sum() + 0.5) / (n + 1.0)
                    self.intercepts_[j] = float(np.log(rate / (1.0 - rate)))
                    continue
                wb = minimize_gd(
                    lambda wb, t=t: logistic_loss_grad(wb, X, t, lam),
                    np.zeros(m + 1), self.max_epochs, self.grad_tol,
                )
                self.weights_[:, j] = wb[:-1]
                self.intercepts_[j] = wb[-1]
        return self

    @property
    def output_dim(self) -> int:
        self._check_fitted()
        return self.weights_.shape[1]

    def _check_fitted(self):
        if not hasattr(self, "weights_"):
            raise NotFittedError("RepresentationMapper is not fitted")

    def transform(self, single) -> np.ndarray:
        self._check_fitted()
        X = single.rows if isinstance(single, FeatureTable) else np.asarray(single, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.n_inputs_:
            raise ValueError(
                f"expected {self.n_inputs_} input columns, got "
                f"{X.shape[1] if X.ndim == 2 else X.shape}"
            )
        Z = X @ self.weights_ + self.intercepts_
        if self.kind == "logistic":
            return sigmoid(Z)
        return Z
