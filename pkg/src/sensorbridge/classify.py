"""Activity classifiers: weighted multinomial logistic regression and the
two-stage boosted combination of the mapped-representation model with the
traditional single-sensor model.

The classifier choice is deliberately pluggable: anything implementing
fit(X, y, sample_weight)/predict(X) can stand in for SoftmaxClassifier in
the boosted ensemble.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.exceptions import NotFittedError

from .optim import minimize_gd

__all__ = ["SoftmaxClassifier", "BoostedPairClassifier", "samme_alpha"]

ALPHA_CAP = float(np.log(1e12))


def _softmax(Z: np.ndarray) -> np.ndarray:
    Z = Z - Z.max(axis=1, keepdims=True)
    E = np.exp(Z)
    return E / E.sum(axis=1, keepdims=True)


def softmax_loss_grad(Wb: np.ndarray, X: np.ndarray, Y: np.ndarray,
                      weights: np.ndarray, c_inv: float,
                      shape: tuple[int, int]) -> tuple[float, np.ndarray]:
    """Weighted multinomial cross-entropy + (c_inv / 2) ||W||^2.

    ``Wb`` is flat: a (n_features + 1) x K matrix, last row intercepts
    (unpenalized). Sample weights are normalized to sum 1 by the caller.
    """
    p, K = shape
    M = Wb.reshape(p + 1, K)
    W, b = M[:-1], M[-1]
    Z = X @ W + b
    logp = Z - Z.max(axis=1, keepdims=True)
    logp = logp - np.log(np.exp(logp).sum(axis=1, keepdims=True))
    loss = -float((weights * (Y * logp).sum(axis=1)).sum())
    loss += 0.5 * c_inv * float((W * W).sum())
    P = np.exp(logp)
    R = weights[:, None] * (P - Y)
    grad = np.empty_like(M)
    grad[:-1] = X.T @ R + c_inv * W
    grad[-1] = R.sum(axis=0)
    return loss, grad.ravel()


class SoftmaxClassifier(BaseEstimator, ClassifierMixin):
    """Multinomial logistic regression with per-row sample weights.

    Deterministic: zero-initialized weights, full-batch gradient descent
    with step halving. Regularization strength ``c_inv`` applies to the
    weight matrix only, never the intercepts.
    """

    def __init__(self, c_inv: float = 1e-3, max_epochs: int = 5000,
                 grad_tol: float = 1e-6, class_order=None):
        self.c_inv = c_inv
        self.max_epochs = max_epochs
        self.grad_tol = grad_tol
        self.class_order = class_order

    def fit(self, X, y, sample_weight=None):
        X = np.asarray(X, dtype=float)
        if X.ndim != 2:
            raise ValueError("X must be 2-D")
        if not np.all(np.isfinite(X)):
            raise ValueError("X contains non-finite values")
        y = list(y)
        if len(y) != X.shape[0]:
            raise ValueError("X and y must align")
        observed: dict[str, None] = {}
        for label in y:
            observed.setdefault(label, None)
        if len(observed) < 2:
            raise ValueError(f"need at least 2 classes, got {tuple(observed)}")
        if self.class_order is not None:
            unknown = [c for c in observed if c not in self.class_order]
            if unknown:
                raise ValueError(f"labels {unknown} not in class_order")
            self.classes_ = tuple(c for c in self.class_order if c in observed)
        else:
            self.classes_ = tuple(sorted(observed))
        if sample_weight is None:
            w = np.full(X.shape[0], 1.0 / X.shape[0])
        else:
            w = np.asarray(sample_weight, dtype=float)
            if (w < 0).any() or w.sum() <= 0:
                raise ValueError("sample weights must be nonnegative, not all zero")
            w = w / w.sum()
        index = {c: i for i, c in enumerate(self.classes_)}
        Y = np.zeros((X.shape[0], len(self.classes_)))
        Y[np.arange(X.shape[0]), [index[label] for label in y]] = 1.0

        shape = (X.shape[1], len(self.classes_))
        wb = minimize_gd(
            lambda wb: softmax_loss_grad(wb, X, Y, w, self.c_inv, shape),
            np.zeros((X.shape[1] + 1) * len(self.classes_)),
            self.max_epochs, self.grad_tol,
        )
        M = wb.reshape(X.shape[1] + 1, len(self.classes_))
        self.coef_ = M[:-1].copy()
        self.intercept_ = M[-1].copy()
        return self

    def _check_fitted(self):
        if not hasattr(self, "coef_"):
            raise NotFittedError("SoftmaxClassifier is not fitted")

    def decision_function(self, X) -> np.ndarray:
        self._check_fitted()
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.coef_.shape[0]:
            raise ValueError(
                f"expected {self.coef_.shape[0]} columns, got "
                f"{X.shape[1] if X.ndim == 2 else X.shape}"
            )
        return X @ self.coef_ + self.intercept_

    def predict_proba(self, X) -> np.ndarray:
        return _softmax(self.decision_function(X))

    def predict(self, X) -> list:
        scores = self.decision_function(X)
        return [self.classes_[i] for i in scores.argmax(axis=1)]


def samme_alpha(err: float, n_classes: int) -> float:
    """Stage weight of discrete multiclass AdaBoost.

    alpha = ln((1 - err) / err) + ln(K - 1); zero at err = (K - 1) / K,
    capped at ln(1e12) + ln(K - 1) for err = 0.
    """
    if not 0 <= err <= 1:
        raise ValueError(f"err must lie in [0, 1], got {err}")
    if n_classes < 2:
        raise ValueError("n_classes must be >= 2")
    if err <= 0:
        return ALPHA_CAP + float(np.log(n_classes - 1))
    if err >= (n_classes - 1) / n_classes:
        return 0.0
    return float(np.log((1.0 - err) / err) + np.log(n_classes - 1))


class BoostedPairClassifier(BaseEstimator, ClassifierMixin):
    """Two-stage SAMME ensemble: mapped-representation model, then the
    traditional single-sensor model reweighted by stage-1 training errors.

    Stage 1 sees the representation-space inputs; stage 2 sees the raw
    (standardized) single-sensor features of the same rows. Prediction is
    the argmax of alpha-weighted indicator votes, ties going to the class
    that appears earlier in the class order.
    """

    def __init__(self, stage1=None, stage2=None):
        self.stage1 = stage1
        self.stage2 = stage2

    def fit(self, rep_inputs, raw_inputs, y):
        rep_inputs = np.asarray(rep_inputs, dtype=float)
        raw_inputs = np.asarray(raw_inputs, dtype=float)
        y = list(y)
        if not (rep_inputs.shape[0] == raw_inputs.shape[0] == len(y)):
            raise ValueError("stage inputs and labels must be row-aligned")
        n = len(y)
        stage1 = self.stage1 if self.stage1 is not None else SoftmaxClassifier()
        stage2 = self.stage2 if self.stage2 is not None else SoftmaxClassifier()

        w = np.full(n, 1.0 / n)
        stage1.fit(rep_inputs, y, sample_weight=w)
        self.classes_ = stage1.classes_
        K = len(self.classes_)
        pred1 = stage1.predict(rep_inputs)
        miss1 = np.array([p != t for p, t in zip(pred1, y)])
        err1 = float(w[miss1].sum())
        alpha1 = samme_alpha(err1, K)

        if err1 <= 0:
            w2 = np.full(n, 1.0 / n)  # stage 2 trains on uniform weights
        else:
            w2 = w * np.exp(alpha1 * miss1)
            w2 = w2 / w2.sum()
        stage2.fit(raw_inputs, y, sample_weight=w2)
        pred2 = stage2.predict(raw_inputs)
        miss2 = np.array([p != t for p, t in zip(pred2, y)])
        err2 = float(w2[miss2].sum())
        alpha2 = samme_alpha(err2, K)

        if alpha1 == 0.0 and alpha2 == 0.0:
            raise ValueError(
                "degenerate ensemble: both stages have zero weight "
                f"(errors {err1:.3f}, {err2:.3f})"
            )
        self.stage1_ = stage1
        self.stage2_ = stage2
        self.alphas_ = (alpha1, alpha2)
        self.train_errors_ = (err1, err2)
        return self

    def _check_fitted(self):
        if not hasattr(self, "alphas_"):
            raise NotFittedError("BoostedPairClassifier is not fitted")

    def predict(self, rep_inputs, raw_inputs) -> list:
        self._check_fitted()
        index = {c: i for i, c in enumerate(self.classes_)}
        votes = np.zeros((np.asarray(rep_inputs).shape[0], len(self.classes_)))
        for alpha, stage, inputs in (
            (self.alphas_[0], self.stage1_, rep_inputs),
            (self.alphas_[1], self.stage2_, raw_inputs),
        ):
            if alpha == 0.0:
                continue  # abstaining stage
            for i, label in enumerate(stage.predict(inputs)):
                votes[i, index[label]] += alpha
        # argmax with ties to the earlier class in class order
        return [self.classes_[i] for i in votes.argmax(axis=1)]
