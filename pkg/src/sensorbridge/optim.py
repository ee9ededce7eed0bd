"""Deterministic full-batch gradient descent with step-halving line search.

Shared by the logistic mapping and the multinomial classifier. The loss
must be smooth and convex; the search halves the step until the loss
decreases and grows it again after successful steps.
"""
from __future__ import annotations

from typing import Callable

import numpy as np

__all__ = ["minimize_gd"]


def minimize_gd(
    loss_grad: Callable[[np.ndarray], tuple[float, np.ndarray]],
    w0: np.ndarray,
    max_epochs: int,
    grad_tol: float,
    init_step: float = 1.0,
) -> np.ndarray:
    """Minimize a smooth convex loss; stops when the gradient norm < grad_tol."""
    w = np.asarray(w0, dtype=float).copy()
    loss, grad = loss_grad(w)
    step = init_step
    for _ in range(max_epochs):
        gnorm = float(np.linalg.norm(grad))
        if gnorm < grad_tol:
            break
        accepted = False
        for _ in range(60):
            candidate = w - step * grad
            new_loss, new_grad = loss_grad(candidate)
            if new_loss < loss:
                w, loss, grad = candidate, new_loss, new_grad
                step *= 1.5
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break  # step underflow: numerically at a minimum
    return w
