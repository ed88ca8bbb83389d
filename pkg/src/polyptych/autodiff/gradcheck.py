"""Central finite-difference verification of recorded gradients."""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .tensor import Tensor


def finite_difference(fn: Callable[[], Tensor], leaf: Tensor, step: float = 1e-3) -> np.ndarray:
    """Central-difference gradient of a scalar-valued ``fn`` w.r.t. ``leaf``.

    ``fn`` must rebuild its graph from ``leaf.data`` on every call; the data
    array is perturbed in place and restored.
    """
    flat = leaf.data.reshape(-1)
    grad = np.zeros_like(flat)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + step
        hi = fn().item()
        flat[i] = orig - step
        lo = fn().item()
        flat[i] = orig
        grad[i] = (hi - lo) / (2.0 * step)
    return grad.reshape(leaf.data.shape)


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """Max-norm relative error between two gradient arrays."""
    scale = max(np.abs(analytic).max(initial=0.0), np.abs(numeric).max(initial=0.0), 1e-8)
    return float(np.abs(analytic - numeric).max(initial=0.0) / scale)


def check_gradients(
    fn: Callable[[], Tensor],
    leaves: Sequence[Tensor],
    step: float = 1e-3,
    tol: float = 1e-4,
) -> float:
    """Compare recorded gradients against central differences.

    Returns the worst relative error over all leaves; raises AssertionError
    when it exceeds ``tol``. Leaves must be float64 for the step size to be
    meaningful.
    """
    loss = fn()
    loss.backward()
    analytic = [
        leaf.grad.copy() if leaf.grad is not None else np.zeros_like(leaf.data)
        for leaf in leaves
    ]
    worst = 0.0
    for leaf, a in zip(leaves, analytic):
        n = finite_difference(fn, leaf, step)
        err = relative_error(a, n)
        worst = max(worst, err)
        if err > tol:
            raise AssertionError(
                f"gradient mismatch: relative error {err:.3e} exceeds {tol:.1e} "
                f"for leaf of shape {leaf.data.shape}"
            )
    return worst
