"""Finite-difference verification of analytic gradients."""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .tensor import Tensor


def numerical_grad(f: Callable[..., Tensor], inputs: Sequence[Tensor], wrt: int, eps: float = 1e-5) -> np.ndarray:
    """Central-difference gradient of the scalar f(*inputs) w.r.t. inputs[wrt]."""
    x = inputs[wrt].data
    g = np.zeros_like(x)
    flat = x.ravel()
    gflat = g.ravel()
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + eps
        hi = f(*inputs).item()
        flat[i] = orig - eps
        lo = f(*inputs).item()
        flat[i] = orig
        if not (np.isfinite(hi) and np.isfinite(lo)):
            raise ValueError(f"non-finite loss while perturbing input {wrt} entry {i}")
        gflat[i] = (hi - lo) / (2.0 * eps)
    return g


def gradcheck(f: Callable[..., Tensor], inputs: Sequence[Tensor], eps: float = 1e-5) -> float:
    """Max relative error between analytic and central-difference gradients.

    Relative error for each input is max|analytic - fd| / max(1, max|fd|);
    the worst over all inputs is returned.
    """
    for t in inputs:
        t.requires_grad = True
        t.grad = None
    out = f(*inputs)
    if not np.isfinite(out.item()):
        raise ValueError("non-finite loss at the evaluation point")
    out.backward()
    analytic = [t.grad if t.grad is not None else np.zeros_like(t.data) for t in inputs]
    worst = 0.0
    for i in range(len(inputs)):
        fd = numerical_grad(f, inputs, i, eps=eps)
        if fd.size == 0:
            continue
        denom = max(1.0, float(np.max(np.abs(fd))))
        err = float(np.max(np.abs(analytic[i] - fd))) / denom
        worst = max(worst, err)
    return worst
