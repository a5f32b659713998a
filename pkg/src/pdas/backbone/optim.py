"""AdamW with decoupled weight decay, and the polynomial LR schedule."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tensor import Tensor


@dataclass
class OptimizerState:
    """Per-parameter first/second moments plus the shared step counter."""

    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)
    step: int = 0


def poly_lr(base_lr: float, step: int, max_steps: int, power: float = 0.9) -> float:
    """base_lr * (1 - step/max_steps) ** power, clamped at 0 past the end."""
    if max_steps <= 0:
        raise ValueError(f"max_steps must be positive, got {max_steps}")
    frac = min(max(step / max_steps, 0.0), 1.0)
    return base_lr * (1.0 - frac) ** power


def adamw_step(
    params: dict[str, Tensor],
    state: OptimizerState,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
    weight_decay: float = 0.01,
) -> None:
    """One update over every registered param.

    Decay is decoupled: p -= lr*wd*p happens before the adaptive part, so it
    never flows through the moment estimates. Moments are bias-corrected.
    Every param must carry a grad (callers zero-fill unused ones).
    """
    missing = [n for n, p in params.items() if p.grad is None]
    if missing:
        raise ValueError(f"adamw_step: missing grad for {missing[:5]}")
    state.step += 1
    t = state.step
    c1 = 1.0 - beta1**t
    c2 = 1.0 - beta2**t
    for name, p in params.items():
        g = p.grad
        if name not in state.m:
            state.m[name] = np.zeros_like(p.data)
            state.v[name] = np.zeros_like(p.data)
        if weight_decay != 0.0:
            p.data -= lr * weight_decay * p.data
        m = state.m[name]
        v = state.v[name]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * (g * g)
        mhat = m / c1
        vhat = v / c2
        p.data -= lr * mhat / (np.sqrt(vhat) + eps)
