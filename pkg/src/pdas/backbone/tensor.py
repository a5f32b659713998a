"""Dense float64 tensors with define-by-run reverse-mode differentiation.

Every operation records a VJP closure on the output tensor; ``backward()`` on a
scalar walks the graph in reverse topological order and accumulates gradients
into ``.grad`` buffers. The graph is rebuilt on every forward pass, there is no
caching. All math runs in 64-bit so finite-difference verification is
meaningful (see gradcheck).
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np


class ShapeError(ValueError):
    """Raised when operand shapes do not conform for an operation."""


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_vjp", "name")

    def __init__(self, data, requires_grad: bool = False, name: str | None = None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self._parents: tuple[Tensor, ...] = ()
        self._vjp: Callable[[np.ndarray], None] | None = None
        self.name = name

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        return float(self.data)

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def backward(self) -> None:
        """Reverse-mode pass from a scalar; populates .grad on every reachable
        tensor with requires_grad."""
        if self.data.size != 1:
            raise ValueError(f"backward requires a scalar, got shape {self.shape}")
        order: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if parent.requires_grad and id(parent) not in seen:
                    stack.append((parent, False))
        self.grad = np.ones_like(self.data)
        for node in reversed(order):
            if node._vjp is not None:
                node._vjp(node.grad)

    def __repr__(self) -> str:
        tag = f" name={self.name}" if self.name else ""
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad}{tag})"

    # a few operators for readable arithmetic; everything maps to the op set
    def __add__(self, other):
        return add(self, _ensure(other))

    def __radd__(self, other):
        return add(_ensure(other), self)

    def __sub__(self, other):
        return sub(self, _ensure(other))

    def __rsub__(self, other):
        return sub(_ensure(other), self)

    def __mul__(self, other):
        return mul(self, _ensure(other))

    def __rmul__(self, other):
        return mul(_ensure(other), self)

    def __truediv__(self, other):
        return div(self, _ensure(other))

    def __matmul__(self, other):
        return matmul(self, other)

    def __neg__(self):
        return scale(self, -1.0)


def _ensure(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _make(data: np.ndarray, parents: tuple[Tensor, ...], vjp) -> Tensor:
    out = Tensor(data)
    if any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = parents
        out._vjp = vjp
    return out


def _accum(t: Tensor, g: np.ndarray) -> None:
    if not t.requires_grad:
        return
    if t.grad is None:
        t.grad = g.copy() if g.base is not None or g.shape != t.data.shape else g
        if t.grad.shape != t.data.shape:
            t.grad = np.broadcast_to(g, t.data.shape).copy()
    else:
        t.grad = t.grad + g


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum g down to `shape` to undo numpy broadcasting."""
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, (gs, ss) in enumerate(zip(g.shape, shape)) if ss == 1 and gs != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


# ---------------------------------------------------------------------------
# elementwise / structural primitives
# ---------------------------------------------------------------------------


def add(a: Tensor, b: Tensor) -> Tensor:
    a, b = _ensure(a), _ensure(b)
    data = a.data + b.data

    def vjp(g):
        _accum(a, _unbroadcast(g, a.data.shape))
        _accum(b, _unbroadcast(g, b.data.shape))

    return _make(data, (a, b), vjp)


def sub(a: Tensor, b: Tensor) -> Tensor:
    a, b = _ensure(a), _ensure(b)
    data = a.data - b.data

    def vjp(g):
        _accum(a, _unbroadcast(g, a.data.shape))
        _accum(b, _unbroadcast(-g, b.data.shape))

    return _make(data, (a, b), vjp)


def mul(a: Tensor, b: Tensor) -> Tensor:
    a, b = _ensure(a), _ensure(b)
    data = a.data * b.data

    def vjp(g):
        _accum(a, _unbroadcast(g * b.data, a.data.shape))
        _accum(b, _unbroadcast(g * a.data, b.data.shape))

    return _make(data, (a, b), vjp)


def div(a: Tensor, b: Tensor) -> Tensor:
    a, b = _ensure(a), _ensure(b)
    data = a.data / b.data

    def vjp(g):
        _accum(a, _unbroadcast(g / b.data, a.data.shape))
        _accum(b, _unbroadcast(-g * a.data / (b.data * b.data), b.data.shape))

    return _make(data, (a, b), vjp)


def scale(a: Tensor, c: float) -> Tensor:
    c = float(c)
    data = a.data * c

    def vjp(g):
        _accum(a, g * c)

    return _make(data, (a,), vjp)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """2-D or batched 3-D matrix product. Supported rank pairs: (2,2), (3,3),
    (3,2)."""
    if a.ndim == 2 and b.ndim == 2:
        if a.shape[1] != b.shape[0]:
            raise ShapeError(f"matmul: {a.shape} @ {b.shape}")
        data = a.data @ b.data

        def vjp(g):
            _accum(a, g @ b.data.T)
            _accum(b, a.data.T @ g)

    elif a.ndim == 3 and b.ndim == 3:
        if a.shape[0] != b.shape[0] or a.shape[2] != b.shape[1]:
            raise ShapeError(f"matmul: {a.shape} @ {b.shape}")
        data = a.data @ b.data

        def vjp(g):
            _accum(a, g @ b.data.transpose(0, 2, 1))
            _accum(b, a.data.transpose(0, 2, 1) @ g)

    elif a.ndim == 3 and b.ndim == 2:
        if a.shape[2] != b.shape[0]:
            raise ShapeError(f"matmul: {a.shape} @ {b.shape}")
        data = a.data @ b.data

        def vjp(g):
            _accum(a, g @ b.data.T)
            _accum(b, np.einsum("bik,bij->kj", a.data, g))

    else:
        raise ShapeError(f"matmul: unsupported ranks {a.shape} @ {b.shape}")
    return _make(data, (a, b), vjp)


def reshape(a: Tensor, shape: Sequence[int]) -> Tensor:
    shape = tuple(shape)
    data = a.data.reshape(shape)

    def vjp(g):
        _accum(a, g.reshape(a.data.shape))

    return _make(data, (a,), vjp)


def transpose(a: Tensor, axes: Sequence[int] | None = None) -> Tensor:
    if axes is None:
        axes = tuple(reversed(range(a.ndim)))
    axes = tuple(axes)
    inverse = tuple(np.argsort(axes))
    data = a.data.transpose(axes)

    def vjp(g):
        _accum(a, g.transpose(inverse))

    return _make(data, (a,), vjp)


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    tensors = [_ensure(t) for t in tensors]
    data = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.data.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def vjp(g):
        for t, lo, hi in zip(tensors, offsets[:-1], offsets[1:]):
            idx = [slice(None)] * g.ndim
            idx[axis] = slice(lo, hi)
            _accum(t, g[tuple(idx)])

    return _make(data, tuple(tensors), vjp)


def slice_(a: Tensor, key) -> Tensor:
    """Basic slicing (slices and ints). Gradient scatters back into zeros."""
    data = a.data[key]

    def vjp(g):
        full = np.zeros_like(a.data)
        full[key] = g
        _accum(a, full)

    return _make(data, (a,), vjp)


def embedding_lookup(table: Tensor, indices) -> Tensor:
    idx = np.asarray(indices, dtype=np.intp)
    data = table.data[idx]

    def vjp(g):
        full = np.zeros_like(table.data)
        np.add.at(full, idx, g)
        _accum(table, full)

    return _make(data, (table,), vjp)


# ---------------------------------------------------------------------------
# nonlinearities
# ---------------------------------------------------------------------------


def relu(a: Tensor) -> Tensor:
    data = np.maximum(a.data, 0.0)

    def vjp(g):
        _accum(a, g * (a.data > 0))

    return _make(data, (a,), vjp)


def sigmoid(a: Tensor) -> Tensor:
    data = 1.0 / (1.0 + np.exp(-a.data))

    def vjp(g):
        _accum(a, g * data * (1.0 - data))

    return _make(data, (a,), vjp)


def softplus(a: Tensor) -> Tensor:
    data = np.logaddexp(0.0, a.data)

    def vjp(g):
        _accum(a, g / (1.0 + np.exp(-a.data)))

    return _make(data, (a,), vjp)


_GELU_C = np.sqrt(2.0 / np.pi)


def gelu(a: Tensor) -> Tensor:
    """tanh-approximation gelu: 0.5*x*(1 + tanh(c*(x + 0.044715*x^3)))."""
    x = a.data
    u = _GELU_C * (x + 0.044715 * x**3)
    t = np.tanh(u)
    data = 0.5 * x * (1.0 + t)

    def vjp(g):
        du = _GELU_C * (1.0 + 3 * 0.044715 * x * x)
        local = 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du
        _accum(a, g * local)

    return _make(data, (a,), vjp)


def exp(a: Tensor) -> Tensor:
    data = np.exp(a.data)

    def vjp(g):
        _accum(a, g * data)

    return _make(data, (a,), vjp)


def log(a: Tensor) -> Tensor:
    data = np.log(a.data)

    def vjp(g):
        _accum(a, g / a.data)

    return _make(data, (a,), vjp)


def power(a: Tensor, p: float) -> Tensor:
    p = float(p)
    data = a.data**p

    def vjp(g):
        _accum(a, g * p * a.data ** (p - 1.0))

    return _make(data, (a,), vjp)


# ---------------------------------------------------------------------------
# reductions and normalizers
# ---------------------------------------------------------------------------


def sum_(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    data = a.data.sum(axis=axis, keepdims=keepdims)

    def vjp(g):
        if axis is None:
            _accum(a, np.broadcast_to(g, a.data.shape).copy())
            return
        if not keepdims:
            g = np.expand_dims(g, axis)
        _accum(a, np.broadcast_to(g, a.data.shape).copy())

    return _make(data, (a,), vjp)


def mean(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    if axis is None:
        n = a.data.size
    else:
        n = a.data.shape[axis] if isinstance(axis, int) else int(np.prod([a.data.shape[i] for i in axis]))
    return scale(sum_(a, axis=axis, keepdims=keepdims), 1.0 / n)


def softmax(a: Tensor, axis: int = -1) -> Tensor:
    if a.data.shape[axis] == 0:
        raise ShapeError(f"softmax over empty axis {axis} of shape {a.shape}")
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    data = e / e.sum(axis=axis, keepdims=True)

    def vjp(g):
        dot = (g * data).sum(axis=axis, keepdims=True)
        _accum(a, data * (g - dot))

    return _make(data, (a,), vjp)


def layernorm(x: Tensor, gamma: Tensor, beta: Tensor, eps: float = 1e-5) -> Tensor:
    """Normalize the last axis to zero mean / unit variance, then affine."""
    d = x.data.shape[-1]
    if gamma.data.shape != (d,) or beta.data.shape != (d,):
        raise ShapeError(f"layernorm: gamma {gamma.shape} / beta {beta.shape} vs feature dim {d}")
    mu = x.data.mean(axis=-1, keepdims=True)
    xc = x.data - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    ivar = 1.0 / np.sqrt(var + eps)
    xhat = xc * ivar
    data = gamma.data * xhat + beta.data

    def vjp(g):
        lead = tuple(range(g.ndim - 1))
        _accum(gamma, (g * xhat).sum(axis=lead))
        _accum(beta, g.sum(axis=lead))
        dxhat = g * gamma.data
        # dx = ivar * (dxhat - mean(dxhat) - xhat * mean(dxhat * xhat))
        m1 = dxhat.mean(axis=-1, keepdims=True)
        m2 = (dxhat * xhat).mean(axis=-1, keepdims=True)
        _accum(x, ivar * (dxhat - m1 - xhat * m2))

    return _make(data, (x, gamma, beta), vjp)


# ---------------------------------------------------------------------------
# spatial primitives
# ---------------------------------------------------------------------------


def conv2d(x: Tensor, w: Tensor, b: Tensor | None = None) -> Tensor:
    """Same-padded stride-1 2-D convolution. x is (H, W, Cin), w is
    (kh, kw, Cin, Cout), b is (Cout,). Computed as a sum of shifted matmuls so
    the backward pass is exact."""
    if x.ndim != 3 or w.ndim != 4 or x.shape[2] != w.shape[2]:
        raise ShapeError(f"conv2d: x {x.shape} vs w {w.shape}")
    kh, kw, cin, cout = w.shape
    h, wd = x.shape[:2]
    ph, pw = kh // 2, kw // 2
    xp = np.pad(x.data, ((ph, ph), (pw, pw), (0, 0)))
    out = np.zeros((h, wd, cout))
    for i in range(kh):
        for j in range(kw):
            out += xp[i : i + h, j : j + wd, :] @ w.data[i, j]
    if b is not None:
        if b.data.shape != (cout,):
            raise ShapeError(f"conv2d: bias {b.shape} vs Cout {cout}")
        out = out + b.data

    def vjp(g):
        g2 = g.reshape(h * wd, cout)
        gw = np.zeros_like(w.data)
        gxp = np.zeros_like(xp)
        for i in range(kh):
            for j in range(kw):
                patch = np.ascontiguousarray(xp[i : i + h, j : j + wd, :]).reshape(h * wd, cin)
                gw[i, j] = patch.T @ g2
                gxp[i : i + h, j : j + wd, :] += (g2 @ w.data[i, j].T).reshape(h, wd, cin)
        _accum(w, gw)
        _accum(x, gxp[ph : ph + h, pw : pw + wd, :])
        if b is not None:
            _accum(b, g.sum(axis=(0, 1)))

    parents = (x, w) if b is None else (x, w, b)
    return _make(out, parents, vjp)


def unfold_project(img: Tensor, w: Tensor, b: Tensor | None, patch: int) -> Tensor:
    """Patchify a (H, W) image into non-overlapping patch*patch tiles and
    project each flattened tile: returns (n_patches, out_dim)."""
    h, wd = img.shape
    if h % patch or wd % patch:
        raise ShapeError(f"unfold_project: image {img.shape} not divisible by patch {patch}")
    if w.shape[0] != patch * patch:
        raise ShapeError(f"unfold_project: w {w.shape} vs patch area {patch * patch}")
    gh, gw_ = h // patch, wd // patch
    cols = img.data.reshape(gh, patch, gw_, patch).transpose(0, 2, 1, 3).reshape(gh * gw_, patch * patch)
    out = cols @ w.data
    if b is not None:
        out = out + b.data

    def vjp(g):
        _accum(w, cols.T @ g)
        gcols = g @ w.data.T
        gimg = gcols.reshape(gh, gw_, patch, patch).transpose(0, 2, 1, 3).reshape(h, wd)
        _accum(img, gimg)
        if b is not None:
            _accum(b, g.sum(axis=0))

    parents = (img, w) if b is None else (img, w, b)
    return _make(out, parents, vjp)


def upsample_nearest(x: Tensor, factor: int) -> Tensor:
    """Nearest-neighbour upsampling of the two leading axes of (H, W, ...)."""
    factor = int(factor)
    data = np.repeat(np.repeat(x.data, factor, axis=0), factor, axis=1)

    def vjp(g):
        h, w = x.data.shape[:2]
        gr = g.reshape((h, factor, w, factor) + x.data.shape[2:])
        _accum(x, gr.sum(axis=(1, 3)))

    return _make(data, (x,), vjp)


# ---------------------------------------------------------------------------
# op registry
# ---------------------------------------------------------------------------

# Primitive registry keyed by op name; used by primitive_forward_backward and
# the gradcheck gate. conv2d and unfold_project jointly cover the
# patchify-or-convolve slot; softmax takes its axis as a keyword.
PRIMITIVES: dict[str, Callable[..., Tensor]] = {
    "matmul": matmul,
    "add": add,
    "sub": sub,
    "mul": mul,
    "div": div,
    "scale": scale,
    "reshape": reshape,
    "transpose": transpose,
    "concat": lambda *ts, axis=0: concat(ts, axis=axis),
    "slice": slice_,
    "relu": relu,
    "gelu": gelu,
    "sigmoid": sigmoid,
    "softplus": softplus,
    "exp": exp,
    "log": log,
    "power": power,
    "layernorm": layernorm,
    "softmax": softmax,
    "mean": mean,
    "sum": sum_,
    "embedding_lookup": embedding_lookup,
    "conv2d": conv2d,
    "unfold_project": unfold_project,
    "upsample_nearest": upsample_nearest,
}


def primitive_forward_backward(op_name: str, *inputs, **kwargs) -> Tensor:
    """Dispatch a named primitive; the result is wired into the autodiff
    graph. Unknown names and shape mismatches raise ShapeError/KeyError with
    the offending operands named."""
    if op_name not in PRIMITIVES:
        raise KeyError(f"unknown primitive {op_name!r}; known: {sorted(PRIMITIVES)}")
    return PRIMITIVES[op_name](*inputs, **kwargs)
