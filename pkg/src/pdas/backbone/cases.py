"""Randomized gradcheck cases for every registered primitive.

Each case builds fresh random inputs for a seed and returns (scalar_fn,
inputs). Inputs for kinked or singular ops (relu, log, div, power) are kept
away from the non-smooth point so central differences are valid.
"""

import numpy as np

from pdas.backbone import tensor as T
from pdas.backbone.tensor import Tensor


def _away_from_zero(rng, shape, margin=0.15):
    x = rng.normal(size=shape)
    return x + np.sign(x) * margin


def _weighted_sum(rng, shape):
    w = rng.normal(size=shape)
    return lambda t: T.sum_(T.mul(t, Tensor(w)))


def case_matmul_2d(rng):
    a = Tensor(rng.normal(size=(3, 4)))
    b = Tensor(rng.normal(size=(4, 5)))
    return lambda x, y: T.sum_(T.matmul(x, y)), [a, b]


def case_matmul_batched(rng):
    a = Tensor(rng.normal(size=(2, 3, 4)))
    b = Tensor(rng.normal(size=(2, 4, 5)))
    return lambda x, y: T.sum_(T.matmul(x, y)), [a, b]


def case_matmul_mixed(rng):
    a = Tensor(rng.normal(size=(2, 3, 4)))
    b = Tensor(rng.normal(size=(4, 5)))
    return lambda x, y: T.sum_(T.matmul(x, y)), [a, b]


def case_add(rng):
    a = Tensor(rng.normal(size=(3, 4)))
    b = Tensor(rng.normal(size=(4,)))
    w = _weighted_sum(rng, (3, 4))
    return lambda x, y: w(T.add(x, y)), [a, b]


def case_sub(rng):
    a = Tensor(rng.normal(size=(2, 3)))
    b = Tensor(rng.normal(size=(2, 1)))
    w = _weighted_sum(rng, (2, 3))
    return lambda x, y: w(T.sub(x, y)), [a, b]


def case_mul(rng):
    a = Tensor(rng.normal(size=(3, 4)))
    b = Tensor(rng.normal(size=(3, 1)))
    return lambda x, y: T.sum_(T.mul(x, y)), [a, b]


def case_div(rng):
    a = Tensor(rng.normal(size=(3, 4)))
    b = Tensor(_away_from_zero(rng, (4,), margin=0.5))
    return lambda x, y: T.sum_(T.div(x, y)), [a, b]


def case_scale(rng):
    a = Tensor(rng.normal(size=(5,)))
    return lambda x: T.sum_(T.scale(x, -2.5)), [a]


def case_reshape(rng):
    a = Tensor(rng.normal(size=(2, 6)))
    w = _weighted_sum(rng, (3, 4))
    return lambda x: w(T.reshape(x, (3, 4))), [a]


def case_transpose(rng):
    a = Tensor(rng.normal(size=(2, 3, 4)))
    w = _weighted_sum(rng, (4, 2, 3))
    return lambda x: w(T.transpose(x, (2, 0, 1))), [a]


def case_concat(rng):
    a = Tensor(rng.normal(size=(2, 3)))
    b = Tensor(rng.normal(size=(2, 2)))
    w = _weighted_sum(rng, (2, 5))
    return lambda x, y: w(T.concat([x, y], axis=1)), [a, b]


def case_slice(rng):
    a = Tensor(rng.normal(size=(4, 5)))
    w = _weighted_sum(rng, (2, 3))
    return lambda x: w(T.slice_(x, (slice(1, 3), slice(0, 3)))), [a]


def case_relu(rng):
    a = Tensor(_away_from_zero(rng, (4, 4)))
    w = _weighted_sum(rng, (4, 4))
    return lambda x: w(T.relu(x)), [a]


def case_gelu(rng):
    a = Tensor(rng.normal(size=(3, 5)))
    w = _weighted_sum(rng, (3, 5))
    return lambda x: w(T.gelu(x)), [a]


def case_sigmoid(rng):
    a = Tensor(rng.normal(size=(6,)))
    w = _weighted_sum(rng, (6,))
    return lambda x: w(T.sigmoid(x)), [a]


def case_softplus(rng):
    a = Tensor(rng.normal(size=(6,)))
    w = _weighted_sum(rng, (6,))
    return lambda x: w(T.softplus(x)), [a]


def case_exp(rng):
    a = Tensor(rng.normal(size=(4,)))
    w = _weighted_sum(rng, (4,))
    return lambda x: w(T.exp(x)), [a]


def case_log(rng):
    a = Tensor(rng.uniform(0.5, 3.0, size=(4,)))
    w = _weighted_sum(rng, (4,))
    return lambda x: w(T.log(x)), [a]


def case_power(rng):
    a = Tensor(rng.uniform(0.5, 2.0, size=(4,)))
    w = _weighted_sum(rng, (4,))
    return lambda x: w(T.power(x, 1.7)), [a]


def case_layernorm(rng):
    x = Tensor(rng.normal(size=(3, 6)))
    g = Tensor(rng.normal(size=(6,)))
    b = Tensor(rng.normal(size=(6,)))
    w = _weighted_sum(rng, (3, 6))
    return lambda a, c, d: w(T.layernorm(a, c, d)), [x, g, b]


def case_softmax(rng):
    a = Tensor(rng.normal(size=(3, 5)))
    w = _weighted_sum(rng, (3, 5))
    return lambda x: w(T.softmax(x, axis=-1)), [a]


def case_mean(rng):
    a = Tensor(rng.normal(size=(3, 4)))
    w = _weighted_sum(rng, (4,))
    return lambda x: w(T.mean(x, axis=0)), [a]


def case_sum(rng):
    a = Tensor(rng.normal(size=(3, 4)))
    w = _weighted_sum(rng, (3,))
    return lambda x: w(T.sum_(x, axis=1)), [a]


def case_embedding_lookup(rng):
    table = Tensor(rng.normal(size=(7, 4)))
    idx = rng.integers(0, 7, size=6)
    w = _weighted_sum(rng, (6, 4))
    return lambda t: w(T.embedding_lookup(t, idx)), [table]


def case_conv2d(rng):
    x = Tensor(rng.normal(size=(5, 6, 2)))
    w = Tensor(rng.normal(size=(3, 3, 2, 3)) * 0.4)
    b = Tensor(rng.normal(size=(3,)))
    ws = _weighted_sum(rng, (5, 6, 3))
    return lambda a, c, d: ws(T.conv2d(a, c, d)), [x, w, b]


def case_unfold_project(rng):
    img = Tensor(rng.normal(size=(6, 8)))
    w = Tensor(rng.normal(size=(4, 5)) * 0.5)
    b = Tensor(rng.normal(size=(5,)))
    ws = _weighted_sum(rng, (12, 5))
    return lambda a, c, d: ws(T.unfold_project(a, c, d, patch=2)), [img, w, b]


def case_upsample_nearest(rng):
    x = Tensor(rng.normal(size=(3, 4, 2)))
    w = _weighted_sum(rng, (6, 8, 2))
    return lambda a: w(T.upsample_nearest(a, 2)), [x]


ALL_CASES = {name[5:]: fn for name, fn in sorted(globals().items()) if name.startswith("case_")}
