import numpy as np
import pytest

from pdas.backbone import tensor as T
from pdas.backbone.checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from pdas.backbone.gradcheck import gradcheck
from pdas.backbone.optim import OptimizerState, adamw_step, poly_lr
from pdas.backbone.tensor import ShapeError, Tensor


def test_relu_forward_backward():
    x = Tensor([-1.0, 2.0], requires_grad=True)
    y = T.relu(x)
    assert np.array_equal(y.data, [0.0, 2.0])
    T.sum_(y).backward()
    assert np.array_equal(x.grad, [0.0, 1.0])


def test_softmax_symmetry():
    y = T.softmax(Tensor([0.0, 0.0]))
    assert np.array_equal(y.data, [0.5, 0.5])


def test_softmax_rows_normalized():
    rng = np.random.default_rng(7)
    x = Tensor(rng.normal(size=(13, 9)) * 8)
    y = T.softmax(x, axis=-1).data
    assert np.all(np.abs(y.sum(axis=-1) - 1.0) < 1e-9)
    assert np.all((y > 0) & (y < 1))


def test_layernorm_hand_value():
    # mean 2, population variance 1 -> normalized to [-1, 1]
    x = Tensor([1.0, 3.0])
    g = Tensor(np.ones(2))
    b = Tensor(np.zeros(2))
    y = T.layernorm(x, g, b, eps=1e-5)
    assert np.allclose(y.data, [-1.0, 1.0], atol=1e-4)


def test_matmul_identity_exact():
    rng = np.random.default_rng(3)
    a = Tensor(rng.integers(-9, 10, size=(5, 5)).astype(np.float64))
    eye = Tensor(np.eye(5))
    assert np.array_equal(T.matmul(a, eye).data, a.data)


def test_matmul_shape_mismatch_named():
    with pytest.raises(ShapeError, match=r"\(2, 3\)"):
        T.matmul(Tensor(np.zeros((2, 3))), Tensor(np.zeros((4, 5))))


def test_softmax_empty_axis_rejected():
    with pytest.raises(ShapeError):
        T.softmax(Tensor(np.zeros((3, 0))))


def test_unknown_primitive_rejected():
    with pytest.raises(KeyError):
        T.primitive_forward_backward("frobnicate", Tensor([1.0]))


def test_primitive_registry_dispatch():
    out = T.primitive_forward_backward("add", Tensor([1.0]), Tensor([2.0]))
    assert out.data[0] == 3.0


def test_broadcast_grad_add():
    a = Tensor(np.ones((3, 4)), requires_grad=True)
    b = Tensor(np.ones(4), requires_grad=True)
    T.sum_(a + b).backward()
    assert a.grad.shape == (3, 4)
    assert np.array_equal(b.grad, np.full(4, 3.0))


def test_grad_accumulates_on_reuse():
    x = Tensor([2.0], requires_grad=True)
    y = x * x  # dy/dx = 2x via two paths
    T.sum_(y).backward()
    assert np.allclose(x.grad, [4.0])


def test_quadratic_gradcheck():
    x = Tensor([1.0, 2.0])

    def f(t):
        return T.sum_(t * t)

    err = gradcheck(f, [x])
    assert err < 1e-6
    assert np.allclose(x.grad, [2.0, 4.0])


def test_softmax_cross_entropy_gradcheck():
    rng = np.random.default_rng(11)
    logits = Tensor(rng.normal(size=(4,)))
    onehot = np.zeros(4)
    onehot[2] = 1.0

    def f(z):
        p = T.softmax(z)
        return T.scale(T.sum_(T.mul(T.log(p), Tensor(onehot))), -1.0)

    assert gradcheck(f, [logits]) < 1e-4


def test_values_finite_after_forward_backward():
    rng = np.random.default_rng(5)
    x = Tensor(rng.normal(size=(4, 6)), requires_grad=True)
    w = Tensor(rng.normal(size=(6, 3)), requires_grad=True)
    y = T.softmax(T.gelu(T.matmul(x, w)), axis=-1)
    T.sum_(T.mul(y, y)).backward()
    for t in (x, w, y):
        assert np.all(np.isfinite(t.data))
    assert np.all(np.isfinite(x.grad)) and np.all(np.isfinite(w.grad))


# --- optimizer ---------------------------------------------------------------


def test_adamw_first_step_bias_corrected():
    # m̂=v̂=1 after one step with constant grad, so the update is lr/(1+ε) ≈ lr
    p = Tensor([1.0], requires_grad=True)
    p.grad = np.array([1.0])
    adamw_step({"w": p}, OptimizerState(), lr=0.1, weight_decay=0.0)
    assert abs(p.data[0] - 0.9) < 1e-3


def test_adamw_two_steps_constant_grad():
    # with ε=0 and constant grad, each bias-corrected step moves by exactly lr
    p = Tensor([1.0], requires_grad=True)
    st = OptimizerState()
    for _ in range(2):
        p.grad = np.array([1.0])
        adamw_step({"w": p}, st, lr=0.1, beta1=0.9, beta2=0.99, eps=0.0, weight_decay=0.0)
    assert abs(p.data[0] - 0.8) < 1e-9
    assert st.step == 2


def test_adamw_zero_grad_no_motion():
    p = Tensor([1.0, -2.0], requires_grad=True)
    p.grad = np.zeros(2)
    adamw_step({"w": p}, OptimizerState(), lr=0.1, weight_decay=0.0)
    assert np.array_equal(p.data, [1.0, -2.0])


def test_adamw_pure_decay():
    p = Tensor([1.0], requires_grad=True)
    p.grad = np.zeros(1)
    adamw_step({"w": p}, OptimizerState(), lr=0.1, weight_decay=0.1)
    assert abs(p.data[0] - 0.99) < 1e-12


def test_adamw_missing_grad_rejected():
    p = Tensor([1.0], requires_grad=True)
    with pytest.raises(ValueError, match="missing grad"):
        adamw_step({"w": p}, OptimizerState(), lr=0.1)


def test_adamw_deterministic():
    def run():
        p = Tensor([1.0, 2.0], requires_grad=True)
        st = OptimizerState()
        for k in range(5):
            p.grad = np.array([0.1 * k, -0.2])
            adamw_step({"w": p}, st, lr=0.01)
        return p.data.tobytes()

    assert run() == run()


def test_poly_lr_boundaries():
    assert poly_lr(1e-3, 0, 100) == 1e-3
    assert poly_lr(1e-3, 100, 100) == 0.0


def test_poly_lr_midpoint():
    assert abs(poly_lr(1.0, 50, 100) - 0.5359) < 1e-4


def test_poly_lr_zero_max_rejected():
    with pytest.raises(ValueError):
        poly_lr(1.0, 0, 0)


# --- checkpoint --------------------------------------------------------------


def test_checkpoint_roundtrip_bit_exact(tmp_path):
    rng = np.random.default_rng(19)
    params = {
        "enc.w": Tensor(rng.normal(size=(7, 5))),
        "enc.b": Tensor(rng.normal(size=(5,))),
        "head.scalar": Tensor(np.array(3.14159)),
    }
    path = tmp_path / "model.ckpt"
    save_checkpoint(path, params, step=1234, config={"dim": 5, "name": "toy"})
    loaded, step, config = load_checkpoint(path)
    assert step == 1234
    assert config == {"dim": 5, "name": "toy"}
    assert set(loaded) == set(params)
    for name in params:
        assert loaded[name].data.shape == params[name].data.shape
        assert loaded[name].data.tobytes() == params[name].data.tobytes()


def test_checkpoint_magic(tmp_path):
    path = tmp_path / "model.ckpt"
    save_checkpoint(path, {"w": Tensor([1.0])})
    assert path.read_bytes()[:8] == b"PDASCKPT"


def test_checkpoint_bad_magic_rejected(tmp_path):
    path = tmp_path / "junk.ckpt"
    path.write_bytes(b"NOTACKPT" + b"\x00" * 32)
    with pytest.raises(CheckpointError):
        load_checkpoint(path)


def test_checkpoint_truncated_rejected(tmp_path):
    path = tmp_path / "model.ckpt"
    save_checkpoint(path, {"w": Tensor(np.ones((4, 4)))})
    blob = path.read_bytes()
    path.write_bytes(blob[:-16])
    with pytest.raises(CheckpointError):
        load_checkpoint(path)
