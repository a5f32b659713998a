import numpy as np
import pytest

from pdas.backbone.gradcheck import gradcheck
from pdas.backbone.tensor import ShapeError, Tensor
from pdas.backbone import tensor as T
from pdas.model import ModelConfig, PromptSegModel, build_attention_mask
from pdas.synthdata import PointPrompt, task_point

TINY = ModelConfig(image_crop=16, patch_size=8, embed_dim=16, encoder_depth=1, decoder_depth=1, num_heads=2, projector_dim=8)


def _rand_image(rng, crop):
    return rng.uniform(0, 1, size=(crop, crop))


def test_config_validation():
    with pytest.raises(ValueError):
        ModelConfig(image_crop=65)
    with pytest.raises(ValueError):
        ModelConfig(embed_dim=30, num_heads=4)


def test_param_count_pure_function_of_config():
    a = PromptSegModel.init(TINY, seed=0)
    b = PromptSegModel.init(TINY, seed=99)
    assert sorted(a.params) == sorted(b.params)
    assert all(a.params[k].shape == b.params[k].shape for k in a.params)


def test_encode_image_shapes_default():
    m = PromptSegModel.init(ModelConfig(), seed=0)
    tok = m.encode_image(np.zeros((64, 64)))
    assert tok.shape == (64, 64)  # (crop/patch)^2 tokens, embed_dim wide


def test_encode_image_wrong_size_rejected():
    m = PromptSegModel.init(TINY, seed=0)
    with pytest.raises(ShapeError):
        m.encode_image(np.zeros((17, 16)))


def test_encode_image_deterministic_and_bias_sensitive():
    m = PromptSegModel.init(TINY, seed=1)
    rng = np.random.default_rng(0)
    img = _rand_image(rng, 16)
    assert m.encode_image(img).data.tobytes() == m.encode_image(img).data.tobytes()
    t0 = m.encode_image(np.zeros((16, 16))).data
    t1 = m.encode_image(np.ones((16, 16))).data
    assert not np.array_equal(t0, t1)


def test_encode_prompts_empty_gives_no_prompt_token():
    m = PromptSegModel.init(TINY, seed=2)
    tok = m.encode_prompts([])
    assert tok.shape == (1, TINY.embed_dim)
    assert tok is m.params["prompt.no_prompt"]
    assert m.encode_prompts([], allow_empty=True) is None


def test_encode_prompts_deterministic_and_role_delta():
    m = PromptSegModel.init(TINY, seed=2)
    a = m.encode_prompts([PointPrompt((5, 7), "task-prompt", "ground-truth")])
    b = m.encode_prompts([PointPrompt((5, 7), "task-prompt", "ground-truth")])
    assert a.data.tobytes() == b.data.tobytes()
    q = m.encode_prompts([PointPrompt((5, 7), "pcl-query", "detected")])
    delta = m.params["prompt.role"].data[1] - m.params["prompt.role"].data[0]
    assert np.allclose(q.data - a.data, delta[None, :])


def test_encode_prompts_out_of_bounds_rejected():
    m = PromptSegModel.init(TINY, seed=2)
    with pytest.raises(ValueError, match="prompt 0"):
        m.encode_prompts([task_point((16, 3))])


def test_attention_mask_pattern():
    mask = build_attention_mask(2, 3, 64)
    assert mask.shape == (69, 69)
    assert mask[:2, 2:5].all() and mask[5:, 2:5].all()  # nobody reads pcl
    assert int(mask[5:, 2:5].sum()) == 64 * 3 and int(mask[:2, 2:5].sum()) == 2 * 3
    assert mask[2:5, :2].all()  # pcl never reads task
    assert not mask[2:5, 2:].any()  # pcl reads itself + image
    assert not mask[:2, :2].any() and not mask[:2, 5:].any()
    assert not mask[5:, 5:].any() and not mask[5:, :2].any()
    assert not build_attention_mask(2, 0, 4).any()


def test_decode_mask_mismatch_rejected():
    m = PromptSegModel.init(TINY, seed=3)
    img = m.encode_image(np.zeros((16, 16)))
    tsk = m.encode_prompts([])
    bad = build_attention_mask(2, 0, 4)
    with pytest.raises(ShapeError):
        m.decode(img, tsk, None, bad)
    wrong = build_attention_mask(1, 0, img.shape[0])
    wrong[0, 0] = True
    with pytest.raises(ShapeError):
        m.decode(img, tsk, None, wrong)


def test_zero_depth_decoder_is_identity():
    cfg = ModelConfig(image_crop=16, patch_size=8, embed_dim=16, encoder_depth=1, decoder_depth=0, num_heads=2)
    m = PromptSegModel.init(cfg, seed=4)
    img = m.encode_image(np.random.default_rng(0).uniform(size=(16, 16)))
    tsk = m.encode_prompts([task_point((3, 3))])
    mask = build_attention_mask(1, 0, img.shape[0])
    i2, t2, p2 = m.decode(img, tsk, None, mask)
    assert i2 is img and t2 is tsk and p2 is None


def test_leakage_pcl_tokens_never_change_task_outputs():
    # the hard gate at unit scale: bitwise identity with and without pcl tokens
    m = PromptSegModel.init(TINY, seed=5)
    rng = np.random.default_rng(8)
    for trial in range(10):
        img = _rand_image(rng, 16)
        prompts = [task_point((int(rng.integers(16)), int(rng.integers(16))))]
        pcl = [
            PointPrompt((int(rng.integers(16)), int(rng.integers(16))), "pcl-query", "detected"),
            PointPrompt((int(rng.integers(16)), int(rng.integers(16))), "pcl-negative", "detected"),
        ]
        base = m.forward(img, prompts)
        with_pcl = m.forward(img, prompts + pcl)
        assert base.seg_logits.data.tobytes() == with_pcl.seg_logits.data.tobytes()
        assert base.density.data.tobytes() == with_pcl.density.data.tobytes()
        assert base.task_tokens.data.tobytes() == with_pcl.task_tokens.data.tobytes()
        assert with_pcl.pcl_tokens.shape == (2, TINY.embed_dim)


def test_task_prompt_does_change_outputs():
    m = PromptSegModel.init(TINY, seed=5)
    img = _rand_image(np.random.default_rng(1), 16)
    a = m.forward(img, [])
    b = m.forward(img, [task_point((8, 8))])
    assert not np.array_equal(a.seg_logits.data, b.seg_logits.data)


def test_task_prompt_permutation_equivariance():
    m = PromptSegModel.init(TINY, seed=6)
    img = _rand_image(np.random.default_rng(2), 16)
    pts = [task_point((2, 3)), task_point((9, 12)), task_point((14, 1))]
    fwd = m.forward(img, pts)
    perm = [2, 0, 1]
    fwd_p = m.forward(img, [pts[i] for i in perm])
    assert np.allclose(fwd_p.task_tokens.data, fwd.task_tokens.data[perm], atol=1e-10)
    assert np.allclose(fwd_p.seg_logits.data, fwd.seg_logits.data, atol=1e-10)
    assert np.allclose(fwd_p.density.data, fwd.density.data, atol=1e-10)


def test_seg_head_shapes_and_normalization():
    m = PromptSegModel.init(ModelConfig(), seed=7)
    out = m.forward(np.random.default_rng(3).uniform(size=(64, 64)))
    assert out.seg_logits.shape == (64, 64, 2)
    assert out.density.shape == (64, 64)
    probs = T.softmax(out.seg_logits, axis=-1).data
    assert np.max(np.abs(probs.sum(axis=-1) - 1.0)) < 1e-6
    assert np.all(out.density.data >= 0.0)


def test_projector_unit_norm_and_determinism():
    m = PromptSegModel.init(TINY, seed=8)
    tok = Tensor(np.random.default_rng(4).normal(size=(5, TINY.embed_dim)))
    z = m.project_embedding(tok)
    assert z.shape == (5, TINY.projector_dim)
    norms = np.linalg.norm(z.data, axis=-1)
    assert np.max(np.abs(norms - 1.0)) < 1e-6
    z2 = m.project_embedding(Tensor(tok.data.copy()))
    assert z.data.tobytes() == z2.data.tobytes()


def test_decoder_block_gradcheck():
    cfg = ModelConfig(image_crop=16, patch_size=8, embed_dim=8, encoder_depth=0, decoder_depth=1, num_heads=2, projector_dim=4)
    m = PromptSegModel.init(cfg, seed=9)
    rng = np.random.default_rng(5)
    img = Tensor(rng.normal(size=(4, 8)))
    tsk = Tensor(rng.normal(size=(2, 8)))
    pcl = Tensor(rng.normal(size=(2, 8)))
    wsum = Tensor(rng.normal(size=(4, 8)))
    wt = Tensor(rng.normal(size=(2, 8)))
    wp = Tensor(rng.normal(size=(2, 8)))
    mask = build_attention_mask(2, 2, 4)

    def f(i, t, p):
        i2, t2, p2 = m.decode(i, t, p, mask)
        s = T.add(T.sum_(T.mul(i2, wsum)), T.sum_(T.mul(t2, wt)))
        return T.add(s, T.sum_(T.mul(p2, wp)))

    assert gradcheck(f, [img, tsk, pcl]) < 1e-4


def test_det_head_gradcheck():
    cfg = ModelConfig(image_crop=8, patch_size=8, embed_dim=8, encoder_depth=0, decoder_depth=0, num_heads=2)
    m = PromptSegModel.init(cfg, seed=10)
    rng = np.random.default_rng(6)
    tok = Tensor(rng.normal(size=(1, 8)))
    w = Tensor(rng.normal(size=(8, 8)))

    def f(t):
        return T.sum_(T.mul(m.det_head(t), w))

    assert gradcheck(f, [tok]) < 1e-4


def test_prompt_encoder_grads_flow_through_projection_path():
    m = PromptSegModel.init(TINY, seed=11)
    img = _rand_image(np.random.default_rng(7), 16)
    for t in m.params.values():
        t.grad = None
    out = m.forward(img, [task_point((4, 4)), PointPrompt((9, 9), "pcl-query", "detected")])
    z = m.project_embedding(out.pcl_tokens)
    T.sum_(z).backward()
    assert m.params["prompt.role"].grad is not None
    assert np.linalg.norm(m.params["prompt.role"].grad) > 0


def test_model_checkpoint_roundtrip(tmp_path):
    m = PromptSegModel.init(TINY, seed=12)
    m.save(tmp_path / "m.ckpt", step=77)
    m2, step = PromptSegModel.load(tmp_path / "m.ckpt")
    assert step == 77
    assert m2.config == TINY
    img = _rand_image(np.random.default_rng(9), 16)
    a = m.forward(img, [task_point((1, 2))])
    b = m2.forward(img, [task_point((1, 2))])
    assert a.seg_logits.data.tobytes() == b.seg_logits.data.tobytes()
    assert a.density.data.tobytes() == b.density.data.tobytes()
