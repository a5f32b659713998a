"""The promptable multitask segmentation network.

Token layout everywhere is [task prompts | pcl prompts | image]. The decoder
enforces the pcl-isolation attention pattern *structurally*: the task/image
stream is computed from arrays that never contain pcl rows, so its outputs are
bit-identical with or without pcl tokens; pcl tokens read image keys but can
never write back. `build_attention_mask` expresses the same pattern as an
explicit boolean matrix, and `decode` verifies the supplied mask against it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..backbone import tensor as T
from ..backbone.checkpoint import load_checkpoint, save_checkpoint
from ..backbone.tensor import ShapeError, Tensor
from ..synthdata.generate import DENSITY_PEAK_VALUE
from ..synthdata.prompts import PointPrompt
from .config import ModelConfig

# head channel widths: fold path, coarse path, mixing layer
_C_FOLD = 8
_C_COARSE = 8
_C_MID = 16
_ROLE_INDEX = {"task-prompt": 0, "pcl-query": 1, "pcl-negative": 2}


def build_attention_mask(n_task: int, n_pcl: int, n_img: int) -> np.ndarray:
    """Boolean (S, S) matrix over [task | pcl | image]; True = blocked.

    pcl rows may attend to themselves and image; every other query is blocked
    from attending to pcl keys; everything else is open.
    """
    if min(n_task, n_pcl, n_img) < 0:
        raise ValueError("token counts must be non-negative")
    s = n_task + n_pcl + n_img
    mask = np.zeros((s, s), dtype=bool)
    p0, p1 = n_task, n_task + n_pcl
    mask[:p0, p0:p1] = True  # task queries never read pcl keys
    mask[p1:, p0:p1] = True  # image queries never read pcl keys
    mask[p0:p1, :p0] = True  # pcl queries read image and themselves, not task
    return mask


def _init_params(config: ModelConfig, seed: int) -> dict[str, Tensor]:
    rng = np.random.default_rng(seed)
    p: dict[str, Tensor] = {}

    def w(name, *shape, std=0.02):
        p[name] = Tensor(rng.normal(0.0, std, size=shape), requires_grad=True, name=name)

    def zeros(name, *shape):
        p[name] = Tensor(np.zeros(shape), requires_grad=True, name=name)

    def ln(prefix):
        p[f"{prefix}.g"] = Tensor(np.ones(config.embed_dim), requires_grad=True, name=f"{prefix}.g")
        zeros(f"{prefix}.b", config.embed_dim)

    def attn(prefix):
        d = config.embed_dim
        for nm in ("wq", "wk", "wv", "wo"):
            w(f"{prefix}.{nm}", d, d)
        for nm in ("bq", "bk", "bv", "bo"):
            zeros(f"{prefix}.{nm}", d)

    def mlp(prefix):
        d, h = config.embed_dim, config.embed_dim * config.mlp_ratio
        w(f"{prefix}.w1", d, h)
        zeros(f"{prefix}.b1", h)
        w(f"{prefix}.w2", h, d)
        zeros(f"{prefix}.b2", d)

    d = config.embed_dim
    ps = config.patch_size
    w("enc.patch.w", ps * ps, d)
    zeros("enc.patch.b", d)
    w("enc.pos", config.n_image_tokens, d)
    for i in range(config.encoder_depth):
        ln(f"enc.block{i}.ln1")
        attn(f"enc.block{i}.attn")
        ln(f"enc.block{i}.ln2")
        mlp(f"enc.block{i}.mlp")
    ln("enc.ln_out")

    w("prompt.no_prompt", 1, d)
    w("prompt.role", 3, d)

    for i in range(config.decoder_depth):
        ln(f"dec.block{i}.ln_self")
        attn(f"dec.block{i}.self")
        ln(f"dec.block{i}.ln_p2i_q")
        ln(f"dec.block{i}.ln_p2i_kv")
        attn(f"dec.block{i}.p2i")
        ln(f"dec.block{i}.ln_i2p_q")
        ln(f"dec.block{i}.ln_i2p_kv")
        attn(f"dec.block{i}.i2p")
        ln(f"dec.block{i}.ln_mlp")
        mlp(f"dec.block{i}.mlp")

    for head, cout in (("seg", 2), ("det", 1)):
        ln(f"head.{head}.ln")
        w(f"head.{head}.fold.w", d, ps * ps * _C_FOLD)
        zeros(f"head.{head}.fold.b", ps * ps * _C_FOLD)
        w(f"head.{head}.coarse.w", d, _C_COARSE)
        zeros(f"head.{head}.coarse.b", _C_COARSE)
        w(f"head.{head}.conv1.w", 3, 3, _C_FOLD + _C_COARSE, _C_MID, std=0.05)
        zeros(f"head.{head}.conv1.b", _C_MID)
        w(f"head.{head}.conv2.w", 3, 3, _C_MID, cout, std=0.05)
        zeros(f"head.{head}.conv2.b", cout)
    # start the density head near zero output
    p["head.det.conv2.b"].data[:] = -6.0

    ln("proj.ln")
    w("proj.w1", d, d)
    zeros("proj.b1", d)
    w("proj.w2", d, config.projector_dim)
    zeros("proj.b2", config.projector_dim)
    return p


@dataclass
class ModelOutput:
    seg_logits: Tensor  # (H, W, 2)
    density: Tensor  # (H, W)
    image_tokens: Tensor  # (N, D) refined
    task_tokens: Tensor  # (Mt, D) refined (no-prompt token when none given)
    pcl_tokens: Tensor | None  # (Mp, D) refined, None when no pcl prompts
    task_prompts: list[PointPrompt] = field(default_factory=list)
    pcl_prompts: list[PointPrompt] = field(default_factory=list)


class PromptSegModel:
    def __init__(self, config: ModelConfig, params: dict[str, Tensor]):
        self.config = config
        self.params = params

    @classmethod
    def init(cls, config: ModelConfig, seed: int = 0) -> "PromptSegModel":
        return cls(config, _init_params(config, seed))

    def clone(self) -> "PromptSegModel":
        params = {k: Tensor(v.data.copy(), requires_grad=v.requires_grad, name=v.name) for k, v in self.params.items()}
        return PromptSegModel(self.config, params)

    def save(self, path: str | Path, step: int = 0) -> None:
        save_checkpoint(path, self.params, step=step, config=self.config.to_dict())

    @classmethod
    def load(cls, path: str | Path) -> tuple["PromptSegModel", int]:
        params, step, cfg = load_checkpoint(path)
        return cls(ModelConfig.from_dict(cfg), params), step

    # -- attention plumbing ------------------------------------------------

    def _attend(self, prefix: str, q_tok: Tensor, kv_tok: Tensor) -> Tensor:
        p = self.params
        h = self.config.num_heads
        d = self.config.embed_dim
        dh = d // h
        q = T.add(T.matmul(q_tok, p[f"{prefix}.wq"]), p[f"{prefix}.bq"])
        k = T.add(T.matmul(kv_tok, p[f"{prefix}.wk"]), p[f"{prefix}.bk"])
        v = T.add(T.matmul(kv_tok, p[f"{prefix}.wv"]), p[f"{prefix}.bv"])
        nq, nk = q.shape[0], k.shape[0]
        q = T.transpose(T.reshape(q, (nq, h, dh)), (1, 0, 2))
        k = T.transpose(T.reshape(k, (nk, h, dh)), (1, 0, 2))
        v = T.transpose(T.reshape(v, (nk, h, dh)), (1, 0, 2))
        scores = T.scale(T.matmul(q, T.transpose(k, (0, 2, 1))), 1.0 / np.sqrt(dh))
        attn = T.softmax(scores, axis=-1)
        out = T.transpose(T.matmul(attn, v), (1, 0, 2))
        out = T.reshape(out, (nq, d))
        return T.add(T.matmul(out, p[f"{prefix}.wo"]), p[f"{prefix}.bo"])

    def _ln(self, prefix: str, x: Tensor) -> Tensor:
        return T.layernorm(x, self.params[f"{prefix}.g"], self.params[f"{prefix}.b"])

    def _mlp(self, prefix: str, x: Tensor) -> Tensor:
        p = self.params
        h = T.gelu(T.add(T.matmul(x, p[f"{prefix}.w1"]), p[f"{prefix}.b1"]))
        return T.add(T.matmul(h, p[f"{prefix}.w2"]), p[f"{prefix}.b2"])

    # -- encoders ----------------------------------------------------------

    def encode_image(self, image) -> Tensor:
        crop = self.config.image_crop
        img = image if isinstance(image, Tensor) else Tensor(image)
        if img.shape != (crop, crop):
            raise ShapeError(f"encode_image: expected {(crop, crop)}, got {img.shape}")
        x = T.unfold_project(img, self.params["enc.patch.w"], self.params["enc.patch.b"], self.config.patch_size)
        x = T.add(x, self.params["enc.pos"])
        for i in range(self.config.encoder_depth):
            ln1 = self._ln(f"enc.block{i}.ln1", x)
            x = T.add(x, self._attend(f"enc.block{i}.attn", ln1, ln1))
            x = T.add(x, self._mlp(f"enc.block{i}.mlp", self._ln(f"enc.block{i}.ln2", x)))
        return self._ln("enc.ln_out", x)

    def _sinusoid(self, positions: np.ndarray) -> np.ndarray:
        d = self.config.embed_dim
        crop = self.config.image_crop
        nb = d // 4
        freqs = np.pi * (crop ** (np.arange(nb) / max(nb - 1, 1)))
        u = positions[:, 0:1] / crop
        v = positions[:, 1:2] / crop
        return np.concatenate(
            [np.sin(u * freqs), np.cos(u * freqs), np.sin(v * freqs), np.cos(v * freqs)], axis=1
        )

    def encode_prompts(self, prompts: list[PointPrompt], allow_empty: bool = False) -> Tensor | None:
        """(M, D) tokens: sinusoidal position + learned role embedding.

        With no prompts: the learned no-prompt token, or None when the caller
        wants a genuinely empty group (pcl path)."""
        crop = self.config.image_crop
        if not prompts:
            if allow_empty:
                return None
            return self.params["prompt.no_prompt"]
        for i, pr in enumerate(prompts):
            r, c = pr.position
            if not (0 <= r < crop and 0 <= c < crop):
                raise ValueError(f"prompt {i} position {pr.position} outside {crop}x{crop} crop")
        pos = np.array([pr.position for pr in prompts], dtype=np.float64)
        base = Tensor(self._sinusoid(pos))
        roles = [_ROLE_INDEX[pr.role] for pr in prompts]
        return T.add(base, T.embedding_lookup(self.params["prompt.role"], roles))

    # -- decoder -----------------------------------------------------------

    def decode(
        self,
        image_tokens: Tensor,
        task_tokens: Tensor,
        pcl_tokens: Tensor | None,
        mask: np.ndarray,
    ) -> tuple[Tensor, Tensor, Tensor | None]:
        n_t, n_i = task_tokens.shape[0], image_tokens.shape[0]
        n_p = 0 if pcl_tokens is None else pcl_tokens.shape[0]
        expected = build_attention_mask(n_t, n_p, n_i)
        if mask.shape != expected.shape or not np.array_equal(mask, expected):
            raise ShapeError(
                f"attention mask does not match token counts (task={n_t}, pcl={n_p}, img={n_i})"
            )
        tsk, img, pcl = task_tokens, image_tokens, pcl_tokens
        for i in range(self.config.decoder_depth):
            b = f"dec.block{i}"
            # masked self-attention: the task/image stream never sees pcl rows
            lt = self._ln(f"{b}.ln_self", tsk)
            li = self._ln(f"{b}.ln_self", img)
            a_in = T.concat([lt, li], axis=0)
            a_out = self._attend(f"{b}.self", a_in, a_in)
            tsk = T.add(tsk, T.slice_(a_out, slice(0, n_t)))
            img = T.add(img, T.slice_(a_out, slice(n_t, n_t + n_i)))
            if pcl is not None:
                lp = self._ln(f"{b}.ln_self", pcl)
                pcl = T.add(pcl, self._attend(f"{b}.self", lp, T.concat([li, lp], axis=0)))
            # prompts read the image
            kv_img = self._ln(f"{b}.ln_p2i_kv", img)
            tsk = T.add(tsk, self._attend(f"{b}.p2i", self._ln(f"{b}.ln_p2i_q", tsk), kv_img))
            if pcl is not None:
                pcl = T.add(pcl, self._attend(f"{b}.p2i", self._ln(f"{b}.ln_p2i_q", pcl), kv_img))
            # the image reads task prompts only
            img = T.add(
                img,
                self._attend(f"{b}.i2p", self._ln(f"{b}.ln_i2p_q", img), self._ln(f"{b}.ln_i2p_kv", tsk)),
            )
            tsk = T.add(tsk, self._mlp(f"{b}.mlp", self._ln(f"{b}.ln_mlp", tsk)))
            img = T.add(img, self._mlp(f"{b}.mlp", self._ln(f"{b}.ln_mlp", img)))
            if pcl is not None:
                pcl = T.add(pcl, self._mlp(f"{b}.mlp", self._ln(f"{b}.ln_mlp", pcl)))
        return img, tsk, pcl

    # -- heads ---------------------------------------------------------------

    def _dense_head(self, head: str, image_tokens: Tensor) -> Tensor:
        p = self.params
        cfg = self.config
        g, ps = cfg.grid, cfg.patch_size
        hw = cfg.image_crop
        x = self._ln(f"head.{head}.ln", image_tokens)
        fold = T.add(T.matmul(x, p[f"head.{head}.fold.w"]), p[f"head.{head}.fold.b"])
        fold = T.reshape(fold, (g, g, ps, ps, _C_FOLD))
        fold = T.reshape(T.transpose(fold, (0, 2, 1, 3, 4)), (hw, hw, _C_FOLD))
        coarse = T.add(T.matmul(x, p[f"head.{head}.coarse.w"]), p[f"head.{head}.coarse.b"])
        coarse = T.upsample_nearest(T.reshape(coarse, (g, g, _C_COARSE)), ps)
        y = T.concat([fold, coarse], axis=2)
        y = T.relu(T.conv2d(y, p[f"head.{head}.conv1.w"], p[f"head.{head}.conv1.b"]))
        return T.conv2d(y, p[f"head.{head}.conv2.w"], p[f"head.{head}.conv2.b"])

    def seg_head(self, image_tokens: Tensor) -> Tensor:
        return self._dense_head("seg", image_tokens)

    def det_head(self, image_tokens: Tensor) -> Tensor:
        # the head works in units of the single-point kernel peak, so its
        # logits live in a friendly O(1) range; outputs are absolute density
        hw = self.config.image_crop
        rel = T.softplus(self._dense_head("det", image_tokens))
        return T.reshape(T.scale(rel, DENSITY_PEAK_VALUE), (hw, hw))

    def project_embedding(self, tokens: Tensor) -> Tensor:
        p = self.params
        x = self._ln("proj.ln", tokens)
        h = T.gelu(T.add(T.matmul(x, p["proj.w1"]), p["proj.b1"]))
        z = T.add(T.matmul(h, p["proj.w2"]), p["proj.b2"])
        norm = T.power(T.add(T.sum_(T.mul(z, z), axis=-1, keepdims=True), Tensor(1e-24)), 0.5)
        return T.div(z, norm)

    # -- full pass -----------------------------------------------------------

    def forward(self, image, prompts: list[PointPrompt] | None = None) -> ModelOutput:
        prompts = prompts or []
        task_prompts = [p for p in prompts if p.role == "task-prompt"]
        pcl_prompts = [p for p in prompts if p.role != "task-prompt"]
        img_tok = self.encode_image(image)
        task_tok = self.encode_prompts(task_prompts)
        pcl_tok = self.encode_prompts(pcl_prompts, allow_empty=True)
        n_p = 0 if pcl_tok is None else pcl_tok.shape[0]
        mask = build_attention_mask(task_tok.shape[0], n_p, img_tok.shape[0])
        img_ref, task_ref, pcl_ref = self.decode(img_tok, task_tok, pcl_tok, mask)
        return ModelOutput(
            seg_logits=self.seg_head(img_ref),
            density=self.det_head(img_ref),
            image_tokens=img_ref,
            task_tokens=task_ref,
            pcl_tokens=pcl_ref,
            task_prompts=task_prompts,
            pcl_prompts=pcl_prompts,
        )

    def zero_grads(self) -> None:
        for t in self.params.values():
            t.grad = None
