"""Differentiable training objectives built on the autodiff tensor."""

from __future__ import annotations

import numpy as np

from ..backbone import tensor as T
from ..backbone.tensor import Tensor


def _scalar(value: float) -> Tensor:
    return Tensor(np.float64(value))


def _per_domain_mean(terms: list[Tensor]) -> Tensor | None:
    if not terms:
        return None
    total = terms[0]
    for t in terms[1:]:
        total = T.add(total, t)
    return T.scale(total, 1.0 / len(terms))


def _sum_domains(parts: list[Tensor | None]) -> Tensor:
    live = [p for p in parts if p is not None]
    if not live:
        return _scalar(0.0)
    total = live[0]
    for p in live[1:]:
        total = T.add(total, p)
    return total


def loss_det(
    source: list[tuple[Tensor, np.ndarray]],
    target: list[tuple[Tensor, np.ndarray]],
) -> Tensor:
    """Pixel-mean squared error against density targets, averaged per domain
    and summed across domains."""

    def sample_term(pred: Tensor, tgt: np.ndarray) -> Tensor:
        diff = T.sub(pred, Tensor(np.asarray(tgt, dtype=np.float64)))
        return T.mean(T.mul(diff, diff))

    src = _per_domain_mean([sample_term(p, t) for p, t in source])
    tgt = _per_domain_mean([sample_term(p, t) for p, t in target])
    return _sum_domains([src, tgt])


def ce_term(logits: Tensor, labels: np.ndarray, ignore: np.ndarray | None) -> Tensor | None:
    """Cross-entropy over retained pixels of one image, as their mean.

    Returns None when every pixel is ignored.
    """
    h, w, k = logits.data.shape
    lab = np.asarray(labels)
    keep = np.ones((h, w), dtype=np.float64)
    if ignore is not None:
        keep = (~np.asarray(ignore, dtype=bool)).astype(np.float64)
    denom = keep.sum()
    if denom == 0:
        return None
    onehot = np.zeros((h, w, k), dtype=np.float64)
    rr, cc = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    onehot[rr, cc, lab] = 1.0
    weight = onehot * keep[:, :, None]
    logp = T.log(T.softmax(logits, axis=-1))
    picked = T.sum_(T.mul(logp, Tensor(weight)))
    return T.scale(picked, -1.0 / denom)


def loss_seg(
    source: list[tuple[Tensor, np.ndarray]],
    target: list[tuple[Tensor, np.ndarray, np.ndarray]],
) -> Tensor:
    """Cross-entropy segmentation loss. Source images use dense labels; target
    images use pseudo-labels with an ignore mask. Per-domain sample mean,
    domains summed."""
    src_terms = []
    for logits, labels in source:
        t = ce_term(logits, labels, None)
        if t is not None:
            src_terms.append(t)
    tgt_terms = []
    for logits, labels, ignore in target:
        t = ce_term(logits, labels, ignore)
        if t is not None:
            tgt_terms.append(t)
    return _sum_domains([_per_domain_mean(src_terms), _per_domain_mean(tgt_terms)])


def prototype(z_sparse: Tensor) -> Tensor:
    """Unit-norm mean of the sparse-prompt embeddings (foreground prototype)."""
    if z_sparse.data.ndim != 2 or z_sparse.data.shape[0] == 0:
        raise ValueError(
            f"prototype needs a non-empty (N, D) embedding matrix, got {z_sparse.data.shape}"
        )
    mu = T.mean(z_sparse, axis=0)
    norm = T.power(T.add(T.sum_(T.mul(mu, mu)), _scalar(1e-24)), 0.5)
    return T.div(mu, norm)


def loss_pcl(z_queries: Tensor, z_sparse: Tensor, z_negatives: Tensor, tau: float) -> Tensor:
    """InfoNCE pulling query embeddings toward the sparse-prompt prototype and
    away from background embeddings.

    All inputs are L2-normalized (N, D) matrices. For each query the positive
    logit is sim(query, prototype) and the negative logits are sim(query, each
    negative); the loss is the summed cross-entropy of picking the positive.
    """
    nq = z_queries.data.shape[0]
    nn = z_negatives.data.shape[0]
    if nq == 0:
        raise ValueError("loss_pcl needs at least one query embedding")
    if nn == 0:
        raise ValueError("loss_pcl needs at least one negative embedding")
    mu = prototype(z_sparse)
    pos = T.matmul(z_queries, T.reshape(mu, (mu.data.shape[0], 1)))  # (Nq, 1)
    neg = T.matmul(z_queries, T.transpose(z_negatives, (1, 0)))  # (Nq, Nn)
    logits = T.scale(T.concat([pos, neg], axis=1), 1.0 / tau)
    logp = T.log(T.softmax(logits, axis=-1))
    first_col = T.slice_(logp, (slice(None), slice(0, 1)))
    return T.scale(T.sum_(first_col), -1.0)
