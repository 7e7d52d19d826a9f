"""Batched layer kernels with hand-written backward passes.

Every function works on float64 arrays with the batch on axis 0. Forward
functions return ``(output, cache)``; the matching ``*_backward`` takes the
upstream gradient and the cache.
"""

from __future__ import annotations

import numpy as np

from ..graph import SparseGraph, adjacency_matvec


def aggregate(graph: SparseGraph, hops: int, weighted: bool = True) -> np.ndarray:
    """Hop aggregation from an all-ones start: ``h <- h + A h`` repeated ``hops`` times.

    With ``weighted=False`` the neighbor sum ignores edge weights and the
    sign convention, i.e. each node adds the plain values of all nodes it
    shares an edge with.
    """
    if hops < 1:
        raise ValueError("hops must be >= 1")
    h = np.ones(graph.n)
    if weighted:
        for _ in range(hops):
            h = h + adjacency_matvec(graph, h)
        return h
    r, c = graph.rows(), graph.col_idx
    for _ in range(hops):
        nb = np.bincount(r, weights=h[c], minlength=graph.n)
        nb += np.bincount(c, weights=h[r], minlength=graph.n)
        h = h + nb
    return h


def node_scale(h, theta):
    h = np.asarray(h)
    if h.shape[-1] != theta.shape[-1]:
        raise ValueError(f"node_scale: length {h.shape[-1]} vs theta {theta.shape[-1]}")
    return h * theta, h


def node_scale_backward(dout, h, theta):
    dtheta = (dout * h).reshape(-1, theta.shape[-1]).sum(axis=0)
    return dout * theta, dtheta


def relu(x):
    mask = x > 0
    return x * mask, mask


def relu_backward(dout, mask):
    return dout * mask


def conv1d(x, w, b):
    """Length-preserving cross-correlation with zero padding ``(k-1)//2`` each side.

    x: (B, C_in, L); w: (C_out, C_in, k) with odd k; b: (C_out,).
    """
    if x.ndim != 3:
        raise ValueError(f"conv1d expects (batch, channels, length), got shape {x.shape}")
    c_out, c_in, k = w.shape
    if x.shape[1] != c_in:
        raise ValueError(f"conv1d: input has {x.shape[1]} channels, kernel expects {c_in}")
    if k % 2 != 1:
        raise ValueError("conv1d: kernel size must be odd")
    if b.shape != (c_out,):
        raise ValueError(f"conv1d: bias shape {b.shape} != ({c_out},)")
    p = (k - 1) // 2
    xp = np.pad(x, ((0, 0), (0, 0), (p, p)))
    # (B, C_in, L, k) view of every receptive field
    cols = np.lib.stride_tricks.sliding_window_view(xp, k, axis=2)
    out = np.tensordot(cols, w, axes=([1, 3], [1, 2]))  # (B, L, C_out)
    out = out.transpose(0, 2, 1) + b[None, :, None]
    return np.ascontiguousarray(out), (cols, x.shape, w)


def conv1d_backward(dout, cache):
    cols, x_shape, w = cache
    c_out, c_in, k = w.shape
    p = (k - 1) // 2
    length = x_shape[2]
    dw = np.tensordot(dout, cols, axes=([0, 2], [0, 2]))  # (C_out, C_in, k)
    db = dout.sum(axis=(0, 2))
    dxp = np.zeros((x_shape[0], c_in, length + 2 * p))
    for t in range(k):
        # out[b, o, l] uses xp[b, c, l + t] * w[o, c, t]
        dxp[:, :, t:t + length] += np.einsum("bol,oc->bcl", dout, w[:, :, t])
    return dxp[:, :, p:p + length], dw, db


def maxpool2(x):
    """Non-overlapping width-2 max pooling along the last axis.

    An odd trailing element is dropped. Ties route the gradient to the first
    element of the pair.
    """
    length = x.shape[-1]
    even = length - (length % 2)
    pairs = x[..., :even].reshape(*x.shape[:-1], even // 2, 2)
    pick = np.argmax(pairs, axis=-1)
    out = np.take_along_axis(pairs, pick[..., None], axis=-1)[..., 0]
    return out, (pick, x.shape)


def maxpool2_backward(dout, cache):
    pick, x_shape = cache
    length = x_shape[-1]
    even = length - (length % 2)
    dpairs = np.zeros((*x_shape[:-1], even // 2, 2))
    np.put_along_axis(dpairs, pick[..., None], dout[..., None], axis=-1)
    dx = np.zeros(x_shape)
    dx[..., :even] = dpairs.reshape(*x_shape[:-1], even)
    return dx


def dense(x, w, b):
    """Affine map ``x @ w + b``; inputs with more than two axes are flattened."""
    x2 = x.reshape(x.shape[0], -1)
    if x2.shape[1] != w.shape[0]:
        raise ValueError(f"dense: input width {x2.shape[1]} vs weight rows {w.shape[0]}")
    if b.shape != (w.shape[1],):
        raise ValueError(f"dense: bias shape {b.shape} != ({w.shape[1]},)")
    return x2 @ w + b, (x2, x.shape, w)


def dense_backward(dout, cache):
    x2, x_shape, w = cache
    return (dout @ w.T).reshape(x_shape), x2.T @ dout, dout.sum(axis=0)


def softmax(logits):
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_cross_entropy(logits, labels):
    """Mean negative log-likelihood of ``labels`` under ``softmax(logits)``.

    Accepts a single logit vector with an integer label, or a batch.
    Returns ``(loss, dlogits)`` where ``dlogits = (softmax - onehot) / B``.
    """
    logits = np.asarray(logits, dtype=np.float64)
    single = logits.ndim == 1
    if single:
        logits = logits[None, :]
    labels = np.atleast_1d(np.asarray(labels))
    batch, c = logits.shape
    if c < 2:
        raise ValueError("need at least 2 classes")
    if np.any(labels < 0) or np.any(labels >= c):
        raise ValueError(f"label out of range for {c} classes")
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1))
    idx = np.arange(batch)
    loss = float(np.mean(log_norm - shifted[idx, labels]))
    grad = np.exp(shifted - log_norm[:, None])
    grad[idx, labels] -= 1.0
    grad /= batch
    return loss, (grad[0] if single else grad)
