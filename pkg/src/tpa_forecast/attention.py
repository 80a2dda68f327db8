"""Temporal pattern attention, the Luong baseline and ablation variants.

Hidden-state histories are laid out as ``H`` with shape (..., m, w): one
row per hidden feature, one column per time step. The attended query
``h_t`` is the last column of ``H``.
"""

from __future__ import annotations

import numpy as np

from . import tensor as T
from .errors import ShapeError
from .layers import AttentionMode


def temporal_conv(H, filters):
    """Row-wise convolution of ``H`` with ``k`` filters of length ``T <= w``.

    ``HC[..., i, j] = sum_l H[..., i, l] * filters[j, T - w + l]`` where
    filter positions before the first index contribute nothing, so the
    filters align with the trailing ``T`` steps of the window.
    """
    return T.temporal_conv(H, filters)


def _column(v):
    return T.reshape(v, v.shape + (1,))


def _drop_last(v):
    return T.reshape(v, v.shape[:-1])


def score(rows, h_t, W_a):
    """Bilinear relevance ``rows_i^T W_a h_t`` for every row of ``rows``.

    ``rows`` is (..., r, k), ``h_t`` is (..., m) and ``W_a`` is (k, m);
    returns (..., r).
    """
    rows, h_t, W_a = T.as_tensor(rows), T.as_tensor(h_t), T.as_tensor(W_a)
    if W_a.shape != (rows.shape[-1], h_t.shape[-1]):
        raise ShapeError(f"score: W_a {W_a.shape} does not map h_t {h_t.shape} onto rows {rows.shape}")
    query = T.matmul(W_a, _column(h_t))
    return _drop_last(T.matmul(rows, query))


def attention_weights(scores, activation: str):
    if activation == "sigmoid":
        return T.sigmoid(scores)
    if activation == "softmax":
        return T.softmax(scores)
    raise ValueError(f"unknown activation {activation!r}")


def context_vector(weights, rows):
    """Weighted sum of ``rows`` (..., r, k) by ``weights`` (..., r)."""
    weights, rows = T.as_tensor(weights), T.as_tensor(rows)
    if weights.shape[-1] != rows.shape[-2]:
        raise ShapeError(f"context_vector: {weights.shape[-1]} weights for {rows.shape[-2]} rows")
    w_row = T.reshape(weights, weights.shape[:-1] + (1, weights.shape[-1]))
    out = T.matmul(w_row, rows)
    return T.reshape(out, out.shape[:-2] + (out.shape[-1],))


def _apply_rows(W, v):
    """``W @ v`` for v of shape (q,) or (..., q); returns (p,) or (..., p)."""
    v = T.as_tensor(v)
    if v.ndim == 1:
        return _drop_last(T.matmul(T.as_tensor(W), _column(v)))
    return T.matmul(v, T.transpose(T.as_tensor(W)))


def tpa_output(h_t, v_t, W_h, W_v, W_hprime):
    """``y = W_hprime (W_h h_t + W_v v_t)``."""
    h_prime = _apply_rows(W_h, h_t) + _apply_rows(W_v, v_t)
    return _apply_rows(W_hprime, h_prime)


def luong_attention(H, h_t, W):
    """Softmax attention over the columns of ``H`` with score ``h_i^T W h_t``."""
    H = T.as_tensor(H)
    alpha = T.softmax(score(T.transpose(H), h_t, W))
    return context_vector(alpha, T.transpose(H))


def ablation_attend(H, HC, h_t, mode: AttentionMode, params):
    """Context vector for one of the ablation variants.

    ``position`` attends over rows of ``HC`` (the default), ``filter`` over
    its columns and ``without-cnn`` over rows of ``H``. The ``concat``
    integration skips scoring and returns ``W_c vec(H)``, which is added to
    ``W_h h_t`` in place of ``W_v v_t``.
    """
    if mode.integration == "concat":
        H = T.as_tensor(H)
        flat = T.reshape(H, H.shape[:-2] + (H.shape[-2] * H.shape[-1],))
        return _apply_rows(params["head/W_c"], flat)
    if mode.attend == "position":
        rows = HC
    elif mode.attend == "filter":
        rows = T.transpose(HC)
    else:
        rows = H
    alpha = attention_weights(score(rows, h_t, params["attn/W_a"]), mode.activation)
    return context_vector(alpha, rows)


def export_filters(path, filters):
    """Write CNN filters to CSV, one filter per row."""
    np.savetxt(path, np.atleast_2d(np.asarray(filters, dtype=np.float64)), delimiter=",", fmt="%.17g")


def load_filters(path) -> np.ndarray:
    return np.atleast_2d(np.loadtxt(path, delimiter=",", dtype=np.float64))
