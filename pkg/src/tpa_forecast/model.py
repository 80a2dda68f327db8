"""Forward pass for every model variant."""

from __future__ import annotations

from . import tensor as T
from .attention import ablation_attend, luong_attention, temporal_conv, tpa_output
from .errors import ShapeError
from .layers import ModelConfig, lstm_stack_forward


def ar_forecast(window, W, b):
    """Per-series linear term over the last ``q`` steps of each row.

    ``window`` is (..., D, w), ``W`` is (D, q) and ``b`` is (D,).
    """
    window, W = T.as_tensor(window), T.as_tensor(W)
    q, w = W.shape[-1], window.shape[-1]
    if q > w:
        raise ShapeError(f"ar_forecast: AR window {q} exceeds input window {w}")
    if W.shape[0] != window.shape[-2]:
        raise ShapeError(f"ar_forecast: weights {W.shape} do not match {window.shape[-2]} series")
    recent = T.take(window, (Ellipsis, slice(w - q, None)))
    return T.reduce_sum(recent * W, axis=-1) + b


def forecast(params: dict, config: ModelConfig, windows):
    """Predict targets for windows of shape (D, w) or (B, D, w).

    ``params`` maps canonical names to tensors (taped or not) or arrays.
    """
    x = T.as_tensor(windows)
    squeeze = x.ndim == 2
    if squeeze:
        x = T.reshape(x, (1,) + x.shape)
    if x.shape[1:] != (config.n_series, config.window):
        raise ShapeError(
            f"forecast: expected windows (B, {config.n_series}, {config.window}), got {x.shape}"
        )
    H, _ = lstm_stack_forward(params, x)
    h_t = T.take(H, (Ellipsis, -1))

    if config.model == "lstm":
        y = T.matmul(h_t, T.transpose(params["head/W_out"]))
    elif config.model == "luong":
        v = luong_attention(H, h_t, params["attn/W"])
        y = tpa_output(h_t, v, params["head/W_h"], params["head/W_v"], params["head/W_hprime"])
    else:
        mode = config.mode
        HC = temporal_conv(H, params["attn/filters"]) if mode.uses_cnn else None
        v = ablation_attend(H, HC, h_t, mode, params)
        if mode.integration == "concat":
            h_prime = T.matmul(h_t, T.transpose(params["head/W_h"])) + v
            y = T.matmul(h_prime, T.transpose(params["head/W_hprime"]))
        else:
            y = tpa_output(h_t, v, params["head/W_h"], params["head/W_v"], params["head/W_hprime"])

    if config.ar_window > 0:
        y = y + ar_forecast(x, params["ar/W"], params["ar/b"])
    if config.output == "sigmoid":
        y = T.sigmoid(y)
    if squeeze:
        y = T.reshape(y, y.shape[1:])
    return y
