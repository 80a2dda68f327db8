"""LSTM layers, parameter layout, initialization and checkpoints."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from . import tensor as T
from .errors import DataError, ShapeError

GATES = ("i", "f", "o", "g")
MODELS = ("lstm", "luong", "tpa")
ATTEND_AXES = ("position", "filter", "without-cnn")
ACTIVATIONS = ("sigmoid", "softmax")
INTEGRATIONS = ("scored", "concat")

CHECKPOINT_FORMAT = "tpa-forecast-checkpoint"
CHECKPOINT_VERSION = 1
INIT_SCHEME = "uniform(+-1/sqrt(fan_in)); biases 0; forget bias 1"


@dataclass(frozen=True)
class AttentionMode:
    attend: str = "position"
    activation: str = "sigmoid"
    integration: str = "scored"

    def __post_init__(self):
        if self.attend not in ATTEND_AXES:
            raise ValueError(f"unknown attend axis {self.attend!r}; expected one of {ATTEND_AXES}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}; expected one of {ACTIVATIONS}")
        if self.integration not in INTEGRATIONS:
            raise ValueError(f"unknown integration {self.integration!r}; expected one of {INTEGRATIONS}")

    @classmethod
    def parse(cls, text: str) -> AttentionMode:
        """Parse ``activation/axis`` cell names such as ``sigmoid/position``.

        ``concat`` (optionally ``concat/<axis>``) selects the concatenation
        integration, which has no scoring step.
        """
        parts = text.strip().lower().split("/")
        if parts[0] == "concat":
            attend = parts[1] if len(parts) > 1 else "position"
            return cls(attend=attend, activation="sigmoid", integration="concat")
        if len(parts) != 2:
            raise ValueError(f"attention mode must look like 'sigmoid/position', got {text!r}")
        return cls(attend=parts[1], activation=parts[0], integration="scored")

    @property
    def name(self) -> str:
        if self.integration == "concat":
            return "concat"
        return f"{self.activation}/{self.attend}"

    @property
    def uses_cnn(self) -> bool:
        return self.integration == "scored" and self.attend != "without-cnn"


@dataclass(frozen=True)
class ModelConfig:
    n_series: int
    window: int
    hidden: int = 32
    layers: int = 1
    model: str = "tpa"
    attend: str = "position"
    activation: str = "sigmoid"
    integration: str = "scored"
    filters: int = 32
    filter_len: int = 0
    ar_window: int = 0
    bias: bool = True
    output: str = "linear"

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}; expected one of {MODELS}")
        for name in ("n_series", "window", "hidden", "layers", "filters"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.filter_len < 0 or self.filter_len > self.window:
            raise ValueError(f"filter_len must lie in [1, window]; got {self.filter_len}")
        if self.ar_window < 0 or self.ar_window > self.window:
            raise ValueError(f"ar_window {self.ar_window} must lie in [0, window={self.window}]")
        if self.output not in ("linear", "sigmoid"):
            raise ValueError(f"unknown output {self.output!r}")
        self.mode  # validates the attention fields

    @property
    def mode(self) -> AttentionMode:
        return AttentionMode(self.attend, self.activation, self.integration)

    @property
    def span(self) -> int:
        """Filter length T (defaults to the window length)."""
        return self.filter_len or self.window

    @property
    def has_filters(self) -> bool:
        return self.model == "tpa" and self.mode.uses_cnn

    def replace(self, **changes) -> ModelConfig:
        return ModelConfig(**{**asdict(self), **changes})

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> ModelConfig:
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in data.items() if k in known})


def param_shapes(config: ModelConfig) -> dict:
    """Canonical parameter names mapped to their shapes, in init order."""
    m, d, w = config.hidden, config.n_series, config.window
    shapes = {}
    n_in = d
    for layer in range(config.layers):
        for g in GATES:
            shapes[f"layer{layer}/W_x{g}"] = (m, n_in)
        for g in GATES:
            shapes[f"layer{layer}/W_h{g}"] = (m, m)
        if config.bias:
            for g in GATES:
                shapes[f"layer{layer}/b_{g}"] = (m,)
        n_in = m

    if config.model == "lstm":
        shapes["head/W_out"] = (d, m)
    elif config.model == "luong":
        shapes["attn/W"] = (m, m)
        shapes["head/W_h"] = (m, m)
        shapes["head/W_v"] = (m, m)
        shapes["head/W_hprime"] = (d, m)
    else:
        mode = config.mode
        k = config.filters
        if mode.integration == "concat":
            shapes["head/W_h"] = (m, m)
            shapes["head/W_c"] = (m, m * w)
        else:
            if mode.attend == "position":
                shapes["attn/filters"] = (k, config.span)
                shapes["attn/W_a"] = (k, m)
                v_len = k
            elif mode.attend == "filter":
                shapes["attn/filters"] = (k, config.span)
                shapes["attn/W_a"] = (m, m)
                v_len = m
            else:
                shapes["attn/W_a"] = (w, m)
                v_len = w
            shapes["head/W_h"] = (m, m)
            shapes["head/W_v"] = (m, v_len)
        shapes["head/W_hprime"] = (d, m)

    if config.ar_window > 0:
        shapes["ar/W"] = (d, config.ar_window)
        shapes["ar/b"] = (d,)
    return shapes


def init_params(config: ModelConfig, seed: int) -> dict:
    """Deterministic parameters: matrices uniform in +-1/sqrt(fan_in).

    Biases start at zero except forget-gate biases, which start at one.
    """
    rng = np.random.default_rng(seed)
    params = {}
    for name, shape in param_shapes(config).items():
        if len(shape) == 1:
            value = np.ones(shape) if name.endswith("/b_f") else np.zeros(shape)
        else:
            bound = 1.0 / math.sqrt(shape[-1])
            value = rng.uniform(-bound, bound, size=shape)
        params[name] = value
    return params


def param_count(params) -> int:
    """Total number of scalars in a parameter mapping (or a config's layout)."""
    if isinstance(params, ModelConfig):
        return sum(int(np.prod(s)) for s in param_shapes(params).values())
    return sum(int(np.asarray(getattr(v, "value", v)).size) for v in params.values())


# ---------------------------------------------------------------------------
# LSTM


def linear(weight, x):
    """``weight @ x`` for a vector ``x`` or a batch of row vectors (..., q)."""
    weight = T.as_tensor(weight)
    x = T.as_tensor(x)
    if weight.ndim != 2 or x.shape[-1] != weight.shape[1]:
        raise ShapeError(f"linear: weight {weight.shape} cannot map input {x.shape}")
    if x.ndim == 1:
        return T.reshape(T.matmul(weight, T.reshape(x, (-1, 1))), (weight.shape[0],))
    return T.matmul(x, T.transpose(weight))


def _gate(params, layer, g, x, h):
    z = linear(params[f"{layer}W_x{g}"], x) + linear(params[f"{layer}W_h{g}"], h)
    bias = params.get(f"{layer}b_{g}")
    return z if bias is None else z + bias


def lstm_cell_step(params, x_t, h_prev, c_prev, prefix=""):
    """One LSTM step from explicit gate equations.

    ``params`` maps ``W_xi .. W_hg`` (and optionally ``b_i .. b_g``) to
    tensors, with an optional name ``prefix`` such as ``"layer0/"``.
    Returns ``(h_t, c_t)``.
    """
    m = T.as_tensor(params[f"{prefix}W_hi"]).shape[0]
    if h_prev.shape[-1] != m or c_prev.shape[-1] != m:
        raise ShapeError(f"lstm_cell_step: state widths {h_prev.shape}, {c_prev.shape} != hidden {m}")
    i = T.sigmoid(_gate(params, prefix, "i", x_t, h_prev))
    f = T.sigmoid(_gate(params, prefix, "f", x_t, h_prev))
    o = T.sigmoid(_gate(params, prefix, "o", x_t, h_prev))
    g = T.tanh(_gate(params, prefix, "g", x_t, h_prev))
    c_t = f * c_prev + i * g
    h_t = o * T.tanh(c_t)
    return h_t, c_t


def stacked_gate_weights(params, layer: int):
    """Concatenate per-gate weights into the fused ``(4m, .)`` layout."""
    pre = f"layer{layer}/"
    wx = T.concat([params[f"{pre}W_x{g}"] for g in GATES], axis=0)
    wh = T.concat([params[f"{pre}W_h{g}"] for g in GATES], axis=0)
    if f"{pre}b_i" in params:
        b = T.concat([params[f"{pre}b_{g}"] for g in GATES], axis=0)
    else:
        b = T.Tensor(np.zeros(wh.shape[0]))
    return wx, wh, b


def num_layers(params) -> int:
    return len({name.split("/")[0] for name in params if name.startswith("layer")})


def lstm_stack_forward(params, window):
    """Run the LSTM stack over a window (n, w) or batch of windows (B, n, w).

    Returns ``(H, finals)``: ``H`` holds the top layer's hidden state per
    step as columns, shape (m, w) or (B, m, w); ``finals`` lists the final
    ``(h, c)`` of every layer.
    """
    x = T.as_tensor(window)
    squeeze = x.ndim == 2
    if squeeze:
        x = T.reshape(x, (1,) + x.shape)
    if x.ndim != 3 or x.shape[2] < 1:
        raise ShapeError(f"lstm_stack_forward: window must be (n, w) or (B, n, w), got {x.shape}")
    finals = []
    for layer in range(num_layers(params)):
        wx, wh, b = stacked_gate_weights(params, layer)
        if wx.shape[1] != x.shape[1]:
            raise ShapeError(
                f"lstm_stack_forward: layer {layer} expects input width {wx.shape[1]}, got {x.shape[1]}"
            )
        x, c_last = T.lstm_layer(x, wx, wh, b)
        finals.append((T.take(x, (Ellipsis, -1)), c_last))
    if squeeze:
        x = T.reshape(x, x.shape[1:])
        finals = [(T.reshape(h, h.shape[1:]), T.Tensor(c.value[0])) for h, c in finals]
    return x, finals


# ---------------------------------------------------------------------------
# checkpoints


def save_checkpoint(path, params: dict, config: ModelConfig, extra: dict | None = None):
    """Write a versioned JSON checkpoint.

    Layout: ``{"format", "version", "config", "extra", "params"}`` where
    ``params`` maps canonical names (``layer0/W_xi``) to
    ``{"shape": [...], "values": [...]}`` in row-major order. Floats are
    written with ``repr`` precision, so a load reproduces them exactly.
    """
    doc = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "config": config.to_dict(),
        "extra": extra or {},
        "params": {
            name: {"shape": list(np.shape(v)), "values": np.asarray(v, dtype=np.float64).ravel().tolist()}
            for name, v in params.items()
        },
    }
    Path(path).write_text(json.dumps(doc))


def load_checkpoint(path):
    """Return ``(params, config, extra)`` from :func:`save_checkpoint` output."""
    try:
        doc = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise DataError(f"checkpoint not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"checkpoint {path} is not valid JSON: {exc}") from None
    if doc.get("format") != CHECKPOINT_FORMAT:
        raise DataError(f"{path}: not a {CHECKPOINT_FORMAT} file")
    if doc.get("version") != CHECKPOINT_VERSION:
        raise DataError(f"{path}: unsupported checkpoint version {doc.get('version')}")
    config = ModelConfig.from_dict(doc["config"])
    params = {}
    for name, entry in doc["params"].items():
        params[name] = np.asarray(entry["values"], dtype=np.float64).reshape(entry["shape"])
    expected = param_shapes(config)
    if set(expected) != set(params) or any(tuple(params[k].shape) != expected[k] for k in expected):
        raise ShapeError(f"{path}: parameters do not match the stored model config")
    return params, config, doc.get("extra", {})
