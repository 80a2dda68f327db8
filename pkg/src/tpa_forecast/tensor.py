"""Dense float64 tensors with an explicit reverse-mode tape.

A :class:`Tape` is created per training step. Leaves are registered with
:meth:`Tape.leaf`; every primitive applied to a tape-bound tensor is recorded
on that tape. Tensors without a tape evaluate the same forward math and
record nothing, which is how inference runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from ._lstm_py import sigmoid as _sigmoid
from .errors import GradientError, ShapeError, UnknownPrimitiveError


class Tensor:
    __slots__ = ("value", "tape", "node")
    # make ``ndarray op Tensor`` defer to the reflected Tensor operators
    __array_ufunc__ = None

    def __init__(self, value, tape: Tape | None = None, node: int | None = None):
        self.value = np.asarray(value, dtype=np.float64)
        self.tape = tape
        self.node = node

    @property
    def shape(self):
        return self.value.shape

    @property
    def ndim(self):
        return self.value.ndim

    def numpy(self):
        return self.value

    def __float__(self):
        return float(self.value)

    def __repr__(self):
        tag = "" if self.node is None else f", node={self.node}"
        return f"Tensor(shape={self.shape}{tag})"

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        if np.isscalar(other):
            return scale(self, float(other))
        return mul(self, other)

    def __rmul__(self, other):
        return self.__mul__(other)

    def __neg__(self):
        return scale(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, index):
        return take(self, index)

    @property
    def T(self):
        return transpose(self)


@dataclass
class Record:
    kind: str
    inputs: tuple
    output: int
    attrs: dict
    saved: dict
    values: tuple
    out: np.ndarray


@dataclass
class Tape:
    """Ordered log of primitive applications.

    Node ids are assigned in creation order, so records are topologically
    sorted by construction.
    """

    records: list = field(default_factory=list)
    shapes: list = field(default_factory=list)

    def _new_node(self, shape):
        self.shapes.append(tuple(shape))
        return len(self.shapes) - 1

    def leaf(self, value) -> Tensor:
        value = value.value if isinstance(value, Tensor) else value
        arr = np.asarray(value, dtype=np.float64)
        return Tensor(arr, self, self._new_node(arr.shape))

    def __len__(self):
        return len(self.records)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _unbroadcast(grad, shape):
    """Sum ``grad`` down to ``shape`` after numpy broadcasting."""
    shape = tuple(shape)
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _swap(a):
    return np.swapaxes(a, -1, -2)


# ---------------------------------------------------------------------------
# primitive table: kind -> (check, forward, vjp)
#   check(shapes, attrs) raises ShapeError
#   forward(values, attrs) -> (output, saved)
#   vjp(g, values, out, saved, attrs) -> list of input gradients (None = skip)


def _check_broadcast(kind):
    def check(shapes, attrs):
        try:
            np.broadcast_shapes(*shapes)
        except ValueError:
            raise ShapeError(f"{kind}: cannot broadcast shapes {shapes[0]} and {shapes[1]}") from None

    return check


def _check_matmul(shapes, attrs):
    a, b = shapes
    if len(a) < 2 or len(b) < 2:
        raise ShapeError(f"matmul: operands must be at least 2-D, got {a} and {b}")
    if a[-1] != b[-2]:
        raise ShapeError(f"matmul: inner extents differ, {a} @ {b}")
    try:
        np.broadcast_shapes(a[:-2], b[:-2])
    except ValueError:
        raise ShapeError(f"matmul: batch extents differ, {a} @ {b}") from None


def _vjp_matmul(g, vals, out, saved, attrs):
    a, b = vals
    return [_unbroadcast(g @ _swap(b), a.shape), _unbroadcast(_swap(a) @ g, b.shape)]


def _vjp_add(g, vals, out, saved, attrs):
    return [_unbroadcast(g, vals[0].shape), _unbroadcast(g, vals[1].shape)]


def _vjp_sub(g, vals, out, saved, attrs):
    return [_unbroadcast(g, vals[0].shape), _unbroadcast(-g, vals[1].shape)]


def _vjp_mul(g, vals, out, saved, attrs):
    a, b = vals
    return [_unbroadcast(g * b, a.shape), _unbroadcast(g * a, b.shape)]


def _check_unary(kind):
    def check(shapes, attrs):
        if len(shapes) != 1:
            raise ShapeError(f"{kind}: expects one operand, got {len(shapes)}")

    return check


def _softmax(x):
    z = x - x.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def _vjp_softmax(g, vals, out, saved, attrs):
    return [out * (g - (g * out).sum(axis=-1, keepdims=True))]


def _check_softmax(shapes, attrs):
    if len(shapes[0]) < 1 or shapes[0][-1] < 1:
        raise ShapeError(f"softmax: needs a non-empty last axis, got {shapes[0]}")


def _check_conv(shapes, attrs):
    h, f = shapes
    if len(h) < 2 or len(f) != 2:
        raise ShapeError(f"temporal_conv: expects H (..., m, w) and filters (k, T), got {h} and {f}")
    if f[1] > h[-1]:
        raise ShapeError(f"temporal_conv: filter length {f[1]} exceeds window {h[-1]} ({h} vs {f})")


def _fwd_conv(vals, attrs):
    h, f = vals
    span = f.shape[1]
    return h[..., h.shape[-1] - span :] @ f.T, {}


def _vjp_conv(g, vals, out, saved, attrs):
    h, f = vals
    span = f.shape[1]
    tail = h[..., h.shape[-1] - span :]
    gh = np.zeros_like(h)
    gh[..., h.shape[-1] - span :] = g @ f
    gf = (_swap(g) @ tail).reshape(-1, *f.shape).sum(axis=0)
    return [gh, gf]


def _check_concat(shapes, attrs):
    axis = attrs["axis"]
    ref = shapes[0]
    nd = len(ref)
    ax = axis % nd if nd else 0
    for s in shapes[1:]:
        if len(s) != nd or any(s[i] != ref[i] for i in range(nd) if i != ax):
            raise ShapeError(f"concat: shapes {ref} and {s} differ off axis {axis}")


def _fwd_concat(vals, attrs):
    axis = attrs["axis"]
    sizes = [v.shape[axis] for v in vals]
    return np.concatenate(vals, axis=axis), {"bounds": np.cumsum([0] + sizes)}


def _vjp_concat(g, vals, out, saved, attrs):
    axis = attrs["axis"]
    b = saved["bounds"]
    index = [slice(None)] * g.ndim
    grads = []
    for i in range(len(vals)):
        index[axis] = slice(b[i], b[i + 1])
        grads.append(g[tuple(index)])
    return grads


def _check_stack(shapes, attrs):
    if any(s != shapes[0] for s in shapes):
        raise ShapeError(f"stack: operand shapes differ: {sorted(set(shapes))}")


def _vjp_stack(g, vals, out, saved, attrs):
    axis = attrs["axis"]
    return [np.take(g, i, axis=axis) for i in range(len(vals))]


def _check_take(shapes, attrs):
    try:
        np.empty(shapes[0], dtype=np.bool_)[attrs["index"]]
    except (IndexError, TypeError) as exc:
        raise ShapeError(f"take: index {attrs['index']!r} invalid for shape {shapes[0]}: {exc}") from None


def _vjp_take(g, vals, out, saved, attrs):
    grad = np.zeros_like(vals[0])
    np.add.at(grad, attrs["index"], g)
    return [grad]


def _fwd_sum(vals, attrs):
    axis = attrs.get("axis")
    return np.sum(vals[0], axis=axis), {}


def _vjp_sum(g, vals, out, saved, attrs):
    axis = attrs.get("axis")
    x = vals[0]
    if axis is not None:
        g = np.expand_dims(g, axis)
    return [np.broadcast_to(g, x.shape).copy()]


def _fwd_mean(vals, attrs):
    axis = attrs.get("axis")
    return np.mean(vals[0], axis=axis), {}


def _vjp_mean(g, vals, out, saved, attrs):
    axis = attrs.get("axis")
    x = vals[0]
    count = x.size if axis is None else x.shape[axis]
    if axis is not None:
        g = np.expand_dims(g, axis)
    return [np.broadcast_to(g / count, x.shape).copy()]


def _check_reshape(shapes, attrs):
    try:
        np.empty(shapes[0]).reshape(attrs["shape"])
    except ValueError:
        raise ShapeError(f"reshape: cannot reshape {shapes[0]} to {attrs['shape']}") from None


def _check_transpose(shapes, attrs):
    if len(shapes[0]) < 2:
        raise ShapeError(f"transpose: needs at least 2-D, got {shapes[0]}")


def _check_clip(shapes, attrs):
    if attrs["low"] > attrs["high"]:
        raise ShapeError(f"clip: empty interval [{attrs['low']}, {attrs['high']}]")


def _check_lstm(shapes, attrs):
    x, wx, wh, b = shapes
    if len(x) != 3 or len(wx) != 2 or len(wh) != 2 or len(b) != 1:
        raise ShapeError(f"lstm_layer: expects x (B,n,w), wx (4m,n), wh (4m,m), b (4m,); got {x}, {wx}, {wh}, {b}")
    g4, m = wh
    if g4 != 4 * m or wx[0] != g4 or b[0] != g4 or wx[1] != x[1]:
        raise ShapeError(f"lstm_layer: inconsistent extents x={x}, wx={wx}, wh={wh}, b={b}")


def _fwd_lstm(vals, attrs):
    x, wx, wh, b = vals
    h, gates, cells = kernels.lstm_forward(x, wx, wh, b)
    return h, {"gates": gates, "cells": cells}


def _vjp_lstm(g, vals, out, saved, attrs):
    x, wx, wh, b = vals
    return list(kernels.lstm_backward(g, x, wx, wh, out, saved["gates"], saved["cells"]))


def _plain(fn):
    return lambda vals, attrs: (fn(*vals), {})


PRIMITIVES = {
    "matmul": (_check_matmul, _plain(np.matmul), _vjp_matmul),
    "add": (_check_broadcast("add"), _plain(np.add), _vjp_add),
    "sub": (_check_broadcast("sub"), _plain(np.subtract), _vjp_sub),
    "mul": (_check_broadcast("mul"), _plain(np.multiply), _vjp_mul),
    "scale": (
        _check_unary("scale"),
        lambda vals, attrs: (vals[0] * attrs["factor"], {}),
        lambda g, vals, out, saved, attrs: [g * attrs["factor"]],
    ),
    "sigmoid": (
        _check_unary("sigmoid"),
        _plain(_sigmoid),
        lambda g, vals, out, saved, attrs: [g * out * (1.0 - out)],
    ),
    "tanh": (
        _check_unary("tanh"),
        _plain(np.tanh),
        lambda g, vals, out, saved, attrs: [g * (1.0 - out * out)],
    ),
    "abs": (
        _check_unary("abs"),
        _plain(np.abs),
        lambda g, vals, out, saved, attrs: [g * np.sign(vals[0])],
    ),
    "log": (
        _check_unary("log"),
        _plain(np.log),
        lambda g, vals, out, saved, attrs: [g / vals[0]],
    ),
    "clip": (
        _check_clip,
        lambda vals, attrs: (np.clip(vals[0], attrs["low"], attrs["high"]), {}),
        lambda g, vals, out, saved, attrs: [
            g * ((vals[0] >= attrs["low"]) & (vals[0] <= attrs["high"]))
        ],
    ),
    "softmax": (_check_softmax, _plain(_softmax), _vjp_softmax),
    "temporal_conv": (_check_conv, _fwd_conv, _vjp_conv),
    "concat": (_check_concat, _fwd_concat, _vjp_concat),
    "stack": (
        _check_stack,
        lambda vals, attrs: (np.stack(vals, axis=attrs["axis"]), {}),
        _vjp_stack,
    ),
    "take": (
        _check_take,
        lambda vals, attrs: (np.array(vals[0][attrs["index"]]), {}),
        _vjp_take,
    ),
    "sum": (_check_unary("sum"), _fwd_sum, _vjp_sum),
    "mean": (_check_unary("mean"), _fwd_mean, _vjp_mean),
    "reshape": (
        _check_reshape,
        lambda vals, attrs: (vals[0].reshape(attrs["shape"]), {}),
        lambda g, vals, out, saved, attrs: [g.reshape(vals[0].shape)],
    ),
    "transpose": (
        _check_transpose,
        lambda vals, attrs: (np.ascontiguousarray(_swap(vals[0])), {}),
        lambda g, vals, out, saved, attrs: [_swap(g)],
    ),
    "lstm_layer": (_check_lstm, _fwd_lstm, _vjp_lstm),
}


def _apply(kind, inputs, attrs):
    try:
        check, forward, _ = PRIMITIVES[kind]
    except KeyError:
        raise UnknownPrimitiveError(f"unknown primitive kind {kind!r}") from None
    tensors = [as_tensor(x) for x in inputs]
    vals = [t.value for t in tensors]
    check([v.shape for v in vals], attrs)
    out, saved = forward(vals, attrs)
    out = np.asarray(out, dtype=np.float64)

    tape = None
    for t in tensors:
        if t.tape is not None:
            if tape is not None and t.tape is not tape:
                raise GradientError(f"{kind}: operands belong to different tapes")
            tape = t.tape
    if tape is None:
        return Tensor(out), saved
    node = tape._new_node(out.shape)
    tape.records.append(
        Record(
            kind,
            tuple(t.node if t.tape is tape else None for t in tensors),
            node,
            attrs,
            saved,
            tuple(vals),
            out,
        )
    )
    return Tensor(out, tape, node), saved


def apply_primitive(kind: str, inputs, **attrs) -> Tensor:
    """Evaluate primitive ``kind`` on ``inputs``, recording it if taped."""
    return _apply(kind, inputs, attrs)[0]


def backward(tape: Tape, output: Tensor) -> dict:
    """Gradient of scalar ``output`` with respect to every node on ``tape``.

    Nodes the output does not depend on get zero gradients.
    """
    if output.tape is not tape or output.node is None:
        raise GradientError("output tensor is not recorded on this tape")
    if output.value.size != 1:
        raise GradientError(f"backward needs a scalar output, got shape {output.shape}")

    grads = {output.node: np.ones(tape.shapes[output.node])}
    for rec in reversed(tape.records):
        g = grads.get(rec.output)
        if g is None:
            continue
        _, _, vjp = PRIMITIVES[rec.kind]
        in_grads = vjp(g, rec.values, rec.out, rec.saved, rec.attrs)
        for node, ig in zip(rec.inputs, in_grads):
            if node is None or ig is None:
                continue
            if node in grads:
                grads[node] = grads[node] + ig
            else:
                grads[node] = np.asarray(ig, dtype=np.float64)
    return {
        node: grads[node] if node in grads else np.zeros(shape)
        for node, shape in enumerate(tape.shapes)
    }


def grad_check(function, params, step: float = 1e-6) -> float:
    """Maximum relative error between tape and central-difference gradients.

    ``function`` maps a list of tensors to a scalar tensor. The relative
    error of each entry uses ``max(|analytic|, |numeric|, 1e-8)`` as its
    denominator.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    arrays = [np.array(as_tensor(p).value, dtype=np.float64) for p in params]

    tape = Tape()
    leaves = [tape.leaf(a) for a in arrays]
    out = function(leaves)
    if not np.all(np.isfinite(out.value)):
        raise FloatingPointError(f"function value is not finite: {out.value}")
    grads = backward(tape, out)

    def evaluate(vals):
        value = float(np.asarray(function([Tensor(v) for v in vals]).value))
        if not np.isfinite(value):
            raise FloatingPointError(f"function value is not finite: {value}")
        return value

    worst = 0.0
    for pi, arr in enumerate(arrays):
        analytic = grads[leaves[pi].node]
        for idx in np.ndindex(arr.shape):
            probe = [a.copy() for a in arrays]
            probe[pi][idx] = arr[idx] + step
            up = evaluate(probe)
            probe[pi][idx] = arr[idx] - step
            down = evaluate(probe)
            numeric = (up - down) / (2.0 * step)
            a = float(analytic[idx])
            denom = max(abs(a), abs(numeric), 1e-8)
            worst = max(worst, abs(a - numeric) / denom)
    return worst


# ---------------------------------------------------------------------------
# thin wrappers


def matmul(a, b):
    return apply_primitive("matmul", [a, b])


def add(a, b):
    return apply_primitive("add", [a, b])


def sub(a, b):
    return apply_primitive("sub", [a, b])


def mul(a, b):
    return apply_primitive("mul", [a, b])


def scale(x, factor: float):
    return apply_primitive("scale", [x], factor=float(factor))


def sigmoid(x):
    return apply_primitive("sigmoid", [x])


def tanh(x):
    return apply_primitive("tanh", [x])


def absolute(x):
    return apply_primitive("abs", [x])


def log(x):
    return apply_primitive("log", [x])


def clip(x, low: float, high: float):
    return apply_primitive("clip", [x], low=float(low), high=float(high))


def softmax(x):
    """Softmax over the last axis, max-shifted for overflow safety."""
    return apply_primitive("softmax", [x])


def temporal_conv(h, filters):
    return apply_primitive("temporal_conv", [h, filters])


def concat(tensors, axis: int = -1):
    return apply_primitive("concat", list(tensors), axis=axis)


def stack(tensors, axis: int = -1):
    return apply_primitive("stack", list(tensors), axis=axis)


def take(x, index):
    return apply_primitive("take", [x], index=index)


def reduce_sum(x, axis=None):
    return apply_primitive("sum", [x], axis=axis)


def reduce_mean(x, axis=None):
    return apply_primitive("mean", [x], axis=axis)


def reshape(x, shape):
    return apply_primitive("reshape", [x], shape=tuple(shape))


def transpose(x):
    """Swap the last two axes."""
    return apply_primitive("transpose", [x])


def lstm_layer(x, wx, wh, b):
    """Fused LSTM layer over a window; returns ``(H, final_cell)``.

    Only ``H`` carries gradients; the final cell state is returned as an
    untaped tensor for inspection.
    """
    h, saved = _apply("lstm_layer", [x, wx, wh, b], {})
    return h, Tensor(saved["cells"][-1])
