"""Losses, optimization and the training loop."""

from __future__ import annotations

import json
import logging
import time
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from . import tensor as T
from .data import (
    NormalizationState,
    TimeSeriesDataset,
    chronological_split,
    normalize,
    split_pieces,
    window_arrays,
)
from .errors import DataError, TrainingDiverged
from .layers import AttentionMode, ModelConfig, init_params, param_count
from .metrics import (
    PROB_FLOOR,
    binary_report,
    continuous_report,
    corr,
    cross_entropy,
    rae,
    rse,
)
from .model import ar_forecast, forecast

log = logging.getLogger(__name__)

__all__ = [
    "AdamState",
    "TrainConfig",
    "TrainResult",
    "WindowSet",
    "adam_step",
    "ar_forecast",
    "cross_entropy_loss",
    "grid_search",
    "l1_loss",
    "lr_at",
    "match_param_budget",
    "prepare",
    "train",
]


# ---------------------------------------------------------------------------
# losses


def l1_loss(pred, target):
    """Mean absolute difference as a scalar tensor."""
    return T.reduce_mean(T.absolute(T.as_tensor(pred) - target))


def cross_entropy_loss(probabilities, targets):
    """Mean binary cross-entropy; probabilities are clamped to [1e-7, 1 - 1e-7]."""
    p = T.clip(probabilities, PROB_FLOOR, 1.0 - PROB_FLOOR)
    t = T.as_tensor(targets)
    ones = np.ones(t.shape)
    ll = t * T.log(p) + (ones - t.value) * T.log(ones - p)
    return -T.reduce_mean(ll)


LOSSES = {"l1": l1_loss, "cross-entropy": cross_entropy_loss}


# ---------------------------------------------------------------------------
# optimizer


@dataclass
class AdamState:
    m: dict
    v: dict
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, params: dict) -> AdamState:
        return cls({k: np.zeros_like(p) for k, p in params.items()}, {k: np.zeros_like(p) for k, p in params.items()})


def adam_step(state: AdamState, params: dict, grads: dict, lr: float):
    """Bias-corrected Adam update, applied to ``params`` in place."""
    state.step += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1**state.step
    c2 = 1.0 - b2**state.step
    for name, p in params.items():
        g = grads[name]
        m = state.m[name]
        v = state.v[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p -= lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
    return params, state


def lr_at(step: int, base: float, every: int, rate: float) -> float:
    """Exponentially decayed learning rate ``base * rate ** (step // every)``."""
    return base * rate ** (step // every)


def clip_gradients(grads: dict, max_norm: float) -> float:
    """Scale gradients in place to a global L2 norm of at most ``max_norm``."""
    norm = float(np.sqrt(sum(float((g * g).sum()) for g in grads.values())))
    if max_norm > 0 and norm > max_norm:
        factor = max_norm / norm
        for g in grads.values():
            g *= factor
    return norm


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class TrainConfig:
    model: str = "tpa"
    attention: str = "sigmoid/position"
    window: int = 24
    horizon: int = 1
    hidden: int = 25
    layers: int = 1
    filters: int = 32
    filter_len: int = 0
    ar_window: int = 24
    bias: bool = True
    lr: float = 1e-3
    decay_every: int = 1000
    decay_rate: float = 0.995
    epochs: int = 50
    batch_size: int = 64
    clip: float = 5.0
    seed: int = 0
    loss: str = "l1"
    normalize: str = "per-series"
    select: str = "auto"

    def __post_init__(self):
        for name in ("window", "horizon", "hidden", "layers", "filters", "decay_every", "epochs", "batch_size"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if not 0 < self.decay_rate <= 1:
            raise ValueError(f"decay_rate must lie in (0, 1], got {self.decay_rate}")
        if self.lr < 0:
            raise ValueError(f"lr must be non-negative, got {self.lr}")
        if self.loss not in LOSSES:
            raise ValueError(f"unknown loss {self.loss!r}; expected one of {sorted(LOSSES)}")
        if self.select not in ("auto", "rse", "rae", "corr", "l1", "nll"):
            raise ValueError(f"unknown selection metric {self.select!r}")
        AttentionMode.parse(self.attention)

    def replace(self, **changes) -> TrainConfig:
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> TrainConfig:
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def model_config(self, n_series: int, binary: bool = False) -> ModelConfig:
        mode = AttentionMode.parse(self.attention)
        return ModelConfig(
            n_series=n_series,
            window=self.window,
            hidden=self.hidden,
            layers=self.layers,
            model=self.model,
            attend=mode.attend,
            activation=mode.activation,
            integration=mode.integration,
            filters=self.filters,
            filter_len=self.filter_len,
            ar_window=self.ar_window,
            bias=self.bias,
            output="sigmoid" if binary else "linear",
        )

    def selection_metric(self, kind: str) -> str:
        if self.select != "auto":
            return self.select
        return "nll" if kind == "binary" else "rse"


# ---------------------------------------------------------------------------
# data plumbing


@dataclass
class WindowSet:
    inputs: np.ndarray  # (N, D, w)
    targets: np.ndarray  # (N, D)
    origins: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))

    def __len__(self):
        return len(self.targets)

    @classmethod
    def from_datasets(cls, datasets, window: int, horizon: int) -> WindowSet:
        parts = []
        for ds in datasets:
            if ds.length >= window + horizon:
                parts.append(window_arrays(ds, window, horizon))
        if not parts:
            raise DataError(f"no dataset is long enough for window {window} and horizon {horizon}")
        return cls(
            np.concatenate([p[0] for p in parts]),
            np.concatenate([p[1] for p in parts]),
            np.concatenate([p[2] for p in parts]),
        )


@dataclass
class Prepared:
    train: WindowSet
    val: WindowSet | None
    test: WindowSet | None
    norm: NormalizationState
    kind: str
    n_series: int
    bounds: list | None = None


def prepare(data, config: TrainConfig, ratios=None, split_seed: int = 0) -> Prepared:
    """Split, normalize and window a dataset (or a list of pieces).

    Continuous data is split chronologically (60/20/20) with normalization
    factors fitted on the training rows. A list of binary pieces is split
    piece-wise (80/10/10) by a seeded shuffle.
    """
    w, h = config.window, config.horizon
    if isinstance(data, TimeSeriesDataset):
        ratios = ratios or (0.6, 0.2, 0.2)
        parts = chronological_split(data, ratios)
        lengths = [p.length for p in parts]
        bounds = [0, lengths[0], lengths[0] + lengths[1], data.length]
        if data.kind == "continuous":
            _, norm = normalize(parts[0], config.normalize)
        else:
            norm = NormalizationState("none", np.ones(data.width))
        parts = [normalize(p, state=norm)[0] for p in parts]
        sets = [WindowSet.from_datasets([p], w, h) for p in parts]
        return Prepared(*sets, norm, data.kind, data.width, bounds)

    pieces = list(data)
    if not pieces:
        raise DataError("no pieces supplied")
    kind = pieces[0].kind
    width = pieces[0].width
    if any(p.width != width for p in pieces):
        raise DataError("pieces have different widths")
    norm = NormalizationState("none", np.ones(width))
    train_p, val_p, test_p = split_pieces(pieces, ratios or (0.8, 0.1, 0.1), split_seed)
    sets = [WindowSet.from_datasets(ps, w, h) for ps in (train_p, val_p, test_p)]
    return Prepared(*sets, norm, kind, width)


# ---------------------------------------------------------------------------
# training


@dataclass
class TrainResult:
    params: dict  # best-validation parameters
    final_params: dict
    history: list
    best_epoch: int
    model_config: ModelConfig
    config: TrainConfig

    @property
    def best_val(self) -> float:
        return min(h["val_loss"] for h in self.history)

    def write_history(self, path):
        with open(path, "w") as fh:
            for row in self.history:
                fh.write(json.dumps(row) + "\n")


def loss_and_grads(params: dict, model_config: ModelConfig, inputs, targets, loss: str = "l1"):
    tape = T.Tape()
    leaves = {name: tape.leaf(value) for name, value in params.items()}
    pred = forecast(leaves, model_config, inputs)
    value = LOSSES[loss](pred, targets)
    grads = T.backward(tape, value)
    return float(value.value), {name: grads[leaf.node] for name, leaf in leaves.items()}


def predict(params: dict, model_config: ModelConfig, inputs, batch: int = 512) -> np.ndarray:
    inputs = np.asarray(inputs, dtype=np.float64)
    out = [
        forecast(params, model_config, inputs[s : s + batch]).value for s in range(0, len(inputs), batch)
    ]
    return np.concatenate(out) if out else np.zeros((0, model_config.n_series))


def score_windows(params, model_config, windows: WindowSet, metric: str, scale=None) -> float:
    """Validation score (lower is better) on a window set."""
    pred = predict(params, model_config, windows.inputs)
    truth = windows.targets
    if metric == "l1":
        return float(np.mean(np.abs(pred - truth)))
    if metric == "nll":
        return cross_entropy(pred, truth)
    if scale is not None:
        pred, truth = pred * scale, truth * scale
    if metric == "rse":
        return rse(pred, truth)
    if metric == "rae":
        return rae(pred, truth)
    if metric == "corr":
        return 1.0 - corr(pred, truth)
    raise ValueError(f"unknown metric {metric!r}")


def train(
    model_config: ModelConfig,
    train_set: WindowSet,
    val_set: WindowSet | None,
    config: TrainConfig,
    *,
    kind: str = "continuous",
    scale=None,
    params: dict | None = None,
) -> TrainResult:
    """Mini-batch Adam training with per-epoch validation.

    Without a validation set the training windows are scored instead. The
    returned ``params`` are those of the best validation epoch (earliest on
    ties). Everything except ``wall_ms`` in the history is a deterministic
    function of ``config.seed``.
    """
    params = init_params(model_config, config.seed) if params is None else {k: v.copy() for k, v in params.items()}
    rng = np.random.default_rng(config.seed)
    state = AdamState.for_params(params)
    metric = config.selection_metric(kind)
    val_set = val_set if val_set is not None and len(val_set) else train_set
    n = len(train_set)

    history = []
    best_val, best_params, best_epoch = np.inf, None, 0
    step = 0
    for epoch in range(1, config.epochs + 1):
        started = time.perf_counter()
        order = rng.permutation(n)
        total = 0.0
        lr = lr_at(step, config.lr, config.decay_every, config.decay_rate)
        for start in range(0, n, config.batch_size):
            idx = np.sort(order[start : start + config.batch_size])
            lr = lr_at(step, config.lr, config.decay_every, config.decay_rate)
            loss, grads = loss_and_grads(
                params, model_config, train_set.inputs[idx], train_set.targets[idx], config.loss
            )
            step += 1
            if not np.isfinite(loss):
                raise TrainingDiverged(step, loss)
            clip_gradients(grads, config.clip)
            adam_step(state, params, grads, lr)
            total += loss * len(idx)
        val = score_windows(params, model_config, val_set, metric, scale)
        if not np.isfinite(val):
            raise TrainingDiverged(step, val)
        history.append(
            {
                "epoch": epoch,
                "train_loss": total / n,
                "val_loss": val,
                "lr": lr,
                "wall_ms": round((time.perf_counter() - started) * 1000.0, 3),
            }
        )
        if val < best_val:
            best_val, best_epoch = val, epoch
            best_params = {k: v.copy() for k, v in params.items()}
        log.debug("epoch %d train %.6g val %.6g", epoch, total / n, val)
    return TrainResult(best_params, params, history, best_epoch, model_config, config)


def deterministic_history(history) -> list:
    """History rows without the wall-clock column."""
    return [{k: v for k, v in row.items() if k != "wall_ms"} for row in history]


def fit(data, config: TrainConfig, split_seed: int = 0):
    """Prepare ``data`` and train one config; returns ``(result, prepared)``."""
    prepared = prepare(data, config, split_seed=split_seed)
    model_config = config.model_config(prepared.n_series, binary=prepared.kind == "binary")
    result = train(
        model_config, prepared.train, prepared.val, config, kind=prepared.kind, scale=prepared.norm.scale
    )
    return result, prepared


def report_predictions(pred, windows: WindowSet, prepared: Prepared, threshold: float = 0.5,
                       average: str = "micro", **meta):
    """Report for model outputs ``pred`` on ``windows``, dispatched on value kind.

    Continuous scores use raw (denormalized) values. Returns the report and
    the predictions on the scale it was computed on.
    """
    pred = np.asarray(pred, dtype=np.float64)
    if prepared.kind == "binary":
        return binary_report(pred, windows.targets, threshold, average, **meta), pred
    raw_pred = prepared.norm.invert(pred)
    raw_truth = prepared.norm.invert(windows.targets)
    report = continuous_report(raw_pred, raw_truth, **meta)
    report.meta["scale"] = "raw"
    return report, raw_pred


def evaluate(params, model_config, windows: WindowSet, prepared: Prepared, threshold: float = 0.5, **meta):
    """Test-set report for trained parameters; see ``report_predictions``."""
    pred = predict(params, model_config, windows.inputs)
    return report_predictions(pred, windows, prepared, threshold, **meta)


def grid_search(space, data, split_seed: int = 0):
    """Train every config and return ``(best_config, results)``.

    The best config has the lowest best-epoch validation score; ties go
    to the earliest config in ``space``.
    """
    space = list(space)
    if not space:
        raise ValueError("grid search space is empty")
    results = []
    best_i = 0
    for i, config in enumerate(space):
        result, prepared = fit(data, config, split_seed)
        results.append({"config": config, "val": result.best_val, "result": result, "prepared": prepared})
        if result.best_val < results[best_i]["val"]:
            best_i = i
    return space[best_i], results


def match_param_budget(target: int, template: ModelConfig, max_hidden: int = 4096) -> ModelConfig:
    """Hidden size whose parameter count best matches ``target``.

    Picks the largest hidden size with count <= 1.05 * target; if that
    falls below 0.95 * target, the nearest achievable count wins instead.
    """
    if target < 1:
        raise ValueError("target count must be positive")

    def count(m):
        return param_count(template.replace(hidden=m))

    lo, hi = 1, 1
    while hi < max_hidden and count(hi) <= 1.05 * target:
        lo, hi = hi, min(hi * 2, max_hidden)
    # largest m in [lo, hi] with count <= 1.05 * target
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if count(mid) <= 1.05 * target:
            lo = mid
        else:
            hi = mid - 1
    best = lo
    if count(best) > 1.05 * target or count(best) < 0.95 * target:
        candidates = [m for m in (best, best + 1) if m <= max_hidden]
        best = min(candidates, key=lambda m: (abs(count(m) - target), m))
    return template.replace(hidden=best)
