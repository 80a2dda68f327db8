"""Toy-example and ablation experiment drivers."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .analysis import avg_dft, spectrum_alignment, window_rows
from .data import TOY_PERIOD, TimeSeriesDataset, toy_series
from .layers import AttentionMode, param_count
from .metrics import continuous_report
from .training import TrainConfig, WindowSet, evaluate, fit, match_param_budget, train

TOY_WINDOW = TOY_PERIOD

# variant name -> (model, attention)
TOY_VARIANTS = {
    "lstm": ("lstm", "sigmoid/position"),
    "luong": ("luong", "sigmoid/position"),
    "tpa": ("tpa", "sigmoid/position"),
    "tpa-no-cnn": ("tpa", "sigmoid/without-cnn"),
}

# Full-batch Adam on the 64 toy samples; the reference TPA model fixes the
# parameter budget that the other variants are matched to. ``hidden`` is a
# floor: wider toys get ``TOY_HIDDEN_PER_SERIES`` units per series.
TOY_HIDDEN_PER_SERIES = 1.2
TOY_DEFAULTS = TrainConfig(
    model="tpa",
    window=TOY_WINDOW,
    horizon=1,
    hidden=24,
    filters=32,
    ar_window=0,
    lr=3e-3,
    epochs=200,
    batch_size=64,
    select="l1",
    normalize="none",
)

ABLATION_ROWS = ("softmax", "sigmoid", "concat")
ABLATION_COLUMNS = ("position", "filter", "without-cnn")
ROW_LABELS = {"softmax": "Softmax", "sigmoid": "Sigmoid", "concat": "Concat"}
COLUMN_LABELS = {"position": "Position", "filter": "Filter", "without-cnn": "W/o CNN"}


@dataclass
class ToyRun:
    D: int
    family: str
    variant: str
    seed: int
    hidden: int
    params: int
    loss: float
    history: list


def toy_windows(D: int, family: str) -> WindowSet:
    """The 64 shifted samples built from one 128-step toy sequence."""
    ds = toy_series(D, family, length=2 * TOY_PERIOD)
    return WindowSet.from_datasets([ds], TOY_WINDOW, 1)


def toy_hidden(D: int, floor: int) -> int:
    """Hidden size of the reference TPA model for ``D`` toy series."""
    return max(floor, math.ceil(TOY_HIDDEN_PER_SERIES * D))


def toy_model_config(D: int, variant: str, base: TrainConfig = TOY_DEFAULTS):
    """Model config for ``variant``, parameter-matched to the reference TPA."""
    if variant not in TOY_VARIANTS:
        raise ValueError(f"unknown toy variant {variant!r}; expected one of {sorted(TOY_VARIANTS)}")
    model, attention = TOY_VARIANTS[variant]
    base = base.replace(hidden=toy_hidden(D, base.hidden))
    reference = base.replace(model="tpa", attention="sigmoid/position").model_config(D)
    config = base.replace(model=model, attention=attention)
    mc = config.model_config(D)
    if variant != "tpa":
        mc = match_param_budget(param_count(reference), mc)
    return config, mc


def run_toy(D: int, family: str, variant: str, seed: int, base: TrainConfig = TOY_DEFAULTS) -> ToyRun:
    """Train one toy model; ``loss`` is the final-epoch training MAE."""
    config, mc = toy_model_config(D, variant, base)
    config = config.replace(seed=seed)
    result = train(mc, toy_windows(D, family), None, config)
    return ToyRun(D, family, variant, seed, mc.hidden, param_count(mc), result.history[-1]["val_loss"], result.history)


def toy_table(Ds, families, variants, seeds, base: TrainConfig = TOY_DEFAULTS):
    """Mean/std final training MAE per (D, family, variant) plus all runs."""
    rows, runs = [], []
    for D in Ds:
        for family in families:
            for variant in variants:
                cell = [run_toy(D, family, variant, s, base) for s in seeds]
                runs.extend(cell)
                losses = np.array([r.loss for r in cell])
                rows.append(
                    {
                        "D": D,
                        "family": family,
                        "variant": variant,
                        "hidden": cell[0].hidden,
                        "params": cell[0].params,
                        "runs": len(cell),
                        "mean_loss": float(losses.mean()),
                        "std_loss": float(losses.std()),
                    }
                )
    return rows, runs


def parse_cell(name: str) -> AttentionMode:
    """Parse ablation cell names like ``sigmoid/position`` or ``concat``."""
    mode = AttentionMode.parse(name)
    return mode


def all_cells() -> list:
    cells = [f"{row}/{col}" for row in ("softmax", "sigmoid") for col in ABLATION_COLUMNS]
    return cells + ["concat"]


def ablation_grid(data, cells, runs: int, base: TrainConfig, split_seed: int = 0):
    """Train each cell ``runs`` times and score it.

    Continuous data is scored by test RSE and binary data by test NLL.
    Returns long-form rows ``{row, column, mean, std, runs, values}``; the
    concat cell has no attend axis and is reported once.
    """
    out = []
    for cell in cells:
        mode = parse_cell(cell)
        values = []
        for r in range(runs):
            config = base.replace(model="tpa", attention=mode.name, seed=base.seed + r)
            result, prepared = fit(data, config, split_seed)
            report, _ = evaluate(result.params, result.model_config, prepared.test, prepared)
            values.append(report["nll"] if prepared.kind == "binary" else report["rse"])
        values = np.array(values)
        out.append(
            {
                "row": ROW_LABELS["concat" if mode.integration == "concat" else mode.activation],
                "column": "" if mode.integration == "concat" else COLUMN_LABELS[mode.attend],
                "cell": mode.name,
                "mean": float(values.mean()),
                "std": float(values.std()),
                "runs": runs,
                "values": values.tolist(),
            }
        )
    return out


def ablation_table(rows) -> list:
    """Ablation table: one line per row label, one column per attend axis.

    The concat value is repeated under every column because that variant
    has no attend axis.
    """
    by_row = {}
    for r in rows:
        text = f"{r['mean']:.4f} ± {r['std']:.4f}"
        cols = list(COLUMN_LABELS.values()) if r["row"] == "Concat" else [r["column"]]
        for c in cols:
            by_row.setdefault(r["row"], {})[c] = text
    table = []
    for key in ABLATION_ROWS:
        label = ROW_LABELS[key]
        if label in by_row:
            table.append([label] + [by_row[label].get(COLUMN_LABELS[c], "") for c in ABLATION_COLUMNS])
    return table


# ---------------------------------------------------------------------------
# filter spectra on planted periodicities

PLANTED_PERIODS = (24, 8)
PLANTED_CONFIG = TrainConfig(
    window=48, hidden=24, filters=32, ar_window=0, epochs=200, lr=3e-3, batch_size=32
)


def planted_series(n_series: int = 8, length: int = 1500, noise: float = 0.2, seed: int = 0) -> TimeSeriesDataset:
    """Sum of sines at ``PLANTED_PERIODS`` with random amplitudes and phases, plus noise."""
    rng = np.random.default_rng(seed)
    t = np.arange(length)
    cols = []
    for _ in range(n_series):
        amps = rng.uniform(0.5, 1.5, len(PLANTED_PERIODS))
        phases = rng.uniform(0, 2 * np.pi, len(PLANTED_PERIODS))
        wave = sum(a * np.sin(2 * np.pi * t / p + ph) for a, p, ph in zip(amps, PLANTED_PERIODS, phases))
        cols.append(wave + noise * rng.standard_normal(length) + 3.0)
    return TimeSeriesDataset(np.stack(cols, axis=1), name="planted")


def filter_alignment(data, config: TrainConfig = PLANTED_CONFIG, top_j: int = 3, tolerance: int = 1):
    """Train TPA on ``data`` and compare filter and training-window spectra."""
    result, prepared = fit(data, config)
    spectrum = avg_dft(window_rows(prepared.train.inputs), "dataset")
    filters = avg_dft(result.params["attn/filters"], "filters", length=config.window)
    return spectrum_alignment(spectrum, filters, top_j, tolerance), result


# ---------------------------------------------------------------------------
# exchange-rate style forecasting

EXCHANGE_CONFIG = TrainConfig(
    window=30, hidden=6, horizon=3, ar_window=24, filters=32, epochs=300, lr=1e-2, batch_size=64
)


def momentum_walks(n_series: int = 8, length: int = 3000, momentum: float = 0.9, seed: int = 0):
    """Positive random walks whose log increments follow an AR(1) process."""
    rng = np.random.default_rng(seed)
    shocks = rng.standard_normal((length, n_series)) * 0.004
    inc = np.zeros((length, n_series))
    for t in range(1, length):
        inc[t] = momentum * inc[t - 1] + shocks[t]
    levels = np.exp(np.cumsum(inc, axis=0)) * rng.uniform(0.5, 2.0, n_series)
    return TimeSeriesDataset(levels, name="momentum-walks")


def persistence_report(windows: WindowSet, prepared):
    """Raw-scale report for repeating the last observed value."""
    last = prepared.norm.invert(windows.inputs[:, :, -1])
    return continuous_report(last, prepared.norm.invert(windows.targets), meta={"baseline": "persistence"})


def forecast_benchmark(data, config: TrainConfig = EXCHANGE_CONFIG):
    """Train, score the test split, and score persistence on the same windows."""
    result, prepared = fit(data, config)
    report, _ = evaluate(result.params, result.model_config, prepared.test, prepared, horizon=config.horizon)
    return report, persistence_report(prepared.test, prepared), result
