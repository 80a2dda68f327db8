"""Dataset ingestion, normalization, splitting, windowing and toy series."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError

TOY_PERIOD = 64


@dataclass(frozen=True)
class TimeSeriesDataset:
    values: np.ndarray  # (L, D): rows are time steps
    name: str = "dataset"
    spacing: str = ""
    kind: str = "continuous"

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2 or values.shape[0] < 1 or values.shape[1] < 1:
            raise DataError(f"{self.name}: values must be a non-empty L x D matrix, got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise DataError(f"{self.name}: contains missing or non-finite entries")
        if self.kind == "binary" and not np.all((values == 0) | (values == 1)):
            raise DataError(f"{self.name}: binary dataset contains values other than 0/1")
        if self.kind not in ("continuous", "binary"):
            raise DataError(f"unknown value kind {self.kind!r}")
        object.__setattr__(self, "values", values)

    @property
    def length(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    def rows(self, start: int, stop: int, suffix: str) -> TimeSeriesDataset:
        return TimeSeriesDataset(self.values[start:stop], f"{self.name}{suffix}", self.spacing, self.kind)


@dataclass(frozen=True)
class WindowSample:
    input: np.ndarray  # (D, w): columns x_{t-w} .. x_{t-1}
    target: np.ndarray  # (D,): x_{t-1+horizon}
    origin: int  # t


@dataclass
class NormalizationState:
    mode: str
    scale: np.ndarray = field(default_factory=lambda: np.ones(1))

    def apply(self, values):
        return np.asarray(values, dtype=np.float64) / self.scale

    def invert(self, values):
        return np.asarray(values, dtype=np.float64) * self.scale

    def to_dict(self):
        return {"mode": self.mode, "scale": self.scale.tolist()}


def _parse_rows(path: Path):
    try:
        handle = path.open(newline="")
    except FileNotFoundError:
        raise DataError(f"file not found: {path}") from None
    with handle:
        rows = [row for row in csv.reader(handle) if row and any(c.strip() for c in row)]
    if not rows:
        raise DataError(f"{path}: file is empty")

    def numeric(row):
        try:
            [float(c) for c in row]
            return True
        except ValueError:
            return False

    if not numeric(rows[0]):
        rows = rows[1:]
        if not rows:
            raise DataError(f"{path}: file has a header but no data rows")
    width = len(rows[0])
    out = np.empty((len(rows), width))
    for r, row in enumerate(rows):
        if len(row) != width:
            raise DataError(f"{path}: row {r + 1} has {len(row)} values, expected {width}")
        for c, cell in enumerate(row):
            try:
                out[r, c] = float(cell)
            except ValueError:
                raise DataError(f"{path}: non-numeric cell {cell!r} at row {r + 1}, column {c + 1}") from None
    return out


def load_mts_csv(path, name: str | None = None, spacing: str = "") -> TimeSeriesDataset:
    """Load a comma-separated matrix (rows = time steps, columns = series).

    A single non-numeric header line is skipped.
    """
    path = Path(path)
    values = _parse_rows(path)
    if not np.all(np.isfinite(values)):
        bad = np.argwhere(~np.isfinite(values))[0]
        raise DataError(f"{path}: non-finite value at row {bad[0] + 1}, column {bad[1] + 1}")
    return TimeSeriesDataset(values, name or path.stem, spacing)


def load_pianoroll(path, pitches: int = 128) -> TimeSeriesDataset:
    """Load one piece as a binary beats x pitches matrix."""
    path = Path(path)
    values = _parse_rows(path)
    if values.shape[1] != pitches:
        raise DataError(f"{path}: expected {pitches} pitch columns, got {values.shape[1]}")
    bad = np.argwhere((values != 0) & (values != 1))
    if len(bad):
        r, c = bad[0]
        raise DataError(f"{path}: non-binary value {values[r, c]!r} at row {r + 1}, column {c + 1}")
    return TimeSeriesDataset(values, path.stem, "1 beat", "binary")


def load_pianoroll_dir(directory, pitches: int = 128) -> list:
    directory = Path(directory)
    files = sorted(directory.glob("*.csv"))
    if not files:
        raise DataError(f"{directory}: no piano-roll CSV files found")
    return [load_pianoroll(f, pitches) for f in files]


def split_bounds(length: int, ratios) -> list:
    """Row boundaries ``[0, b1, b2, length]`` at floor(L * cumulative ratio)."""
    ratios = [float(r) for r in ratios]
    if any(r <= 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
        raise DataError(f"split ratios must be positive and sum to 1, got {ratios}")
    bounds = [0]
    acc = 0.0
    for r in ratios[:-1]:
        acc += r
        bounds.append(int(math.floor(length * acc + 1e-9)))
    bounds.append(length)
    sizes = np.diff(bounds)
    if np.any(sizes <= 0):
        raise DataError(f"split of {length} rows by {ratios} leaves an empty part (sizes {sizes.tolist()})")
    return bounds


def chronological_split(ds: TimeSeriesDataset, ratios=(0.6, 0.2, 0.2)):
    """Contiguous train/validation/test row ranges in time order."""
    b = split_bounds(ds.length, ratios)
    suffixes = ("/train", "/val", "/test")
    return tuple(ds.rows(b[i], b[i + 1], suffixes[i]) for i in range(3))


def split_pieces(pieces, ratios=(0.8, 0.1, 0.1), seed: int = 0):
    """Seeded shuffle of whole pieces into train/validation/test lists."""
    order = np.random.default_rng(seed).permutation(len(pieces))
    b = split_bounds(len(pieces), ratios)
    return tuple([pieces[j] for j in order[b[i] : b[i + 1]]] for i in range(3))


def normalize(ds: TimeSeriesDataset, mode: str = "per-series", state: NormalizationState | None = None):
    """Divide by per-series or global max-abs; all-zero scopes keep factor 1.

    Passing ``state`` reuses factors fitted elsewhere (e.g. on the
    training split).
    """
    if state is None:
        if ds.kind != "continuous" and mode != "none":
            raise DataError(f"{ds.name}: normalization applies to continuous data only")
        peak = np.abs(ds.values)
        if mode == "per-series":
            scale = peak.max(axis=0)
        elif mode == "global":
            scale = np.full(ds.width, peak.max())
        elif mode == "none":
            scale = np.ones(ds.width)
        else:
            raise ValueError(f"unknown normalization mode {mode!r}")
        scale = np.where(scale > 0, scale, 1.0)
        state = NormalizationState(mode, scale)
    normed = TimeSeriesDataset(state.apply(ds.values), ds.name, ds.spacing, ds.kind)
    return normed, state


def window_arrays(ds: TimeSeriesDataset, window: int, horizon: int):
    """Vectorized windows: inputs (N, D, w), targets (N, D), origins (N,)."""
    if window < 1 or horizon < 1:
        raise DataError(f"window and horizon must be >= 1, got {window} and {horizon}")
    count = ds.length - window - horizon + 1
    if count < 1:
        raise DataError(
            f"{ds.name}: {ds.length} rows is too short for window {window} and horizon {horizon}"
        )
    origins = np.arange(window, window + count)
    idx = origins[:, None] + np.arange(-window, 0)[None, :]
    inputs = ds.values[idx].transpose(0, 2, 1)
    targets = ds.values[origins - 1 + horizon]
    return np.ascontiguousarray(inputs), targets.copy(), origins


def make_windows(ds: TimeSeriesDataset, window: int, horizon: int) -> list:
    inputs, targets, origins = window_arrays(ds, window, horizon)
    return [WindowSample(inputs[j], targets[j], int(origins[j])) for j in range(len(origins))]


def toy_series(D: int, family: str = "independent", length: int = 2 * TOY_PERIOD) -> TimeSeriesDataset:
    """Sine-wave toys: series i = 1..D has value sin(2 pi i t / 64).

    The ``mixed`` family adds ``1/(D-1)`` times the sum of the other series;
    with ``D == 1`` it equals the independent family.
    """
    if D < 1 or length < 1:
        raise DataError(f"toy series needs D >= 1 and length >= 1, got D={D}, length={length}")
    t = np.arange(length)[:, None]
    i = np.arange(1, D + 1)[None, :]
    base = np.sin(2.0 * np.pi * i * t / TOY_PERIOD)
    if family == "independent" or D == 1:
        values = base
    elif family == "mixed":
        values = base + (base.sum(axis=1, keepdims=True) - base) / (D - 1)
    else:
        raise ValueError(f"unknown toy family {family!r}")
    return TimeSeriesDataset(values, f"toy-{family}-D{D}", "1 step")


def split_manifest(name, bounds, norm: NormalizationState | None, seed, path=None) -> dict:
    doc = {
        "dataset": name,
        "row_ranges": {
            part: [int(bounds[i]), int(bounds[i + 1])] for i, part in enumerate(("train", "val", "test"))
        },
        "normalization": norm.to_dict() if norm else None,
        "seed": seed,
    }
    if path is not None:
        Path(path).write_text(json.dumps(doc, indent=2))
    return doc
