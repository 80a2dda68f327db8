"""Forecast evaluation metrics."""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError, ShapeError

log = logging.getLogger(__name__)

PROB_FLOOR = 1e-7


def _pair(pred, truth):
    pred = np.asarray(pred, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if pred.shape != truth.shape:
        raise ShapeError(f"prediction shape {pred.shape} != truth shape {truth.shape}")
    if pred.ndim == 1:
        pred, truth = pred[:, None], truth[:, None]
    return pred, truth


def rae(pred, truth) -> float:
    """Relative absolute error against the truth's global mean."""
    pred, truth = _pair(pred, truth)
    denom = np.abs(truth - truth.mean()).sum()
    if denom == 0:
        raise ZeroDivisionError("RAE undefined: truth is constant")
    return float(np.abs(pred - truth).sum() / denom)


def rse(pred, truth) -> float:
    """Root relative squared error against the truth's global mean."""
    pred, truth = _pair(pred, truth)
    denom = np.sqrt(((truth - truth.mean()) ** 2).sum())
    if denom == 0:
        raise ZeroDivisionError("RSE undefined: truth is constant")
    return float(np.sqrt(((pred - truth) ** 2).sum()) / denom)


def corr(pred, truth) -> float:
    """Mean per-series Pearson correlation (columns are series).

    Series with constant prediction or constant truth are skipped with a
    warning.
    """
    pred, truth = _pair(pred, truth)
    dp = pred - pred.mean(axis=0)
    dt = truth - truth.mean(axis=0)
    denom = np.sqrt((dp**2).sum(axis=0) * (dt**2).sum(axis=0))
    ok = denom > 0
    if not ok.all():
        log.warning("CORR: skipping %d degenerate series %s", (~ok).sum(), np.flatnonzero(~ok).tolist())
    if not ok.any():
        raise ZeroDivisionError("CORR undefined: every series is constant")
    return float(((dp * dt).sum(axis=0)[ok] / denom[ok]).mean())


def cross_entropy(probabilities, targets) -> float:
    """Mean binary cross-entropy with probabilities clamped away from 0 and 1."""
    p = np.clip(np.asarray(probabilities, dtype=np.float64), PROB_FLOOR, 1.0 - PROB_FLOOR)
    t = np.asarray(targets, dtype=np.float64)
    if p.shape != t.shape:
        raise ShapeError(f"probabilities {p.shape} vs targets {t.shape}")
    return float(np.mean(-(t * np.log(p) + (1.0 - t) * np.log(1.0 - p))))


def _prf(tp, fp, fn):
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn) if tp + fn > 0 else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return precision, recall, f1


@dataclass
class MetricsReport:
    metrics: dict
    dataset: str = ""
    horizon: int = 0
    config_hash: str = ""
    seed: int = 0
    meta: dict = field(default_factory=dict)

    def __getitem__(self, name):
        return self.metrics[name]

    def to_dict(self):
        return {
            "dataset": self.dataset,
            "horizon": self.horizon,
            "config_hash": self.config_hash,
            "seed": self.seed,
            "metrics": self.metrics,
            "meta": self.meta,
        }

    def write_json(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True))

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["dataset", "horizon", "metric", "value"])
            for name, value in self.metrics.items():
                writer.writerow([self.dataset, self.horizon, name, repr(float(value))])


def binary_report(probabilities, targets, threshold: float = 0.5, average: str = "micro", **meta) -> MetricsReport:
    """NLL, precision, recall and F1 for binary targets.

    Micro averaging pools TP/FP/FN over all cells; ``average="macro"``
    averages per-column scores instead.
    """
    if not 0 < threshold < 1:
        raise ValueError(f"threshold must lie in (0, 1), got {threshold}")
    p = np.asarray(probabilities, dtype=np.float64)
    t = np.asarray(targets, dtype=np.float64)
    if p.shape != t.shape:
        raise ShapeError(f"probabilities {p.shape} vs targets {t.shape}")
    if not np.all((t == 0) | (t == 1)):
        raise DataError("binary_report: targets must be 0/1")
    hit = p >= threshold
    pos = t == 1
    if average == "micro":
        tp, fp, fn = (hit & pos).sum(), (hit & ~pos).sum(), (~hit & pos).sum()
        precision, recall, f1 = _prf(int(tp), int(fp), int(fn))
    elif average == "macro":
        cols = p.reshape(-1, p.shape[-1]) if p.ndim > 1 else p[:, None]
        hit2, pos2 = hit.reshape(cols.shape), pos.reshape(cols.shape)
        scores = [
            _prf(int((hit2[:, j] & pos2[:, j]).sum()), int((hit2[:, j] & ~pos2[:, j]).sum()),
                 int((~hit2[:, j] & pos2[:, j]).sum()))
            for j in range(cols.shape[1])
        ]
        precision, recall, f1 = (float(np.mean(s)) for s in zip(*scores))
    else:
        raise ValueError(f"unknown average {average!r}")
    metrics = {"nll": cross_entropy(p, t), "precision": precision, "recall": recall, "f1": f1}
    return MetricsReport(metrics, **meta)


def continuous_report(pred, truth, **meta) -> MetricsReport:
    return MetricsReport({"rae": rae(pred, truth), "rse": rse(pred, truth), "corr": corr(pred, truth)}, **meta)
