"""Average-DFT spectra of data windows and learned filters."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np


@dataclass
class Spectrum:
    magnitudes: np.ndarray  # bins 0 .. N // 2
    length: int  # N, the transformed signal length
    source: str = "dataset"

    @property
    def periods(self) -> np.ndarray:
        """N / f for bins f >= 1 (DC has no period)."""
        return self.length / np.arange(1, len(self.magnitudes))

    def rows(self):
        for f in range(1, len(self.magnitudes)):
            yield f, self.length / f, float(self.magnitudes[f])

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["bin", "period", "magnitude", "source"])
            writer.writerow([0, "", repr(float(self.magnitudes[0])), self.source])
            for f, period, mag in self.rows():
                writer.writerow([f, repr(period), repr(mag), self.source])


def _dft_matrix(n: int, bins: int):
    f = np.arange(bins)[:, None]
    t = np.arange(n)[None, :]
    return np.exp(-2j * np.pi * ((f * t) % n) / n)


def dft(signals) -> np.ndarray:
    """Full complex DFT along the last axis by direct summation."""
    x = np.asarray(signals, dtype=np.float64)
    n = x.shape[-1]
    return x @ _dft_matrix(n, n).T


def dft_magnitude(signal, source: str = "dataset") -> Spectrum:
    """|sum_t s[t] exp(-2 pi i f t / N)| for bins f = 0 .. N // 2."""
    s = np.asarray(signal, dtype=np.float64)
    if s.ndim != 1 or s.size < 1:
        raise ValueError(f"dft_magnitude expects a non-empty vector, got shape {s.shape}")
    n = s.size
    mags = np.abs(_dft_matrix(n, n // 2 + 1) @ s)
    return Spectrum(mags, n, source)


def avg_dft(rows, source: str = "dataset", length: int | None = None) -> Spectrum:
    """Mean magnitude spectrum over the rows of an R x N matrix.

    Rows shorter than ``length`` are zero-padded on the right.
    """
    x = np.atleast_2d(np.asarray(rows, dtype=np.float64))
    if length is not None and length > x.shape[1]:
        x = np.pad(x, ((0, 0), (0, length - x.shape[1])))
    n = x.shape[1]
    mags = np.abs(x @ _dft_matrix(n, n // 2 + 1).T)
    return Spectrum(mags.mean(axis=0), n, source)


def window_rows(inputs) -> np.ndarray:
    """Flatten windows (N, D, w) into one row per (window, series)."""
    inputs = np.asarray(inputs, dtype=np.float64)
    return inputs.reshape(-1, inputs.shape[-1])


def local_peaks(spectrum: Spectrum, top: int) -> list:
    """Non-DC local maxima ordered by decreasing magnitude (at most ``top``).

    A bin is a peak when it is >= its left and > its right non-DC neighbor.
    """
    mags = spectrum.magnitudes
    last = len(mags) - 1
    peaks = []
    for f in range(1, last + 1):
        left = mags[f - 1] if f > 1 else -np.inf
        right = mags[f + 1] if f < last else -np.inf
        if mags[f] >= left and mags[f] > right:
            peaks.append(f)
    peaks.sort(key=lambda f: (-mags[f], f))
    return peaks[:top]


def spectrum_alignment(data: Spectrum, filters: Spectrum, top_j: int = 3, tolerance: int = 1) -> dict:
    """Match top-``top_j`` peaks of two spectra within ``tolerance`` bins.

    Each data peak is paired with the nearest unused filter peak. The
    matched fraction is relative to the number of data peaks found.
    """
    if len(data.magnitudes) != len(filters.magnitudes):
        raise ValueError(
            f"spectra have different bin counts ({len(data.magnitudes)} vs {len(filters.magnitudes)});"
            " pad filters to the window length first"
        )
    dp = local_peaks(data, top_j)
    fp = local_peaks(filters, top_j)
    used = set()
    pairs = []
    for f in dp:
        candidates = [g for g in fp if g not in used and abs(g - f) <= tolerance]
        if candidates:
            g = min(candidates, key=lambda g: (abs(g - f), g))
            used.add(g)
            pairs.append({"data_bin": f, "filter_bin": g, "period": data.length / f})
    return {
        "top_j": top_j,
        "data_peaks": [{"bin": f, "period": data.length / f} for f in dp],
        "filter_peaks": [{"bin": f, "period": filters.length / f} for f in fp],
        "matched": pairs,
        "fraction_matched": len(pairs) / len(dp) if dp else 0.0,
        "short_lists": len(dp) < top_j or len(fp) < top_j,
    }


def parseval_gap(signal) -> float:
    """Relative gap between sum |DFT|^2 / N and sum s^2."""
    s = np.asarray(signal, dtype=np.float64)
    energy = float((s**2).sum())
    spectral = float((np.abs(dft(s)) ** 2).sum() / s.size)
    return abs(spectral - energy) / max(energy, 1e-300)
