import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tpa_forecast.analysis import (
    Spectrum,
    avg_dft,
    dft,
    dft_magnitude,
    local_peaks,
    parseval_gap,
    spectrum_alignment,
    window_rows,
)
from tpa_forecast.data import toy_series


def oracle_magnitudes(signal):
    """Direct complex sum, written independently of the matrix form."""
    n = len(signal)
    return [abs(sum(signal[t] * cmath.exp(-2j * math.pi * f * t / n) for t in range(n))) for f in range(n // 2 + 1)]


def test_constant_signal_is_pure_dc():
    spectrum = dft_magnitude(np.full(8, 1.5))
    assert spectrum.magnitudes[0] == pytest.approx(12.0, abs=1e-12)
    assert np.all(spectrum.magnitudes[1:] < 1e-12)


def test_single_sine_peak():
    t = np.arange(64)
    spectrum = dft_magnitude(np.sin(2 * np.pi * t / 8))
    assert spectrum.magnitudes[8] == pytest.approx(32.0, abs=1e-9)
    others = np.delete(spectrum.magnitudes, 8)
    assert np.all(others < 1e-9)
    assert spectrum.periods[8 - 1] == 8.0


def test_two_sines_give_two_bins():
    t = np.arange(96)
    spectrum = dft_magnitude(np.sin(2 * np.pi * t / 24) + 0.5 * np.sin(2 * np.pi * t / 8))
    nonzero = [f for f in range(1, len(spectrum.magnitudes)) if spectrum.magnitudes[f] > 1e-9]
    assert nonzero == [4, 12]


@settings(max_examples=40)
@given(seed=st.integers(0, 10**6), n=st.integers(1, 40))
def test_magnitudes_match_direct_oracle(seed, n):
    signal = np.random.default_rng(seed).standard_normal(n)
    spectrum = dft_magnitude(signal)
    assert len(spectrum.magnitudes) == n // 2 + 1
    assert np.all(spectrum.magnitudes >= 0)
    np.testing.assert_allclose(spectrum.magnitudes, oracle_magnitudes(signal.tolist()), atol=1e-9, rtol=0)


@settings(max_examples=40)
@given(seed=st.integers(0, 10**6), n=st.integers(1, 64))
def test_parseval(seed, n):
    signal = np.random.default_rng(seed).standard_normal(n)
    assert parseval_gap(signal) <= 1e-9
    full = dft(signal)
    assert full.shape == (n,)


def test_avg_dft_examples(rng):
    row = rng.standard_normal(16)
    np.testing.assert_allclose(avg_dft(row[None, :]).magnitudes, dft_magnitude(row).magnitudes, atol=1e-12)
    np.testing.assert_allclose(avg_dft(np.stack([row, row])).magnitudes, dft_magnitude(row).magnitudes, atol=1e-12)


def test_avg_dft_of_toy_pair():
    rows = toy_series(2, length=64).values.T
    spectrum = avg_dft(rows)
    assert spectrum.magnitudes[1] == pytest.approx(16.0, abs=1e-9)
    assert spectrum.magnitudes[2] == pytest.approx(16.0, abs=1e-9)
    assert np.all(np.delete(spectrum.magnitudes, [1, 2]) < 1e-9)


def test_avg_dft_zero_pads_short_rows():
    spectrum = avg_dft(np.ones((2, 3)), length=8)
    assert spectrum.length == 8 and len(spectrum.magnitudes) == 5
    assert spectrum.magnitudes[0] == pytest.approx(3.0)


def test_window_rows_flattens_series():
    inputs = np.arange(2 * 3 * 4.0).reshape(2, 3, 4)
    rows = window_rows(inputs)
    assert rows.shape == (6, 4)
    np.testing.assert_array_equal(rows[4], inputs[1, 1])


def test_dft_magnitude_rejects_matrices():
    with pytest.raises(ValueError):
        dft_magnitude(np.ones((2, 2)))


# ---------------------------------------------------------------------------
# peaks and alignment


def spectrum(mags, n=None):
    mags = np.asarray(mags, dtype=float)
    return Spectrum(mags, n or 2 * (len(mags) - 1))


def test_local_peaks_order_and_plateaus():
    s = spectrum([9, 1, 5, 2, 2, 7, 3, 4])
    assert local_peaks(s, 5) == [5, 2, 7]
    assert local_peaks(s, 2) == [5, 2]
    # a flat pair counts once, at its right edge
    assert local_peaks(spectrum([0, 1, 3, 3, 1]), 3) == [3]


def test_alignment_identical_spectra():
    s = spectrum([0, 1, 5, 1, 4, 1, 3, 0, 0])
    report = spectrum_alignment(s, s, top_j=3)
    assert report["fraction_matched"] == 1.0
    assert [m["data_bin"] for m in report["matched"]] == [2, 4, 6]


def test_alignment_disjoint_spectra():
    a = spectrum([0, 9, 0, 0, 0, 0, 0, 0, 0])
    b = spectrum([0, 0, 0, 0, 0, 0, 0, 9, 0])
    report = spectrum_alignment(a, b, top_j=1)
    assert report["fraction_matched"] == 0.0 and report["matched"] == []


def test_alignment_tolerance_and_short_lists():
    a = spectrum([0, 0, 9, 0, 0, 0, 0])
    b = spectrum([0, 0, 0, 9, 0, 0, 0])
    assert spectrum_alignment(a, b, top_j=1, tolerance=1)["fraction_matched"] == 1.0
    assert spectrum_alignment(a, b, top_j=1, tolerance=0)["fraction_matched"] == 0.0
    assert spectrum_alignment(a, b, top_j=3)["short_lists"] is True


def test_alignment_needs_matching_lengths():
    with pytest.raises(ValueError, match="pad"):
        spectrum_alignment(spectrum([0, 1, 0]), spectrum([0, 1, 0, 0]))


def test_spectrum_csv(tmp_path):
    spectrum = dft_magnitude(np.sin(2 * np.pi * np.arange(8) / 4), source="filters")
    spectrum.write_csv(tmp_path / "s.csv")
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0] == "bin,period,magnitude,source"
    assert len(lines) == 1 + 5
    assert lines[3].startswith("2,4.0,")
