import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tpa_forecast.data import (
    TOY_PERIOD,
    NormalizationState,
    TimeSeriesDataset,
    chronological_split,
    load_mts_csv,
    load_pianoroll,
    load_pianoroll_dir,
    make_windows,
    normalize,
    split_bounds,
    split_manifest,
    split_pieces,
    toy_series,
    window_arrays,
)
from tpa_forecast.errors import DataError

# ---------------------------------------------------------------------------
# loaders


def test_load_small_csv(tmp_path):
    path = tmp_path / "tiny.csv"
    path.write_text("1,2\n3,4\n5,6\n")
    ds = load_mts_csv(path)
    assert (ds.length, ds.width) == (3, 2)
    assert ds.name == "tiny" and ds.kind == "continuous"


def test_header_line_is_skipped(tmp_path):
    path = tmp_path / "h.csv"
    path.write_text("a,b\n1,2\n3,4\n")
    assert load_mts_csv(path).values.tolist() == [[1.0, 2.0], [3.0, 4.0]]


@pytest.mark.parametrize(
    "text, match",
    [
        ("", "empty"),
        ("1,2\n3\n", "row 2"),
        ("1,2\n3,x\n", "row 2, column 2"),
        ("1,2\n3,nan\n", "row 2, column 2"),
    ],
)
def test_loader_errors(tmp_path, text, match):
    path = tmp_path / "bad.csv"
    path.write_text(text)
    with pytest.raises(DataError, match=match):
        load_mts_csv(path)


def test_missing_file(tmp_path):
    with pytest.raises(DataError, match="not found|No such|does not exist"):
        load_mts_csv(tmp_path / "nope.csv")


def test_pianoroll_loading(tmp_path):
    rests = tmp_path / "rests.csv"
    np.savetxt(rests, np.zeros((16, 128)), delimiter=",", fmt="%d")
    ds = load_pianoroll(rests)
    assert (ds.length, ds.width, ds.kind) == (16, 128, "binary")
    assert not ds.values.any()

    bad = tmp_path / "bad.csv"
    roll = np.zeros((4, 128))
    roll[2, 5] = 2
    np.savetxt(bad, roll, delimiter=",", fmt="%d")
    with pytest.raises(DataError, match="row 3, column 6"):
        load_pianoroll(bad)

    narrow = tmp_path / "narrow.csv"
    np.savetxt(narrow, np.zeros((4, 12)), delimiter=",", fmt="%d")
    with pytest.raises(DataError, match="128"):
        load_pianoroll(narrow)


def test_pianoroll_directory(tmp_path):
    for name in ("b", "a"):
        np.savetxt(tmp_path / f"{name}.csv", np.eye(3, 128), delimiter=",", fmt="%d")
    pieces = load_pianoroll_dir(tmp_path)
    assert [p.name for p in pieces] == ["a", "b"]
    with pytest.raises(DataError, match="no piano-roll"):
        load_pianoroll_dir(tmp_path / "missing")


def test_dataset_invariants():
    with pytest.raises(DataError):
        TimeSeriesDataset(np.zeros((0, 2)))
    with pytest.raises(DataError):
        TimeSeriesDataset(np.array([[1.0, np.nan]]))
    with pytest.raises(DataError, match="0/1"):
        TimeSeriesDataset(np.array([[0.5]]), kind="binary")


# ---------------------------------------------------------------------------
# splits


def test_split_examples():
    assert split_bounds(10, (0.6, 0.2, 0.2)) == [0, 6, 8, 10]
    assert split_bounds(3, (1 / 3, 1 / 3, 1 / 3)) == [0, 1, 2, 3]
    assert split_bounds(10, (0.8, 0.1, 0.1)) == [0, 8, 9, 10]


def test_split_errors():
    with pytest.raises(DataError, match="sum to 1"):
        split_bounds(10, (0.5, 0.2, 0.2))
    with pytest.raises(DataError, match="empty"):
        split_bounds(2, (0.6, 0.2, 0.2))


@settings(max_examples=40)
@given(length=st.integers(5, 300), d=st.integers(1, 4), seed=st.integers(0, 1000))
def test_chronological_split_reconstructs_the_dataset(length, d, seed):
    values = np.random.default_rng(seed).standard_normal((length, d))
    parts = chronological_split(TimeSeriesDataset(values))
    np.testing.assert_array_equal(np.concatenate([p.values for p in parts]), values)


def test_piece_split_is_seeded_and_complete():
    pieces = [TimeSeriesDataset(np.zeros((2, 1)), name=str(i)) for i in range(20)]
    a = split_pieces(pieces, seed=3)
    b = split_pieces(pieces, seed=3)
    assert [[p.name for p in part] for part in a] == [[p.name for p in part] for part in b]
    assert [len(part) for part in a] == [16, 2, 2]
    assert sorted(p.name for part in a for p in part) == sorted(p.name for p in pieces)


def test_split_manifest(tmp_path):
    doc = split_manifest("x", [0, 6, 8, 10], NormalizationState("none", np.ones(2)), 4, tmp_path / "s.json")
    assert doc["row_ranges"] == {"train": [0, 6], "val": [6, 8], "test": [8, 10]}
    assert (tmp_path / "s.json").exists()


# ---------------------------------------------------------------------------
# normalization


def test_normalization_examples():
    ds = TimeSeriesDataset(np.array([[1.0, 0.0], [2.0, 0.0], [4.0, 0.0]]))
    normed, state = normalize(ds, "per-series")
    assert normed.values[:, 0].tolist() == [0.25, 0.5, 1.0]
    assert normed.values[:, 1].tolist() == [0.0, 0.0, 0.0]
    assert state.scale.tolist() == [4.0, 1.0]

    ds = TimeSeriesDataset(np.array([[10.0, 2.0], [-3.0, 5.0]]))
    normed, state = normalize(ds, "global")
    np.testing.assert_array_equal(normed.values, ds.values / 10.0)

    normed, _ = normalize(ds, "none")
    np.testing.assert_array_equal(normed.values, ds.values)
    with pytest.raises(ValueError):
        normalize(ds, "zscore")


def test_normalization_reuses_fitted_state():
    train = TimeSeriesDataset(np.array([[2.0], [4.0]]))
    _, state = normalize(train)
    test, _ = normalize(TimeSeriesDataset(np.array([[8.0]])), state=state)
    assert test.values.tolist() == [[2.0]]


@settings(max_examples=40)
@given(seed=st.integers(0, 10**6), mode=st.sampled_from(["per-series", "global", "none"]))
def test_normalization_round_trip(seed, mode):
    rng = np.random.default_rng(seed)
    values = rng.standard_normal((20, 3)) * rng.uniform(0.1, 1e4, 3)
    normed, state = normalize(TimeSeriesDataset(values), mode)
    assert np.all(state.scale > 0)
    back = state.invert(normed.values)
    assert np.max(np.abs(back - values) / np.maximum(np.abs(values), 1e-300)) <= 1e-12


# ---------------------------------------------------------------------------
# windows


@pytest.mark.parametrize("length, window, horizon, count", [(10, 3, 1, 7), (10, 3, 3, 5), (7, 4, 3, 1)])
def test_window_counts(length, window, horizon, count):
    ds = TimeSeriesDataset(np.arange(length * 2.0).reshape(length, 2))
    assert len(make_windows(ds, window, horizon)) == count


def test_too_short_for_any_window():
    with pytest.raises(DataError, match="too short"):
        window_arrays(TimeSeriesDataset(np.zeros((3, 1))), 3, 1)


@settings(max_examples=40)
@given(length=st.integers(2, 60), d=st.integers(1, 3), data=st.data())
def test_windows_read_the_source_at_their_origin(length, d, data):
    window = data.draw(st.integers(1, length - 1))
    horizon = data.draw(st.integers(1, length - window))
    values = np.random.default_rng(length).standard_normal((length, d))
    for sample in make_windows(TimeSeriesDataset(values), window, horizon):
        t = sample.origin
        np.testing.assert_array_equal(sample.input, values[t - window : t].T)
        np.testing.assert_array_equal(sample.target, values[t - 1 + horizon])


# ---------------------------------------------------------------------------
# toy series


def test_toy_examples():
    ind = toy_series(3, "independent")
    assert ind.values[16, 0] == pytest.approx(1.0, abs=1e-15)
    assert np.all(ind.values[0] == 0.0)
    mixed = toy_series(2, "mixed")
    assert mixed.values[16, 0] == pytest.approx(math.sin(math.pi / 2) + math.sin(math.pi), abs=1e-15)
    np.testing.assert_array_equal(toy_series(1, "mixed").values, toy_series(1, "independent").values)
    with pytest.raises(ValueError):
        toy_series(2, "noisy")


@pytest.mark.parametrize("family", ["independent", "mixed"])
@pytest.mark.parametrize("D", [1, 2, 6, 26])
def test_toy_period(family, D):
    values = toy_series(D, family, length=3 * TOY_PERIOD).values
    assert np.max(np.abs(values[TOY_PERIOD:] - values[:-TOY_PERIOD])) <= 1e-9


def test_toy_training_set_has_64_samples():
    inputs, targets, _ = window_arrays(toy_series(4), TOY_PERIOD, 1)
    assert inputs.shape == (64, 4, 64) and targets.shape == (64, 4)
