"""End-to-end exit criteria; each test records one PASS/FAIL line."""

import csv
import os
import time
from pathlib import Path

import numpy as np
import pytest
from test_attention import _grad_check_model, conv_oracle
from test_metrics import oracle_corr, oracle_cross_entropy, oracle_rae, oracle_rse
from test_tensor import seeded_case

from tpa_forecast import cli
from tpa_forecast import tensor as T
from tpa_forecast.analysis import parseval_gap
from tpa_forecast.attention import attention_weights, temporal_conv
from tpa_forecast.data import TOY_PERIOD, TimeSeriesDataset, chronological_split, load_mts_csv, normalize, toy_series
from tpa_forecast.experiments import (
    EXCHANGE_CONFIG,
    PLANTED_CONFIG,
    PLANTED_PERIODS,
    filter_alignment,
    forecast_benchmark,
    momentum_walks,
    planted_series,
    run_toy,
)
from tpa_forecast.layers import ModelConfig
from tpa_forecast.metrics import corr, cross_entropy, rae, rse
from tpa_forecast.training import deterministic_history

pytestmark = pytest.mark.acceptance

SEEDS = (0, 1, 2)
EXCHANGE_ENV = "TPA_EXCHANGE_RATE_CSV"
EXCHANGE_DEFAULT = Path(__file__).resolve().parents[1] / "data" / "exchange_rate.txt"

# first-run results, compared against reruns by the determinism check
_FIRST = {}


def once(key, compute):
    if key not in _FIRST:
        _FIRST[key] = compute()
    return _FIRST[key]


def exchange_rate_path():
    path = Path(os.environ.get(EXCHANGE_ENV, EXCHANGE_DEFAULT))
    return path if path.is_file() else None


# ---------------------------------------------------------------------------
# experiment runners, each returning a comparable summary


def toy_cells(cells):
    """``{(D, family, variant): {"runs": [...], "secs": float}}`` over three seeds."""
    out = {}
    for D, family, variant in cells:
        started = time.perf_counter()
        runs = [run_toy(D, family, variant, s) for s in SEEDS]
        out[(D, family, variant)] = {"runs": runs, "secs": time.perf_counter() - started}
    return out


def toy_mean(cells, key):
    return float(np.mean([r.loss for r in cells[key]["runs"]]))


def toy_fingerprint(cells):
    return {k: [(r.loss, deterministic_history(r.history)) for r in v["runs"]] for k, v in cells.items()}


FAILURE_CELLS = [(D, "independent", v) for D in (16, 26) for v in ("tpa", "lstm", "luong")]
D6_CELLS = [(6, fam, v) for fam in ("independent", "mixed") for v in ("tpa", "lstm", "luong", "tpa-no-cnn")]


def failure_mode_runs():
    return toy_cells(FAILURE_CELLS)


def d6_runs():
    return toy_cells(D6_CELLS)


def spectral_run():
    started = time.perf_counter()
    report, result = filter_alignment(planted_series())
    return {"report": report, "history": deterministic_history(result.history), "secs": time.perf_counter() - started}


def forecast_run(data):
    started = time.perf_counter()
    report, baseline, result = forecast_benchmark(data)
    return {
        "report": report.to_dict(),
        "baseline": baseline.to_dict(),
        "history": deterministic_history(result.history),
        "secs": time.perf_counter() - started,
    }


# ---------------------------------------------------------------------------
# 1. gradient correctness


def test_c1_gradient_correctness(verdict):
    started = time.perf_counter()
    worst = {
        kind: max(T.grad_check(*seeded_case(kind, seed), step=1e-6) for seed in range(20))
        for kind in sorted(T.PRIMITIVES)
    }
    model_errors = [
        _grad_check_model(ModelConfig(n_series=8, window=5, hidden=4, layers=1 + s % 2, filters=3, ar_window=2), s)
        for s in SEEDS
    ]
    secs = time.perf_counter() - started
    prim_kind = max(worst, key=worst.get)
    prim = worst[prim_kind]
    model = max(model_errors)
    ok = prim <= 1e-4 and model <= 1e-4 and secs < 60
    verdict(
        "C1 gradient correctness",
        ok,
        f"{len(worst)} primitives max rel err {prim:.2e} ({prim_kind}), "
        f"full TPA+L1 {model:.2e} (<= 1e-4), {secs:.1f}s (< 60s)",
    )
    assert ok


# ---------------------------------------------------------------------------
# 2. metric oracles


def test_c2_metric_oracles(verdict):
    started = time.perf_counter()
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(100):
        n, d = rng.integers(2, 12), rng.integers(1, 5)
        truth = rng.standard_normal((n, d)) * rng.uniform(0.5, 20) + rng.uniform(-5, 5)
        pred = truth + rng.standard_normal((n, d))
        t, p = truth.tolist(), pred.tolist()
        probs = rng.uniform(0, 1, (n, d))
        targets = (rng.uniform(0, 1, (n, d)) < 0.3).astype(float)
        worst = max(
            worst,
            abs(rae(pred, truth) - oracle_rae(p, t)),
            abs(rse(pred, truth) - oracle_rse(p, t)),
            abs(corr(pred, truth) - oracle_corr(p, t)),
            abs(cross_entropy(probs, targets) - oracle_cross_entropy(probs, targets)),
        )
    truth = np.array([[0.0], [2.0]])
    hand = (
        rae(np.array([[0.0], [1.0]]), truth) == 0.5
        and rse(np.array([[1.0], [1.0]]), truth) == 1.0
        and corr(np.array([3.0, 2.0, 1.0]), np.array([1.0, 2.0, 3.0])) == -1.0
    )
    secs = time.perf_counter() - started
    ok = worst <= 1e-12 and hand and secs < 10
    verdict("C2 metric oracles", ok, f"100 instances max |diff| {worst:.1e} (<= 1e-12), hand examples exact={hand}, "
            f"{secs:.2f}s (< 10s)")
    assert ok


# ---------------------------------------------------------------------------
# 3. convolution oracle


def test_c3_convolution_oracle(verdict):
    started = time.perf_counter()
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(100):
        m, w, k = rng.integers(1, 9, size=3)
        span = rng.integers(1, w + 1)
        H = rng.standard_normal((m, w))
        filters = rng.standard_normal((k, span))
        worst = max(worst, float(np.max(np.abs(temporal_conv(H, filters).value - conv_oracle(H, filters)))))
    secs = time.perf_counter() - started
    ok = worst <= 1e-12 and secs < 10
    verdict("C3 convolution oracle", ok, f"100 (m, w, k, T) instances max |diff| {worst:.1e} (<= 1e-12), "
            f"{secs:.2f}s (< 10s)")
    assert ok


# ---------------------------------------------------------------------------
# 4-6. toy examples


def test_c4_toy_failure_mode(verdict):
    cells = once("c4", failure_mode_runs)
    secs = sum(c["secs"] for c in cells.values())
    parts, ok = [], secs < 30 * 60
    for D in (16, 26):
        tpa, lstm, luong = (toy_mean(cells, (D, "independent", v)) for v in ("tpa", "lstm", "luong"))
        budget = cells[(D, "independent", "tpa")]["runs"][0].params
        spread = max(abs(cells[(D, "independent", v)]["runs"][0].params - budget) / budget for v in ("lstm", "luong"))
        ok &= tpa < lstm < luong and luong / tpa >= 2.0 and spread <= 0.05
        parts.append(f"D={D} tpa {tpa:.4g} < lstm {lstm:.4g} < luong {luong:.4g}, luong/tpa {luong / tpa:.2f}x "
                     f"(>= 2), params within {spread:.1%}")
    verdict("C4 toy failure mode", ok, "; ".join(parts) + f"; {secs / 60:.1f} min (< 30)")
    assert ok


def test_c5_interdependency_benefit(verdict):
    cells = once("d6", d6_runs)
    secs = sum(cells[(6, f, v)]["secs"] for f in ("independent", "mixed") for v in ("tpa", "lstm", "luong"))
    ratios = {v: toy_mean(cells, (6, "mixed", v)) / toy_mean(cells, (6, "independent", v)) for v in
              ("tpa", "lstm", "luong")}
    ok = ratios["tpa"] < 1.0 and ratios["lstm"] >= 0.95 and ratios["luong"] >= 0.95 and secs < 15 * 60
    detail = ", ".join(f"{v} mixed/independent {r:.3f}" for v, r in ratios.items())
    verdict("C5 interdependency benefit", ok, f"D=6 {detail} (tpa < 1, others >= 0.95); {secs / 60:.1f} min (< 15)")
    assert ok


def test_c6_no_cnn_parity(verdict):
    cells = once("d6", d6_runs)
    secs = sum(cells[(6, f, "tpa-no-cnn")]["secs"] for f in ("independent", "mixed"))
    gaps = {}
    for family in ("independent", "mixed"):
        tpa = toy_mean(cells, (6, family, "tpa"))
        gaps[family] = abs(toy_mean(cells, (6, family, "tpa-no-cnn")) - tpa) / tpa
    ok = max(gaps.values()) <= 0.25 and secs < 15 * 60
    detail = ", ".join(f"{f} {g:.1%}" for f, g in gaps.items())
    verdict("C6 no-CNN parity", ok, f"D=6 relative gap {detail} (<= 25%); {secs / 60:.1f} min (< 15)")
    assert ok


def test_toy_cli_mixed_family_example(verdict, capsys):
    code = cli.main(["toy", "--variants", "tpa,luong", "--d", "6,16", "--family", "mixed"])
    folder = Path(capsys.readouterr().out.strip())
    with open(folder / "toy_loss.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    loss = {(int(r["D"]), r["variant"]): float(r["mean_loss"]) for r in rows}
    ok = code == 0 and len(rows) == 4 and all(loss[(D, "tpa")] < loss[(D, "luong")] for D in (6, 16))
    detail = ", ".join(f"D={D} tpa {loss[(D, 'tpa')]:.4g} vs luong {loss[(D, 'luong')]:.4g}" for D in (6, 16))
    verdict("toy CLI example (mixed, tpa < luong per row)", ok, f"{len(rows)} rows; {detail}")
    assert ok


# ---------------------------------------------------------------------------
# 7. spectral property


def test_c7_spectral_alignment(verdict):
    run = once("c7", spectral_run)
    report = run["report"]
    planted = [PLANTED_CONFIG.window // p for p in PLANTED_PERIODS]
    matched = [m["data_bin"] for m in report["matched"]]
    hits = {b: any(abs(b - m) <= 1 for m in matched) for b in planted}
    ok = all(hits.values()) and run["secs"] < 20 * 60
    verdict(
        "C7 spectral alignment",
        ok,
        f"planted bins {planted} (periods {list(PLANTED_PERIODS)}) matched={hits}; data peaks "
        f"{[p['bin'] for p in report['data_peaks']]}, filter peaks {[p['bin'] for p in report['filter_peaks']]}; "
        f"{run['secs']:.0f}s (< 20 min)",
    )
    assert ok


# ---------------------------------------------------------------------------
# 8. exchange-rate target


def test_c8_exchange_rate(verdict):
    path = exchange_rate_path()
    if path is None:
        verdict("C8 exchange rate", None, f"dataset absent (set {EXCHANGE_ENV} or add {EXCHANGE_DEFAULT.name} "
                "under data/); see the labelled synthetic proxy below")
        pytest.skip("Exchange Rate CSV not available")
    run = once("c8", lambda: forecast_run(load_mts_csv(path)))
    model, naive = run["report"]["metrics"]["rae"], run["baseline"]["metrics"]["rae"]
    ok = model <= 0.025 and model < naive and run["secs"] < 45 * 60
    verdict("C8 exchange rate", ok, f"test RAE {model:.4f} (<= 0.025), persistence RAE {naive:.4f}, "
            f"w={EXCHANGE_CONFIG.window} m={EXCHANGE_CONFIG.hidden} horizon {EXCHANGE_CONFIG.horizon}; "
            f"{run['secs'] / 60:.1f} min (< 45)")
    assert ok


def test_c8_synthetic_proxy(verdict):
    run = once("c8-proxy", lambda: forecast_run(momentum_walks()))
    model, naive = run["report"]["metrics"]["rae"], run["baseline"]["metrics"]["rae"]
    ok = model <= 0.025 and model < naive
    verdict("C8 proxy (synthetic momentum walks, not the real data)", ok,
            f"test RAE {model:.4f} (<= 0.025), persistence RAE {naive:.4f}; {run['secs']:.0f}s")
    assert ok


# ---------------------------------------------------------------------------
# 9. determinism


def test_c9_determinism(verdict):
    started = time.perf_counter()
    checks = {
        "C4 toys": (once("c4", failure_mode_runs), failure_mode_runs, toy_fingerprint),
        "C5/C6 toys": (once("d6", d6_runs), d6_runs, toy_fingerprint),
        "C7 spectra": (once("c7", spectral_run), spectral_run, lambda r: (r["report"], r["history"])),
        "C8 proxy": (
            once("c8-proxy", lambda: forecast_run(momentum_walks())),
            lambda: forecast_run(momentum_walks()),
            lambda r: (r["report"], r["baseline"], r["history"]),
        ),
    }
    path = exchange_rate_path()
    if path is not None:
        rerun = lambda: forecast_run(load_mts_csv(path))  # noqa: E731
        checks["C8 exchange rate"] = (once("c8", rerun), rerun, lambda r: (r["report"], r["history"]))
    same = {name: fp(first) == fp(again()) for name, (first, again, fp) in checks.items()}
    ok = all(same.values())
    skipped = "" if path is not None else "; C8 real data not run"
    verdict("C9 determinism", ok, f"bitwise-identical reruns {same}{skipped}; "
            f"{(time.perf_counter() - started) / 60:.1f} min")
    assert ok


# ---------------------------------------------------------------------------
# 10. invariant suite


def test_c10_invariants(verdict):
    started = time.perf_counter()
    rng = np.random.default_rng(10)
    results = {}

    weights_ok = softmax_ok = True
    for _ in range(200):
        # float64 sigmoid rounds to 1 beyond about 36.7, so scores stay within +-20
        scores = rng.uniform(-20, 20, rng.integers(2, 12))
        sig = attention_weights(scores, "sigmoid").value
        soft = attention_weights(scores, "softmax").value
        order = np.argsort(scores, kind="stable")
        scaled = attention_weights(scores * rng.uniform(0.1, 10), "softmax").value
        weights_ok &= bool(
            np.all((sig > 0) & (sig < 1))
            and np.all(soft >= 0)
            and abs(soft.sum() - 1) <= 1e-12
            and np.all(np.diff(scaled[order]) >= 0)
        )
        sm = T.softmax(scores).value
        softmax_ok &= bool(abs(sm.sum() - 1) <= 1e-12 and np.all((sm > 0) & (sm < 1)))
    results["attention weights"] = weights_ok
    results["softmax sum"] = softmax_ok

    periodic = True
    for D in (1, 6, 26, 56):
        for family in ("independent", "mixed"):
            v = toy_series(D, family, length=3 * TOY_PERIOD).values
            periodic &= bool(np.max(np.abs(v[TOY_PERIOD:] - v[:-TOY_PERIOD])) <= 1e-9)
    results["toy 64-periodicity"] = periodic

    split_ok = round_trip = True
    for _ in range(50):
        values = rng.standard_normal((int(rng.integers(5, 300)), int(rng.integers(1, 5)))) * rng.uniform(0.1, 1e4)
        ds = TimeSeriesDataset(values)
        split_ok &= bool(np.array_equal(np.concatenate([p.values for p in chronological_split(ds)]), values))
        for mode in ("per-series", "global", "none"):
            normed, state = normalize(ds, mode)
            back = state.invert(normed.values)
            round_trip &= bool(np.max(np.abs(back - values) / np.maximum(np.abs(values), 1e-300)) <= 1e-12)
    results["split reconstruction"] = split_ok
    results["normalization round-trip"] = round_trip

    results["Parseval"] = all(parseval_gap(rng.standard_normal(rng.integers(1, 169))) <= 1e-9 for _ in range(100))

    secs = time.perf_counter() - started
    ok = all(results.values()) and secs < 60
    verdict("C10 invariant suite", ok, f"{results}; {secs:.1f}s (< 60s)")
    assert ok
