"""Time the compiled LSTM kernels against the numpy fallback.

Usage: python benchmarks/bench_kernels.py [--repeat N]
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from tpa_forecast import _lstm_py

try:
    from tpa_forecast import _lstm_ext
except ImportError:
    _lstm_ext = None

SHAPES = [
    # (batch, inputs, hidden, steps)
    (64, 8, 25, 24),
    (64, 26, 32, 64),
    (128, 8, 6, 30),
    (16, 128, 64, 16),
]


def make_case(batch, n_in, hidden, steps, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((batch, n_in, steps))
    wx = rng.uniform(-0.3, 0.3, (4 * hidden, n_in))
    wh = rng.uniform(-0.3, 0.3, (4 * hidden, hidden))
    b = rng.uniform(-0.1, 0.1, 4 * hidden)
    return x, wx, wh, b


def step(module, x, wx, wh, b):
    h, gates, cells = module.lstm_forward(x, wx, wh, b)
    module.lstm_backward(np.ones_like(h), x, wx, wh, h, gates, cells)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=20, help="timed calls per shape (default: 20)")
    args = parser.parse_args()
    backends = {"numpy": _lstm_py}
    if _lstm_ext is not None:
        backends["cython"] = _lstm_ext
    else:
        print("compiled extension not built; timing the numpy fallback only")

    print(f"{'B':>4} {'n':>4} {'m':>4} {'w':>4} " + " ".join(f"{name + ' ms':>10}" for name in backends) + "   speedup")
    for shape in SHAPES:
        case = make_case(*shape)
        times = {}
        for name, module in backends.items():
            step(module, *case)
            times[name] = min(timeit.repeat(lambda: step(module, *case), number=1, repeat=args.repeat)) * 1e3
        speedup = times["numpy"] / times["cython"] if "cython" in times else float("nan")
        cols = " ".join(f"{t:10.3f}" for t in times.values())
        print(f"{shape[0]:4d} {shape[1]:4d} {shape[2]:4d} {shape[3]:4d} {cols}   {speedup:6.2f}x")


if __name__ == "__main__":
    main()
