"""Compare the compiled kernels with their numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--trials 20000]
"""

import argparse
import time

import numpy as np

from sagplan import _kernels


def best_of(fn, repeat=3):
    out = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        out.append(time.perf_counter() - t)
    return min(out)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=20_000)
    ap.add_argument("--states", type=int, default=2_500)
    args = ap.parse_args(argv)

    draws = np.random.default_rng(0).standard_exponential((args.trials, 400))
    mus, means = np.array([1.0, 2.0]), np.array([0.1, 0.02])
    _kernels.phase1_trials(1.0, mus, means, draws[:2])  # compile
    totals = np.linspace(0, 50, args.states)
    _kernels.dp_diagonals(totals[:2], 1.0, 0.5, 0.01, 10)

    print(f"compiled kernels active: {_kernels.USE_NUMBA}")
    rows = [
        ("phase1_trials", lambda: _kernels.phase1_trials(1.0, mus, means, draws),
         lambda: _kernels.phase1_trials_numpy(1.0, mus, means, draws)),
        ("dp_diagonals", lambda: _kernels.dp_diagonals(totals, 1.0, 0.5, 0.01, 1200),
         lambda: _kernels.dp_diagonals_numpy(totals, 1.0, 0.5, 0.01, 1200)),
    ]
    for name, fast, ref in rows:
        a, b = best_of(fast), best_of(ref)
        print(f"{name:15s} kernel {a * 1e3:8.1f} ms   numpy {b * 1e3:8.1f} ms   speedup {b / a:5.1f}x")


if __name__ == "__main__":
    main()
