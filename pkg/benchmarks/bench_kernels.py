"""Compare the compiled kernels with the numpy fallback.

Run from the repository root::

    python3 benchmarks/bench_kernels.py [--repeat 5] [--scale 1.0]
"""

import argparse
import timeit

import numpy as np

from recurlab import _kernels_py as py

try:
    from recurlab import _kernels as cy
except ImportError:
    cy = None


def cases(scale, rng):
    n_rows = int(200_000 * scale)
    rows = np.unique(rng.integers(0, 4, size=(n_rows, 12)).astype(np.uint8), axis=0)
    lcp, _ = py.lcp_array(rows)
    P = np.array([[0.9, 0.1], [0.1, 0.9]])
    cum = np.cumsum(P, axis=1)
    cum_init = np.cumsum([0.5, 0.5])
    u = rng.random(int(1_000_000 * scale))
    cover_rows = np.ascontiguousarray(rng.integers(0, 2, size=(int(3000 * scale), 16)).astype(np.uint8))
    return {
        "lcp_array": lambda k: k.lcp_array(rows),
        "support_dp": lambda k: k.support_dp(lcp, rows.shape[1]),
        "markov_sample": lambda k: k.markov_sample(cum_init, cum, u),
        "greedy_cover": lambda k: k.greedy_cover(cover_rows, 3),
    }


def check_agreement(table):
    if cy is None:
        return
    for name, fn in table.items():
        a, b = fn(py), fn(cy)
        a, b = (a, b) if isinstance(a, tuple) else ((a,), (b,))
        if len(a) != len(b) or not all(np.array_equal(x, y) for x, y in zip(a, b)):
            raise SystemExit(f"{name}: backends disagree")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--scale", type=float, default=1.0, help="multiply input sizes")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    table = cases(args.scale, np.random.default_rng(args.seed))
    check_agreement(table)
    print(f"{'kernel':<14} {'python (ms)':>12} {'cython (ms)':>12} {'speedup':>8}")
    for name, fn in table.items():
        t_py = min(timeit.repeat(lambda: fn(py), number=1, repeat=args.repeat)) * 1e3
        if cy is None:
            print(f"{name:<14} {t_py:12.2f} {'n/a':>12} {'n/a':>8}")
            continue
        t_cy = min(timeit.repeat(lambda: fn(cy), number=1, repeat=args.repeat)) * 1e3
        print(f"{name:<14} {t_py:12.2f} {t_cy:12.2f} {t_py / t_cy:7.1f}x")


if __name__ == "__main__":
    main()
