"""Time the compiled kernels against the NumPy fallback.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import time

import numpy as np

from kolmogorov_fk import kernels


def _time(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def cases():
    rng = np.random.default_rng(0)
    ids = np.arange(4096, dtype=np.uint64)
    n = 2001
    lower = np.full(n, -1.0)
    upper = np.full(n, -1.0)
    diag = np.full(n, 4.0)
    rhs = rng.standard_normal(n)
    pts = rng.uniform(-1, 1, (2000, 2))
    vals = np.sin(3 * pts).sum(axis=1)
    return {
        "uniform_block 4096x200": lambda: kernels.uniform_block(7, 0, ids, 0, 200, 1),
        "thomas n=2001": lambda: kernels.thomas(lower, diag, upper, rhs),
        "holder_max n=2000 d=2": lambda: kernels.holder_max(pts, vals, 0.5),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    names = sorted(kernels.BACKENDS)
    if "compiled" not in names:
        print("compiled extension not built; only the fallback is timed")
    print(f"{'kernel':28s}" + "".join(f"{n:>12s}" for n in names) + ("     speedup  same" if len(names) > 1 else ""))
    previous = kernels.BACKEND
    try:
        for label, fn in cases().items():
            times, outs = [], []
            for name in names:
                kernels.use_backend(name)
                t, out = _time(fn, args.repeat)
                times.append(t)
                outs.append(out)
            line = f"{label:28s}" + "".join(f"{t:12.4f}" for t in times)
            if len(names) > 1:
                same = all(np.array_equal(np.asarray(a, dtype=float), np.asarray(b, dtype=float)) for a, b in zip(np.atleast_1d(outs[0]), np.atleast_1d(outs[1])))
                line += f"{times[1] / times[0]:12.1f}x  {same}"
            print(line)
    finally:
        kernels.use_backend(previous)


if __name__ == "__main__":
    main()
