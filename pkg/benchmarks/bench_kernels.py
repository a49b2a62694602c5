"""Time the compiled kernels against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import copy
import random
import timeit

import numpy as np

from lpx import _kernels_py as py

try:
    from lpx import _ckernels as ck
except ImportError:
    ck = None


def int_matrix(n, seed):
    r = random.Random(seed)
    return [[r.randint(-9, 9) for _ in range(n)] for _ in range(n)]


def cases():
    A = int_matrix(24, 1)
    Ai = int_matrix(24, 2)
    yield "gauss_jordan_int 24x24", lambda k: k.gauss_jordan_int(copy.deepcopy(A), 24)
    yield ("gauss_jordan_gauss 16x16",
           lambda k: k.gauss_jordan_gauss(copy.deepcopy(A[:16]), copy.deepcopy(Ai[:16]), 16))

    rng = np.random.default_rng(0)
    W = np.zeros((2, 2, 2))
    W[0, 0, 0] = W[1, 0, 1] = W[1, 1, 0] = 1.0
    c = np.zeros((3, 3, 3))
    for (i, j, k), v in {(0, 1, 2): 1, (1, 2, 0): 1, (2, 0, 1): 1}.items():
        c[i, j, k], c[j, i, k] = v, -v
    Q = np.zeros((6, 6))
    Q[:3, :3] = np.diag([1.0, 0.5, 1 / 3])
    b = np.r_[np.zeros(3), 0.0, 0.0, 1.0]
    x0 = rng.normal(size=6)
    yield "rk4_quadratic heavy top 2000 steps", lambda k: k.rk4_quadratic(W, c, Q, b, x0, 1e-3, 2000)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if ck is None:
        print("compiled kernels not built; only the fallback is timed")
    print(f"{'kernel':40s} {'python [ms]':>12s} {'cython [ms]':>12s} {'speedup':>8s}")
    for name, fn in cases():
        tp = min(timeit.repeat(lambda: fn(py), number=1, repeat=args.repeat)) * 1e3
        if ck is None:
            print(f"{name:40s} {tp:12.2f}")
            continue
        tc = min(timeit.repeat(lambda: fn(ck), number=1, repeat=args.repeat)) * 1e3
        print(f"{name:40s} {tp:12.2f} {tc:12.2f} {tp / tc:7.1f}x")


if __name__ == "__main__":
    main()
