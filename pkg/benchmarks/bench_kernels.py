"""Compiled vs pure-Python kernels on the two hot loops.

    python3 benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import timeit

import numpy as np

from qmcomb import _fallback

try:
    from qmcomb import _kernels
except ImportError:
    _kernels = None


def cases():
    nus = np.linspace(-4, 4, 4001)
    n = 20_000
    t = np.arange(n) * 0.005
    a = np.exp(-((t - 25) ** 2) / 8).astype(complex)
    mid = 0.5 * (a[:-1] + a[1:])
    return {
        "block_response_grid (4001 nu)": lambda impl: impl.block_response_grid(nus, -1, 0, 1, 3.47, 0.29),
        f"rk4_block ({n} steps)": lambda impl: impl.rk4_block(a, mid, 0.005, -1, 0, 1, 3.47, 0.29),
        f"rk4_resonator ({n} steps)": lambda impl: impl.rk4_resonator(a, mid, 0.005, 1.0, 3.0),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _kernels is None:
        print("compiled extension not built; only the fallback is available")
    print(f"{'kernel':32s} {'python ms':>10s} {'cython ms':>10s} {'speedup':>8s}")
    for name, fn in cases().items():
        py = min(timeit.repeat(lambda: fn(_fallback), number=1, repeat=max(1, args.repeat // 2)))
        if _kernels is None:
            print(f"{name:32s} {py * 1e3:10.2f} {'-':>10s} {'-':>8s}")
            continue
        cy = min(timeit.repeat(lambda: fn(_kernels), number=1, repeat=args.repeat))
        print(f"{name:32s} {py * 1e3:10.2f} {cy * 1e3:10.3f} {py / cy:8.1f}x")


if __name__ == "__main__":
    main()
