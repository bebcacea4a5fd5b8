"""Timing comparison of the two transport-kernel implementations.

Runs the 1e6-trial Monte Carlo through the numba-compiled scalar loop
and through the chunked numpy path, on a few representative (p, L)
points, and reports wall time plus whether the integer outputs agree.

    python3 benchmarks/bench_transport.py [trials]
"""

import sys
import time

import numpy as np

from hopfilter import _kernels


def timed(fn, *args, repeat=3):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    trials = int(sys.argv[1]) if len(sys.argv) > 1 else 1_000_000
    points = [(0.4, 1), (0.5, 3), (0.7, 8), (0.3, -1)]
    seed = 2024

    # trigger compilation outside the timed region
    _kernels.transport_counts_numba(seed, 100, 0.5, 3, 10)

    print(f"{trials} trials, N=10 hops (best of 3)")
    print(f"{'p':>5} {'L':>4} {'numba':>10} {'numpy':>10} {'ratio':>7}  outputs")
    for p, cap in points:
        t_nb, out_nb = timed(_kernels.transport_counts_numba,
                             seed, trials, p, cap, 10)
        t_np, out_np = timed(_kernels.transport_counts_numpy,
                             seed, trials, p, cap, 10)
        same = (np.array_equal(out_nb[0], out_np[0])
                and np.array_equal(out_nb[1], out_np[1]))
        cap_txt = "inf" if cap < 0 else cap
        print(f"{p:>5} {cap_txt:>4} {t_nb:>9.3f}s {t_np:>9.3f}s "
              f"{t_np / t_nb:>6.2f}x  {'equal' if same else 'DIFFER'}")


if __name__ == "__main__":
    main()
