#!/usr/bin/env python3
"""Benchmark the compiled Jacobi kernel against the numpy fallback.

Two legs:

* raw eigensolver throughput over a range of dimensions (plus the LAPACK
  reference timing for context), and
* an end-to-end leg timing a fidelity SDP solve, whose inner loop is
  dominated by the eigensolver.

Usage::

    python benchmarks/bench_backends.py --dims 4 8 16 32 64 --repeats 20
"""

import argparse
import time

import numpy as np

from cohdist import backend
from cohdist.distill import assisted_fidelity_sdp
from cohdist.hermat import eig_hermitian, random_density


def time_call(fn, repeats):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_eig(dims, repeats):
    rng = np.random.default_rng(0)
    print(f"{'dim':>5} | " + " | ".join(f"{name:>12}" for name in backend.available_backends())
          + " | " + f"{'lapack':>12}")
    print("-" * (8 + 15 * (len(backend.available_backends()) + 1)))
    for n in dims:
        a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        a = 0.5 * (a + a.conj().T)
        row = []
        for name in backend.available_backends():
            backend.set_backend(name)
            row.append(time_call(lambda: eig_hermitian(a), repeats))
        ref = time_call(lambda: np.linalg.eigh(a), repeats)
        print(f"{n:>5} | " + " | ".join(f"{t * 1e3:>10.3f}ms" for t in row)
              + " | " + f"{ref * 1e3:>10.3f}ms")


def bench_sdp(repeats):
    rng = np.random.default_rng(1)
    rho = random_density(3, rng)
    print("\nend-to-end: fidelity SDP on a random qutrit (m = 2)")
    for name in backend.available_backends():
        backend.set_backend(name)
        t = time_call(lambda: assisted_fidelity_sdp(rho, 2), max(1, repeats // 4))
        print(f"  {name:>8}: {t * 1e3:8.1f}ms")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--dims", type=int, nargs="+", default=[4, 8, 16, 32, 64])
    parser.add_argument("--repeats", type=int, default=10)
    args = parser.parse_args()

    initial = backend.active_backend()
    print(f"available backends: {backend.available_backends()} (default {initial})\n")
    try:
        bench_eig(args.dims, args.repeats)
        bench_sdp(args.repeats)
    finally:
        backend.set_backend(initial)


if __name__ == "__main__":
    main()
