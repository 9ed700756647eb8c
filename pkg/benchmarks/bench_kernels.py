#!/usr/bin/env python3
"""Benchmark the compiled occupancy kernel against the numpy fallback.

Workloads mirror what the attack toolkit actually rasterizes: thin
quantization rings over kilometer-scale bounds and full disks at fine cells.
Also asserts both backends return bit-identical grids on every case.

Run: python benchmarks/bench_kernels.py
"""

import math
import time

import numpy as np

from proxileak._kernels import _py

try:
    from proxileak._kernels import _annulus
except ImportError:
    _annulus = None


def ring_case(n_annuli, width, radius, cell):
    """n thin rings around vantages on a circle, the hot attack workload."""
    angles = np.linspace(0, 2 * math.pi, n_annuli, endpoint=False)
    cx = 1200.0 * np.cos(angles)
    cy = 1200.0 * np.sin(angles)
    r_out = np.full(n_annuli, radius + width / 2.0)
    r_in = np.full(n_annuli, radius - width / 2.0)
    x0 = float((cx - r_out).min())
    y0 = float((cy - r_out).min())
    nx = math.ceil(((cx + r_out).max() - x0) / cell)
    ny = math.ceil(((cy + r_out).max() - y0) / cell)
    return cx, cy, r_in, r_out, x0, y0, cell, nx, ny


CASES = [
    ("3 rings w=100m r=1km @2m", ring_case(3, 100.0, 1000.0, 2.0)),
    ("3 rings w=5m   r=1km @2m", ring_case(3, 5.0, 1000.0, 2.0)),
    ("4 rings w=300m r=2km @4m", ring_case(4, 300.0, 2000.0, 4.0)),
    ("disk r=500m @1m",
     (np.array([0.0]), np.array([0.0]), np.array([0.0]), np.array([500.0]),
      -500.0, -500.0, 1.0, 1000, 1000)),
]


def bench(impl, case, repeats=5):
    best = math.inf
    for _ in range(repeats):
        start = time.perf_counter()
        out = impl.annulus_occupancy(*case)
        best = min(best, time.perf_counter() - start)
    return best, out


def main():
    if _annulus is None:
        print("compiled kernel not built; only timing the python fallback\n")
    header = f"{'case':28} {'grid':>12} {'python':>10}"
    if _annulus is not None:
        header += f" {'native':>10} {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for name, case in CASES:
        nx, ny = case[7], case[8]
        t_py, out_py = bench(_py, case)
        line = f"{name:28} {ny}x{nx:>6} {t_py * 1e3:9.2f}ms"
        if _annulus is not None:
            t_nat, out_nat = bench(_annulus, case)
            assert np.array_equal(out_py, out_nat), f"backend mismatch on {name}"
            line += f" {t_nat * 1e3:9.2f}ms {t_py / t_nat:7.1f}x"
        print(line)
    if _annulus is not None:
        print("\nall grids bit-identical across backends")


if __name__ == "__main__":
    main()
