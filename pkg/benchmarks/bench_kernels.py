"""Compiled vs numpy kernels on the two hot loops.

    python3 benchmarks/bench_kernels.py [--samples N] [--points P]

Prints wall time per backend and checks that both return the same counts.
"""

import argparse
import time

import numpy as np

from qcs import kernels
from qcs.diffraction import gamma_a_scheme, quadratic_scheme, streaming_caps
from qcs.lattice import dual_basis
from qcs.pointset import _torus_from_coeffs, uniform_blocks


def bench(fn, repeat=3):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def counting(S, R, n):
    B = S.lattice.basis
    Binv = S.lattice.inverse
    u = uniform_blocks(1, n, 2)
    g, h = _torus_from_coeffs(S, u)
    (wlo, whi), = S.window.bounding_box()
    args = (B, Binv, -R - g[:, 0], R - g[:, 0], wlo - h[:, 0], whi - h[:, 0])
    axis = kernels.pick_axis(B)
    return {name: bench(lambda name=name: kernels.count_points_2d(*args, axis=axis, impl=name)) for name in ("python", "cython")}


def streaming(S, Rs, points):
    V = dual_basis(S.lattice).basis
    E, C = streaming_caps(S, max(Rs), points)
    args = (V, np.linalg.inv(V), kernels.pick_axis(V), E, C, 2.0 * np.asarray(Rs), 0.6)
    return {name: bench(lambda name=name: kernels.sinc2_sum_2d(*args, impl=name), repeat=1) for name in ("python", "cython")}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--samples", type=int, default=100_000)
    ap.add_argument("--points", type=float, default=4e6)
    a = ap.parse_args()
    try:
        kernels.backend("cython")
    except ImportError:
        print("compiled extension not built; nothing to compare")
        return
    print(f"{'kernel':<28}{'python s':>10}{'cython s':>10}{'speedup':>9}  agree")
    for S in (gamma_a_scheme(2**0.5, 0.3), quadratic_scheme(2)):
        r = counting(S, 20.0, a.samples)
        (tp, cp), (tc, cc) = r["python"], r["cython"]
        print(f"{'count ' + S.label:<28}{tp:>10.3f}{tc:>10.3f}{tp / tc:>9.1f}  {bool(np.array_equal(cp, cc))}")
        r = streaming(S, [5.0, 10.0, 20.0], a.points)
        (tp, (ap_, npp)), (tc, (ac, nc)) = r["python"], r["cython"]
        agree = npp == nc and np.allclose(ap_, ac, rtol=1e-9)
        print(f"{'sinc2 ' + S.label:<28}{tp:>10.3f}{tc:>10.3f}{tp / tc:>9.1f}  {agree}")


if __name__ == "__main__":
    main()
