#!/usr/bin/env python3
"""Benchmark the compiled tridiagonal kernels against the LAPACK fallback.

Times the hot paths (restricted eigenpairs, weighted eigenpairs, shifted
solves) and one end-to-end sign-changing solve, on the product of two unit
2-spheres.  Usage: python benchmarks/bench_backends.py [--repeat 5]
"""

import argparse
import math
import time

import numpy as np

import isoyamabe.discretize as dz
import isoyamabe.solver as sv
import isoyamabe.spectral as sp
import isoyamabe.system as sy
from isoyamabe._kernels import available_backends, get_backend


def best_of(repeat, fn):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    prod = sy.build_product(sy.build_sphere_linear(2), 2.0, 4 * math.pi, 2)
    arc = sy.to_arclength(prod)
    names = available_backends()
    print(f"backends: {', '.join(names)}   (best of {args.repeat})")
    header = f"{'case':<38}" + "".join(f"{name:>12}" for name in names)
    print(header)
    print("-" * len(header))

    rows = []
    for cells in (1000, 4000, 16000):
        ops = {name: dz.assemble(arc, cells, backend=get_backend(name))
               for name in names}
        rows.append((f"eigs k=4, N={cells}",
                     {name: best_of(args.repeat, lambda op=ops[name]: sp.eigs(op, 4))
                      for name in names}))
        rng = np.random.default_rng(0)
        u = 1.0 + 0.5 * rng.random(cells)
        rows.append((f"generalized_eigs k=3, N={cells}",
                     {name: best_of(args.repeat,
                                    lambda op=ops[name]: sp.generalized_eigs(op, u, 4.0, 3))
                      for name in names}))
        rhs = rng.standard_normal(cells)
        rows.append((f"solve_shifted, N={cells}",
                     {name: best_of(args.repeat,
                                    lambda op=ops[name]: dz.solve_shifted(op, 0.5, rhs))
                      for name in names}))

    ops = {name: dz.assemble(arc, 2000, backend=get_backend(name))
           for name in names}
    rows.append(("minimize_second_yamabe, N=2000",
                 {name: best_of(max(1, args.repeat // 2),
                                lambda op=ops[name]: sv.minimize_second_yamabe(
                                    prod, op, tol=1e-8))
                  for name in names}))

    for label, vals in rows:
        cells = "".join(f"{vals[name] * 1e3:>10.2f}ms" for name in names)
        print(f"{label:<38}{cells}")

    # agreement check while we are here
    lam = {name: sp.eigs(ops[name], 4).eigenvalues for name in names}
    if len(names) == 2:
        diff = float(np.max(np.abs(lam[names[0]] - lam[names[1]])))
        print(f"\nmax eigenvalue difference between backends: {diff:.3e}")


if __name__ == "__main__":
    main()
