#!/usr/bin/env python3
"""Benchmark the jitted loop kernels against the pure-numpy fallback.

Usage: python benchmarks/bench_kernels.py [--nx 256] [--nv 256] [--reps 200]
"""
import argparse
import time

import numpy as np


def build_problem(nx, nv, seed=0):
    rng = np.random.default_rng(seed)
    f = rng.random((nx, nv)) + 0.05
    xi = np.linspace(-8, 8, nv)
    ghost_lo = f[0, ::-1].copy()
    ghost_hi = f[-1, ::-1].copy()
    drift = rng.standard_normal((nx, nv + 1))
    drift[:, 0] = drift[:, -1] = 0.0
    lower = -rng.random((nx, nv))
    upper = -rng.random((nx, nv))
    diag = 2.5 + rng.random((nx, nv))
    rhs = rng.random((nx, nv))
    return f, xi, ghost_lo, ghost_hi, drift, lower, diag, upper, rhs


def bench(impl, label, prob, reps):
    f, xi, lo, hi, drift, lower, diag, upper, rhs = prob
    kernels = {
        "transport": lambda: impl.upwind_transport(f, xi, 0.02, lo, hi),
        "drag": lambda: impl.upwind_drag(f, drift, 0.02),
        "tridiag": lambda: impl.thomas_batch(lower, diag, upper, rhs),
    }
    out = {}
    for name, fn in kernels.items():
        fn()  # warm-up (and JIT compile for the numba path)
        t0 = time.perf_counter()
        for _ in range(reps):
            fn()
        out[name] = (time.perf_counter() - t0) / reps
    return out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--nx", type=int, default=256)
    ap.add_argument("--nv", type=int, default=256)
    ap.add_argument("--reps", type=int, default=200)
    args = ap.parse_args()

    from kinfluid._kernels import numpy_impl

    prob = build_problem(args.nx, args.nv)
    rows = {"numpy": bench(numpy_impl, "numpy", prob, args.reps)}

    try:
        from numba import njit

        from kinfluid._kernels import loops

        class jitted:
            upwind_transport = staticmethod(njit(cache=True)(loops.upwind_transport))
            upwind_drag = staticmethod(njit(cache=True)(loops.upwind_drag))
            thomas_batch = staticmethod(njit(cache=True)(loops.thomas_batch))

        rows["numba"] = bench(jitted, "numba", prob, args.reps)
    except ImportError:
        print("numba unavailable; benchmarking the numpy fallback only")

    names = sorted(rows["numpy"])
    print(f"\nkernel timings, {args.nx}x{args.nv} arrays, mean of {args.reps} reps")
    header = f"{'kernel':<12}" + "".join(f"{b:>12}" for b in rows)
    print(header)
    print("-" * len(header))
    for name in names:
        line = f"{name:<12}" + "".join(f"{rows[b][name] * 1e6:>10.1f}us" for b in rows)
        if "numba" in rows:
            line += f"   x{rows['numpy'][name] / rows['numba'][name]:.1f}"
        print(line)


if __name__ == "__main__":
    main()
