#!/usr/bin/env python3
"""Wall-time comparison of the compiled and plain-numpy RK4 kernels.

Usage, after installing the package:

    python3 benchmarks/bench_evolution.py --spins 1 2 4 --steps 200

Both kernel twins are called directly, so one process produces the whole
table.  The first compiled call pays the jit cost; it is timed separately
and excluded from the steady-state numbers.  Setting
``SPINBATH_DISABLE_NUMBA=1`` makes the library itself fall back to the
numpy path, in which case the two columns time the same function.
"""

import argparse
import time

import numpy as np

from spinbath._kernels import USING_NUMBA, rk4_chunk, rk4_chunk_numpy
from spinbath.generator import CommonBath, build_generator, default_step
from spinbath.states import EntangledStateSpec, coefficient_profile, density_from_pure, entangled_state


def build_case(j):
    model = CommonBath(gamma=np.diag([1.0, 0.5, 0.25]), lam=1.4, axes=("x", "y", "z"))
    gen = build_generator(model, j, j)
    spec = EntangledStateSpec.make(j, j, coefficient_profile("uniform", j))
    rho = density_from_pure(entangled_state(spec), gen.dims).matrix
    jumps = np.ascontiguousarray(np.stack([op.matrix for op in gen.jump_ops]))
    jdags = np.ascontiguousarray(jumps.conj().transpose(0, 2, 1))
    ksum = np.zeros((gen.dim, gen.dim), dtype=np.complex128)
    for k in range(jumps.shape[0]):
        ksum += jdags[k] @ jumps[k]
    ham = np.zeros((gen.dim, gen.dim), dtype=np.complex128)
    h = default_step(gen)
    return rho, jumps, jdags, np.ascontiguousarray(ksum), ham, h


def best_time(fn, args, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--spins", type=float, nargs="+", default=[1.0, 2.0, 4.0])
    parser.add_argument("--steps", type=int, default=200)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    if not USING_NUMBA:
        print("note: numba path inactive (missing or disabled); columns will match")

    rho0, jumps, jdags, ksum, ham, h = build_case(args.spins[0])
    t0 = time.perf_counter()
    rk4_chunk(rho0, jumps, jdags, ksum, ham, False, h, 1)
    print("first compiled call: %.2f s (cached across runs)" % (time.perf_counter() - t0))
    print()
    header = "%-6s %-6s %-6s %12s %12s %9s" % ("j", "dim", "jumps", "numba (ms)", "numpy (ms)", "speedup")
    print(header)
    print("-" * len(header))
    for j in args.spins:
        rho, jumps, jdags, ksum, ham, h = build_case(j)
        call = (rho, jumps, jdags, ksum, ham, False, h, args.steps)
        rk4_chunk(*call)
        t_fast = best_time(rk4_chunk, call, args.repeats)
        t_ref = best_time(rk4_chunk_numpy, call, args.repeats)
        print(
            "%-6g %-6d %-6d %12.2f %12.2f %8.2fx"
            % (j, rho.shape[0], jumps.shape[0], 1e3 * t_fast, 1e3 * t_ref, t_ref / t_fast)
        )


if __name__ == "__main__":
    main()
