"""Compare the compiled and numpy observer kernels.

    python benchmarks/bench_kernels.py [--calls 2000] [--duration 2.0]

Reports microseconds per kernel call for each step mode and the wall time
of a short reference-scenario run with each kernel.
"""

import argparse
import time
import timeit

import numpy as np

from ppslam import _backend
from ppslam.harness import paper_config, simulate
from ppslam.lie import so3_exp


def kernel_inputs(n=4, seed=0):
    rng = np.random.default_rng(seed)
    R = so3_exp(rng.normal(size=3))
    y = rng.normal(size=(n, 3)) * 5
    P = rng.normal(size=3)
    phat = y @ R.T + P + rng.normal(size=(n, 3)) * 0.3
    delta = np.abs(phat - (y @ R.T + P)) * 1.2 + 1.8
    return (R, P, phat, np.zeros(6), rng.normal(size=6), y, delta.copy(), delta, delta.copy(),
            3.0, 3.0, 10.0 * np.eye(6), np.full(n, 0.05), 1e-3)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--calls", type=int, default=2000)
    ap.add_argument("--duration", type=float, default=2.0)
    ap.add_argument("--landmarks", type=int, default=4)
    args = ap.parse_args()

    kernels = {"python": _backend.python_kernel}
    if _backend.compiled_kernel is not None:
        kernels["cython"] = _backend.compiled_kernel
    else:
        print("compiled kernel not built; timing the numpy kernel only")

    base = kernel_inputs(args.landmarks)
    modes = {"eval": _backend.MODE_EVAL, "euler": _backend.MODE_EULER, "imex": _backend.MODE_IMEX}
    print(f"per-call time, n = {args.landmarks} landmarks ({args.calls} calls)")
    print(f"{'mode':<8}" + "".join(f"{k:>12}" for k in kernels) + f"{'speedup':>10}")
    for name, mode in modes.items():
        us = {}
        for k, fn in kernels.items():
            t = timeit.timeit(lambda: fn(*base, mode), number=args.calls)
            us[k] = 1e6 * t / args.calls
        speed = us["python"] / us["cython"] if "cython" in us else float("nan")
        print(f"{name:<8}" + "".join(f"{us[k]:>10.1f}us" for k in kernels) + f"{speed:>9.1f}x")

    cfg = paper_config(noise=True).with_overrides(duration=args.duration)
    print(f"\nreference scenario, {args.duration:g} s simulated at dt = {cfg.scenario.dt:g}")
    for k in kernels:
        t0 = time.perf_counter()
        simulate(cfg, kernel=k)
        print(f"{k:<8}{time.perf_counter() - t0:>8.2f} s")


if __name__ == "__main__":
    main()
