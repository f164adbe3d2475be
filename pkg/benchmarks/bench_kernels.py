"""Benchmark the compiled qubit kernel against the numpy fallback.

Runs the same batch of monitored-qubit trajectories through both backends,
checks the outputs are bitwise identical, and reports the best wall time of
each over a few repeats.

Usage:
    python3 benchmarks/bench_kernels.py [--trials N] [--steps N] [--repeats N]
"""

import argparse
import time

import numpy as np

from demonsim import streams
from demonsim.kernels import qubit_np

try:
    from demonsim.kernels import _qubit_cy
except ImportError:
    _qubit_cy = None


def best_time(fn, args, repeats):
    best = float("inf")
    out = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--trials", type=int, default=20_000)
    parser.add_argument("--steps", type=int, default=200)
    parser.add_argument("--dt", type=float, default=0.01)
    parser.add_argument("--repeats", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    opts = parser.parse_args(argv)

    rng = streams.trial_rng(opts.seed, streams.TRAJECTORY, 0)
    noise = rng.standard_normal((opts.steps, opts.trials))
    p_e = 1.0 / (1.0 + np.exp(4.0))
    state0 = np.tile([1.0 - p_e, p_e, 0.0], (opts.trials, 1))
    args = (state0, 0.5, 1.0, 0.3, 0.0, opts.dt, noise, "none")

    t_np, out_np = best_time(qubit_np.run_qubit_sme, args, opts.repeats)
    print(f"{opts.trials} trajectories x {opts.steps} steps, best of {opts.repeats}")
    print(f"  numpy fallback : {t_np * 1e3:9.1f} ms")
    if _qubit_cy is None:
        print("  compiled       : not built (pip install -e . compiles it)")
        return
    t_cy, out_cy = best_time(_qubit_cy.run_qubit_sme, args, opts.repeats)
    match = "bitwise identical" if np.array_equal(out_np, out_cy) else "MISMATCH"
    print(f"  compiled       : {t_cy * 1e3:9.1f} ms  ({t_np / t_cy:.2f}x, outputs {match})")


if __name__ == "__main__":
    main()
