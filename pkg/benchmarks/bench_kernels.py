"""Compare the pure-Python and compiled kernel backends.

Usage: python benchmarks/bench_kernels.py [--trials N]

Times the two hot loops (batch admittance integration and full flipping
trials) on identical inputs and prints per-call timings plus speedup.
"""
import argparse
import time

import numpy as np

from compliancekit._kernels import available_backends
from compliancekit.flipsim import (
    FlipScenario,
    build_nominal_trajectory,
    default_policies,
    trial_inputs,
)


def time_call(fn, *args, repeats=3, **kwargs):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn(*args, **kwargs)
        best = min(best, time.perf_counter() - start)
    return best


def bench_admittance(backends, n_steps=20000):
    rng = np.random.default_rng(0)
    targets = rng.normal(scale=0.05, size=(n_steps, 3))
    forces = rng.normal(scale=3.0, size=(n_steps, 3))
    dirs = rng.normal(size=(n_steps, 3))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    k_low = rng.uniform(40.0, 500.0, size=n_steps)
    ks = 2000.0 * np.eye(3) + (k_low - 2000.0)[:, None, None] * \
        np.einsum("ij,ik->ijk", dirs, dirs)
    args = (np.zeros(3), np.zeros(3), targets, ks, forces,
            2.0 * np.eye(3), 126.5 * np.eye(3), 2e-3, 1e9)
    print(f"\nadmittance loop, {n_steps} steps:")
    times = {}
    for name, mod in backends.items():
        times[name] = time_call(mod.run_admittance_loop, *args)
        print(f"  {name:8s} {times[name] * 1e3:9.2f} ms")
    report_speedup(times)


def bench_flip_trials(backends, trials=20):
    scenario = FlipScenario(position_noise_sigma=0.01)
    trajectory = build_nominal_trajectory(scenario)
    cases = [trial_inputs(scenario, policy, trial, trajectory)
             for trial in range(trials)
             for policy in default_policies().values()]
    print(f"\nflipping trials, {len(cases)} runs of {len(trajectory)} ticks:")
    times = {}
    for name, mod in backends.items():
        times[name] = time_call(
            lambda m=mod: [m.run_flip_trial(c, False) for c in cases])
        print(f"  {name:8s} {times[name] * 1e3:9.2f} ms "
              f"({times[name] / len(cases) * 1e3:.3f} ms/trial)")
    report_speedup(times)


def report_speedup(times):
    if "python" in times and "cython" in times:
        print(f"  speedup  {times['python'] / times['cython']:9.1f}x")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--trials", type=int, default=20)
    args = parser.parse_args()
    backends = available_backends()
    print("backends:", ", ".join(backends))
    bench_admittance(backends)
    bench_flip_trials(backends, trials=args.trials)


if __name__ == "__main__":
    main()
