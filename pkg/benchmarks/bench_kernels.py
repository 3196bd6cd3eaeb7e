#!/usr/bin/env python3
"""Benchmark the hot kernels on the current backend.

Run `python benchmarks/bench_kernels.py` for the active backend (numba when
available) and `python benchmarks/bench_kernels.py --compare` to time both
paths: the script re-executes itself with SPINMETRO_NO_NUMBA=1 for the pure
numpy fallback.
"""

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np


def bench_servo(cycles=200000):
    from spinmetro import bayes as by
    from spinmetro import clock as ck
    from spinmetro import measurement as ms
    from spinmetro import states as st

    design = by.SensorDesign(st.css(16), ms.basis_jy(16))
    spec = ck.OscillatorNoiseSpec(-1, 1e-18, 16.0)
    cfg = ck.ClockConfig(2 * np.pi * 1e6, 1.0, 0.0, 0.5, cycles,
                         sensor=design, estimator="sme", seed=1)
    ck.run_servo(cfg, spec)  # warm-up / JIT compile
    t0 = time.perf_counter()
    ck.run_servo(cfg, spec)
    return time.perf_counter() - t0


def bench_allan(samples=1 << 21):
    from spinmetro import _kernels

    rng = np.random.default_rng(0)
    y = rng.standard_normal(samples)
    ms_list = np.array([2 ** k for k in range(18)], dtype=np.int64)
    _kernels.allan_overlap(y, ms_list)
    t0 = time.perf_counter()
    _kernels.allan_overlap(y, ms_list)
    return time.perf_counter() - t0


def bench_mle(trials=20000):
    from spinmetro import frequentist as fr
    from spinmetro import measurement as ms
    from spinmetro import states as st

    n = 16
    cfg = fr.EstimationExperiment(st.css(n), ms.basis_jy(n), "mle",
                                  np.array([0.1]), 10, trials, 3,
                                  search_interval=(-np.pi / 2, np.pi / 2))
    fr.run_experiment(cfg)
    t0 = time.perf_counter()
    fr.run_experiment(cfg)
    return time.perf_counter() - t0


BENCHES = {"servo_2e5_cycles": bench_servo,
           "allan_2e21_samples": bench_allan,
           "mle_2e4_trials": bench_mle}


def run_all():
    from spinmetro.accel import backend_name

    results = {"backend": backend_name()}
    for name, fn in BENCHES.items():
        results[name] = round(fn(), 4)
    return results


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--compare", action="store_true",
                        help="time the numba path and the numpy fallback")
    parser.add_argument("--json", action="store_true")
    args = parser.parse_args()
    mine = run_all()
    rows = [mine]
    if args.compare and mine["backend"] == "numba":
        env = dict(os.environ, SPINMETRO_NO_NUMBA="1")
        out = subprocess.run([sys.executable, __file__, "--json"],
                             env=env, capture_output=True, text=True,
                             check=True)
        rows.append(json.loads(out.stdout.strip().splitlines()[-1]))
    if args.json:
        print(json.dumps(mine))
        return
    names = [k for k in mine if k != "backend"]
    header = f"{'kernel':<24}" + "".join(f"{r['backend']:>12}" for r in rows)
    print(header)
    print("-" * len(header))
    for name in names:
        line = f"{name:<24}" + "".join(f"{r[name]:>11.3f}s" for r in rows)
        if len(rows) == 2 and rows[0][name] > 0:
            line += f"   x{rows[1][name] / rows[0][name]:.1f}"
        print(line)


if __name__ == "__main__":
    main()
