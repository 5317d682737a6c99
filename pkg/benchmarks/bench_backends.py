#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-NumPy fallback lane.

The lane is fixed per process, so each (backend, case) cell runs in a
subprocess with ARCGOSSIP_BACKEND set.  Output is a small table of wall
times and steps/s; the numba column includes a warmup call so JIT compile
time is excluded from the measurement.

Usage: python3 benchmarks/bench_backends.py [--quick]
"""

import argparse
import json
import os
import subprocess
import sys

_WORKER = r"""
import json, sys, time
import numpy as np
import arcgossip as ag
from arcgossip import rng
from arcgossip.backend import backend_name

case = json.loads(sys.argv[1])
kind, n, steps = case["kind"], case["n"], case["steps"]

def build_state(seed=123):
    key = rng.stream_key(seed, 0)
    cfg = ag.Configuration(ag.Topology.ring(n), rng.uniform_angles(key, n))
    return ag.SimState(cfg, 0, seed)

def run_once(steps):
    if kind == "dynamics":
        st = build_state()
        ag.run(st, steps, check_stride=1, corridor_check=True)
    else:
        fr = ag.SectorFrame(ag.twisted_configuration(n, 1), seed=123)
        fr.advance(steps, sample_steps=None)

run_once(min(steps, 2000))  # warmup (JIT compile on the numba lane)
t0 = time.perf_counter()
run_once(steps)
dt = time.perf_counter() - t0
print(json.dumps({"backend": backend_name(), "seconds": dt,
                  "steps_per_s": steps / dt}))
"""


def run_cell(backend, case):
    env = dict(os.environ, ARCGOSSIP_BACKEND=backend)
    out = subprocess.run(
        [sys.executable, "-c", _WORKER, json.dumps(case)],
        capture_output=True, text=True, env=env, check=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--quick", action="store_true",
                        help="smaller horizons (CI-sized)")
    args = parser.parse_args()

    scale = 0.05 if args.quick else 1.0
    cases = [
        {"kind": "dynamics", "n": 32, "steps": max(1000, int(1_000_000 * scale))},
        {"kind": "dynamics", "n": 256, "steps": max(1000, int(1_000_000 * scale))},
        {"kind": "frame", "n": 100, "steps": max(1000, int(500_000 * scale))},
    ]
    print(f"{'case':<22}{'numba [s]':>12}{'numpy [s]':>12}{'speedup':>10}")
    for case in cases:
        label = f"{case['kind']} n={case['n']} T={case['steps']}"
        nb = run_cell("numba", case)
        py = run_cell("numpy", case)
        print(f"{label:<22}{nb['seconds']:>12.3f}{py['seconds']:>12.3f}"
              f"{py['seconds'] / nb['seconds']:>10.1f}x")


if __name__ == "__main__":
    main()
