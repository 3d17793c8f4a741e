"""Compare the numba and numpy kernel backends.

Part 1 times each kernel on a typical batch. Part 2 times whole optimizer
trials, once per backend, each in a fresh interpreter so the env flag takes
effect at import.

    python bench/bench_kernels.py [--repeat 200] [--trials 3]
"""

import argparse
import os
import subprocess
import sys
import time
import timeit

import numpy as np

from cmaes_sop import _kernels

TRIAL_SNIPPET = """
import time
from cmaes_sop import _kernels
from cmaes_sop.harness import Cell, instance_for_trial, run_trial
cell = Cell("ellipsoid", 20, 2, 10, "discrete")
run_trial(instance_for_trial(cell, 99), "cma-es-sop", 99, max_evaluations=200)  # warm up / jit
for alg in ("cma-es", "cma-es-sop"):
    t = time.perf_counter()
    for s in range({trials}):
        run_trial(instance_for_trial(cell, s), alg, s, max_evaluations=20000)
    print(_kernels.backend(), alg, (time.perf_counter() - t) / {trials})
"""


def _time(fn, repeat):
    fn()  # compile
    return min(timeit.repeat(fn, number=1, repeat=repeat)) * 1e6


def kernel_table(repeat):
    rng = np.random.default_rng(0)
    rows = []
    for lam, n_pts, dim in [(10, 10, 2), (14, 40, 5), (1000, 40, 3)]:
        q = rng.uniform(-5, 5, (lam, dim))
        pts = rng.uniform(-5, 5, (n_pts, dim))
        a = _time(lambda: _kernels.nearest_index_numpy(q, pts), repeat)
        b = _time(lambda: _kernels.nearest_index_numba(q, pts), repeat)
        rows.append((f"nearest_index q={lam} L={n_pts} d={dim}", a, b))
    for n_q in (64, 4096):
        q = rng.uniform(-5, 5, (n_q, 3))
        pts = rng.uniform(-5, 5, (20, 3))
        a = _time(lambda: _kernels.facet_gap_numpy(q, pts, 0, 1), repeat)
        b = _time(lambda: _kernels.facet_gap_numba(q, pts, 0, 1), repeat)
        rows.append((f"facet_gap q={n_q} L=20 d=3", a, b))
    sets = [rng.uniform(-5, 5, (10, 2)) for _ in range(10)]
    packed = (
        np.concatenate([s.ravel() for s in sets]),
        np.arange(0, 20, 2, dtype=np.int64),
        np.full(10, 2, dtype=np.int64),
        np.arange(0, 200, 20, dtype=np.int64),
        np.full(10, 10, dtype=np.int64),
    )
    x = rng.uniform(-5, 5, (12, 20))
    a = _time(lambda: _kernels.encode_blocks_numpy(x.copy(), *packed), repeat)
    b = _time(lambda: _kernels.encode_blocks_numba(x.copy(), *packed), repeat)
    rows.append(("encode_blocks 12x20, 10 sets of (2,10)", a, b))
    print(f"{'kernel':44s} {'numpy us':>10s} {'numba us':>10s} {'speedup':>8s}")
    for name, a, b in rows:
        print(f"{name:44s} {a:10.1f} {b:10.1f} {a / b:8.1f}")


def trial_table(trials):
    print("\nwhole trials (discrete ellipsoid N=20, budget 20000):")
    for flag in ("0", "1"):
        env = dict(os.environ, CMAES_SOP_DISABLE_NUMBA=flag)
        out = subprocess.run(
            [sys.executable, "-c", TRIAL_SNIPPET.format(trials=trials)],
            env=env, capture_output=True, text=True, check=True,
        ).stdout
        for line in out.splitlines():
            backend, alg, secs = line.split()
            print(f"  {backend:6s} {alg:11s} {float(secs):.3f} s/trial")


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=200)
    p.add_argument("--trials", type=int, default=3)
    args = p.parse_args()
    if not _kernels.HAS_NUMBA:
        sys.exit("numba is not installed")
    t = time.perf_counter()
    kernel_table(args.repeat)
    trial_table(args.trials)
    print(f"\n{time.perf_counter() - t:.1f}s total")


if __name__ == "__main__":
    main()
