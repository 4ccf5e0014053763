"""Benchmark the hot advection kernel: numba path vs numpy fallback.

Run directly:  python benchmarks/bench_kernels.py [ncell] [nv]
The backend flag RVNLAB_NUMBA is read at import time, so this script
imports the kernel twice via subprocess to time both paths honestly.
"""

import json
import os
import subprocess
import sys
import time

import numpy as np

WORKER = """
import json, os, sys, time
import numpy as np
from rvnlab import kernels
from rvnlab.backend import USE_NUMBA

ncell, nv, reps = json.loads(sys.argv[1])
rng = np.random.default_rng(0)
f = rng.random((ncell, nv, nv, nv))
dtphi = rng.normal(size=ncell) * 0.01
g = rng.normal(size=(ncell, 3)) * 0.01
out = np.empty_like(f)
kernels.advect_v(f, dtphi, g, -2.0, 4.0 / nv, 0.05, 1.0, out)  # warm/jit
best = float("inf")
for _ in range(reps):
    t0 = time.perf_counter()
    kernels.advect_v(f, dtphi, g, -2.0, 4.0 / nv, 0.05, 1.0, out)
    best = min(best, time.perf_counter() - t0)
print(json.dumps({"numba": USE_NUMBA, "best_s": best,
                  "cells": ncell * nv ** 3,
                  "mcells_per_s": ncell * nv ** 3 / best / 1e6,
                  "checksum": float(out.sum())}))
"""


def run_path(use_numba, ncell, nv, reps):
    env = dict(os.environ, RVNLAB_NUMBA="1" if use_numba else "0")
    out = subprocess.run(
        [sys.executable, "-c", WORKER, json.dumps([ncell, nv, reps])],
        env=env, capture_output=True, text=True, check=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def main():
    ncell = int(sys.argv[1]) if len(sys.argv) > 1 else 512
    nv = int(sys.argv[2]) if len(sys.argv) > 2 else 12
    reps = 3
    jit = run_path(True, ncell, nv, reps)
    ref = run_path(False, ncell, nv, reps)
    assert np.isclose(jit["checksum"], ref["checksum"], rtol=1e-12), \
        "backends disagree"
    print(f"cells: {jit['cells']:,}")
    print(f"numba : {jit['best_s']*1e3:9.2f} ms  "
          f"({jit['mcells_per_s']:8.2f} Mcells/s)")
    print(f"numpy : {ref['best_s']*1e3:9.2f} ms  "
          f"({ref['mcells_per_s']:8.2f} Mcells/s)")
    print(f"speedup: {ref['best_s']/jit['best_s']:.1f}x  "
          f"(checksums agree)")


if __name__ == "__main__":
    main()
