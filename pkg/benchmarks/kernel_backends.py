#!/usr/bin/env python3
"""Compare the numba-compiled and pure-numpy kernel backends.

Runs the same workloads (dense covariance assembly, Vecchia log-likelihood,
sparse Cholesky factorization, exact log-likelihood) in two subprocesses --
one with numba enabled (the default) and one with ``GPBENCH_NO_NUMBA=1`` --
and prints a timing table plus the numeric agreement between the two paths.

Usage:
    python benchmarks/kernel_backends.py [--n N] [--reps R]
"""

import argparse
import json
import os
import subprocess
import sys
import time


def _run_workloads(n, reps):
    """Executed inside each subprocess; returns {name: (seconds, checksum)}."""
    import numpy as np

    from gpbench import (CovarianceSpec, TaperSpec, build_vecchia,
                         loglik_exact, taper_loglik, vecchia_loglik)
    from gpbench.simulate import simulate_dataset

    spec = CovarianceSpec(sigma2=1.0, rho=0.2 / 2.74, nu=1.5, sigma_n2=0.5)
    data = simulate_dataset(n, "std", seed=0).train

    results = {}

    def bench(name, fn):
        fn()  # warm-up (numba compilation happens here)
        t0 = time.perf_counter()
        for _ in range(reps):
            value = fn()
        results[name] = ((time.perf_counter() - t0) / reps, float(value))

    from gpbench.covkernel import build_cov

    bench("dense_cov",
          lambda: float(np.sum(build_cov(spec, data.locations,
                                         data.locations))))

    structure = build_vecchia(data, spec, m=20, seed=0)
    bench("vecchia_loglik", lambda: vecchia_loglik(structure, spec, data))

    taper = TaperSpec(0.04)
    bench("taper_loglik", lambda: taper_loglik(taper, spec, data)[0])

    bench("exact_loglik", lambda: loglik_exact(spec, data))

    return results


def _child(argv):
    n, reps = int(argv[0]), int(argv[1])
    print(json.dumps(_run_workloads(n, reps)))


def main():
    if len(sys.argv) > 1 and sys.argv[1] == "--child":
        _child(sys.argv[2:])
        return

    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=2000, help="training size")
    ap.add_argument("--reps", type=int, default=3, help="timed repetitions")
    args = ap.parse_args()

    timings = {}
    for label, no_numba in (("numba", "0"), ("numpy", "1")):
        env = dict(os.environ, GPBENCH_NO_NUMBA=no_numba)
        out = subprocess.run(
            [sys.executable, os.path.abspath(__file__), "--child",
             str(args.n), str(args.reps)],
            env=env, capture_output=True, text=True, check=True)
        timings[label] = json.loads(out.stdout.strip().splitlines()[-1])

    print(f"N={args.n}, reps={args.reps}")
    print(f"{'workload':<16} {'numba (s)':>12} {'numpy (s)':>12} "
          f"{'speedup':>8} {'rel diff':>10}")
    for name in timings["numba"]:
        tn, vn = timings["numba"][name]
        tp, vp = timings["numpy"][name]
        rel = abs(vn - vp) / max(abs(vn), 1e-300)
        print(f"{name:<16} {tn:>12.4f} {tp:>12.4f} {tp / tn:>8.1f}x "
              f"{rel:>10.2e}")


if __name__ == "__main__":
    main()
