"""Benchmark the compiled kernel backend against the scipy/numpy fallback.

The two hot kernels are zero-state IIR filtering and the per-trial Gram
accumulation; together they dominate a Monte-Carlo CRB run.  Also times a
full Monte-Carlo Fisher pass through whichever backend is active (select
with FOCRB_BACKEND).

    python benchmarks/bench_backends.py [--trials 200]
"""

import argparse
import math
import time
import timeit

import numpy as np

from focrb import _backend, fisher, sysmodel
from focrb._backend import pure
from focrb.sysmodel import FoSpec

try:
    from focrb._backend import _core
except ImportError:
    _core = None


def best_of(fn, repeats=5, number=10):
    return min(timeit.repeat(fn, repeat=repeats, number=number)) / number


def bench_kernels():
    rng = np.random.default_rng(0)
    num = rng.standard_normal(11)
    den = np.concatenate([[1.0], 0.05 * rng.standard_normal(10)])
    x = rng.standard_normal(6160)
    psi = rng.standard_normal((5400, 25))

    rows = []
    variants = [("pure (scipy/einsum)", pure)]
    if _core is not None:
        variants.insert(0, ("compiled (cython)", _core))
    for name, mod in variants:
        t_filt = best_of(lambda: mod.lfilter_zero_state(num, den, x))
        t_gram = best_of(lambda: mod.gram(psi))
        rows.append((name, t_filt, t_gram))

    print(f"{'backend':24s} {'iir filter (6160x11)':>22s} "
          f"{'gram (5400x25)':>16s}")
    for name, t_filt, t_gram in rows:
        print(f"{name:24s} {t_filt * 1e6:>19.1f} us {t_gram * 1e6:>13.1f} us")
    if len(rows) == 2:
        print(f"{'speedup':24s} {rows[1][1] / rows[0][1]:>21.2f}x "
              f"{rows[1][2] / rows[0][2]:>14.2f}x")


def bench_monte_carlo(trials):
    sys = sysmodel.default_system()
    omega = 2 * math.pi * 0.353 / 3.0
    fo = FoSpec(amplitude=1.0, phase_rad=0.8, omega=omega,
                start=-math.inf, stop=math.inf, reference="output")
    sigma = sysmodel.calibrate_sigma_global(sys, fo, 9.5)
    sys = sys.with_sigma(sigma)
    start = time.perf_counter()
    fisher.averaged_fisher("case1", sys, fo, 5400, trials, 0)
    elapsed = time.perf_counter() - start
    print(f"\nmonte-carlo fisher ({_backend.BACKEND_NAME} backend): "
          f"{trials} trials of N=5400 in {elapsed:.2f}s "
          f"({elapsed / trials * 1e3:.2f} ms/trial)")


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--trials", type=int, default=200,
                        help="Monte-Carlo trials for the end-to-end timing")
    args = parser.parse_args()
    bench_kernels()
    bench_monte_carlo(args.trials)
