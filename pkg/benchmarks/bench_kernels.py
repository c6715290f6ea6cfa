"""Timing comparison of the numba and numpy kernel backends.

Run:  python3 benchmarks/bench_kernels.py
"""
import time

import numpy as np

from rmstsel import _kernels_np as knp
from rmstsel.criterion import PenaltyConfig, maximize_continuous
from rmstsel.sim import generate_trial

try:
    from rmstsel import _kernels_nb as knb
except ImportError:
    knb = None


def _augmented(mod, times, events):
    order = np.argsort(times, kind="stable")
    t, d, y, s = mod.km_reduce(times[order], events[order])
    theta, w, cw, cwt, cwtt = mod.augment(t, d, y, s)
    return t, s, theta, cw, cwt, cwtt


def bench_pair_eval(n, n_ls=2000, loops=200):
    ds = generate_trial("ph", n, np.random.SeedSequence(1))
    t0, e0 = ds.arm_arrays(0)
    t1, e1 = ds.arm_arrays(1)
    a0 = _augmented(knp, t0, e0.astype(np.float64))
    a1 = _augmented(knp, t1, e1.astype(np.float64))
    hi = min(t0.max(), t1.max())
    Ls = np.linspace(0.1, hi, n_ls)
    rows = []
    for name, mod in (("numpy", knp),) + ((("numba", knb),) if knb else ()):
        mod.pair_eval(*a0, *a1, n, Ls)  # warm (JIT compile for numba)
        start = time.perf_counter()
        for _ in range(loops):
            kap, sig = mod.pair_eval(*a0, *a1, n, Ls)
        per_call = (time.perf_counter() - start) / loops
        rows.append((name, per_call))
    return rows


def bench_maximize(n, loops=20):
    ds = generate_trial("ph", n, np.random.SeedSequence(2))
    pen = PenaltyConfig(c=0.002, l_tilde=2.2)
    maximize_continuous(ds, 0.2, 4.2, pen)  # warm
    start = time.perf_counter()
    for _ in range(loops):
        maximize_continuous(ds, 0.2, 4.2, pen)
    return (time.perf_counter() - start) / loops


def main():
    print(f"{'kernel':<28}{'n':>8}{'per call':>14}")
    for n in (300, 1000, 5000):
        rows = bench_pair_eval(n)
        base = dict(rows)["numpy"]
        for name, sec in rows:
            speedup = f"  ({base / sec:.1f}x vs numpy)" if name == "numba" else ""
            print(f"{'pair_eval/' + name:<28}{n:>8}{sec * 1e6:>11.1f} us{speedup}")
    from rmstsel.kernels import BACKEND
    print(f"\nfull continuous maximization (backend={BACKEND}):")
    for n in (300, 1000, 5000):
        sec = bench_maximize(n)
        print(f"{'maximize_continuous':<28}{n:>8}{sec * 1e3:>11.2f} ms")


if __name__ == "__main__":
    main()
