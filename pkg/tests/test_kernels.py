"""Backend equivalence and cross-route checks for the numerical kernels.

The numba and numpy implementations must agree bit-for-bit, and the
prefix-sum variance route must reproduce the direct summation in
``rmstsel.rmst``.
"""
import os
import subprocess
import sys

import numpy as np
import pytest

from conftest import random_dataset
from rmstsel import kernels
from rmstsel import _kernels_np as knp
from rmstsel.km import curve_from_arrays
from rmstsel.rmst import rmst_arm, variance_hat

knb = pytest.importorskip("rmstsel._kernels_nb")


def _sorted_arm(rng, n=40):
    t = np.sort(np.round(rng.exponential(1.0, n), 1) + 0.1)
    e = rng.integers(0, 2, n).astype(np.float64)
    return t, e


def _augmented(mod, t, e):
    tt, d, y, s = mod.km_reduce(t, e)
    theta, w, cw, cwt, cwtt = mod.augment(tt, d, y, s)
    return tt, d, y, s, theta, w, cw, cwt, cwtt


@pytest.mark.parametrize("seed", range(8))
def test_backends_bit_identical(seed):
    rng = np.random.default_rng(seed)
    t0, e0 = _sorted_arm(rng)
    t1, e1 = _sorted_arm(rng, n=55)
    a = _augmented(knp, t0, e0)
    b = _augmented(knb, t0, e0)
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x, y)

    a0, a1 = _augmented(knp, t0, e0), _augmented(knp, t1, e1)
    args = (a0[0], a0[3], a0[4], a0[6], a0[7], a0[8],
            a1[0], a1[3], a1[4], a1[6], a1[7], a1[8], 95)
    Ls = np.linspace(0.15, min(t0.max(), t1.max()), 64)
    kap_np, sig_np = knp.pair_eval(*args, Ls)
    kap_nb, sig_nb = knb.pair_eval(*args, Ls)
    np.testing.assert_array_equal(kap_np, kap_nb)
    np.testing.assert_array_equal(sig_np, sig_nb)

    for L in (0.4, 1.1, float(Ls[-1])):
        assert knp.pen_value(*args, L, 0.002, 2.2) == knb.pen_value(*args, L, 0.002, 2.2)
    assert knp.refine_ternary(*args, 0.3, 1.8, 0.002, 2.2, 60) == \
        knb.refine_ternary(*args, 0.3, 1.8, 0.002, 2.2, 60)


def test_rmst_many_bit_identical():
    rng = np.random.default_rng(42)
    t, e = _sorted_arm(rng, n=80)
    tt, d, y, s = knp.km_reduce(t, e)
    theta = knp.augment(tt, d, y, s)[0]
    Ls = np.linspace(0.05, t.max(), 200)
    np.testing.assert_array_equal(knp.rmst_many(tt, s, theta, Ls),
                                  knb.rmst_many(tt, s, theta, Ls))


def test_build_arm_prefix_sums_match_plain_loops():
    rng = np.random.default_rng(2)
    t = rng.exponential(1.0, 60)
    e = rng.integers(0, 2, 60)
    p = kernels.build_arm(t, e)

    # recompute everything with dict/loop code
    order = np.argsort(t, kind="stable")
    ts, es = t[order], e[order]
    seen = {}
    for ti, ei in zip(ts, es):
        seen.setdefault(ti, [0, 0])
        seen[ti][0] += ei
    exp_t = [ti for ti in sorted(seen) if seen[ti][0] > 0]
    assert p.t.tolist() == exp_t
    s = 1.0
    theta = 0.0
    prev = 0.0
    cw = cwt = cwtt = 0.0
    for j, ti in enumerate(exp_t):
        y = np.sum(ts >= ti)
        d = seen[ti][0]
        theta += s * (ti - prev)
        s *= 1 - d / y
        w = d / (y * (y - d)) if y > d else 0.0
        cw += w
        cwt += w * theta
        cwtt += w * theta * theta
        assert p.y[j] == y and p.d[j] == d
        assert p.s[j] == pytest.approx(s, rel=1e-14)
        assert p.theta[j] == pytest.approx(theta, rel=1e-14)
        assert p.cw[j] == pytest.approx(cw, rel=1e-13)
        assert p.cwt[j] == pytest.approx(cwt, rel=1e-13)
        assert p.cwtt[j] == pytest.approx(cwtt, rel=1e-13)
        prev = ti
    assert p.tau == ts.max()
    assert p.n_arm == 60


def test_rmst_at_matches_curve_route():
    rng = np.random.default_rng(9)
    t = rng.exponential(1.5, 70)
    e = rng.integers(0, 2, 70)
    p = kernels.build_arm(t, e)
    curve = curve_from_arrays(t, e)
    for L in np.linspace(0.1, t.max(), 25):
        assert kernels.rmst_at(p, float(L)) == pytest.approx(rmst_arm(curve, float(L)), rel=1e-12)


def test_pair_eval_variance_matches_direct_route():
    rng = np.random.default_rng(14)
    for _ in range(12):
        ds = random_dataset(rng, n_per_arm=30)
        p0, p1 = ds.profiles
        hi = min(p0.tau, p1.tau)
        Ls = np.linspace(0.1, hi, 20)
        _, sig = kernels.pair_eval(p0, p1, ds.n, Ls)
        for L, s2 in zip(Ls, sig):
            assert s2 == pytest.approx(variance_hat(ds, float(L)), rel=1e-10, abs=1e-12)


def test_theta_monotone_in_horizon():
    rng = np.random.default_rng(21)
    t = rng.exponential(1.0, 45)
    e = rng.integers(0, 2, 45)
    p = kernels.build_arm(t, e)
    vals = kernels.rmst_grid(p, np.linspace(0.0, t.max(), 300))
    assert np.all(np.diff(vals) >= -1e-15)


def test_backend_env_override():
    env = {**os.environ, "RMSTSEL_BACKEND": "numpy"}
    out = subprocess.run(
        [sys.executable, "-c", "import rmstsel.kernels as k; print(k.BACKEND)"],
        capture_output=True, text=True, env=env,
    )
    assert out.stdout.strip() == "numpy"

    env["RMSTSEL_BACKEND"] = "numba"
    out = subprocess.run(
        [sys.executable, "-c", "import rmstsel.kernels as k; print(k.BACKEND)"],
        capture_output=True, text=True, env=env,
    )
    assert out.stdout.strip() == "numba"


def test_backend_unknown_value_warns_and_falls_back():
    env = {**os.environ, "RMSTSEL_BACKEND": "fortran"}
    out = subprocess.run(
        [sys.executable, "-W", "always", "-c",
         "import rmstsel.kernels as k; print(k.BACKEND)"],
        capture_output=True, text=True, env=env,
    )
    assert out.stdout.strip() in ("numba", "numpy")
    assert "RMSTSEL_BACKEND" in out.stderr


def test_warm_up_idempotent():
    kernels.warm_up()
    kernels.warm_up()
