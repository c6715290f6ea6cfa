import numpy as np
import pytest

from conftest import km_product_limit, make_dataset, random_dataset
from rmstsel.data import TrialDataset
from rmstsel.errors import BeyondFollowUp, NotEstimable
from rmstsel.km import curve_from_arrays
from rmstsel.rmst import kappa_hat, rmst_arm, variance_hat


def rmst_from_scratch(times, events, L):
    """Area under the plain-loop product-limit curve up to L."""
    surv = km_product_limit(times, events)
    knots = sorted(t for t in surv if t < L)
    area = 0.0
    prev_t, prev_s = 0.0, 1.0
    for t in knots:
        area += prev_s * (t - prev_t)
        prev_t, prev_s = t, surv[t]
    return area + prev_s * (L - prev_t)


def variance_from_scratch(ds, L):
    """Tie-aware variance of sqrt(n) * kappa_hat, summed arm by arm."""
    total = 0.0
    for arm in (0, 1):
        t, e = ds.arm_arrays(arm)
        theta_L = rmst_from_scratch(t, e, L)
        for tj in sorted(set(t[e == 1])):
            if tj > L:
                continue
            y = int(np.sum(t >= tj))
            d = int(np.sum((t == tj) & (e == 1)))
            if y == d:
                continue
            total += d / (y * (y - d)) * (theta_L - rmst_from_scratch(t, e, tj)) ** 2
    return ds.n * total


def test_toy_point_estimates(toy_ds):
    est = kappa_hat(toy_ds, 2.0)
    assert est.theta0 == pytest.approx(1.5)
    assert est.theta1 == pytest.approx(1.75)
    assert est.kappa == pytest.approx(0.25)
    assert est.sigma2 == pytest.approx(0.625)
    assert est.estimable


def test_uncensored_rmst_is_mean_of_clamped_times():
    rng = np.random.default_rng(11)
    t = rng.exponential(1.3, 400)
    curve = curve_from_arrays(t, np.ones_like(t, dtype=int))
    for L in (0.5, 1.0, 2.5):
        assert rmst_arm(curve, L) == pytest.approx(np.minimum(t, L).mean(), rel=1e-12)


def test_rmst_matches_plain_loop():
    rng = np.random.default_rng(4)
    for _ in range(10):
        t = np.round(rng.exponential(1.0, 40), 1) + 0.1
        e = rng.integers(0, 2, 40)
        curve = curve_from_arrays(t, e)
        L = float(rng.uniform(0.2, t.max()))
        assert rmst_arm(curve, L) == pytest.approx(rmst_from_scratch(t, e, L), rel=1e-12)


def test_variance_matches_plain_loop():
    rng = np.random.default_rng(5)
    for _ in range(10):
        ds = random_dataset(rng, n_per_arm=25)
        L = 0.9 * min(ds.arm_arrays(0)[0].max(), ds.arm_arrays(1)[0].max())
        assert variance_hat(ds, L) == pytest.approx(variance_from_scratch(ds, L), rel=1e-10)


def test_tied_death_with_full_risk_set_contributes_zero():
    # at t=1 every subject at risk dies (Y == d): that term must drop out
    ds = make_dataset([(1.0, 1), (1.0, 1)], [(0.5, 1), (2.0, 0)])
    v = variance_hat(ds, 1.0)
    assert np.isfinite(v)
    assert v == pytest.approx(variance_from_scratch(ds, 1.0))


def test_variance_tracks_bootstrap_variance():
    """sigma2 should approximate the resampling variance of sqrt(n)*kappa."""
    from rmstsel.sim import generate_trial

    ds = generate_trial("tran", 200, np.random.SeedSequence(99))
    L = 1.0
    est = kappa_hat(ds, L)
    rng = np.random.default_rng(1234)
    t0, e0 = ds.arm_arrays(0)
    t1, e1 = ds.arm_arrays(1)
    kappas = []
    for _ in range(600):
        i0 = rng.integers(0, ds.n0, ds.n0)
        i1 = rng.integers(0, ds.n1, ds.n1)
        boot = TrialDataset.from_arrays(
            arm=np.r_[np.zeros(ds.n0, int), np.ones(ds.n1, int)],
            time=np.r_[t0[i0], t1[i1]],
            event=np.r_[e0[i0], e1[i1]],
        )
        kappas.append(kappa_hat(boot, L).kappa)
    boot_var = ds.n * np.var(kappas, ddof=1)
    assert est.sigma2 == pytest.approx(boot_var, rel=0.15)


def test_kappa_zero_horizon():
    ds = make_dataset([(1.0, 1), (2.0, 0)], [(1.5, 1), (2.0, 0)])
    est = kappa_hat(ds, 0.0)
    assert est.kappa == 0.0
    assert est.sigma2 == 0.0


def test_beyond_follow_up():
    curve = curve_from_arrays(np.array([1.0, 2.0]), np.array([1, 0]))
    with pytest.raises(BeyondFollowUp):
        rmst_arm(curve, 2.5)


def test_negative_horizon_rejected():
    curve = curve_from_arrays(np.array([1.0, 2.0]), np.array([1, 0]))
    with pytest.raises(ValueError):
        rmst_arm(curve, -0.5)


def test_kappa_not_estimable_past_shorter_arm(toy_ds):
    with pytest.raises(NotEstimable):
        kappa_hat(toy_ds, 2.5)
