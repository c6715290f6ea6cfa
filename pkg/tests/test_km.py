import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import km_product_limit
from rmstsel.errors import BeyondFollowUp, EmptyArm
from rmstsel.km import curve_from_arrays, fit_km, survival_at


def test_basic_product_limit():
    curve = fit_km([(1.0, 1), (2.0, 1), (3.0, 0)])
    assert curve.event_times.tolist() == [1.0, 2.0]
    np.testing.assert_allclose(curve.survival, [2 / 3, 1 / 3])
    assert curve.at_risk.tolist() == [3, 2]
    assert curve.deaths.tolist() == [1, 1]
    assert curve.max_follow_up == 3.0
    assert curve.n_arm == 3


def test_tied_deaths_single_step():
    # two deaths at t=1 out of four at risk: one step straight to 1/2
    curve = fit_km([(1.0, 1), (1.0, 1), (2.0, 0), (3.0, 0)])
    assert curve.event_times.tolist() == [1.0]
    assert curve.deaths.tolist() == [2]
    assert curve.at_risk.tolist() == [4]
    np.testing.assert_allclose(curve.survival, [0.5])


def test_censor_then_death_shrinks_risk_set():
    curve = fit_km([(1.0, 0), (2.0, 1)])
    assert curve.at_risk.tolist() == [1]
    np.testing.assert_allclose(curve.survival, [0.0])


def test_survival_at_step_function():
    curve = fit_km([(1.0, 1), (2.0, 1), (3.0, 0)])
    assert survival_at(curve, 0.0) == 1.0
    assert survival_at(curve, 0.999) == 1.0
    assert survival_at(curve, 1.0) == pytest.approx(2 / 3)   # right-continuous
    assert survival_at(curve, 1.5) == pytest.approx(2 / 3)
    assert survival_at(curve, 2.0) == pytest.approx(1 / 3)
    assert survival_at(curve, 3.0) == pytest.approx(1 / 3)


def test_survival_beyond_follow_up_raises():
    curve = fit_km([(1.0, 1), (2.0, 0)])
    with pytest.raises(BeyondFollowUp):
        survival_at(curve, 2.0001)


def test_empty_arm():
    with pytest.raises(EmptyArm):
        fit_km([])


def test_curve_from_arrays_matches_fit_km():
    rng = np.random.default_rng(3)
    t = rng.exponential(1.0, 50)
    e = rng.integers(0, 2, 50)
    a = curve_from_arrays(t, e)
    b = fit_km(list(zip(t, e)))
    np.testing.assert_array_equal(a.event_times, b.event_times)
    np.testing.assert_array_equal(a.survival, b.survival)


def test_all_censored_curve_is_flat():
    curve = fit_km([(1.0, 0), (2.0, 0), (3.0, 0)])
    assert curve.event_times.size == 0
    assert survival_at(curve, 3.0) == 1.0


@pytest.mark.parametrize("seed", range(6))
def test_against_plain_loop_oracle(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(5, 60))
    t = np.round(rng.exponential(1.0, n), 1) + 0.1  # coarse grid forces ties
    e = rng.integers(0, 2, n)
    curve = curve_from_arrays(t, e)
    oracle = km_product_limit(t, e)
    assert curve.event_times.tolist() == sorted(oracle)
    for ti, si in zip(curve.event_times, curve.survival):
        assert si == pytest.approx(oracle[ti], rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(
    st.lists(
        st.tuples(st.floats(0.01, 50.0), st.integers(0, 1)),
        min_size=1,
        max_size=30,
    )
)
def test_survival_curve_invariants(records):
    curve = fit_km(records)
    s = np.concatenate([[1.0], curve.survival])
    assert np.all(np.diff(s) <= 1e-15)          # non-increasing
    assert np.all(curve.survival >= -1e-15)
    assert np.all(curve.survival <= 1.0 + 1e-15)
    assert np.all(np.diff(curve.event_times) > 0)
    assert np.all(curve.deaths >= 1)
    assert np.all(curve.at_risk >= curve.deaths)
