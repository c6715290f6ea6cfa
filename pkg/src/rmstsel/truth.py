"""Exact ground truth for piecewise-exponential two-arm scenarios.

Survival, hazard, sampling, and RMST are closed-form.  The asymptotic
variance of the (scaled) RMST difference is

    V_L = sum over arms of  (1/share) * int_0^L (theta_L - theta_v)^2
                                         * hazard(v) / (S(v) * G(v)) dv

with G the censoring survival exp(-censor_rate * v) (administrative
censoring sits beyond every L we integrate over, which is asserted), and
share = beta for treatment, 1 - beta for control.  The true criterion is
kappa(L)^2 / V_L, optionally penalized, and its maximizer is located
numerically (dense grid plus ternary refinement).
"""
import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Tuple

import numpy as np
from scipy import integrate

from .criterion import NO_PENALTY, PenaltyConfig
from .errors import DataError, NonUniqueMaximizer, QuadratureFailure


@dataclass(frozen=True)
class PiecewiseExponential:
    """Interval-constant hazard: rate rates[i] on [change_points[i], next)."""
    change_points: Tuple[float, ...]
    rates: Tuple[float, ...]

    def __post_init__(self):
        if len(self.change_points) != len(self.rates):
            raise ValueError("change_points and rates must have equal length")
        if not self.change_points or self.change_points[0] != 0:
            raise ValueError("change_points must start at 0")
        if any(b <= a for a, b in zip(self.change_points, self.change_points[1:])):
            raise ValueError("change_points must be strictly increasing")
        if any(r <= 0 for r in self.rates):
            raise ValueError("rates must be positive")


@dataclass(frozen=True)
class ScenarioSpec:
    """A named two-arm data-generating process."""
    name: str
    treatment: PiecewiseExponential
    control: PiecewiseExponential
    censor_rate: float = 0.5
    admin_time: float = 5.0
    beta: float = 0.5       # treatment allocation fraction


def _pwe(rates, changes) -> PiecewiseExponential:
    return PiecewiseExponential(change_points=tuple(float(c) for c in changes),
                                rates=tuple(float(r) for r in rates))


_CONTROL = _pwe((1.0,), (0.0,))

SCENARIOS = {
    "null":     ScenarioSpec("null", _pwe((1.0,), (0.0,)), _CONTROL),
    "ph":       ScenarioSpec("ph", _pwe((0.75,), (0.0,)), _CONTROL),
    "early":    ScenarioSpec("early", _pwe((0.65, 1.0), (0.0, 0.5)), _CONTROL),
    "tran":     ScenarioSpec("tran", _pwe((0.5, 1.5, 1.0), (0.0, 0.6, 1.2)), _CONTROL),
    "cs":       ScenarioSpec("cs", _pwe((0.5, 1.4), (0.0, 0.5)), _CONTROL),
    "msep":     ScenarioSpec("msep", _pwe((0.5, 1.1), (0.0, 0.5)), _CONTROL),
    "delay_1":  ScenarioSpec("delay_1", _pwe((1.0, 0.7), (0.0, 0.2)), _CONTROL),
    "delay_2":  ScenarioSpec("delay_2", _pwe((1.0, 0.7), (0.0, 0.4)), _CONTROL),
    "delaycon": ScenarioSpec("delaycon", _pwe((1.0, 0.7, 1.2), (0.0, 0.2, 1.0)), _CONTROL),
}


def get_scenario(name: str) -> ScenarioSpec:
    try:
        return SCENARIOS[name]
    except KeyError:
        raise DataError(
            f"unknown scenario {name!r}; valid: {', '.join(sorted(SCENARIOS))}") from None


@lru_cache(maxsize=None)
def _knots(d: PiecewiseExponential):
    cps = np.asarray(d.change_points, dtype=np.float64)
    rates = np.asarray(d.rates, dtype=np.float64)
    cum = np.concatenate(([0.0], np.cumsum(rates[:-1] * np.diff(cps))))
    return cps, rates, cum


def pwexp_survival(d: PiecewiseExponential, t):
    """Exact S(t) = exp(-integral of the hazard)."""
    cps, rates, cum = _knots(d)
    t_arr = np.asarray(t, dtype=np.float64)
    idx = np.searchsorted(cps, t_arr, side="right") - 1
    out = np.exp(-(cum[idx] + rates[idx] * (t_arr - cps[idx])))
    return float(out) if np.isscalar(t) or t_arr.ndim == 0 else out


def pwexp_hazard(d: PiecewiseExponential, t):
    """Right-continuous hazard value at t."""
    cps, rates, _ = _knots(d)
    t_arr = np.asarray(t, dtype=np.float64)
    idx = np.searchsorted(cps, t_arr, side="right") - 1
    out = rates[idx]
    return float(out) if np.isscalar(t) or t_arr.ndim == 0 else out


def pwexp_sample(d: PiecewiseExponential, rng: np.random.Generator, size=None):
    """Draw event times by inverting the piecewise cumulative hazard."""
    cps, rates, cum = _knots(d)
    e = rng.exponential(1.0, size=size)
    idx = np.searchsorted(cum, e, side="right") - 1
    return cps[idx] + (e - cum[idx]) / rates[idx]


def true_rmst(d: PiecewiseExponential, L: float) -> float:
    """Closed-form E[T and L] for a piecewise exponential."""
    if L < 0:
        raise ValueError("L must be nonnegative")
    cps, rates, cum = _knots(d)
    total = 0.0
    for k in range(cps.shape[0]):
        if cps[k] >= L:
            break
        upper = L if k + 1 >= cps.shape[0] else min(L, cps[k + 1])
        delta = upper - cps[k]
        total += math.exp(-cum[k]) * (1.0 - math.exp(-rates[k] * delta)) / rates[k]
    return total


def true_kappa(s: ScenarioSpec, L: float) -> float:
    return true_rmst(s.treatment, L) - true_rmst(s.control, L)


@lru_cache(maxsize=None)
def _v_arm(d: PiecewiseExponential, censor_rate: float, L: float) -> float:
    """Single-arm variance integral, adaptive quadrature split at hazard kinks."""
    if L == 0.0:
        return 0.0
    th_L = true_rmst(d, L)

    def integrand(v):
        th_v = true_rmst(d, v)
        y_v = pwexp_survival(d, v) * math.exp(-censor_rate * v)
        return (th_L - th_v) ** 2 * pwexp_hazard(d, v) / y_v

    pts = [cp for cp in d.change_points if 0.0 < cp < L]
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, abserr = integrate.quad(integrand, 0.0, L, points=pts or None,
                                         epsabs=1e-13, epsrel=1e-8, limit=200)
        except integrate.IntegrationWarning as exc:
            raise QuadratureFailure(
                f"variance integral did not converge on [0, {L}]: {exc}") from exc
    if not math.isfinite(val):
        raise QuadratureFailure(f"variance integral returned {val} on [0, {L}]")
    return val


def true_variance(s: ScenarioSpec, L: float) -> float:
    """Asymptotic variance of sqrt(n) * kappa_hat(L) under the scenario."""
    if not 0 <= L < s.admin_time:
        raise ValueError(
            f"need 0 <= L < administrative censoring time {s.admin_time}, got {L}")
    v1 = _v_arm(s.treatment, s.censor_rate, float(L))
    v0 = _v_arm(s.control, s.censor_rate, float(L))
    return v1 / s.beta + v0 / (1.0 - s.beta)


def true_criterion(s: ScenarioSpec, L: float, pen: PenaltyConfig = NO_PENALTY) -> float:
    """kappa(L)^2 / V_L - c (L - l_tilde)^2, with the L -> 0 limit set to 0."""
    if L <= 0.0:
        base = 0.0
    else:
        kap = true_kappa(s, L)
        base = 0.0 if kap == 0.0 else kap * kap / true_variance(s, L)
    return base - pen.c * (L - pen.l_tilde) ** 2


_GRID_POINTS = 2048
_NEAR_TOL = 1e-9
_PLATEAU_FRACTION = 0.05


def true_optimum(s: ScenarioSpec, L_min: float, L_max: float,
                 pen: PenaltyConfig = NO_PENALTY):
    """Maximize the true (penalized) criterion on [L_min, L_max].

    Dense 2048-point grid, then ternary refinement of the bracketing
    interval to 1e-9 relative tolerance.  Raises NonUniqueMaximizer when the
    grid shows either two separated near-optimal peaks or a near-optimal
    plateau wider than 5% of the interval (the flat criterion of a
    no-effect scenario without penalty is the motivating case).

    Returns (L_opt, kappa_at_opt).
    """
    if not (0 < L_min < L_max < s.admin_time):
        raise ValueError(
            f"need 0 < L_min < L_max < {s.admin_time}, got [{L_min}, {L_max}]")
    if pen.c > 0 and not (L_min < pen.l_tilde < L_max):
        raise ValueError("l_tilde must lie inside (L_min, L_max) when c > 0")
    grid = np.linspace(L_min, L_max, _GRID_POINTS)
    vals = np.array([true_criterion(s, float(L), pen) for L in grid])
    fmax = vals.max()
    near = vals >= fmax - _NEAR_TOL
    run_starts = int(near[0]) + int(np.sum(near[1:] & ~near[:-1]))
    if run_starts > 1:
        raise NonUniqueMaximizer(
            "two separated near-optimal restriction times differ by < 1e-9")
    if int(near.sum()) > _PLATEAU_FRACTION * _GRID_POINTS:
        raise NonUniqueMaximizer(
            "criterion is near-flat at its maximum; no unique optimal restriction time")
    best = int(np.argmax(vals))
    lo = grid[max(best - 1, 0)]
    hi = grid[min(best + 1, _GRID_POINTS - 1)]
    tol = 1e-9 * (L_max - L_min)
    while hi - lo > tol:
        m1 = lo + (hi - lo) / 3.0
        m2 = hi - (hi - lo) / 3.0
        if true_criterion(s, float(m1), pen) < true_criterion(s, float(m2), pen):
            lo = m1
        else:
            hi = m2
    L_opt = 0.5 * (lo + hi)
    return float(L_opt), true_kappa(s, float(L_opt))


def true_optimum_grid(s: ScenarioSpec, grid, pen: PenaltyConfig = NO_PENALTY):
    """Maximizer of the true penalized criterion over an explicit grid.

    Returns (L_opt, kappa_at_opt); ties break to the smallest grid point.
    """
    grid = np.asarray(grid, dtype=np.float64)
    vals = np.array([true_criterion(s, float(L), pen) for L in grid])
    best = int(np.argmax(vals))
    return float(grid[best]), true_kappa(s, float(grid[best]))
