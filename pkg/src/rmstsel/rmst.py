"""Restricted-mean-survival-time estimates and the tie-aware variance of the
between-arm difference.

The variance here is for the sqrt(n)-scaled difference:

    sigma2 = n * sum_arms sum_{T_(j) <= L} d / (Y (Y - d)) * (theta(L) - theta(T_(j)))^2

so Wald-type intervals use sigma_hat / sqrt(n).  Terms with Y = d (the risk
set exhausted by deaths) always multiply a zero RMST increment under the step
convention and are resolved to zero.
"""
from dataclasses import dataclass

import numpy as np

from . import kernels
from .data import TrialDataset, max_estimable_time
from .errors import BeyondFollowUp, DegenerateRiskSet, NotEstimable
from .km import SurvivalCurve


@dataclass(frozen=True)
class RmstEstimate:
    L: float
    theta1: float
    theta0: float
    kappa: float      # theta1 - theta0
    sigma2: float     # variance of sqrt(n) * kappa_hat
    estimable: bool


def rmst_arm(curve: SurvivalCurve, L: float) -> float:
    """Exact step-function integral of the KM curve on [0, L]."""
    if L > curve.max_follow_up:
        raise BeyondFollowUp(f"L={L} exceeds max follow-up {curve.max_follow_up}")
    if L < 0:
        raise ValueError("L must be nonnegative")
    return kernels.rmst_at(curve._profile, L)


def kappa_hat(ds: TrialDataset, L: float) -> RmstEstimate:
    """RMST difference (treatment minus control) with its variance at L."""
    met = max_estimable_time(ds)
    if L > met:
        raise NotEstimable(f"L={L} exceeds max estimable time {met}")
    p0, p1 = ds.profiles
    theta0 = kernels.rmst_at(p0, L)
    theta1 = kernels.rmst_at(p1, L)
    sigma2 = variance_hat(ds, L)
    return RmstEstimate(L=float(L), theta1=theta1, theta0=theta0,
                        kappa=theta1 - theta0, sigma2=sigma2, estimable=True)


def variance_hat(ds: TrialDataset, L: float) -> float:
    """Tie-aware variance of sqrt(n)*kappa_hat(L), by direct summation.

    This is deliberately a different route than the prefix-sum kernels (no
    algebraic expansion), so the two can cross-check each other.
    """
    met = max_estimable_time(ds)
    if L > met:
        raise NotEstimable(f"L={L} exceeds max estimable time {met}")
    total = 0.0
    for p in ds.profiles:
        thL = kernels.rmst_at(p, L)
        k = int(np.searchsorted(p.t, L, side="right"))
        if k == 0:
            continue
        diffs = thL - p.theta[:k]
        exhausted = p.y[:k] == p.d[:k]
        if exhausted.any() and np.any(diffs[exhausted] != 0.0):
            raise DegenerateRiskSet(
                "a Y = d event time contributes a nonzero RMST increment")
        total += float(np.sum(p.w[:k] * diffs * diffs))
    return ds.n * total
