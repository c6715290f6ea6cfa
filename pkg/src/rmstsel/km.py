"""Kaplan-Meier product-limit estimation with the bookkeeping the variance
estimator needs (deaths and at-risk counts at every distinct event time)."""
import numpy as np

from . import kernels
from .errors import BeyondFollowUp, EmptyArm


class SurvivalCurve:
    """Per-arm product-limit step function.

    Attributes
    ----------
    event_times : ndarray
        Strictly increasing distinct times with at least one event.
    deaths : ndarray of int
        d_(j) >= 1 at each event time.
    at_risk : ndarray of int
        Y(T_(j)) under the X >= t convention (a subject censored exactly at
        an event time still counts as at risk there).
    survival : ndarray
        S(T_(j)) = prod_{k<=j} (1 - d_(k)/Y(T_(k))).
    max_follow_up : float
    n_arm : int
    """

    def __init__(self, profile: kernels.ArmProfile):
        self._profile = profile
        self.event_times = profile.t
        self.deaths = profile.d.astype(np.int64)
        self.at_risk = profile.y.astype(np.int64)
        self.survival = profile.s
        self.max_follow_up = profile.tau
        self.n_arm = profile.n_arm

    def __repr__(self):
        return (f"SurvivalCurve(n_arm={self.n_arm}, "
                f"events={self.event_times.shape[0]}, "
                f"max_follow_up={self.max_follow_up})")


def fit_km(records) -> SurvivalCurve:
    """Fit the product-limit estimator to one arm.

    Parameters
    ----------
    records : iterable of (time, event)
        Any order; ties allowed.  Censoring tied with an event leaves the
        censored subject in that time's risk set.
    """
    pairs = list(records)
    if not pairs:
        raise EmptyArm("cannot fit a survival curve to zero records")
    arr = np.asarray(pairs, dtype=np.float64)
    return SurvivalCurve(kernels.build_arm(arr[:, 0], arr[:, 1]))


def curve_from_arrays(times, events) -> SurvivalCurve:
    times = np.asarray(times, dtype=np.float64)
    if times.size == 0:
        raise EmptyArm("cannot fit a survival curve to zero records")
    return SurvivalCurve(kernels.build_arm(times, events))


def survival_at(curve: SurvivalCurve, t: float) -> float:
    """Right-continuous step evaluation of the fitted curve; S(0) = 1."""
    if t > curve.max_follow_up:
        raise BeyondFollowUp(
            f"t={t} exceeds max follow-up {curve.max_follow_up}")
    k = int(np.searchsorted(curve.event_times, t, side="right"))
    if k == 0:
        return 1.0
    return float(curve.survival[k - 1])
