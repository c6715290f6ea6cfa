"""The signal-to-noise criterion, its quadratic penalization, and maximization.

The sample criterion at restriction time L is

    M_n(L) = kappa_hat(L)^2 / sigma2_hat(L),

set to -inf when L exceeds the max estimable time or sigma2_hat(L) = 0.  The
penalized variant subtracts c * (L - l_tilde)^2, which makes the maximizer
unique under a null effect.
"""
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .data import TrialDataset, max_estimable_time
from .errors import NoEstimablePoint, TooFewSubjects

UNIT_IN_YEARS = {"years": 1.0, "months": 1.0 / 12.0, "days": 1.0 / 365.25}

REFINE_ITERS = 60


@dataclass(frozen=True)
class PenaltyConfig:
    """Penalty strength c (per squared time unit) and anchor l_tilde.

    c = 0 disables penalization; when c > 0 the anchor must lie strictly
    inside the search interval (checked at maximization time).
    """
    c: float = 0.0
    l_tilde: float = 0.0

    def __post_init__(self):
        if self.c < 0:
            raise ValueError(f"penalty strength must be >= 0, got {self.c}")


NO_PENALTY = PenaltyConfig(0.0, 0.0)


@dataclass(frozen=True)
class CriterionProfile:
    """Criterion values sampled over candidate restriction times."""
    ls: np.ndarray
    m_values: np.ndarray
    m_pen_values: np.ndarray
    argmax_index: int

    def dump_csv(self, target):
        """Write `L,M,M_penalized` rows for plotting."""
        import os
        own = isinstance(target, (str, os.PathLike))
        fh = open(target, "w", encoding="utf-8") if own else target
        try:
            fh.write("L,M,M_penalized\n")
            for L, m, mp in zip(self.ls, self.m_values, self.m_pen_values):
                fh.write(f"{L!r},{m!r},{mp!r}\n")
        finally:
            if own:
                fh.close()


def _penalize(m, ls, pen: PenaltyConfig):
    out = np.where(np.isfinite(m), m - pen.c * (ls - pen.l_tilde) ** 2, m)
    return out


def criterion_value(ds: TrialDataset, L: float, pen: PenaltyConfig = NO_PENALTY):
    """Penalized sample criterion at a single L (any L >= 0)."""
    if L < 0:
        raise ValueError("L must be nonnegative")
    if L > max_estimable_time(ds):
        return -math.inf
    p0, p1 = ds.profiles
    return kernels.pen_value(p0, p1, ds.n, L, pen.c, pen.l_tilde)


def _candidate_set(p0, p1, lo, hi):
    """Distinct event times in [lo, hi] plus a uniform grid, merged sorted."""
    evs = np.union1d(p0.t, p1.t)
    evs = evs[(evs >= lo) & (evs <= hi)]
    g = max(1000, 10 * evs.shape[0])
    cand = np.union1d(evs, np.linspace(lo, hi, g))
    return cand, evs


def _maximize_profiles(p0, p1, n, lo, hi, pen: PenaltyConfig, refine=True):
    """Shared maximizer over [lo, hi] (hi already clamped to estimability).

    Returns (L_hat, kappa, sigma2, cand, m, mpen, argmax_index).  The grid
    argmax breaks ties toward the smallest L; ternary refinement then hunts
    inside the bracketing inter-event interval(s), where the criterion is a
    smooth rational function of L.
    """
    cand, evs = _candidate_set(p0, p1, lo, hi)
    kap, sig = kernels.pair_eval(p0, p1, n, cand)
    with np.errstate(divide="ignore", invalid="ignore"):
        m = np.where(sig > 0.0, kap * kap / sig, -np.inf)
    mpen = _penalize(m, cand, pen)
    best = int(np.argmax(mpen))
    if not np.isfinite(mpen[best]):
        raise NoEstimablePoint(
            f"criterion is -inf on all of [{lo}, {hi}]")
    L_best = float(cand[best])
    f_best = float(mpen[best])
    if refine:
        i = int(np.searchsorted(evs, L_best, side="left"))
        j = int(np.searchsorted(evs, L_best, side="right"))
        left = float(evs[i - 1]) if i > 0 else lo
        right = float(evs[j]) if j < evs.shape[0] else hi
        if i < j:
            # best candidate sits exactly on an event time: search both sides
            intervals = ((left, L_best), (L_best, right))
        else:
            intervals = ((left, right),)
        for a, b in intervals:
            if b <= a:
                continue
            L_r = kernels.refine_ternary(p0, p1, n, a, b, pen.c, pen.l_tilde,
                                         REFINE_ITERS)
            f_r = kernels.pen_value(p0, p1, n, L_r, pen.c, pen.l_tilde)
            if f_r > f_best or (f_r == f_best and L_r < L_best):
                L_best, f_best = L_r, f_r
    kap_b, sig_b = kernels.pair_eval(p0, p1, n, np.array([L_best]))
    return L_best, float(kap_b[0]), float(sig_b[0]), cand, m, mpen, best


def _check_interval(L_min, L_max, pen: PenaltyConfig):
    if not (0 < L_min < L_max):
        raise ValueError(f"need 0 < L_min < L_max, got [{L_min}, {L_max}]")
    if pen.c > 0 and not (L_min < pen.l_tilde < L_max):
        raise ValueError(
            f"l_tilde={pen.l_tilde} must lie inside ({L_min}, {L_max}) when c > 0")


def maximize_continuous(ds: TrialDataset, L_min: float, L_max: float,
                        pen: PenaltyConfig = NO_PENALTY):
    """Maximize the penalized criterion over the interval [L_min, L_max].

    The search is clamped to [L_min, min(L_max, max_estimable_time)]; the
    region beyond follow-up is -inf by convention and never wins.

    Returns (L_hat, profile).
    """
    _check_interval(L_min, L_max, pen)
    hi = min(L_max, max_estimable_time(ds))
    if hi < L_min:
        raise NoEstimablePoint(
            f"[{L_min}, {L_max}] lies beyond the max estimable time {hi}")
    p0, p1 = ds.profiles
    L_hat, _, _, cand, m, mpen, best = _maximize_profiles(
        p0, p1, ds.n, float(L_min), float(hi), pen)
    return L_hat, CriterionProfile(cand, m, mpen, best)


def maximize_discrete(ds: TrialDataset, grid, pen: PenaltyConfig = NO_PENALTY):
    """Maximize the penalized criterion over an explicit grid.

    Returns (L_hat, kappa_hat, sigma2, profile); ties break to the smallest
    grid point.  When c > 0 the anchor l_tilde must equal a grid point.
    """
    grid = np.asarray(grid, dtype=np.float64)
    if grid.size == 0:
        raise ValueError("grid must be nonempty")
    if grid.size > 1 and not np.all(np.diff(grid) > 0):
        raise ValueError("grid must be strictly increasing")
    if pen.c > 0:
        tol = 1e-9 * max(1.0, abs(pen.l_tilde))
        if np.min(np.abs(grid - pen.l_tilde)) > tol:
            raise ValueError(
                f"l_tilde={pen.l_tilde} must equal a grid point when c > 0")
    met = max_estimable_time(ds)
    p0, p1 = ds.profiles
    kap, sig = kernels.pair_eval(p0, p1, ds.n, grid)
    with np.errstate(divide="ignore", invalid="ignore"):
        m = np.where((grid <= met) & (sig > 0.0), kap * kap / sig, -np.inf)
    mpen = _penalize(m, grid, pen)
    best = int(np.argmax(mpen))
    if not np.isfinite(mpen[best]):
        raise NoEstimablePoint("criterion is -inf at every grid point")
    profile = CriterionProfile(grid, m, mpen, best)
    return float(grid[best]), float(kap[best]), float(sig[best]), profile


def default_penalty(L_min: float, L_max: float, time_unit: str = "years",
                    discrete: bool = False) -> float:
    """Default penalty strength for an analysis window.

    c = coef * 16 / (L_max - L_min)^2 * (unit in years)^2, with coef 0.002
    for the continuous-interval estimator and 0.005 for the grid estimator.
    """
    if L_max <= L_min:
        raise ValueError("L_max must exceed L_min")
    factor = UNIT_IN_YEARS[time_unit]
    coef = 0.005 if discrete else 0.002
    return coef * 16.0 / (L_max - L_min) ** 2 * factor ** 2


def suggest_grid_size(n: int):
    """Recommended grid-size range (ceil(n^(1/4)), floor(2 n^(1/4)))."""
    if n < 16:
        raise TooFewSubjects(f"grid-size rule needs n >= 16, got {n}")
    r = float(n) ** 0.25
    if abs(r - round(r)) < 1e-9:
        r = float(round(r))
    return math.ceil(r - 1e-9), math.floor(2.0 * r + 1e-9)


def uniform_grid(L_min: float, L_max: float, m: int) -> np.ndarray:
    """m equally spaced restriction times from L_min to L_max inclusive."""
    if m < 1:
        raise ValueError("grid needs at least one point")
    if m == 1:
        return np.array([0.5 * (L_min + L_max)])
    return np.linspace(L_min, L_max, m)


def default_anchor_index(m: int) -> int:
    """0-based index of the default l_tilde on an m-point grid (the middle,
    rounding down: point floor((m+1)/2) in 1-based counting)."""
    return (m + 1) // 2 - 1
