"""Confidence intervals and dual tests for the adaptively selected effect.

Three routes:

* convex-hull (fold-based) intervals for the unpenalized estimator;
* percentile bootstrap for the penalized continuous-time estimator;
* Wald intervals at the selected point of a discrete grid.

Every route satisfies the duality `reject iff 0 not in ci_kappa`.
"""
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import ndtr, ndtri

from . import kernels
from .criterion import (NO_PENALTY, PenaltyConfig, _maximize_profiles,
                        default_anchor_index, default_penalty, uniform_grid)
from .criterion import maximize_discrete
from .data import TrialDataset, max_estimable_time
from .errors import (FoldTooSmall, NoEstimablePoint, TooManyDegenerateResamples)

DEGENERATE_RESAMPLE_LIMIT = 0.05


@dataclass(frozen=True)
class ConfidenceInterval:
    lower: float
    upper: float
    level: float                     # nominal 1 - alpha
    method: str                      # hulc | hulc_anti | bootstrap | wald

    def covers(self, value: float) -> bool:
        return self.lower <= value <= self.upper

    def excludes_zero(self) -> bool:
        return self.lower > 0.0 or self.upper < 0.0


@dataclass
class AnalysisResult:
    method: str                      # ct | dt | hulc
    L_hat: float
    kappa_hat: float
    ci_kappa: ConfidenceInterval
    ci_L: Optional[ConfidenceInterval]
    p_value: Optional[float]
    reject: bool
    seed: Optional[int]
    diagnostics: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        out = {
            "method": self.method,
            "L_hat": self.L_hat,
            "kappa_hat": self.kappa_hat,
            "ci_kappa_lower": self.ci_kappa.lower,
            "ci_kappa_upper": self.ci_kappa.upper,
            "ci_level": self.ci_kappa.level,
            "ci_method": self.ci_kappa.method,
            "ci_L_lower": None if self.ci_L is None else self.ci_L.lower,
            "ci_L_upper": None if self.ci_L is None else self.ci_L.upper,
            "p_value": self.p_value,
            "reject": self.reject,
            "seed": self.seed,
            "diagnostics": dict(self.diagnostics),
            "config": dict(self.config),
        }
        return out


def _seed_sequence(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def _rng(seed) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(_seed_sequence(seed)))


def hulc_fold_count(alpha: float, anti_conservative: bool) -> int:
    """Number of folds: 1 - ln(alpha)/ln(2), ceiled (conservative) or floored."""
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    x = 1.0 - math.log(alpha) / math.log(2.0)
    return math.floor(x) if anti_conservative else math.ceil(x)


def default_interval(ds: TrialDataset):
    """(L_min, L_max) when the caller gives none: 5th percentile of pooled
    follow-up to the max estimable time."""
    times = np.fromiter((r.time for r in ds.records), dtype=np.float64, count=ds.n)
    return float(np.quantile(times, 0.05)), max_estimable_time(ds)


def hulc_interval(ds: TrialDataset, alpha: float = 0.05,
                  anti_conservative: bool = True,
                  L_min: Optional[float] = None, L_max: Optional[float] = None,
                  seed=0) -> AnalysisResult:
    """Convex-hull CI from fold-wise unpenalized criterion maximizers.

    The sample is randomly partitioned into B folds, stratified by arm so no
    fold loses an arm; the CI is the hull [min_j kappa_j, max_j kappa_j] of
    the per-fold estimates, and the dual test rejects iff 0 falls outside.
    """
    lo_def, hi_def = default_interval(ds)
    L_min = lo_def if L_min is None else float(L_min)
    L_max = hi_def if L_max is None else float(L_max)
    B = hulc_fold_count(alpha, anti_conservative)
    if ds.n0 < 2 * B or ds.n1 < 2 * B:
        raise FoldTooSmall(
            f"{B} folds need >=2 subjects per arm per fold "
            f"(have n0={ds.n0}, n1={ds.n1})")
    rng = _rng(seed)
    arms, times, events = ds._arrays
    fold_of = np.empty(ds.n, dtype=np.int64)
    for a in (0, 1):
        idx = np.flatnonzero(arms == a)
        perm = rng.permutation(idx)
        fold_of[perm] = np.arange(perm.shape[0]) % B
    kappas = np.empty(B)
    for j in range(B):
        in_fold = fold_of == j
        p0 = kernels.build_arm(times[in_fold & (arms == 0)],
                               events[in_fold & (arms == 0)])
        p1 = kernels.build_arm(times[in_fold & (arms == 1)],
                               events[in_fold & (arms == 1)])
        hi = min(L_max, p0.tau, p1.tau)
        if hi < L_min:
            raise NoEstimablePoint(
                f"fold {j} has no estimable restriction time in [{L_min}, {L_max}]")
        n_fold = int(in_fold.sum())
        _, kap_j, _, *_ = _maximize_profiles(p0, p1, n_fold, L_min, hi, NO_PENALTY)
        kappas[j] = kap_j
    ci = ConfidenceInterval(float(kappas.min()), float(kappas.max()),
                            1.0 - alpha,
                            "hulc_anti" if anti_conservative else "hulc")
    p0, p1 = ds.profiles
    hi_full = min(L_max, max_estimable_time(ds))
    if hi_full < L_min:
        raise NoEstimablePoint(
            f"[{L_min}, {L_max}] lies beyond the max estimable time {hi_full}")
    L_hat, kap_full, _, *_ = _maximize_profiles(p0, p1, ds.n, L_min, hi_full,
                                                NO_PENALTY)
    return AnalysisResult(
        method="hulc", L_hat=L_hat, kappa_hat=kap_full, ci_kappa=ci, ci_L=None,
        p_value=None, reject=ci.excludes_zero(),
        seed=None if isinstance(seed, np.random.SeedSequence) else int(seed),
        diagnostics={"folds": B})


def _bootstrap_p_value(kappas: np.ndarray) -> float:
    """Smallest alpha (1e-4 grid) at which the percentile CI excludes zero."""
    grid = np.arange(1, 10001, dtype=np.float64) * 1e-4
    qlo = np.quantile(kappas, grid / 2.0)
    qhi = np.quantile(kappas, 1.0 - grid / 2.0)
    excludes = (qlo > 0.0) | (qhi < 0.0)
    if not excludes.any():
        return 1.0
    return float(grid[int(np.argmax(excludes))])


def bootstrap_interval(ds: TrialDataset, alpha: float = 0.05, B: int = 1000,
                       L_min: Optional[float] = None, L_max: Optional[float] = None,
                       pen: Optional[PenaltyConfig] = None, seed=0,
                       stratified: bool = False) -> AnalysisResult:
    """Percentile-bootstrap CIs for the penalized estimator pair.

    B with-replacement resamples of the full dataset (unstratified by
    default); each is re-maximized over [L_min, min(L_max, its own max
    estimable time)].  Resamples with no estimable point are dropped and
    counted; more than 5% of them is an error.
    """
    lo_def, hi_def = default_interval(ds)
    L_min = lo_def if L_min is None else float(L_min)
    L_max = hi_def if L_max is None else float(L_max)
    if pen is None:
        pen = PenaltyConfig(c=default_penalty(L_min, L_max, ds.time_unit),
                            l_tilde=0.5 * (L_min + L_max))
    arms, times, events = ds._arrays
    n = ds.n
    hi_full = min(L_max, max_estimable_time(ds))
    if hi_full < L_min:
        raise NoEstimablePoint(
            f"[{L_min}, {L_max}] lies beyond the max estimable time {hi_full}")
    p0, p1 = ds.profiles
    L_dag, kap_dag, _, *_ = _maximize_profiles(p0, p1, n, L_min, hi_full, pen)

    children = _seed_sequence(seed).spawn(B)
    idx0 = np.flatnonzero(arms == 0)
    idx1 = np.flatnonzero(arms == 1)
    kappas = np.empty(B)
    l_hats = np.empty(B)
    kept = 0
    skipped = 0
    for b in range(B):
        rng = np.random.Generator(np.random.Philox(children[b]))
        if stratified:
            take = np.concatenate([idx0[rng.integers(0, idx0.shape[0], idx0.shape[0])],
                                   idx1[rng.integers(0, idx1.shape[0], idx1.shape[0])]])
        else:
            take = rng.integers(0, n, n)
        a_b = arms[take]
        t_b = times[take]
        e_b = events[take]
        m0 = a_b == 0
        m1 = a_b == 1
        if not m0.any() or not m1.any():
            skipped += 1
            continue
        q0 = kernels.build_arm(t_b[m0], e_b[m0])
        q1 = kernels.build_arm(t_b[m1], e_b[m1])
        hi_b = min(L_max, q0.tau, q1.tau)
        if hi_b < L_min:
            skipped += 1
            continue
        try:
            L_b, kap_b, _, *_ = _maximize_profiles(q0, q1, n, L_min, hi_b, pen)
        except NoEstimablePoint:
            skipped += 1
            continue
        kappas[kept] = kap_b
        l_hats[kept] = L_b
        kept += 1
    if skipped > DEGENERATE_RESAMPLE_LIMIT * B:
        raise TooManyDegenerateResamples(
            f"{skipped} of {B} resamples had no estimable restriction time")
    kappas = kappas[:kept]
    l_hats = l_hats[:kept]
    qk = np.quantile(kappas, [alpha / 2.0, 1.0 - alpha / 2.0])
    ql = np.quantile(l_hats, [alpha / 2.0, 1.0 - alpha / 2.0])
    ci_k = ConfidenceInterval(float(qk[0]), float(qk[1]), 1.0 - alpha, "bootstrap")
    ci_l = ConfidenceInterval(float(ql[0]), float(ql[1]), 1.0 - alpha, "bootstrap")
    return AnalysisResult(
        method="ct", L_hat=L_dag, kappa_hat=kap_dag, ci_kappa=ci_k, ci_L=ci_l,
        p_value=_bootstrap_p_value(kappas), reject=ci_k.excludes_zero(),
        seed=None if isinstance(seed, np.random.SeedSequence) else int(seed),
        diagnostics={"resamples": B, "degenerate": skipped})


def wald_interval_discrete(ds: TrialDataset, grid, alpha: float = 0.05,
                           pen: Optional[PenaltyConfig] = None) -> AnalysisResult:
    """Wald CI at the selected grid point; the CI for L is the singleton."""
    grid = np.asarray(grid, dtype=np.float64)
    if pen is None:
        c = default_penalty(float(grid[0]), float(grid[-1]), ds.time_unit,
                            discrete=True)
        pen = PenaltyConfig(c=c, l_tilde=float(grid[default_anchor_index(grid.size)]))
    L_hat, kap, sig2, _ = maximize_discrete(ds, grid, pen)
    se = math.sqrt(sig2 / ds.n)
    z = float(ndtri(1.0 - alpha / 2.0))
    ci = ConfidenceInterval(kap - z * se, kap + z * se, 1.0 - alpha, "wald")
    stat = kap / se if se > 0 else 0.0
    p = 2.0 * float(ndtr(-abs(stat)))
    return AnalysisResult(
        method="dt", L_hat=L_hat, kappa_hat=kap, ci_kappa=ci,
        ci_L=ConfidenceInterval(L_hat, L_hat, 1.0 - alpha, "wald"),
        p_value=p, reject=ci.excludes_zero(), seed=None,
        diagnostics={"grid_points": int(grid.size)})


def analyze(ds: TrialDataset, method: str, *, L_min=None, L_max=None,
            alpha: float = 0.05, c="auto", l_tilde="auto", grid=None,
            B: Optional[int] = None, seed=0, anti_conservative: bool = True,
            stratified: bool = False) -> AnalysisResult:
    """Dispatch to one of the three analysis routes with `auto` defaults.

    method "ct": percentile bootstrap for the penalized continuous-time
    estimator (auto: default penalty strength, midpoint anchor, B=1000).
    method "dt": Wald at the selected point of a uniform grid (auto: 10
    points, discrete default penalty, middle grid point as anchor).
    method "hulc": convex-hull interval, unpenalized (c/l_tilde/B unused).
    """
    if method not in ("ct", "dt", "hulc"):
        raise ValueError(f"method must be ct, dt, or hulc, got {method!r}")
    lo_def, hi_def = default_interval(ds)
    L_min = lo_def if L_min is None else float(L_min)
    L_max = hi_def if L_max is None else float(L_max)
    config = {"method": method, "L_min": L_min, "L_max": L_max, "alpha": alpha,
              "time_unit": ds.time_unit, "n": ds.n}

    if method == "hulc":
        res = hulc_interval(ds, alpha=alpha, anti_conservative=anti_conservative,
                            L_min=L_min, L_max=L_max, seed=seed)
        config.update({"anti_conservative": anti_conservative,
                       "folds": res.diagnostics["folds"]})
    elif method == "ct":
        c_val = default_penalty(L_min, L_max, ds.time_unit) if c == "auto" else float(c)
        lt = 0.5 * (L_min + L_max) if l_tilde == "auto" else float(l_tilde)
        n_boot = 1000 if B is None else int(B)
        res = bootstrap_interval(ds, alpha=alpha, B=n_boot, L_min=L_min,
                                 L_max=L_max, pen=PenaltyConfig(c_val, lt),
                                 seed=seed, stratified=stratified)
        config.update({"c": c_val, "l_tilde": lt, "B": n_boot,
                       "stratified": stratified})
    else:
        if grid is None:
            grid_arr = uniform_grid(L_min, L_max, 10)
        elif np.isscalar(grid):
            grid_arr = uniform_grid(L_min, L_max, int(grid))
        else:
            grid_arr = np.asarray(grid, dtype=np.float64)
        c_val = (default_penalty(float(grid_arr[0]), float(grid_arr[-1]),
                                 ds.time_unit, discrete=True)
                 if c == "auto" else float(c))
        lt = (float(grid_arr[default_anchor_index(grid_arr.size)])
              if l_tilde == "auto" else float(l_tilde))
        res = wald_interval_discrete(ds, grid_arr, alpha=alpha,
                                     pen=PenaltyConfig(c_val, lt))
        config.update({"c": c_val, "l_tilde": lt,
                       "grid": [float(g) for g in grid_arr]})
    res.config = config
    return res
