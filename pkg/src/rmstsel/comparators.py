"""Baseline tests: Fleming-Harrington weighted log-rank family, MaxCombo,
and Wald RMST tests at a fixed (or externally supplied) restriction time."""
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr, ndtri
from scipy.stats import qmc

from .data import TrialDataset, max_estimable_time
from .errors import NoEvents, SingularCorrelation
from .rmst import RmstEstimate, kappa_hat

FH_COMBOS = ((0, 0), (0, 1), (1, 0), (1, 1))

_SOBOL_SEED = 20230917
_SOBOL_LOG2_POINTS = 16
_sobol_cache = None


@dataclass(frozen=True)
class TestOutcome:
    statistic: float
    p_value: float
    details: dict = field(default_factory=dict)


def _pooled_table(ds: TrialDataset):
    """Pooled risk/death table at distinct event times.

    Returns (t, d, d1, Y, Y1, s_left): total and treatment-arm deaths,
    total and treatment-arm at-risk counts (X >= t convention), and the
    pooled KM left limit just before each event time.
    """
    arms, times, events = ds._arrays
    order = np.argsort(times, kind="stable")
    t_s = times[order]
    e_s = events[order]
    a_s = (arms[order] == 1).astype(np.float64)
    uniq, start, counts = np.unique(t_s, return_index=True, return_counts=True)
    d = np.add.reduceat(e_s, start)
    d1 = np.add.reduceat(e_s * a_s, start)
    c1 = np.add.reduceat(a_s, start)
    n = times.shape[0]
    Y = (n - (np.cumsum(counts) - counts)).astype(np.float64)
    Y1 = float(ds.n1) - (np.cumsum(c1) - c1)
    keep = d > 0.0
    if not keep.any():
        raise NoEvents("rank tests need at least one observed event")
    t = uniq[keep]
    d = d[keep]
    d1 = d1[keep]
    Y = Y[keep]
    Y1 = Y1[keep]
    s_after = np.cumprod(1.0 - d / Y)
    s_left = np.concatenate(([1.0], s_after[:-1]))
    return t, d, d1, Y, Y1, s_left


def _logrank_terms(d, d1, Y, Y1):
    """(observed - expected, hypergeometric variance) at each event time."""
    frac = Y1 / Y
    o_minus_e = d1 - d * frac
    with np.errstate(divide="ignore", invalid="ignore"):
        v = np.where(Y > 1.0, d * frac * (1.0 - frac) * (Y - d) / (Y - 1.0), 0.0)
    return o_minus_e, v


def _fh_weights(s_left, rho, gamma):
    return s_left ** rho * (1.0 - s_left) ** gamma


def weighted_logrank(ds: TrialDataset, rho: float = 0.0,
                     gamma: float = 0.0) -> TestOutcome:
    """Fleming-Harrington FH(rho, gamma) weighted log-rank test.

    Weight at each pooled event time is S(t-)^rho (1 - S(t-))^gamma with S
    the pooled KM; (0, 0) is the standard log-rank.  Two-sided normal p.
    """
    _, d, d1, Y, Y1, s_left = _pooled_table(ds)
    ome, v = _logrank_terms(d, d1, Y, Y1)
    w = _fh_weights(s_left, rho, gamma)
    num = float(np.sum(w * ome))
    den = float(np.sum(w * w * v))
    z = num / math.sqrt(den) if den > 0.0 else 0.0
    p = 2.0 * float(ndtr(-abs(z)))
    return TestOutcome(statistic=z, p_value=p,
                       details={"rho": rho, "gamma": gamma})


def _sobol_points():
    global _sobol_cache
    if _sobol_cache is None:
        eng = qmc.Sobol(d=len(FH_COMBOS) - 1, scramble=True, seed=_SOBOL_SEED)
        _sobol_cache = eng.random_base2(m=_SOBOL_LOG2_POINTS)
    return _sobol_cache


def _mvn_rectangle(bound: float, chol: np.ndarray) -> float:
    """P(-bound <= Z_i <= bound for all i), Z ~ N(0, R), R = chol chol'.

    Sequential-conditioning transform of the rectangle probability into an
    integral over the unit cube, averaged over scrambled-Sobol points (the
    generator seed is fixed, so results are deterministic).
    """
    u = _sobol_points()
    m, dim_u = u.shape
    d = dim_u + 1
    lo = np.full(m, float(ndtr(-bound / chol[0, 0])))
    hi = np.full(m, float(ndtr(bound / chol[0, 0])))
    f = hi - lo
    y = np.empty((m, dim_u))
    for i in range(1, d):
        arg = lo + u[:, i - 1] * (hi - lo)
        np.clip(arg, 1e-16, 1.0 - 1e-16, out=arg)
        y[:, i - 1] = ndtri(arg)
        mu = y[:, :i] @ chol[i, :i]
        lo = ndtr((-bound - mu) / chol[i, i])
        hi = ndtr((bound - mu) / chol[i, i])
        f = f * (hi - lo)
    return float(f.mean())


def maxcombo(ds: TrialDataset) -> TestOutcome:
    """Max of |z| over FH(0,0), (0,1), (1,0), (1,1), with a multivariate
    normal p-value under the estimated component correlation.

    The component covariances share the per-time hypergeometric variances:
    C_ij = sum_t w_i(t) w_j(t) V(t).  If the correlation matrix is not
    positive definite the Bonferroni bound 4 * min component p is reported
    and flagged in details.
    """
    _, d, d1, Y, Y1, s_left = _pooled_table(ds)
    ome, v = _logrank_terms(d, d1, Y, Y1)
    w = np.stack([_fh_weights(s_left, r, g) for r, g in FH_COMBOS])
    nums = w @ ome
    cov = (w * v) @ w.T
    diag = np.diag(cov).copy()
    zs = np.divide(nums, np.sqrt(diag), out=np.zeros_like(nums),
                   where=diag > 0.0)
    z_max = float(np.max(np.abs(zs)))
    comp_p = 2.0 * ndtr(-np.abs(zs))
    details = {
        "z": [float(z) for z in zs],
        "combos": [list(c) for c in FH_COMBOS],
        "component_p": [float(p) for p in comp_p],
    }
    try:
        if np.any(diag <= 0.0):
            raise SingularCorrelation("a component has zero variance")
        corr = cov / np.sqrt(np.outer(diag, diag))
        chol = np.linalg.cholesky(corr)
    except (np.linalg.LinAlgError, SingularCorrelation) as exc:
        p = min(1.0, 4.0 * float(np.min(comp_p)))
        details["fallback"] = "bonferroni"
        details["fallback_reason"] = str(exc)
        return TestOutcome(statistic=z_max, p_value=p, details=details)
    details["correlation"] = [[float(x) for x in row] for row in corr]
    p = 1.0 - _mvn_rectangle(z_max, chol)
    p = min(max(p, 0.0), 1.0)
    return TestOutcome(statistic=z_max, p_value=p, details=details)


def fixed_rmst_test(ds: TrialDataset, L="auto", alpha: float = 0.05):
    """Wald test of the RMST difference at a pre-specified restriction time.

    `auto` uses the max estimable time (the min over arms of the arm's max
    follow-up).  Returns (TestOutcome, RmstEstimate); the outcome's details
    carry the Wald CI.
    """
    if L == "auto":
        L = max_estimable_time(ds)
    est = kappa_hat(ds, float(L))
    se = math.sqrt(est.sigma2 / ds.n)
    z = est.kappa / se if se > 0.0 else 0.0
    p = 2.0 * float(ndtr(-abs(z)))
    zc = float(ndtri(1.0 - alpha / 2.0))
    details = {"L": est.L, "alpha": alpha,
               "ci": (est.kappa - zc * se, est.kappa + zc * se)}
    return TestOutcome(statistic=z, p_value=p, details=details), est


def oracle_rmst_test(ds: TrialDataset, true_L: float,
                     alpha: float = 0.05) -> TestOutcome:
    """Fixed-restriction RMST test at an externally supplied optimal time.

    Raises NotEstimable when true_L exceeds this sample's follow-up; the
    simulation harness counts those instead of failing.
    """
    outcome, est = fixed_rmst_test(ds, float(true_L), alpha=alpha)
    details = dict(outcome.details)
    details["kappa"] = est.kappa
    return TestOutcome(statistic=outcome.statistic, p_value=outcome.p_value,
                       details=details)
