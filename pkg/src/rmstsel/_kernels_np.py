"""Pure-numpy implementations of the numerical kernels.

Semantically identical to :mod:`rmstsel._kernels_nb`; used when numba is
unavailable or disabled via ``RMSTSEL_BACKEND=numpy``.  All functions take
contiguous float64 arrays.  Event-time arrays are assumed sorted ascending.
"""
import numpy as np


def km_reduce(times, events):
    """Collapse sorted (time, event) pairs to distinct event times.

    Returns (t, d, y, s): distinct times with >=1 event, deaths, at-risk
    counts under the X >= t convention, and the product-limit survival just
    after each event time.
    """
    n = times.shape[0]
    if n == 0:
        z = np.zeros(0, dtype=np.float64)
        return z, z.copy(), z.copy(), z.copy()
    uniq, start, counts = np.unique(times, return_index=True, return_counts=True)
    d = np.add.reduceat(events, start)
    y = (n - (np.cumsum(counts) - counts)).astype(np.float64)
    keep = d > 0.0
    t = uniq[keep]
    d = d[keep]
    y = y[keep]
    s = np.cumprod(1.0 - d / y) if t.shape[0] else np.zeros(0, dtype=np.float64)
    return t, d, y, s


def augment(t, d, y, s):
    """Per-event-time quantities needed by the criterion.

    theta[j] is the survival-curve integral up to t[j]; w[j] is the
    Greenwood increment d/(Y(Y-d)) with the Y == d case resolved to 0
    (such a time exhausts the risk set, so its variance term always
    multiplies a zero RMST difference); cw/cwt/cwtt are prefix sums of
    w, w*theta, w*theta^2.
    """
    m = t.shape[0]
    if m == 0:
        z = np.zeros(0, dtype=np.float64)
        return z, z.copy(), z.copy(), z.copy(), z.copy()
    dt = np.diff(t, prepend=0.0)
    s_prev = np.concatenate(([1.0], s[:-1]))
    theta = np.cumsum(s_prev * dt)
    denom = y * (y - d)
    w = np.divide(d, denom, out=np.zeros(m, dtype=np.float64), where=denom > 0.0)
    cw = np.cumsum(w)
    cwt = np.cumsum(w * theta)
    cwtt = np.cumsum(w * theta * theta)
    return theta, w, cw, cwt, cwtt


def rmst_many(t, s, theta, Ls):
    """Step-function integral of the KM curve up to each L in Ls."""
    if t.shape[0] == 0:
        return Ls.astype(np.float64, copy=True)
    k = np.searchsorted(t, Ls, side="right")
    j = np.maximum(k - 1, 0)
    out = theta[j] + s[j] * (Ls - t[j])
    return np.where(k == 0, Ls, out)


def _arm_eval(t, s, theta, cw, cwt, cwtt, Ls):
    # returns (theta(L), per-arm variance contribution) for each L
    if t.shape[0] == 0:
        return Ls.astype(np.float64, copy=True), np.zeros(Ls.shape[0])
    k = np.searchsorted(t, Ls, side="right")
    j = np.maximum(k - 1, 0)
    th = np.where(k == 0, Ls, theta[j] + s[j] * (Ls - t[j]))
    v = th * th * cw[j] - 2.0 * th * cwt[j] + cwtt[j]
    v = np.where(k == 0, 0.0, np.maximum(v, 0.0))
    return th, v


def pair_eval(t0, s0, th0, cw0, cwt0, cwtt0,
              t1, s1, th1, cw1, cwt1, cwtt1, n, Ls):
    """RMST difference and its scaled variance at each L.

    Returns (kappa, sigma2) where sigma2 estimates Var(sqrt(n) * kappa_hat)
    via Greenwood increments accumulated in prefix sums.
    """
    a0, v0 = _arm_eval(t0, s0, th0, cw0, cwt0, cwtt0, Ls)
    a1, v1 = _arm_eval(t1, s1, th1, cw1, cwt1, cwtt1, Ls)
    return a1 - a0, n * (v0 + v1)


def pen_value(t0, s0, th0, cw0, cwt0, cwtt0,
              t1, s1, th1, cw1, cwt1, cwtt1, n, L, c, lt):
    """Penalized criterion kappa^2/sigma2 - c(L - lt)^2 at a single L."""
    Ls = np.array([L], dtype=np.float64)
    kap, sig = pair_eval(t0, s0, th0, cw0, cwt0, cwtt0,
                         t1, s1, th1, cw1, cwt1, cwtt1, n, Ls)
    if sig[0] <= 0.0:
        return -np.inf
    return kap[0] * kap[0] / sig[0] - c * (L - lt) * (L - lt)


def refine_ternary(t0, s0, th0, cw0, cwt0, cwtt0,
                   t1, s1, th1, cw1, cwt1, cwtt1, n, lo, hi, c, lt, iters):
    """Ternary-search maximization of the penalized criterion on [lo, hi].

    Ties move the upper bound so the search drifts toward smaller L.
    """
    a = lo
    b = hi
    for _ in range(iters):
        m1 = a + (b - a) / 3.0
        m2 = b - (b - a) / 3.0
        f1 = pen_value(t0, s0, th0, cw0, cwt0, cwtt0,
                       t1, s1, th1, cw1, cwt1, cwtt1, n, m1, c, lt)
        f2 = pen_value(t0, s0, th0, cw0, cwt0, cwtt0,
                       t1, s1, th1, cw1, cwt1, cwtt1, n, m2, c, lt)
        if f1 < f2:
            a = m1
        else:
            b = m2
    return 0.5 * (a + b)
