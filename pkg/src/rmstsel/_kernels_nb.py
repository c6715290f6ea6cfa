"""Numba-compiled implementations of the numerical kernels.

Same contracts as :mod:`rmstsel._kernels_np` (see the docstrings there); the
loops here are shaped for nopython compilation.  Compiled objects are cached
on disk, so only the first import in a fresh environment pays compile time.
"""
import numpy as np
from numba import njit


@njit(cache=True)
def km_reduce(times, events):
    n = times.shape[0]
    t = np.empty(n, dtype=np.float64)
    d = np.empty(n, dtype=np.float64)
    y = np.empty(n, dtype=np.float64)
    m = 0
    i = 0
    at_risk = float(n)
    while i < n:
        j = i
        dd = 0.0
        while j < n and times[j] == times[i]:
            dd += events[j]
            j += 1
        if dd > 0.0:
            t[m] = times[i]
            d[m] = dd
            y[m] = at_risk
            m += 1
        at_risk -= j - i
        i = j
    s = np.empty(m, dtype=np.float64)
    surv = 1.0
    for k in range(m):
        surv *= 1.0 - d[k] / y[k]
        s[k] = surv
    return t[:m].copy(), d[:m].copy(), y[:m].copy(), s


@njit(cache=True)
def augment(t, d, y, s):
    m = t.shape[0]
    theta = np.empty(m, dtype=np.float64)
    w = np.empty(m, dtype=np.float64)
    cw = np.empty(m, dtype=np.float64)
    cwt = np.empty(m, dtype=np.float64)
    cwtt = np.empty(m, dtype=np.float64)
    acc = 0.0
    prev_t = 0.0
    prev_s = 1.0
    a = 0.0
    b = 0.0
    q = 0.0
    for j in range(m):
        acc += prev_s * (t[j] - prev_t)
        theta[j] = acc
        prev_t = t[j]
        prev_s = s[j]
        wj = 0.0
        if y[j] > d[j]:
            wj = d[j] / (y[j] * (y[j] - d[j]))
        w[j] = wj
        a += wj
        b += wj * acc
        q += wj * acc * acc
        cw[j] = a
        cwt[j] = b
        cwtt[j] = q
    return theta, w, cw, cwt, cwtt


@njit(cache=True)
def rmst_many(t, s, theta, Ls):
    out = np.empty(Ls.shape[0], dtype=np.float64)
    for i in range(Ls.shape[0]):
        L = Ls[i]
        k = np.searchsorted(t, L, side="right")
        if k == 0:
            out[i] = L
        else:
            out[i] = theta[k - 1] + s[k - 1] * (L - t[k - 1])
    return out


@njit(cache=True, inline="always")
def _arm_scalar(t, s, theta, cw, cwt, cwtt, L):
    k = np.searchsorted(t, L, side="right")
    if k == 0:
        return L, 0.0
    th = theta[k - 1] + s[k - 1] * (L - t[k - 1])
    v = th * th * cw[k - 1] - 2.0 * th * cwt[k - 1] + cwtt[k - 1]
    if v < 0.0:
        v = 0.0
    return th, v


@njit(cache=True)
def pair_eval(t0, s0, th0, cw0, cwt0, cwtt0,
              t1, s1, th1, cw1, cwt1, cwtt1, n, Ls):
    m = Ls.shape[0]
    kap = np.empty(m, dtype=np.float64)
    sig = np.empty(m, dtype=np.float64)
    for i in range(m):
        L = Ls[i]
        a0, v0 = _arm_scalar(t0, s0, th0, cw0, cwt0, cwtt0, L)
        a1, v1 = _arm_scalar(t1, s1, th1, cw1, cwt1, cwtt1, L)
        kap[i] = a1 - a0
        sig[i] = n * (v0 + v1)
    return kap, sig


@njit(cache=True)
def pen_value(t0, s0, th0, cw0, cwt0, cwtt0,
              t1, s1, th1, cw1, cwt1, cwtt1, n, L, c, lt):
    a0, v0 = _arm_scalar(t0, s0, th0, cw0, cwt0, cwtt0, L)
    a1, v1 = _arm_scalar(t1, s1, th1, cw1, cwt1, cwtt1, L)
    sig = n * (v0 + v1)
    if sig <= 0.0:
        return -np.inf
    kap = a1 - a0
    return kap * kap / sig - c * (L - lt) * (L - lt)


@njit(cache=True)
def refine_ternary(t0, s0, th0, cw0, cwt0, cwtt0,
                   t1, s1, th1, cw1, cwt1, cwtt1, n, lo, hi, c, lt, iters):
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
