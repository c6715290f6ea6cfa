"""Backend dispatch and the kernel-ready per-arm summary.

Two interchangeable kernel implementations ship with the package: a
numba-compiled one (:mod:`rmstsel._kernels_nb`) and a pure-numpy fallback
(:mod:`rmstsel._kernels_np`).  The active one is chosen once at import time
from the ``RMSTSEL_BACKEND`` environment variable:

* ``auto`` (default) — numba if importable, else numpy;
* ``numba`` — require the compiled backend, raise if unavailable;
* ``numpy`` — force the fallback.

``rmstsel.kernels.BACKEND`` reports the choice.  Both backends share exact
semantics; ``benchmarks/bench_kernels.py`` compares their speed.
"""
import os
import warnings
from typing import NamedTuple

import numpy as np

_choice = os.environ.get("RMSTSEL_BACKEND", "auto").strip().lower()
if _choice not in ("auto", "numba", "numpy"):
    warnings.warn(f"unrecognized RMSTSEL_BACKEND={_choice!r}; falling back to 'auto'")
    _choice = "auto"

if _choice == "numpy":
    from . import _kernels_np as _impl
    BACKEND = "numpy"
else:
    try:
        from . import _kernels_nb as _impl
        BACKEND = "numba"
    except ImportError:
        if _choice == "numba":
            raise
        from . import _kernels_np as _impl
        BACKEND = "numpy"


class ArmProfile(NamedTuple):
    """Kaplan-Meier summary of one arm, laid out for the kernels.

    All arrays are indexed by the arm's distinct event times, ascending.
    """
    t: np.ndarray        # distinct event times
    d: np.ndarray        # deaths at each event time
    y: np.ndarray        # at-risk counts, X >= t convention
    s: np.ndarray        # survival just after each event time
    theta: np.ndarray    # RMST at each event time
    w: np.ndarray        # Greenwood increments d/(Y(Y-d)); 0 where Y == d
    cw: np.ndarray       # prefix sums of w
    cwt: np.ndarray      # prefix sums of w * theta
    cwtt: np.ndarray     # prefix sums of w * theta^2
    tau: float           # max follow-up time in the arm
    n_arm: int


def build_arm(times, events) -> ArmProfile:
    """Sort one arm's records and precompute the kernel arrays."""
    times = np.ascontiguousarray(times, dtype=np.float64)
    events = np.ascontiguousarray(events, dtype=np.float64)
    order = np.argsort(times, kind="stable")
    times = times[order]
    events = events[order]
    t, d, y, s = _impl.km_reduce(times, events)
    theta, w, cw, cwt, cwtt = _impl.augment(t, d, y, s)
    tau = float(times[-1]) if times.shape[0] else 0.0
    return ArmProfile(t, d, y, s, theta, w, cw, cwt, cwtt, tau, int(times.shape[0]))


def rmst_at(p: ArmProfile, L: float) -> float:
    """KM plug-in RMST of one arm at restriction time L (caller checks L <= tau)."""
    Ls = np.array([L], dtype=np.float64)
    return float(_impl.rmst_many(p.t, p.s, p.theta, Ls)[0])


def rmst_grid(p: ArmProfile, Ls) -> np.ndarray:
    Ls = np.ascontiguousarray(Ls, dtype=np.float64)
    return _impl.rmst_many(p.t, p.s, p.theta, Ls)


def pair_eval(p0: ArmProfile, p1: ArmProfile, n: int, Ls):
    """kappa_hat and sigma2_hat (variance of sqrt(n)*kappa_hat) at each L."""
    Ls = np.ascontiguousarray(Ls, dtype=np.float64)
    return _impl.pair_eval(p0.t, p0.s, p0.theta, p0.cw, p0.cwt, p0.cwtt,
                           p1.t, p1.s, p1.theta, p1.cw, p1.cwt, p1.cwtt,
                           float(n), Ls)


def pen_value(p0: ArmProfile, p1: ArmProfile, n: int, L: float,
              c: float, lt: float) -> float:
    """Penalized criterion at a single L (-inf when sigma2 is 0)."""
    return float(_impl.pen_value(p0.t, p0.s, p0.theta, p0.cw, p0.cwt, p0.cwtt,
                                 p1.t, p1.s, p1.theta, p1.cw, p1.cwt, p1.cwtt,
                                 float(n), float(L), float(c), float(lt)))


def refine_ternary(p0: ArmProfile, p1: ArmProfile, n: int, lo: float, hi: float,
                   c: float, lt: float, iters: int = 60) -> float:
    """Locate the penalized-criterion maximizer inside [lo, hi] by ternary search."""
    return float(_impl.refine_ternary(p0.t, p0.s, p0.theta, p0.cw, p0.cwt, p0.cwtt,
                                      p1.t, p1.s, p1.theta, p1.cw, p1.cwt, p1.cwtt,
                                      float(n), float(lo), float(hi),
                                      float(c), float(lt), int(iters)))


def warm_up():
    """Trigger compilation of the active backend on tiny inputs."""
    p = build_arm(np.array([1.0, 2.0]), np.array([1.0, 0.0]))
    pair_eval(p, p, 4, np.array([1.5]))
    pen_value(p, p, 4, 1.5, 0.0, 1.0)
    refine_ternary(p, p, 4, 1.0, 2.0, 0.0, 1.0, 4)
    rmst_at(p, 1.5)
