"""Shared fixtures and hand-rolled oracles used across the test suite."""

import numpy as np
import pytest

from rmstsel import kernels
from rmstsel.data import SubjectRecord, TrialDataset


@pytest.fixture(scope="session", autouse=True)
def _warm_kernels():
    # Compile the numba kernels once up front so per-test timings stay honest.
    kernels.warm_up()


def make_dataset(arm0, arm1, time_unit="years"):
    """Build a TrialDataset from two lists of (time, event) pairs."""
    records = [SubjectRecord(time=t, event=e, arm=0) for t, e in arm0]
    records += [SubjectRecord(time=t, event=e, arm=1) for t, e in arm1]
    return TrialDataset(records, time_unit=time_unit)


def random_dataset(rng, n_per_arm=15, tie_prob=0.3, scale=2.0):
    """Small random censored two-arm dataset, with deliberate ties."""
    def draw(n):
        t = rng.exponential(scale, size=n)
        if tie_prob > 0:
            # snap a fraction of times onto a coarse lattice to force ties
            snap = rng.random(n) < tie_prob
            t[snap] = np.ceil(t[snap] * 4) / 4
        e = (rng.random(n) < 0.7).astype(int)
        return [(float(ti), int(ei)) for ti, ei in zip(t, e)]

    return make_dataset(draw(n_per_arm), draw(n_per_arm))


@pytest.fixture
def toy_ds():
    # arm0: event at 1, censored at 2; arm1: event at 1.5, censored at 2.
    return make_dataset([(1.0, 1), (2.0, 0)], [(1.5, 1), (2.0, 0)])


def km_product_limit(times, events):
    """Independent product-limit estimate: {time: S(t)} over distinct event times."""
    times = np.asarray(times, dtype=float)
    events = np.asarray(events, dtype=int)
    out = {}
    s = 1.0
    for t in sorted(set(times[events == 1])):
        y = int(np.sum(times >= t))
        d = int(np.sum((times == t) & (events == 1)))
        s *= 1.0 - d / y
        out[t] = s
    return out


def brute_force_logrank(ds, rho=0.0, gamma=0.0):
    """Plain-loop weighted log-rank (z statistic), recomputed from scratch.

    Pooled KM left limits feed the Fleming-Harrington weight; variance is the
    usual hypergeometric term per distinct event time.
    """
    times = np.concatenate([ds.arm_arrays(0)[0], ds.arm_arrays(1)[0]])
    events = np.concatenate([ds.arm_arrays(0)[1], ds.arm_arrays(1)[1]])
    arms = np.concatenate([np.zeros(ds.n0, dtype=int), np.ones(ds.n1, dtype=int)])

    pooled = km_product_limit(times, events)
    event_ts = sorted(pooled)
    num = 0.0
    var = 0.0
    s_prev = 1.0
    for t in event_ts:
        at_risk = times >= t
        died = (times == t) & (events == 1)
        y = int(at_risk.sum())
        y1 = int((at_risk & (arms == 1)).sum())
        d = int(died.sum())
        d1 = int((died & (arms == 1)).sum())
        w = (s_prev ** rho) * ((1.0 - s_prev) ** gamma)
        num += w * (d1 - d * y1 / y)
        if y > 1:
            var += w * w * d * (y1 / y) * (1.0 - y1 / y) * (y - d) / (y - 1)
        s_prev = pooled[t]
    return num / np.sqrt(var)
