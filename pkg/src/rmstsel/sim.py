"""Trial generation from the named scenarios and the Monte Carlo study
harness: power / type I error, CI coverage, and restriction-time estimator
bias/SD/RMSE against the truth module's optima.

Reproducibility layout: replicate k of scenario s at sample size n draws
everything from SeedSequence(master_seed, spawn_key=(canonical scenario
index, n, k)), so results never depend on worker count or scheduling.
"""
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from .comparators import (fixed_rmst_test, maxcombo, oracle_rmst_test,
                          weighted_logrank)
from .criterion import PenaltyConfig, default_anchor_index, default_penalty, uniform_grid
from .data import TrialDataset
from .errors import EmptyInput, NonUniqueMaximizer, NumericError
from .inference import bootstrap_interval, hulc_interval, wald_interval_discrete
from .truth import (SCENARIOS, ScenarioSpec, get_scenario, pwexp_sample,
                    true_kappa, true_optimum, true_optimum_grid)

ALL_METHODS = ("ct", "dt", "hulc", "rmst", "logrank", "maxcombo", "oracle")

# canonical indices, independent of the order a study lists scenarios in
_SCENARIO_INDEX = {name: i for i, name in enumerate(SCENARIOS)}

FAILURE_LIMIT = 0.02


@dataclass(frozen=True)
class StudyConfig:
    """Monte Carlo study layout with desk-scale defaults.

    `full_scale=True` switches to the full-size run (2000 replicates,
    1000 bootstrap resamples).
    """
    scenarios: Tuple[str, ...] = ("null",)
    ns: Tuple[int, ...] = (600,)
    reps: int = 500
    methods: Tuple[str, ...] = ("ct", "dt", "hulc", "rmst", "logrank",
                                "maxcombo", "oracle")
    alpha: float = 0.05
    boot_B: int = 200
    grid_size: int = 10
    L_min: float = 0.2
    L_max: float = 4.2
    c: Optional[float] = None          # None means the per-method default
    l_tilde: Optional[float] = None    # None means the midpoint / middle point
    seed: int = 0
    workers: int = 1
    stratified: bool = False
    full_scale: bool = False

    def __post_init__(self):
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        if not self.methods:
            raise ValueError("methods must be nonempty")
        for m in self.methods:
            if m not in ALL_METHODS:
                raise ValueError(f"unknown method {m!r}; valid: {ALL_METHODS}")
        for s in self.scenarios:
            get_scenario(s)

    @property
    def effective_reps(self) -> int:
        return 2000 if self.full_scale else self.reps

    @property
    def effective_boot(self) -> int:
        return 1000 if self.full_scale else self.boot_B

    def pen_ct(self) -> PenaltyConfig:
        c = default_penalty(self.L_min, self.L_max) if self.c is None else self.c
        lt = 0.5 * (self.L_min + self.L_max) if self.l_tilde is None else self.l_tilde
        return PenaltyConfig(c=c, l_tilde=lt)

    def grid(self) -> np.ndarray:
        return uniform_grid(self.L_min, self.L_max, self.grid_size)

    def pen_dt(self) -> PenaltyConfig:
        g = self.grid()
        c = (default_penalty(self.L_min, self.L_max, discrete=True)
             if self.c is None else self.c)
        lt = (float(g[default_anchor_index(g.size)])
              if self.l_tilde is None else self.l_tilde)
        return PenaltyConfig(c=c, l_tilde=lt)


@dataclass
class SimulationReport:
    """Aggregated metrics per (scenario, n, method)."""
    rows: list
    config: dict = field(default_factory=dict)

    def row(self, scenario: str, n: int, method: str) -> dict:
        for r in self.rows:
            if (r["scenario"], r["n"], r["method"]) == (scenario, n, method):
                return r
        raise KeyError((scenario, n, method))

    def to_json_dict(self) -> dict:
        return {"config": dict(self.config), "rows": [dict(r) for r in self.rows]}

    def to_csv_rows(self):
        """Tidy rows `scenario,n,method,metric,value,mc_se` for plotting."""
        out = []
        metrics = (("rejection_rate", "rejection_se"),
                   ("coverage", "coverage_se"),
                   ("L_bias", "L_bias_se"),
                   ("L_sd", None),
                   ("L_rmse", None))
        for r in self.rows:
            for metric, se_key in metrics:
                if r[metric] is None:
                    continue
                se = r[se_key] if se_key else None
                out.append((r["scenario"], r["n"], r["method"], metric,
                            r[metric], se))
        return out


def _seed_sequence(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def generate_trial(s, n: int, seed) -> TrialDataset:
    """Simulate one trial: per-arm event times from the scenario, censoring
    min(Exp(censor_rate), admin_time); an odd n puts the extra subject in
    the control arm.  `s` is a ScenarioSpec or a scenario name."""
    if isinstance(s, str):
        s = get_scenario(s)
    rng = np.random.Generator(np.random.Philox(_seed_sequence(seed)))
    n1 = n // 2
    n0 = n - n1
    t0 = pwexp_sample(s.control, rng, n0)
    t1 = pwexp_sample(s.treatment, rng, n1)
    c0 = np.minimum(rng.exponential(1.0 / s.censor_rate, n0), s.admin_time)
    c1 = np.minimum(rng.exponential(1.0 / s.censor_rate, n1), s.admin_time)
    x = np.concatenate([np.minimum(t0, c0), np.minimum(t1, c1)])
    delta = np.concatenate([(t0 <= c0), (t1 <= c1)]).astype(np.int64)
    arm = np.concatenate([np.zeros(n0, dtype=np.int64), np.ones(n1, dtype=np.int64)])
    return TrialDataset.from_arrays(arm, x, delta)


def _truth_targets(scenario: str, cfg: StudyConfig) -> dict:
    """True optima each method is judged against (midpoint fallback when the
    unpenalized optimum is not unique, as in a no-effect scenario)."""
    s = get_scenario(scenario)
    targets = {}
    mid = 0.5 * (cfg.L_min + cfg.L_max)
    try:
        l_star, k_star = true_optimum(s, cfg.L_min, cfg.L_max)
    except NonUniqueMaximizer:
        l_star, k_star = mid, true_kappa(s, mid)
    targets["L_star"] = l_star
    targets["kappa_star"] = k_star
    if "ct" in cfg.methods:
        l_ct, k_ct = true_optimum(s, cfg.L_min, cfg.L_max, cfg.pen_ct())
        targets["L_ct"] = l_ct
        targets["kappa_ct"] = k_ct
    if "dt" in cfg.methods:
        l_dt, k_dt = true_optimum_grid(s, cfg.grid(), cfg.pen_dt())
        targets["L_dt"] = l_dt
        targets["kappa_dt"] = k_dt
    return targets


def _replicate(cfg: StudyConfig, scenario: str, n: int, k: int,
               targets: dict) -> list:
    """All requested methods on replicate k; one record per method."""
    s = get_scenario(scenario)
    ss = np.random.SeedSequence(entropy=cfg.seed,
                                spawn_key=(_SCENARIO_INDEX[scenario], n, k))
    data_ss, ct_ss, hulc_ss = ss.spawn(3)
    ds = generate_trial(s, n, data_ss)
    alpha = cfg.alpha
    records = []
    for method in cfg.methods:
        rec = {"scenario": scenario, "n": n, "rep": k, "method": method,
               "reject": None, "covered": None, "L_err": None,
               "kappa_hat": None, "L_hat": None, "failed": False}
        try:
            if method == "ct":
                res = bootstrap_interval(
                    ds, alpha=alpha, B=cfg.effective_boot, L_min=cfg.L_min,
                    L_max=cfg.L_max, pen=cfg.pen_ct(), seed=ct_ss,
                    stratified=cfg.stratified)
                rec.update(reject=res.reject,
                           covered=res.ci_kappa.covers(targets["kappa_ct"]),
                           L_err=res.L_hat - targets["L_ct"],
                           kappa_hat=res.kappa_hat, L_hat=res.L_hat)
            elif method == "dt":
                res = wald_interval_discrete(ds, cfg.grid(), alpha=alpha,
                                             pen=cfg.pen_dt())
                rec.update(reject=res.reject,
                           covered=res.ci_kappa.covers(targets["kappa_dt"]),
                           L_err=res.L_hat - targets["L_dt"],
                           kappa_hat=res.kappa_hat, L_hat=res.L_hat)
            elif method == "hulc":
                res = hulc_interval(ds, alpha=alpha, anti_conservative=True,
                                    L_min=cfg.L_min, L_max=cfg.L_max,
                                    seed=hulc_ss)
                rec.update(reject=res.reject,
                           covered=res.ci_kappa.covers(targets["kappa_star"]),
                           L_err=res.L_hat - targets["L_star"],
                           kappa_hat=res.kappa_hat, L_hat=res.L_hat)
            elif method == "rmst":
                out, est = fixed_rmst_test(ds, "auto", alpha=alpha)
                lo, hi = out.details["ci"]
                rec.update(reject=bool(out.p_value < alpha),
                           covered=bool(lo <= true_kappa(s, est.L) <= hi),
                           kappa_hat=est.kappa, L_hat=est.L)
            elif method == "oracle":
                out = oracle_rmst_test(ds, targets["L_star"], alpha=alpha)
                lo, hi = out.details["ci"]
                rec.update(reject=bool(out.p_value < alpha),
                           covered=bool(lo <= targets["kappa_star"] <= hi),
                           kappa_hat=out.details["kappa"],
                           L_hat=targets["L_star"])
            elif method == "logrank":
                out = weighted_logrank(ds)
                rec.update(reject=bool(out.p_value < alpha))
            elif method == "maxcombo":
                out = maxcombo(ds)
                rec.update(reject=bool(out.p_value < alpha))
        except NumericError:
            rec["failed"] = True
        records.append(rec)
    return records


def _worker(args):
    cfg, scenario, n, k, targets = args
    return _replicate(cfg, scenario, n, k, targets)


def run_study(cfg: StudyConfig) -> SimulationReport:
    """Run the full study and aggregate.

    Replicates are independent tasks; with workers > 1 they run in a
    process pool.  Records are re-sorted into canonical order before
    aggregation, so the report is identical for any worker count.
    """
    all_targets = {sc: _truth_targets(sc, cfg) for sc in cfg.scenarios}
    tasks = [(cfg, sc, n, k, all_targets[sc])
             for sc in cfg.scenarios
             for n in cfg.ns
             for k in range(cfg.effective_reps)]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            chunks = pool.map(_worker, tasks, chunksize=8)
            records = [rec for chunk in chunks for rec in chunk]
    else:
        records = [rec for t in tasks for rec in _replicate(*t)]
    report = summarize_metrics(records)
    report.config = _config_echo(cfg)
    for r in report.rows:
        if r["method"] != "oracle" and r["failures"] > FAILURE_LIMIT * r["reps"]:
            raise NumericError(
                f"{r['failures']} of {r['reps']} replicates failed for "
                f"{r['method']} on {r['scenario']} (n={r['n']})")
    return report


def _config_echo(cfg: StudyConfig) -> dict:
    return {
        "scenarios": list(cfg.scenarios), "ns": list(cfg.ns),
        "reps": cfg.effective_reps, "methods": list(cfg.methods),
        "alpha": cfg.alpha, "boot_B": cfg.effective_boot,
        "grid_size": cfg.grid_size, "L_min": cfg.L_min, "L_max": cfg.L_max,
        "c": cfg.c, "l_tilde": cfg.l_tilde, "seed": cfg.seed,
        "stratified": cfg.stratified, "full_scale": cfg.full_scale,
    }


def _rate(flags):
    m = len(flags)
    if m == 0:
        return None, None
    p = float(np.mean(flags))
    return p, math.sqrt(p * (1.0 - p) / m)


def summarize_metrics(records) -> SimulationReport:
    """Aggregate raw per-replicate records; order-independent.

    RMSE is defined through the identity sqrt(bias^2 + SD^2) with the
    sample (ddof=1) standard deviation.
    """
    records = sorted(records, key=lambda r: (r["scenario"], r["n"],
                                             r["method"], r["rep"]))
    if not records:
        raise EmptyInput("no replicate records to aggregate")
    keys = []
    grouped = {}
    for r in records:
        key = (r["scenario"], r["n"], r["method"])
        if key not in grouped:
            grouped[key] = []
            keys.append(key)
        grouped[key].append(r)
    rows = []
    for key in keys:
        grp = grouped[key]
        ok = [r for r in grp if not r["failed"]]
        rejects = [r["reject"] for r in ok if r["reject"] is not None]
        covers = [r["covered"] for r in ok if r["covered"] is not None]
        l_errs = np.array([r["L_err"] for r in ok if r["L_err"] is not None])
        rej, rej_se = _rate(rejects)
        cov, cov_se = _rate(covers)
        if l_errs.size >= 2:
            bias = float(np.mean(l_errs))
            sd = float(np.std(l_errs, ddof=1))
            rmse = math.sqrt(bias * bias + sd * sd)
            bias_se = sd / math.sqrt(l_errs.size)
        elif l_errs.size == 1:
            bias, sd, rmse, bias_se = float(l_errs[0]), None, None, None
        else:
            bias = sd = rmse = bias_se = None
        rows.append({
            "scenario": key[0], "n": key[1], "method": key[2],
            "reps": len(grp), "failures": len(grp) - len(ok),
            "rejection_rate": rej, "rejection_se": rej_se,
            "coverage": cov, "coverage_se": cov_se,
            "L_bias": bias, "L_sd": sd, "L_rmse": rmse, "L_bias_se": bias_se,
        })
    return SimulationReport(rows=rows)
