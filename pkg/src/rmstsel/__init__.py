"""Adaptive restriction-time selection for RMST analysis of two-arm trials."""

__version__ = "0.1.0"

from .data import SubjectRecord, TrialDataset, max_estimable_time, parse_dataset, write_csv
from .km import SurvivalCurve, fit_km, survival_at
from .rmst import RmstEstimate, kappa_hat, rmst_arm, variance_hat
from .criterion import (CriterionProfile, PenaltyConfig, criterion_value,
                        default_penalty, maximize_continuous, maximize_discrete,
                        suggest_grid_size, uniform_grid)
from .truth import (PiecewiseExponential, ScenarioSpec, SCENARIOS, get_scenario,
                    pwexp_hazard, pwexp_sample, pwexp_survival, true_criterion,
                    true_kappa, true_optimum, true_optimum_grid, true_rmst,
                    true_variance)
from .inference import (AnalysisResult, ConfidenceInterval, analyze,
                        bootstrap_interval, hulc_fold_count, hulc_interval,
                        wald_interval_discrete)
from .comparators import (TestOutcome, fixed_rmst_test, maxcombo,
                          oracle_rmst_test, weighted_logrank)
from .sim import (StudyConfig, SimulationReport, generate_trial, run_study,
                  summarize_metrics)

__all__ = [
    "SubjectRecord", "TrialDataset", "parse_dataset", "write_csv",
    "max_estimable_time",
    "SurvivalCurve", "fit_km", "survival_at",
    "RmstEstimate", "rmst_arm", "kappa_hat", "variance_hat",
    "PenaltyConfig", "CriterionProfile", "criterion_value",
    "maximize_continuous", "maximize_discrete", "default_penalty",
    "suggest_grid_size", "uniform_grid",
    "PiecewiseExponential", "ScenarioSpec", "SCENARIOS", "get_scenario",
    "pwexp_survival", "pwexp_hazard", "pwexp_sample",
    "true_rmst", "true_kappa", "true_variance", "true_criterion",
    "true_optimum", "true_optimum_grid",
    "AnalysisResult", "ConfidenceInterval", "analyze", "hulc_interval",
    "hulc_fold_count", "bootstrap_interval", "wald_interval_discrete",
    "TestOutcome", "weighted_logrank", "maxcombo", "fixed_rmst_test",
    "oracle_rmst_test",
    "StudyConfig", "SimulationReport", "generate_trial", "run_study",
    "summarize_metrics",
]
