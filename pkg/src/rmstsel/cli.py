"""Command-line front end: analyze a dataset, run a simulation study, or
emit truth curves for a named scenario.

Exit codes: 0 success, 2 usage/data error, 3 numeric failure.
"""
import argparse
import json
import os
import sys
import time

import numpy as np

from .criterion import PenaltyConfig, default_penalty
from .data import parse_dataset
from .errors import DataError, NumericError
from .inference import analyze
from .sim import StudyConfig, run_study
from .truth import (get_scenario, pwexp_hazard, pwexp_survival, true_criterion,
                    true_kappa)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="rmstsel",
        description="Adaptive restriction-time selection for RMST analysis "
                    "of two-arm right-censored trials.")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="analyze a two-arm CSV (arm,time,event)")
    a.add_argument("--input", required=True, help="CSV path")
    a.add_argument("--method", choices=("ct", "dt", "hulc"), default="ct")
    a.add_argument("--lmin", default="auto",
                   help="lower end of the restriction-time range (default: "
                        "5th percentile of pooled follow-up)")
    a.add_argument("--lmax", default="auto",
                   help="upper end (default: max estimable time)")
    a.add_argument("--unit", choices=("years", "months", "days"),
                   default="years",
                   help="time unit of the data; only affects the auto penalty")
    a.add_argument("--alpha", type=float, default=0.05)
    a.add_argument("--c", default="auto", help="penalty strength or 'auto'")
    a.add_argument("--ltilde", default="auto", help="penalty anchor or 'auto'")
    a.add_argument("--grid", type=int, default=10,
                   help="grid size for method dt")
    a.add_argument("--boot", type=int, default=1000,
                   help="bootstrap resamples for method ct")
    a.add_argument("--seed", type=int, default=None)
    a.add_argument("--hulc-conservative", action="store_true",
                   help="use the conservative fold count instead of the "
                        "anti-conservative default")
    a.add_argument("--stratified-boot", action="store_true",
                   help="stratify bootstrap resampling by arm")
    a.add_argument("--output", default="analysis.json")

    s = sub.add_parser("simulate", help="run a Monte Carlo study")
    s.add_argument("--scenario", required=True,
                   help="comma-separated scenario names")
    s.add_argument("--n", default="600", help="comma-separated sample sizes")
    s.add_argument("--reps", type=int, default=500)
    s.add_argument("--methods",
                   default="ct,dt,hulc,rmst,logrank,maxcombo,oracle")
    s.add_argument("--alpha", type=float, default=0.05)
    s.add_argument("--boot", type=int, default=200)
    s.add_argument("--grid", type=int, default=10)
    s.add_argument("--lmin", type=float, default=0.2)
    s.add_argument("--lmax", type=float, default=4.2)
    s.add_argument("--c", default="auto")
    s.add_argument("--ltilde", default="auto")
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--stratified-boot", action="store_true")
    s.add_argument("--full-scale", action="store_true",
                   help="full-size run: 2000 replicates, 1000 resamples")
    s.add_argument("--out-json", default="report.json")
    s.add_argument("--out-csv", default="report.csv")

    t = sub.add_parser("truth", help="emit exact scenario curves as CSV")
    t.add_argument("--scenario", required=True)
    t.add_argument("--points", type=int, default=200)
    t.add_argument("--lmin", type=float, default=0.2,
                   help="analysis range used for the auto penalty/anchor")
    t.add_argument("--lmax", type=float, default=4.2)
    t.add_argument("--c", default="auto")
    t.add_argument("--ltilde", default="auto")
    t.add_argument("--output", default="truth.csv")
    return p


def _dump_json(obj, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_analyze(args) -> int:
    if not os.path.exists(args.input):
        raise DataError(f"input file not found: {args.input}")
    if args.method in ("ct", "hulc") and args.seed is None:
        raise DataError(f"--seed is required for method {args.method}")
    ds = parse_dataset(args.input, time_unit=args.unit)
    lmin = None if args.lmin == "auto" else float(args.lmin)
    lmax = None if args.lmax == "auto" else float(args.lmax)
    c = "auto" if args.c == "auto" else float(args.c)
    lt = "auto" if args.ltilde == "auto" else float(args.ltilde)
    res = analyze(ds, args.method, L_min=lmin, L_max=lmax, alpha=args.alpha,
                  c=c, l_tilde=lt, grid=args.grid, B=args.boot,
                  seed=0 if args.seed is None else args.seed,
                  anti_conservative=not args.hulc_conservative,
                  stratified=args.stratified_boot)
    _dump_json(res.to_json_dict(), args.output)
    ci = res.ci_kappa
    print(f"method        : {res.method}")
    print(f"L_hat         : {res.L_hat:.6g}")
    print(f"kappa_hat     : {res.kappa_hat:.6g}")
    print(f"{100 * ci.level:.0f}% CI kappa  : [{ci.lower:.6g}, {ci.upper:.6g}] ({ci.method})")
    if res.ci_L is not None:
        print(f"{100 * res.ci_L.level:.0f}% CI L      : [{res.ci_L.lower:.6g}, {res.ci_L.upper:.6g}]")
    print(f"p_value       : {'n/a' if res.p_value is None else format(res.p_value, '.6g')}")
    print(f"reject H0     : {'yes' if res.reject else 'no'}")
    print(f"result JSON   : {args.output}")
    return 0


def cmd_simulate(args) -> int:
    scenarios = tuple(x.strip() for x in args.scenario.split(",") if x.strip())
    ns = tuple(int(x) for x in args.n.split(",") if x.strip())
    methods = tuple(x.strip() for x in args.methods.split(",") if x.strip())
    try:
        cfg = StudyConfig(
            scenarios=scenarios, ns=ns, reps=args.reps, methods=methods,
            alpha=args.alpha, boot_B=args.boot, grid_size=args.grid,
            L_min=args.lmin, L_max=args.lmax,
            c=None if args.c == "auto" else float(args.c),
            l_tilde=None if args.ltilde == "auto" else float(args.ltilde),
            seed=args.seed, workers=args.workers,
            stratified=args.stratified_boot, full_scale=args.full_scale)
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    t0 = time.perf_counter()
    print(f"running {len(scenarios)} scenario(s) x {len(ns)} sample size(s) "
          f"x {cfg.effective_reps} replicates ...", file=sys.stderr)
    report = run_study(cfg)
    print(f"done in {time.perf_counter() - t0:.1f}s", file=sys.stderr)
    _dump_json(report.to_json_dict(), args.out_json)
    with open(args.out_csv, "w", encoding="utf-8") as fh:
        fh.write("scenario,n,method,metric,value,mc_se\n")
        for scen, n, method, metric, value, se in report.to_csv_rows():
            se_txt = "" if se is None else repr(float(se))
            fh.write(f"{scen},{n},{method},{metric},{float(value)!r},{se_txt}\n")
    print(f"report JSON   : {args.out_json}")
    print(f"tidy CSV      : {args.out_csv}")
    return 0


def cmd_truth(args) -> int:
    s = get_scenario(args.scenario)
    if args.points < 2:
        raise DataError("--points must be >= 2")
    c = (default_penalty(args.lmin, args.lmax) if args.c == "auto"
         else float(args.c))
    lt = (0.5 * (args.lmin + args.lmax) if args.ltilde == "auto"
          else float(args.ltilde))
    pen = PenaltyConfig(c=c, l_tilde=lt)
    ts = np.linspace(0.01, 4.2, args.points)
    with open(args.output, "w", encoding="utf-8") as fh:
        fh.write("t,S0,S1,h0,h1,kappa,M,M_pen\n")
        for t in ts:
            t = float(t)
            m = true_criterion(s, t)
            fh.write(",".join(repr(float(v)) for v in (
                t,
                pwexp_survival(s.control, t),
                pwexp_survival(s.treatment, t),
                pwexp_hazard(s.control, t),
                pwexp_hazard(s.treatment, t),
                true_kappa(s, t),
                m,
                m - pen.c * (t - pen.l_tilde) ** 2,
            )) + "\n")
    print(f"curves CSV    : {args.output}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "analyze":
            return cmd_analyze(args)
        if args.command == "simulate":
            return cmd_simulate(args)
        return cmd_truth(args)
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
