"""Command-line entry point: ``lcvt {test,simulate,augment-demo,scenarios}``.

Exit codes: 0 completed, 2 usage or configuration error, 3 data error,
4 numerical failure. Tables and results go to stdout, progress to stderr.
"""

import argparse
import dataclasses
import json
import logging
import sys
import warnings

from . import scenarios as scen
from . import tables
from .csvio import CsvSchema, read_csv
from .errors import ConfigError, DataError, LcvtError, MaxItersExceeded, NotSymmetric, NumericalError
from .hetero import lcvt_test, ols_test
from .lasso import LassoConfig
from .numerics import RngState
from .simulation import (COEFFICIENT_KINDS, COVARIANCE_KINDS, FORMS, CoefficientSpec,
                         CovarianceSpec, ScenarioSpec, run_augmentation, run_campaign,
                         with_reps)

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERICAL = 0, 2, 3, 4
TEST_FIELDS = ("statistic_T", "z", "p_value", "alternative", "alpha", "reject",
               "sigma2_hat", "lambda_used", "n_active", "n", "p", "engine")

log = logging.getLogger("lcvt")


def _alternative(text):
    return text.replace("-", "_")


def _column_ref(text):
    return int(text) if text.isdigit() else text


def _schema(args):
    features = None
    if args.features:
        features = [_column_ref(f.strip()) for f in args.features.split(",") if f.strip()]
    return CsvSchema(response=_column_ref(args.response), features=features,
                     header=not args.no_header, na_policy=args.na)


def _lasso_config(args):
    return LassoConfig(cv_folds=args.folds,
                       selection_rule="min" if args.rule == "min" else "one_se",
                       standardize=not args.no_standardize,
                       fit_intercept=not args.no_intercept)


def _emit(text, out):
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _fmt(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def cmd_test(args):
    data = read_csv(args.csv, _schema(args))
    alt = _alternative(args.alternative)
    if args.engine == "ols":
        res = ols_test(data, args.alpha, alt, fit_intercept=not args.no_intercept)
    else:
        res = lcvt_test(data, _lasso_config(args), args.alpha, alt,
                        RngState(args.seed), lam=args.lam)
    if args.format == "json":
        d = res.as_dict()
        sys.stdout.write(json.dumps({k: d[k] for k in TEST_FIELDS}) + "\n")
    else:
        for key in TEST_FIELDS:
            sys.stdout.write(f"{key:<12} {_fmt(getattr(res, key))}\n")
        verdict = "reject" if res.reject else "do not reject"
        sys.stdout.write(f"{'decision':<12} {verdict} homoskedasticity at alpha={args.alpha:g}\n")
        if not res.calibrated:
            sys.stdout.write("note         OLS baseline: normal reference is uncalibrated when p/n is not small\n")
    return EXIT_OK


def _flag_grid(args):
    if args.n is None or (args.p is None and args.p_over_n is None):
        raise ConfigError("give a scenario file, --builtin, or at least --n and --p", "scenario")
    p = args.p if args.p is not None else int(round(args.p_over_n * args.n))
    kind, _, rho = args.covariance.partition(":")
    return [ScenarioSpec(
        n=args.n, p=p,
        covariance=CovarianceSpec(kind, p, float(rho) if rho else 0.0),
        coefficients=CoefficientSpec(args.coefficients, p),
        form=args.form, alpha=args.alpha, alternative=_alternative(args.alternative),
        reps=args.reps or 100, base_seed=args.seed or 0,
        engine="ols_baseline" if args.engine == "ols" else "lasso",
        augment_d=args.augment_d or None, lasso=_lasso_config(args), id="cli")]


def cmd_simulate(args):
    if args.scenario_file and args.builtin:
        raise ConfigError("give either a scenario file or --builtin, not both", "scenario")
    if args.scenario_file:
        specs = scen.load_scenarios(args.scenario_file)
    elif args.builtin:
        specs = scen.load_builtin(args.builtin)
    else:
        specs = _flag_grid(args)
    if args.reps is not None:
        if args.reps < 1:
            raise ConfigError("must be >= 1", "reps")
        specs = [with_reps(s, args.reps) for s in specs]
    if args.seed is not None:
        specs = [dataclasses.replace(s, base_seed=args.seed) for s in specs]

    records = []
    for i, spec in enumerate(specs, 1):
        report = run_campaign(spec, workers=args.workers)
        rate = tables.fmt_rate(report.rejection_rate)
        print(f"[{i}/{len(specs)}] {spec.id}: rate={rate} failures={report.failures}"
              + (f" ({report.note})" if report.note else ""), file=sys.stderr, flush=True)
        if report.kkt_ok is False:
            print(f"warning: KKT certificate failed in {spec.id}", file=sys.stderr)
        records.append(tables.simulation_record(report))
    _emit(tables.render(records, tables.SIM_COLUMNS, args.format), args.out)
    return EXIT_OK


def _d_list(text):
    try:
        ds = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"not a comma-separated list of integers: {text!r}", "d-list") from None
    if not ds or any(d < 0 for d in ds):
        raise ConfigError("counts must be non-negative", "d-list")
    return ds


def cmd_augment_demo(args):
    ds = _d_list(args.d_list)
    data = read_csv(args.csv, _schema(args))
    engine = "ols_baseline" if args.engine == "ols" else "lasso"
    config = _lasso_config(args)
    records = []
    for d in ds:
        report = run_augmentation(data, d, args.reps, args.seed, engine, config,
                                  args.alpha, _alternative(args.alternative),
                                  workers=args.workers)
        print(f"d={d}: rate={tables.fmt_rate(report.rejection_rate)} "
              f"failures={report.failures}" + (f" ({report.note})" if report.note else ""),
              file=sys.stderr, flush=True)
        records.append(tables.augment_record(d, args.engine, report))
    _emit(tables.render(records, tables.AUGMENT_COLUMNS, args.format), args.out)
    return EXIT_OK


def cmd_scenarios(args):
    if args.action == "list":
        for name in scen.builtin_names():
            sys.stdout.write(name + "\n")
    else:
        if not args.name:
            raise ConfigError("a builtin name is required", "name")
        sys.stdout.write(scen.builtin_text(args.name))
    return EXIT_OK


def _add_csv_args(p):
    p.add_argument("csv", help="input CSV file")
    p.add_argument("--response", default="0", help="response column name or 0-based index (default 0)")
    p.add_argument("--features", help="comma-separated feature columns (default: all others)")
    p.add_argument("--no-header", action="store_true", help="first row is data")
    p.add_argument("--na", choices=("error", "drop_row"), default="error",
                   help="missing-value policy (default error)")


def _add_test_args(p, engines=("lasso", "ols")):
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--alternative", choices=("two-sided", "greater"), default="two-sided")
    p.add_argument("--rule", choices=("1se", "min"), default="1se",
                   help="cross-validation selection rule")
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--engine", choices=engines, default="lasso")
    p.add_argument("--no-intercept", action="store_true")
    p.add_argument("--no-standardize", action="store_true")


def build_parser():
    parser = argparse.ArgumentParser(prog="lcvt", description="Lasso-based coefficient-of-"
                                     "variation test for heteroskedasticity.")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("test", help="test a CSV data set for heteroskedasticity")
    _add_csv_args(p)
    _add_test_args(p)
    p.add_argument("--lambda", dest="lam", type=float, help="fixed penalty, skips cross-validation")
    p.add_argument("--seed", type=int, default=0, help="seed for the fold assignment")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("simulate", help="run Monte Carlo campaigns")
    p.add_argument("scenario_file", nargs="?", help="TOML scenario file")
    p.add_argument("--builtin", help="bundled scenario file name (see `lcvt scenarios list`)")
    p.add_argument("--reps", type=int, help="override replications per scenario")
    p.add_argument("--seed", type=int, help="override base seed")
    p.add_argument("--out", help="write the table here instead of stdout")
    p.add_argument("--format", choices=tables.FORMATS, default="csv")
    p.add_argument("--workers", type=int, help="worker threads (default LCVT_WORKERS or CPU count)")
    g = p.add_argument_group("single scenario from flags")
    g.add_argument("--n", type=int)
    g.add_argument("--p", type=int)
    g.add_argument("--p-over-n", type=float)
    g.add_argument("--covariance", default="independent",
                   help=f"KIND[:RHO], KIND in {', '.join(COVARIANCE_KINDS)}")
    g.add_argument("--coefficients", default="sparse", choices=COEFFICIENT_KINDS)
    g.add_argument("--form", default="homoskedastic", choices=FORMS)
    g.add_argument("--augment-d", type=int, default=0)
    _add_test_args(g)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("augment-demo", help="rejection rate after appending irrelevant covariates")
    _add_csv_args(p)
    _add_test_args(p)
    p.add_argument("--d-list", default="0,100,200,500,1000,2000,3000",
                   help="comma-separated numbers of irrelevant columns")
    p.add_argument("--reps", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.add_argument("--format", choices=tables.FORMATS, default="csv")
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_augment_demo)

    p = sub.add_parser("scenarios", help="list or print bundled scenario files")
    p.add_argument("action", choices=("list", "print-builtin"))
    p.add_argument("name", nargs="?")
    p.set_defaults(func=cmd_scenarios)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    warnings.simplefilter("always", MaxItersExceeded)
    try:
        return args.func(args)
    except (ConfigError, NotSymmetric) as exc:
        print(f"lcvt: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"lcvt: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"lcvt: numerical error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except LcvtError as exc:
        print(f"lcvt: error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
