"""Command-line interface.

Subcommands: fit, predict, simulate, study, causal, km. Every printed
number is a plain rendering of a library result; nothing is computed
here. Exit codes: 0 success (a flagged non-convergence still exits 0),
2 usage error, 3 data or config error, 4 numerical failure. Randomized
subcommands require an explicit --seed.
"""

import argparse
import dataclasses
import sys
import time as _time

import numpy as np

from . import __version__
from .data import kaplan_meier, read_csv, write_csv
from .errors import (ConfigError, DataValidationError, FlexAftError,
                     GenerationError, IdentifiabilityError, KnotError,
                     ModelFileError, ParameterError, UndefinedScoreError)
from .estimation import FitOptions, fit, predict_survival
from .models import ModelSpec
from .modelfile import load_model, save_model

__all__ = ["main"]

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4


class _UsageError(Exception):
    """Bad flag values detected by the CLI itself."""


def _parse_covars(text):
    if text is None or not text.strip():
        return ()
    return tuple(name.strip() for name in text.split(","))


def _parse_tde(entries):
    tde = []
    for entry in entries or ():
        name, sep, df = entry.partition(":")
        if not sep or not name:
            raise _UsageError(
                f"--tde expects name:df, got {entry!r}"
            )
        try:
            tde.append((name.strip(), int(df)))
        except ValueError:
            raise _UsageError(f"--tde df must be an integer in {entry!r}")
    return tuple(tde)


def _parse_times(text):
    try:
        times = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise _UsageError(f"--times expects comma-separated numbers, "
                          f"got {text!r}")
    if not times:
        raise _UsageError("--times is empty")
    if min(times) <= 0.0:
        raise _UsageError("--times must all be positive")
    return np.asarray(times, dtype=np.float64)


def _parse_at(text, covariate_names):
    """Covariate vector from 'x=1,z=0.3'; unmentioned names get 0."""
    values = dict.fromkeys(covariate_names, 0.0)
    if text:
        for part in text.split(","):
            name, sep, value = part.partition("=")
            name = name.strip()
            if not sep or name not in values:
                raise _UsageError(
                    f"--at entry {part.strip()!r} does not match a model "
                    f"covariate (have {', '.join(covariate_names) or 'none'})"
                )
            try:
                values[name] = float(value)
            except ValueError:
                raise _UsageError(f"--at value for {name!r} is not a number")
    return np.array([values[name] for name in covariate_names])


def _print_fit(fitted, stream):
    names = fitted.parameter_names()
    se = fitted.se()
    width = max([len(n) for n in names] + [9])
    print(f"model: {fitted.spec.label()}", file=stream)
    print(f"{'parameter'.ljust(width)}  {'estimate':>12}  {'std.err':>12}  "
          f"{'95% CI':>27}", file=stream)
    for j, name in enumerate(names):
        est = fitted.theta[j]
        if se is None or not np.isfinite(se[j]):
            se_txt, ci_txt = ".", "."
        else:
            lo, hi = est - 1.96 * se[j], est + 1.96 * se[j]
            se_txt = f"{se[j]:.4f}"
            ci_txt = f"({lo:.4f}, {hi:.4f})"
        print(f"{name.ljust(width)}  {est:>12.4f}  {se_txt:>12}  "
              f"{ci_txt:>27}", file=stream)
    print(f"log-likelihood {fitted.loglik:.4f}   AIC {fitted.aic:.2f}   "
          f"BIC {fitted.bic:.2f}   events {fitted.n_events}   "
          f"iterations {fitted.iterations}", file=stream)


def _cmd_fit(args):
    data = read_csv(args.data, time=args.time, event=args.event,
                    entry=args.entry, covars=_parse_covars(args.covars))
    spec_kwargs = {"family": args.family,
                   "covariates": _parse_covars(args.covars)}
    if args.family == "fpaft":
        spec_kwargs["df"] = args.df
        spec_kwargs["tde"] = _parse_tde(args.tde)
    elif args.tde:
        raise _UsageError("--tde requires --family fpaft")
    try:
        spec = ModelSpec(**spec_kwargs)
    except ParameterError as exc:
        raise _UsageError(str(exc))
    options = FitOptions(bic_sample_size=args.bic_n)
    fitted = fit(spec, data, options)
    _print_fit(fitted, sys.stdout)
    if not fitted.converged:
        print("WARNING: fit did not converge; estimates are the last "
              "iterate and standard errors are unavailable",
              file=sys.stderr)
    if args.out:
        save_model(fitted, args.out)
        print(f"model written to {args.out}", file=sys.stdout)
    return EXIT_OK


def _cmd_predict(args):
    fitted = load_model(args.model)
    times = _parse_times(args.times)
    x = _parse_at(args.at, fitted.spec.covariates)
    pred = predict_survival(fitted, x, times)
    rows = ["time,S,se_loglogS,lower,upper"]
    for j, t in enumerate(times):
        cells = [repr(float(t))]
        for arr in (pred.survival, pred.se_loglog, pred.lower, pred.upper):
            v = arr[j]
            cells.append(repr(float(v)) if np.isfinite(v) else "")
        rows.append(",".join(cells))
    text = "\n".join(rows) + "\n"
    if args.out:
        with open(args.out, "w") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _cmd_simulate(args):
    from .simulation import (read_scenario_config, sample_causal,
                             sample_mixture_aft)

    cfg = read_scenario_config(args.scenario_config)
    n = args.n if args.n is not None else cfg.n
    if cfg.kind == "mixture_weibull":
        data = sample_mixture_aft(cfg.params, n, args.seed,
                                  admin_censor_at=cfg.admin_censor_time)
    else:
        params = dataclasses.replace(cfg.params, n=n)
        data = sample_causal(params, args.seed)
    write_csv(data, args.out)
    print(f"{data.n} rows ({data.n_events} events) written to {args.out}")
    return EXIT_OK


def _cmd_study(args):
    from .study import emit_tables, read_study_config, run_study

    config = read_study_config(args.study_config)
    if args.workers is not None:
        config = dataclasses.replace(config, workers=args.workers)
    started = _time.time()
    report = run_study(config)
    written = emit_tables(report, args.out_dir,
                          timing_seconds=_time.time() - started)
    for row in report.beta_summary:
        bias = row["bias"]
        cov = row["coverage"]
        print(f"{row['model']}: bias "
              f"{'nan' if bias != bias else format(bias, '+.4f')}, "
              f"coverage {'nan' if cov != cov else format(cov, '.1f')}%, "
              f"converged {row['n_converged']}/{config.replicates}")
    print(f"tables written to {args.out_dir} "
          f"({', '.join(p.name for p in written)})")
    return EXIT_OK


def _cmd_causal(args):
    from .causal import comparison_table
    from .simulation import CausalScenarioParams

    try:
        params = CausalScenarioParams(n=args.n, corr=args.corr)
    except ParameterError as exc:
        raise _UsageError(str(exc))
    rows = comparison_table(params, args.reps, args.seed, df=args.df)
    header = f"{'model':28}  {'mean coef':>10}  {'mean se':>8}  {'conv':>5}"
    print(header)
    for row in rows:
        print(f"{row['model']:28}  {row['mean_coef']:>10.4f}  "
              f"{row['mean_se']:>8.4f}  "
              f"{row['n_converged']:>5d}")
    if args.out:
        with open(args.out, "w") as handle:
            handle.write("model,mean_coef,mean_se,n_converged\n")
            for row in rows:
                handle.write(f"{row['model']},{row['mean_coef']!r},"
                             f"{row['mean_se']!r},{row['n_converged']}\n")
        print(f"table written to {args.out}")
    return EXIT_OK


def _cmd_km(args):
    data = read_csv(args.data, time=args.time, event=args.event,
                    entry=args.entry)
    km = kaplan_meier(data)
    rows = ["time,survival,n_risk,n_event"]
    for j in range(km.times.size):
        rows.append(f"{float(km.times[j])!r},{float(km.values[j])!r},"
                    f"{int(km.n_risk[j])},{int(km.n_event[j])}")
    text = "\n".join(rows) + "\n"
    if args.out:
        with open(args.out, "w") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="flexaft",
        description="Spline-based accelerated failure time modelling",
    )
    parser.add_argument("--version", action="version",
                        version=f"flexaft {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit a survival model to a CSV")
    p.add_argument("--data", required=True)
    p.add_argument("--time", required=True)
    p.add_argument("--event", required=True)
    p.add_argument("--entry", default=None)
    p.add_argument("--covars", default="")
    p.add_argument("--family", required=True,
                   choices=("fpaft", "weibull", "gengamma", "exponential"))
    p.add_argument("--df", type=int, default=3)
    p.add_argument("--tde", action="append", metavar="NAME:DF")
    p.add_argument("--bic-n", choices=("events", "rows"), default="events")
    p.add_argument("--out", default=None)
    p.set_defaults(handler=_cmd_fit)

    p = sub.add_parser("predict", help="survival curve from a model file")
    p.add_argument("--model", required=True)
    p.add_argument("--times", required=True)
    p.add_argument("--at", default="")
    p.add_argument("--out", default=None)
    p.set_defaults(handler=_cmd_predict)

    p = sub.add_parser("simulate", help="draw a dataset from a scenario")
    p.add_argument("--scenario-config", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--n", type=int, default=None)
    p.set_defaults(handler=_cmd_simulate)

    p = sub.add_parser("study", help="run a simulation study")
    p.add_argument("--study-config", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(handler=_cmd_study)

    p = sub.add_parser("causal", help="marginal-effect comparison table")
    p.add_argument("--corr", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--reps", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--df", type=int, default=3)
    p.add_argument("--out", default=None)
    p.set_defaults(handler=_cmd_causal)

    p = sub.add_parser("km", help="Kaplan-Meier estimate of a CSV")
    p.add_argument("--data", required=True)
    p.add_argument("--time", required=True)
    p.add_argument("--event", required=True)
    p.add_argument("--entry", default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(handler=_cmd_km)
    return parser


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataValidationError, ConfigError, ModelFileError,
            OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (IdentifiabilityError, KnotError, UndefinedScoreError,
            GenerationError, ParameterError, FlexAftError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
