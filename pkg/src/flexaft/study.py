"""Monte Carlo study harness: generate, fit a roster, tabulate.

Each replicate draws a dataset from the configured scenario with its
own seed substream, fits every model in the roster, and records the
treatment coefficient, its standard error, information criteria, and
delta-method predictions of log(-log S(t|x)) at the monitored times.
Summaries (bias, percentage bias, Wald coverage, median AIC/BIC rank,
convergence counts) are computed over converged fits only, and cells
whose standard error is unavailable are excluded from coverage
denominators with the exclusion counted.

Replicates are independent, so they may run in a process pool; records
are sorted by replicate index before summarizing, which makes the
report identical bytes for a fixed base seed no matter how many
workers ran.
"""

import configparser
import csv
import dataclasses
import math
import re
import time as _time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Tuple

import numpy as np
from scipy.stats import rankdata

from . import __version__ as _pkg_version
from .errors import ConfigError, FlexAftError, ParameterError
from .estimation import FitOptions, fit, predict_survival
from .models import ModelSpec
from .simulation import (CausalScenarioParams, MixtureWeibullParams,
                         mixture_survival, read_scenario_config,
                         sample_causal, sample_mixture_aft)

__all__ = [
    "StudyConfig",
    "StudyReport",
    "run_study",
    "coverage",
    "emit_tables",
    "read_study_config",
]

# percentage bias is meaningless against a vanishing truth; the text
# tables print "." there
PCT_BIAS_MIN_TRUTH = 1e-3


@dataclass(frozen=True)
class StudyConfig:
    """Settings for one simulation study.

    Parameters
    ----------
    scenario : MixtureWeibullParams or CausalScenarioParams
        Data-generating process. The mixture generator applies
        administrative censoring at ``admin_censor_time``.
    roster : tuple of ModelSpec
        Models fitted to every replicate; labels must be unique.
    replicates : int
        Number of independent datasets.
    n : int
        Rows per dataset.
    base_seed : int
        Root of the replicate seed tree.
    true_beta : float, optional
        Target coefficient for bias/coverage. Defaults to the mixture
        scenario's beta; required for a causal scenario.
    monitored_times : tuple of float
        Grid for survival-scale summaries (may be empty).
    treatment : str
        Covariate whose coefficient is monitored.
    true_survival : callable, optional
        (times, x) -> S(t|x) on the data-generating truth. Defaults to
        the analytic mixture survival; survival summaries are skipped
        when a causal scenario has no evaluator. Must be picklable if
        the study runs in a process pool.
    fit_options : FitOptions
    workers : int
        0 or 1 runs serially; more uses a process pool.
    """

    scenario: object
    roster: Tuple[ModelSpec, ...]
    replicates: int
    n: int
    base_seed: int
    true_beta: Optional[float] = None
    monitored_times: Tuple[float, ...] = (1.0, 2.0, 3.0, 4.0, 5.0)
    admin_censor_time: float = 5.0
    treatment: str = "x"
    true_survival: Optional[Callable] = None
    fit_options: FitOptions = field(default_factory=FitOptions)
    workers: int = 0

    def __post_init__(self):
        if not isinstance(self.scenario,
                          (MixtureWeibullParams, CausalScenarioParams)):
            raise ParameterError(
                "scenario must be MixtureWeibullParams or "
                "CausalScenarioParams"
            )
        roster = tuple(self.roster)
        if not roster:
            raise ParameterError("model roster must be non-empty")
        labels = [spec.label() for spec in roster]
        if len(set(labels)) != len(labels):
            raise ParameterError("roster model labels must be unique")
        object.__setattr__(self, "roster", roster)
        if self.replicates < 1:
            raise ParameterError("replicates must be at least 1")
        if self.n < 1:
            raise ParameterError("n must be at least 1")
        times = tuple(float(t) for t in self.monitored_times)
        if any(t <= 0.0 for t in times):
            raise ParameterError("monitored times must be positive")
        if list(times) != sorted(times) or len(set(times)) != len(times):
            raise ParameterError("monitored times must be increasing")
        object.__setattr__(self, "monitored_times", times)
        if self.admin_censor_time <= 0.0:
            raise ParameterError("admin_censor_time must be positive")
        if self.true_beta is None:
            if isinstance(self.scenario, MixtureWeibullParams):
                object.__setattr__(self, "true_beta",
                                   float(self.scenario.beta))
            else:
                raise ParameterError(
                    "true_beta is required for a causal scenario"
                )
        if self.workers < 0:
            raise ParameterError("workers must be non-negative")

    def labels(self):
        return tuple(spec.label() for spec in self.roster)


@dataclass(frozen=True)
class StudyReport:
    """Study output: raw per-fit records plus the two summary tables."""

    config: StudyConfig
    records: Tuple[dict, ...]
    beta_summary: Tuple[dict, ...]
    survival_summary: Tuple[dict, ...]


def coverage(estimates, ses, truth):
    """Percentage of 95% Wald intervals est +- 1.96 se containing truth.

    Inputs of equal length; empty input gives nan.
    """
    estimates = np.asarray(estimates, dtype=np.float64)
    ses = np.asarray(ses, dtype=np.float64)
    if estimates.shape != ses.shape:
        raise ParameterError("estimates and ses must have equal length")
    if estimates.size == 0:
        return math.nan
    hit = np.abs(truth - estimates) <= 1.96 * ses
    return float(100.0 * np.mean(hit))


def _true_survival_fn(config):
    if config.true_survival is not None:
        return config.true_survival
    if isinstance(config.scenario, MixtureWeibullParams):
        return lambda times, x: mixture_survival(times, x, config.scenario)
    return None


def _covariate_pattern(spec, treatment, value):
    return np.array([value if name == treatment else 0.0
                     for name in spec.covariates], dtype=np.float64)


def _generate(config, seed):
    if isinstance(config.scenario, MixtureWeibullParams):
        return sample_mixture_aft(config.scenario, config.n, seed,
                                  admin_censor_at=config.admin_censor_time)
    params = dataclasses.replace(config.scenario, n=config.n)
    return sample_causal(params, seed)


def _replicate_seed(config, r):
    # r-th child of SeedSequence(base_seed).spawn(replicates), built
    # directly so workers need not materialize the whole tree
    return np.random.SeedSequence(entropy=config.base_seed, spawn_key=(r,))


def _run_replicate(config, r):
    """All roster fits on replicate r; returns one record per model."""
    data = _generate(config, _replicate_seed(config, r))
    times = np.asarray(config.monitored_times, dtype=np.float64)
    records = []
    for spec in config.roster:
        fitted = fit(spec, data, config.fit_options)
        se_vec = fitted.se()
        names = list(fitted.parameter_names())
        key = f"beta.{config.treatment}"
        beta = (float(fitted.theta[names.index(key)])
                if key in names else math.nan)
        se = math.nan
        if se_vec is not None and key in names:
            se = float(se_vec[names.index(key)])
        record = {
            "replicate": r,
            "model": spec.label(),
            "converged": bool(fitted.converged),
            "beta": beta,
            "se": se,
            "loglik": float(fitted.loglik),
            "aic": float(fitted.aic),
            "bic": float(fitted.bic),
            "iterations": int(fitted.iterations),
        }
        for t in config.monitored_times:
            for xv in (0.0, 1.0):
                record[_g_key(t, xv)] = math.nan
                record[_g_key(t, xv, se=True)] = math.nan
        if (times.size and fitted.converged
                and fitted.covariance is not None):
            for xv in (0.0, 1.0):
                pattern = _covariate_pattern(spec, config.treatment, xv)
                pred = predict_survival(fitted, pattern, times)
                with np.errstate(divide="ignore", invalid="ignore"):
                    g = np.log(-np.log(pred.survival))
                for j, t in enumerate(config.monitored_times):
                    if pred.valid[j]:
                        record[_g_key(t, xv)] = float(g[j])
                        record[_g_key(t, xv, se=True)] = float(
                            pred.se_loglog[j])
        records.append(record)
    return records


def _g_key(t, xv, se=False):
    stem = f"g_t{t:g}_x{xv:g}"
    return stem + "_se" if se else stem


def _summarize_beta(config, records):
    rows = []
    by_rep = {}
    for rec in records:
        by_rep.setdefault(rec["replicate"], []).append(rec)
    # information-criterion ranks among the converged fits of each
    # replicate, average ties
    ranks = {label: {"aic": [], "bic": []} for label in config.labels()}
    for rep_records in by_rep.values():
        conv = [rec for rec in rep_records if rec["converged"]]
        if not conv:
            continue
        for crit in ("aic", "bic"):
            values = np.array([rec[crit] for rec in conv])
            rk = rankdata(values, method="average")
            for rec, rank in zip(conv, rk):
                ranks[rec["model"]][crit].append(float(rank))
    for label in config.labels():
        conv = [rec for rec in records
                if rec["model"] == label and rec["converged"]]
        betas = np.array([rec["beta"] for rec in conv])
        ses = np.array([rec["se"] for rec in conv])
        have_se = np.isfinite(ses) & np.isfinite(betas)
        bias = float(np.mean(betas - config.true_beta)) if conv else math.nan
        pct = (100.0 * bias / config.true_beta
               if conv and abs(config.true_beta) >= PCT_BIAS_MIN_TRUTH
               else math.nan)
        cov = coverage(betas[have_se], ses[have_se], config.true_beta)
        rows.append({
            "model": label,
            "bias": bias,
            "pct_bias": pct,
            "coverage": cov,
            "median_aic_rank": (float(np.median(ranks[label]["aic"]))
                                if ranks[label]["aic"] else math.nan),
            "median_bic_rank": (float(np.median(ranks[label]["bic"]))
                                if ranks[label]["bic"] else math.nan),
            "n_converged": len(conv),
            "se_exclusions": int(len(conv) - np.sum(have_se)),
        })
    return tuple(rows)


def _summarize_survival(config, records):
    truth_fn = _true_survival_fn(config)
    if truth_fn is None or not config.monitored_times:
        return ()
    times = np.asarray(config.monitored_times, dtype=np.float64)
    rows = []
    for label in config.labels():
        conv = [rec for rec in records
                if rec["model"] == label and rec["converged"]]
        for xv in (0.0, 1.0):
            with np.errstate(divide="ignore", invalid="ignore"):
                g_true = np.log(-np.log(
                    np.asarray(truth_fn(times, xv), dtype=np.float64)))
            for j, t in enumerate(config.monitored_times):
                g = np.array([rec[_g_key(t, xv)] for rec in conv])
                gse = np.array([rec[_g_key(t, xv, se=True)] for rec in conv])
                ok = np.isfinite(g) & np.isfinite(gse)
                truth = float(g_true[j])
                bias = (float(np.mean(g[ok] - truth))
                        if np.any(ok) else math.nan)
                pct = (100.0 * bias / truth
                       if np.any(ok) and abs(truth) >= PCT_BIAS_MIN_TRUTH
                       else math.nan)
                rows.append({
                    "model": label,
                    "time": float(t),
                    "x": float(xv),
                    "truth": truth,
                    "bias": bias,
                    "pct_bias": pct,
                    "coverage": coverage(g[ok], gse[ok], truth),
                    "n_used": int(np.sum(ok)),
                    "exclusions": int(len(conv) - np.sum(ok)),
                })
    return tuple(rows)


def run_study(config):
    """Run the configured study and summarize it.

    Replicates execute serially or in a process pool (``workers``);
    either way the records are ordered by (replicate, roster position)
    and the report is byte-identical for a fixed base seed.
    """
    indices = range(config.replicates)
    if config.workers > 1:
        serial_config = dataclasses.replace(config, workers=0)
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            per_rep = list(pool.map(_run_replicate,
                                    [serial_config] * config.replicates,
                                    indices,
                                    chunksize=max(1, config.replicates
                                                  // (4 * config.workers))))
    else:
        per_rep = [_run_replicate(config, r) for r in indices]
    records = tuple(rec for rep in sorted(per_rep,
                                          key=lambda rs: rs[0]["replicate"])
                    for rec in rep)
    return StudyReport(
        config=config,
        records=records,
        beta_summary=_summarize_beta(config, records),
        survival_summary=_summarize_survival(config, records),
    )


_SPEC_RE = re.compile(r"([a-z]+)(?::(\d+))?\(([^)]*)\)")


def _parse_spec(text):
    """ModelSpec from roster syntax family[:df](cov+cov), e.g. fpaft:3(x)."""
    text = text.strip()
    match = _SPEC_RE.fullmatch(text)
    if match is None:
        raise ConfigError(
            f"cannot parse roster entry {text!r}; expected "
            "family[:df](cov+cov), e.g. weibull(x) or fpaft:3(x+z)"
        )
    family, df, covs = match.groups()
    covariates = tuple(c for c in covs.split("+") if c and c != "-")
    try:
        if df is None:
            return ModelSpec(family=family, covariates=covariates)
        return ModelSpec(family=family, covariates=covariates, df=int(df))
    except ParameterError as exc:
        raise ConfigError(f"roster entry {text!r}: {exc}") from None


def read_study_config(path):
    """Parse a study file: a scenario file plus a [study] section.

    The [study] section holds ``roster`` (semicolon-separated model
    specs), optional ``monitored_times`` (space-separated), optional
    ``true_beta`` (required for causal scenarios), ``treatment`` and
    ``workers``. Generation settings (n, replicates, base_seed,
    censoring) come from the scenario part of the same file.
    """
    scenario = read_scenario_config(path)
    parser = configparser.ConfigParser()
    with open(path) as handle:
        parser.read_file(handle)
    if "study" not in parser:
        raise ConfigError(f"{path} has no [study] section")
    section = parser["study"]
    if "roster" not in section:
        raise ConfigError("missing key 'roster' in section [study]")
    roster = tuple(_parse_spec(entry)
                   for entry in section["roster"].split(";")
                   if entry.strip())
    kwargs = {}
    if "monitored_times" in section:
        try:
            kwargs["monitored_times"] = tuple(
                float(v) for v in section["monitored_times"].split())
        except ValueError as exc:
            raise ConfigError(f"bad monitored_times: {exc}") from None
    if "true_beta" in section:
        try:
            kwargs["true_beta"] = float(section["true_beta"])
        except ValueError as exc:
            raise ConfigError(f"bad true_beta: {exc}") from None
    if "treatment" in section:
        kwargs["treatment"] = section["treatment"].strip()
    if "workers" in section:
        try:
            kwargs["workers"] = int(section["workers"])
        except ValueError as exc:
            raise ConfigError(f"bad workers: {exc}") from None
    admin = scenario.admin_censor_time
    if not math.isfinite(admin):
        # causal scenarios censor via their own uniform mechanism
        admin = 5.0
    try:
        return StudyConfig(
            scenario=scenario.params,
            roster=roster,
            replicates=scenario.replicates,
            n=scenario.n,
            base_seed=scenario.base_seed,
            admin_censor_time=admin,
            **kwargs,
        )
    except ParameterError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def _fmt_cell(value):
    """CSV cell: full-precision round-trip floats, blanks for nan."""
    if value is None:
        return ""
    if isinstance(value, float):
        if math.isnan(value):
            return ""
        return repr(value)
    return str(value)


def _fmt_text(value, nan_as="."):
    if value is None:
        return nan_as
    if isinstance(value, float):
        if math.isnan(value):
            return nan_as
        return f"{value:.3f}"
    return str(value)


def _write_csv(path, fieldnames, rows):
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(fieldnames)
        for row in rows:
            writer.writerow([_fmt_cell(row[name]) for name in fieldnames])


_BETA_COLUMNS = ("model", "bias", "pct_bias", "coverage",
                 "median_aic_rank", "median_bic_rank", "n_converged",
                 "se_exclusions")
_SURV_COLUMNS = ("model", "time", "x", "truth", "bias", "pct_bias",
                 "coverage", "n_used", "exclusions")
_BETA_HEADERS = ("Model", "Bias", "% Bias", "Cov.", "AIC", "BIC", "# Conv.")


def _beta_text(report):
    lines = []
    rows = [[_fmt_text(r["model"]), _fmt_text(r["bias"]),
             _fmt_text(r["pct_bias"]),
             _fmt_text(r["coverage"], nan_as="."),
             _fmt_text(r["median_aic_rank"]),
             _fmt_text(r["median_bic_rank"]),
             str(r["n_converged"])] for r in report.beta_summary]
    widths = [max(len(h), *(len(row[i]) for row in rows)) if rows else len(h)
              for i, h in enumerate(_BETA_HEADERS)]
    def line(cells):
        return "  ".join(c.ljust(w) if i == 0 else c.rjust(w)
                         for i, (c, w) in enumerate(zip(cells, widths)))
    lines.append(line(_BETA_HEADERS))
    lines.extend(line(row) for row in rows)
    return "\n".join(lines) + "\n"


def _survival_text(report):
    headers = ("Model", "t", "x", "Truth", "Bias", "% Bias", "Cov.", "N")
    rows = [[_fmt_text(r["model"]), f'{r["time"]:g}', f'{r["x"]:g}',
             _fmt_text(r["truth"]), _fmt_text(r["bias"]),
             _fmt_text(r["pct_bias"]), _fmt_text(r["coverage"], nan_as="."),
             str(r["n_used"])] for r in report.survival_summary]
    widths = [max(len(h), *(len(row[i]) for row in rows)) if rows else len(h)
              for i, h in enumerate(headers)]
    def line(cells):
        return "  ".join(c.ljust(w) if i == 0 else c.rjust(w)
                         for i, (c, w) in enumerate(zip(cells, widths)))
    return "\n".join([line(headers)] + [line(r) for r in rows]) + "\n"


def emit_tables(report, out_dir, timing_seconds=None):
    """Write the report as CSV + aligned text plus a run manifest.

    Returns the list of written paths. Survival files are skipped when
    the report has no survival summary (empty monitored times or no
    truth evaluator).
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    path = out / "beta_summary.csv"
    _write_csv(path, _BETA_COLUMNS, report.beta_summary)
    written.append(path)
    path = out / "beta_summary.txt"
    path.write_text(_beta_text(report))
    written.append(path)

    if report.survival_summary:
        path = out / "survival_summary.csv"
        _write_csv(path, _SURV_COLUMNS, report.survival_summary)
        written.append(path)
        path = out / "survival_summary.txt"
        path.write_text(_survival_text(report))
        written.append(path)

    if report.records:
        path = out / "records.csv"
        fields = list(report.records[0].keys())
        _write_csv(path, fields, report.records)
        written.append(path)

    manifest = out / "manifest.txt"
    scenario = report.config.scenario
    lines = [
        f"package flexaft {_pkg_version}",
        f"numpy {np.__version__}",
        f"base_seed {report.config.base_seed}",
        f"replicates {report.config.replicates}",
        f"n {report.config.n}",
        f"true_beta {report.config.true_beta!r}",
        f"scenario {scenario!r}",
        f"roster {', '.join(report.config.labels())}",
        f"monitored_times {report.config.monitored_times!r}",
        f"generated_unix {int(_time.time())}",
    ]
    if timing_seconds is not None:
        lines.append(f"runtime_seconds {timing_seconds:.1f}")
    manifest.write_text("\n".join(lines) + "\n")
    written.append(manifest)
    return written
