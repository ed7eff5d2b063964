"""Survival-data generators.

Two generators cover the study designs in this package: a two-component
mixture-Weibull AFT scenario sampled by numerical inversion of its
survival function, and a two-covariate exponential scenario with a
treatment indicator correlated with a normal covariate. Both are pure
functions of (params, seed): a given seed reproduces the dataset
byte for byte.
"""

import configparser
import importlib.resources
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import SurvivalDataset
from .errors import ConfigError, GenerationError, ParameterError

__all__ = [
    "MixtureWeibullParams",
    "CausalScenarioParams",
    "ScenarioConfig",
    "mixture_survival",
    "mixture_density",
    "mixture_log_cum_hazard",
    "sample_mixture_aft",
    "sample_causal",
    "solve_weibull_rates",
    "solve_mixture_rates",
    "read_scenario_config",
    "default_scenario_files",
]

INVERSION_TOL = 1e-12

# Corr(X, Z) for X = 1{W > 0} with (W, Z) standard bivariate normal at
# correlation rho is rho * phi(0) / sd(X) = rho * sqrt(2/pi); targets at
# or beyond that bound are unreachable by this construction.
_MAX_POINT_BISERIAL = math.sqrt(2.0 / math.pi)


@dataclass(frozen=True)
class MixtureWeibullParams:
    """Two-component mixture-Weibull baseline with an AFT treatment
    effect: S(t | x) = p exp(-lam1 (t phi)^gam1)
    + (1 - p) exp(-lam2 (t phi)^gam2) with phi = exp(-x beta)."""

    p: float
    lam1: float
    gam1: float
    lam2: float
    gam2: float
    beta: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ParameterError(f"mixing proportion {self.p} not in [0, 1]")
        for name in ("lam1", "gam1", "lam2", "gam2"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0.0):
                raise ParameterError(f"{name} must be positive, got {value}")
        if not np.isfinite(self.beta):
            raise ParameterError(f"beta must be finite, got {self.beta}")


def mixture_survival(t, x, params):
    """S(t | x) of the mixture-Weibull AFT model; t >= 0."""
    t = np.asarray(t, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    with np.errstate(over="ignore"):
        ta = t * np.exp(-x * params.beta)
        s1 = np.exp(-params.lam1 * ta**params.gam1)
        s2 = np.exp(-params.lam2 * ta**params.gam2)
    return params.p * s1 + (1.0 - params.p) * s2


def mixture_density(t, x, params):
    """Density f(t | x) = -dS/dt of the mixture-Weibull AFT model."""
    t = np.asarray(t, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        phi = np.exp(-x * params.beta)
        ta = t * phi
        s1 = np.exp(-params.lam1 * ta**params.gam1)
        s2 = np.exp(-params.lam2 * ta**params.gam2)
        d1 = params.lam1 * params.gam1 * phi * ta ** (params.gam1 - 1.0)
        d2 = params.lam2 * params.gam2 * phi * ta ** (params.gam2 - 1.0)
    return params.p * s1 * d1 + (1.0 - params.p) * s2 * d2


def mixture_log_cum_hazard(t, x, params):
    """True log(-log S(t | x)); the reference value for survival-scale
    summaries."""
    with np.errstate(divide="ignore"):
        return np.log(-np.log(mixture_survival(t, x, params)))


def _invert_survival(params, x, u):
    """Per-row T with S(T | x) = u, by bracketing, bisection and a
    Newton polish."""
    n = u.shape[0]
    lo = np.zeros(n)
    hi = np.ones(n)
    for _ in range(400):
        active = mixture_survival(hi, x, params) > u
        if not active.any():
            break
        hi = np.where(active, hi * 4.0, hi)
    else:
        raise GenerationError(
            "could not bracket inversion times: survival does not drop "
            "below the smallest uniform draw"
        )
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        above = mixture_survival(mid, x, params) > u
        lo = np.where(above, mid, lo)
        hi = np.where(above, hi, mid)
    t = 0.5 * (lo + hi)
    for _ in range(4):
        s = mixture_survival(t, x, params)
        f = mixture_density(t, x, params)
        ok = np.isfinite(f) & (f > 0.0)
        step = np.where(ok, (s - u) / np.where(ok, f, 1.0), 0.0)
        t = np.clip(t + step, lo, hi)
    return t


def sample_mixture_aft(params, n, seed, admin_censor_at=5.0):
    """Dataset of n subjects: X ~ Bernoulli(0.5), T by inversion of the
    mixture survival, administrative censoring at ``admin_censor_at``.

    The achieved inversion residuals |S(T | x) - U| are stored in
    ``meta["inversion_residuals"]`` and are below 1e-12; the latent
    uncensored times are in ``meta["latent_times"]``.
    """
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    if admin_censor_at <= 0.0:
        raise ParameterError(
            f"admin_censor_at must be positive, got {admin_censor_at}"
        )
    rng = np.random.default_rng(seed)
    x = rng.integers(0, 2, size=n).astype(np.float64)
    u = rng.random(n)
    # rng.random is [0, 1): the 0 corner would demand an infinite time
    u = np.maximum(u, 2.0**-53)
    t = _invert_survival(params, x, u)
    residuals = np.abs(mixture_survival(t, x, params) - u)
    if not np.all(residuals < INVERSION_TOL):
        raise GenerationError(
            f"inversion residual {residuals.max():.3e} above "
            f"{INVERSION_TOL:.0e} (pathological parameters?)"
        )
    time = np.minimum(t, admin_censor_at)
    event = (t <= admin_censor_at).astype(np.int64)
    return SurvivalDataset.from_arrays(
        time=time, event=event, covariates={"x": x},
        meta={"inversion_residuals": residuals, "latent_times": t},
    )


@dataclass(frozen=True)
class CausalScenarioParams:
    """Exponential outcome with a binary treatment x and a normal
    covariate z: rate = exp(beta0 + beta_x x + beta_z z), censoring
    C ~ Uniform(0, censor_upper), and Corr(x, z) targeted by
    thresholding one margin of a bivariate normal."""

    n: int
    corr: float = 0.0
    beta0: float = -5.0
    beta_x: float = 1.0
    beta_z: float = 1.0
    z_sd: float = 2.0
    censor_upper: float = 10.0

    def __post_init__(self):
        if self.n < 1:
            raise ParameterError(f"n must be >= 1, got {self.n}")
        if not (np.isfinite(self.z_sd) and self.z_sd > 0.0):
            raise ParameterError(f"z_sd must be positive, got {self.z_sd}")
        if not (np.isfinite(self.censor_upper) and self.censor_upper > 0.0):
            raise ParameterError(
                f"censor_upper must be positive, got {self.censor_upper}"
            )
        if not (np.isfinite(self.corr)
                and abs(self.corr) < _MAX_POINT_BISERIAL):
            raise ParameterError(
                f"corr target {self.corr} unreachable: |corr| must be "
                f"below sqrt(2/pi) ~ {_MAX_POINT_BISERIAL:.4f} for a "
                "thresholded bivariate normal"
            )


def sample_causal(params, seed):
    """Dataset of (time, event, x, z) draws from the causal scenario."""
    rng = np.random.default_rng(seed)
    n = params.n
    rho = params.corr / _MAX_POINT_BISERIAL
    w = rng.standard_normal(n)
    raw = rng.standard_normal(n)
    zstar = rho * w + math.sqrt(1.0 - rho * rho) * raw
    x = (w > 0.0).astype(np.float64)
    z = params.z_sd * zstar
    rate = np.exp(params.beta0 + params.beta_x * x + params.beta_z * z)
    t = rng.exponential(1.0 / rate)
    c = rng.uniform(0.0, params.censor_upper, size=n)
    c = np.maximum(c, 1e-12)
    time = np.minimum(t, c)
    event = (t < c).astype(np.int64)
    return SurvivalDataset.from_arrays(
        time=time, event=event, covariates={"x": x, "z": z},
    )


def _mean_survival(t, params):
    """Mean S(t) over the two Bernoulli(0.5) treatment arms."""
    return 0.5 * (float(mixture_survival(t, 0.0, params))
                  + float(mixture_survival(t, 1.0, params)))


# root() is local: a single start can stall on the flat tails of the
# survival residuals, so the solvers sweep a coarse log-space grid
_RATE_STARTS = tuple(
    (a, b)
    for a in (0.01, 0.1, 0.3, 1.0, 3.0)
    for b in (0.01, 0.1, 0.3, 1.0, 3.0)
)


def solve_weibull_rates(target_neg, target_pos, beta_abs=0.5, at_time=5.0):
    """(lam, gam) of a single Weibull baseline whose arm-averaged S(t)
    hits ``target_neg`` under beta = -beta_abs and ``target_pos`` under
    beta = +beta_abs.
    """
    from scipy.optimize import root

    def equations(log_params):
        # hybr probes far afield; keep exp() finite and params valid
        lam, gam = np.exp(np.clip(log_params, -40.0, 40.0))
        out = np.empty(2)
        for i, beta in enumerate((-beta_abs, beta_abs)):
            p = MixtureWeibullParams(p=1.0, lam1=lam, gam1=gam,
                                     lam2=lam, gam2=gam, beta=beta)
            target = target_neg if i == 0 else target_pos
            out[i] = _mean_survival(at_time, p) - target
        return out

    for x0 in _RATE_STARTS:
        sol = root(equations, x0=np.log(x0), tol=1e-12)
        if sol.success and np.max(np.abs(sol.fun)) <= 1e-9:
            lam, gam = np.exp(np.clip(sol.x, -40.0, 40.0))
            return float(lam), float(gam)
    raise ParameterError(
        f"no Weibull baseline reaches S({at_time}) targets "
        f"({target_neg}, {target_pos})"
    )


def solve_mixture_rates(p, gam1, gam2, target_neg, target_pos,
                        beta_abs=0.5, at_time=5.0):
    """(lam1, lam2) so that the arm-averaged mixture S(t) hits
    ``target_neg`` under beta = -beta_abs and ``target_pos`` under
    beta = +beta_abs, holding the shape parameters fixed."""
    from scipy.optimize import root

    def equations(log_rates):
        lam1, lam2 = np.exp(np.clip(log_rates, -40.0, 40.0))
        out = np.empty(2)
        for i, beta in enumerate((-beta_abs, beta_abs)):
            mix = MixtureWeibullParams(p=p, lam1=lam1, gam1=gam1,
                                       lam2=lam2, gam2=gam2, beta=beta)
            target = target_neg if i == 0 else target_pos
            out[i] = _mean_survival(at_time, mix) - target
        return out

    for x0 in _RATE_STARTS:
        sol = root(equations, x0=np.log(x0), tol=1e-12)
        if sol.success and np.max(np.abs(sol.fun)) <= 1e-9:
            lam1, lam2 = np.exp(np.clip(sol.x, -40.0, 40.0))
            return float(lam1), float(lam2)
    raise ParameterError(
        f"no rate pair reaches S({at_time}) targets "
        f"({target_neg}, {target_pos}) at shapes "
        f"(p={p}, gam1={gam1}, gam2={gam2})"
    )


@dataclass(frozen=True)
class ScenarioConfig:
    """Parsed scenario file: generator parameters plus study-scale
    settings (n, replicate count, base seed, censoring time)."""

    kind: str
    name: str
    params: object
    n: int
    replicates: int
    base_seed: int
    admin_censor_time: float


def _get(section, key, cast, where):
    if key not in section:
        raise ConfigError(f"missing key {key!r} in section [{where}]")
    raw = section[key]
    try:
        return cast(raw)
    except ValueError as exc:
        raise ConfigError(
            f"bad value {raw!r} for {key} in [{where}]: {exc}"
        ) from None


def default_scenario_files():
    """Paths of the four bundled scenario configs, in scenario order."""
    root = importlib.resources.files(__package__) / "configs"
    return tuple(Path(str(root / f"scenario{i}.ini")) for i in range(1, 5))


def read_scenario_config(path):
    """Parse a scenario INI file into a ScenarioConfig."""
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read scenario config {path!r}")
    if "flexaft_scenario" not in parser:
        raise ConfigError(
            f"{path!r} is not a scenario config (missing "
            "[flexaft_scenario] section)"
        )
    head = parser["flexaft_scenario"]
    version = _get(head, "format_version", int, "flexaft_scenario")
    if version != 1:
        raise ConfigError(f"unsupported scenario format_version {version}")
    kind = _get(head, "kind", str, "flexaft_scenario").strip()
    name = head.get("name", "scenario").strip()
    if "generation" not in parser:
        raise ConfigError("missing [generation] section")
    gen = parser["generation"]
    n = _get(gen, "n", int, "generation")
    replicates = _get(gen, "replicates", int, "generation")
    base_seed = _get(gen, "base_seed", int, "generation")
    if kind == "mixture_weibull":
        if "mixture" not in parser:
            raise ConfigError("missing [mixture] section")
        sec = parser["mixture"]
        params = MixtureWeibullParams(
            p=_get(sec, "p", float, "mixture"),
            lam1=_get(sec, "lambda1", float, "mixture"),
            gam1=_get(sec, "gamma1", float, "mixture"),
            lam2=_get(sec, "lambda2", float, "mixture"),
            gam2=_get(sec, "gamma2", float, "mixture"),
            beta=_get(sec, "beta", float, "mixture"),
        )
        admin = _get(gen, "admin_censor_time", float, "generation")
    elif kind == "causal":
        if "causal" not in parser:
            raise ConfigError("missing [causal] section")
        sec = parser["causal"]
        params = CausalScenarioParams(
            n=n,
            corr=_get(sec, "corr", float, "causal"),
            beta0=_get(sec, "beta0", float, "causal"),
            beta_x=_get(sec, "beta_x", float, "causal"),
            beta_z=_get(sec, "beta_z", float, "causal"),
            z_sd=_get(sec, "z_sd", float, "causal"),
            censor_upper=_get(sec, "censor_upper", float, "causal"),
        )
        admin = float("nan")
    else:
        raise ConfigError(f"unknown scenario kind {kind!r}")
    return ScenarioConfig(
        kind=kind, name=name, params=params, n=n, replicates=replicates,
        base_seed=base_seed, admin_censor_time=admin,
    )
