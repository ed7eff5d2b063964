"""Marginal treatment effects for hazard and acceleration scales.

For a proportional hazards model with a binary treatment x and one
continuous covariate z, the population log hazard ratio at time t under
an intervention on x is

    T(t) = beta_x + log E_Z[e^{beta_z Z} S(t|1,Z)] - log E_Z[S(t|1,Z)]
                  - log E_Z[e^{beta_z Z} S(t|0,Z)] + log E_Z[S(t|0,Z)]

with Z drawn from its marginal distribution. The unadjusted contrast
replaces the marginal law by the conditional laws Z|X=1 and Z|X=0; the
difference of the two curves is the confounding bias. On the
acceleration scale the analogous contrast collapses to a closed form in
the coefficients and conditional means.

Expectations are Gauss-Hermite quadrature when Z is normal, plain
averaging when Z is an observed sample, and seeded Monte Carlo with a
delta-method standard error when forced.
"""

import math
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .errors import ParameterError
from .estimation import FittedModel

__all__ = [
    "NormalZ",
    "EmpiricalZ",
    "MarginalEffectRequest",
    "MarginalCurve",
    "marginal_causal_loghr",
    "marginal_unadjusted_loghr",
    "confounding_bias",
    "aft_marginal_contrast",
    "tde_marginal_contrast",
    "comparison_table",
]

MIN_MC_DRAWS = 100_000


@dataclass(frozen=True)
class NormalZ:
    """Normal covariate distribution descriptor."""

    mean: float
    sd: float

    def __post_init__(self):
        if not (math.isfinite(self.mean) and math.isfinite(self.sd)):
            raise ParameterError("NormalZ moments must be finite")
        if self.sd <= 0.0:
            raise ParameterError(f"NormalZ sd must be positive, got {self.sd}")


class EmpiricalZ:
    """Observed covariate sample; expectations average over it."""

    def __init__(self, values):
        values = np.asarray(values, dtype=np.float64).ravel()
        if values.size == 0:
            raise ParameterError("EmpiricalZ needs a non-empty sample")
        if not np.all(np.isfinite(values)):
            raise ParameterError("EmpiricalZ sample must be finite")
        self.values = values
        self.values.setflags(write=False)

    def __repr__(self):
        return f"EmpiricalZ(n={self.values.size})"


ZDistribution = Union[NormalZ, EmpiricalZ]


def _z_mean(dist):
    if isinstance(dist, NormalZ):
        return dist.mean
    return float(np.mean(dist.values))


@dataclass(frozen=True)
class MarginalEffectRequest:
    """Inputs for the marginal hazard-ratio curves.

    Parameters
    ----------
    beta_x, beta_z : float
        Log hazard ratios of the treatment and of the covariate.
    baseline_cumhaz : callable
        Vectorized t -> H0(t), the cumulative hazard at x = 0, z = 0.
    times : array_like
        Positive, strictly increasing evaluation grid.
    z_marginal : NormalZ or EmpiricalZ
        Marginal law of Z, used by the causal contrast.
    z_given_x1, z_given_x0 : NormalZ or EmpiricalZ, optional
        Conditional laws of Z within each treatment arm, used by the
        unadjusted contrast.
    method : {"auto", "quadrature", "mc"}
        "auto" picks Gauss-Hermite for NormalZ and sample averaging
        for EmpiricalZ. "quadrature" requires NormalZ. "mc" draws
        ``mc_draws`` normals (seeded) or reuses the empirical sample,
        and attaches a delta-method standard error.
    mc_draws : int
        Monte Carlo sample size, at least 100 000.
    seed : int, optional
        Required when method="mc" meets a NormalZ distribution.
    quad_nodes : int
        Gauss-Hermite node count.
    """

    beta_x: float
    beta_z: float
    baseline_cumhaz: Callable
    times: np.ndarray
    z_marginal: ZDistribution
    z_given_x1: Optional[ZDistribution] = None
    z_given_x0: Optional[ZDistribution] = None
    method: str = "auto"
    mc_draws: int = MIN_MC_DRAWS
    seed: Optional[int] = None
    quad_nodes: int = 64

    def __post_init__(self):
        if not (math.isfinite(self.beta_x) and math.isfinite(self.beta_z)):
            raise ParameterError("beta_x and beta_z must be finite")
        if not callable(self.baseline_cumhaz):
            raise ParameterError("baseline_cumhaz must be callable")
        times = np.asarray(self.times, dtype=np.float64).ravel()
        if times.size == 0 or not np.all(np.isfinite(times)):
            raise ParameterError("times must be a non-empty finite grid")
        if np.min(times) <= 0.0:
            raise ParameterError("times must be positive")
        if times.size > 1 and np.min(np.diff(times)) <= 0.0:
            raise ParameterError("times must be strictly increasing")
        times.setflags(write=False)
        object.__setattr__(self, "times", times)
        for name in ("z_marginal", "z_given_x1", "z_given_x0"):
            dist = getattr(self, name)
            if dist is not None and not isinstance(dist,
                                                   (NormalZ, EmpiricalZ)):
                raise ParameterError(
                    f"{name} must be NormalZ or EmpiricalZ, got {dist!r}"
                )
        if self.method not in ("auto", "quadrature", "mc"):
            raise ParameterError(f"unknown method {self.method!r}")
        if self.method == "quadrature" and not isinstance(self.z_marginal,
                                                          NormalZ):
            raise ParameterError("quadrature requires a NormalZ marginal")
        if self.mc_draws < MIN_MC_DRAWS:
            raise ParameterError(
                f"mc_draws must be at least {MIN_MC_DRAWS}, "
                f"got {self.mc_draws}"
            )
        if self.quad_nodes < 2:
            raise ParameterError("quad_nodes must be at least 2")

    @classmethod
    def from_fit(cls, fitted, times, z_marginal, z_given_x1=None,
                 z_given_x0=None, x="x", z="z", **options):
        """Build a request from a converged exponential PH fit.

        The coefficient named ``beta.{z}`` is taken as 0 when the fit
        omitted the covariate (the x-only working model).
        """
        if not isinstance(fitted, FittedModel):
            raise ParameterError("from_fit expects a FittedModel")
        if fitted.spec.family != "exponential":
            raise ParameterError(
                "baseline extraction is defined for the exponential "
                f"proportional hazards family, not {fitted.spec.family!r}"
            )
        if not fitted.converged:
            raise ParameterError("from_fit requires a converged fit")
        names = list(fitted.parameter_names())
        theta = fitted.theta
        beta_x = float(theta[names.index(f"beta.{x}")])
        beta_z = (float(theta[names.index(f"beta.{z}")])
                  if f"beta.{z}" in names else 0.0)
        rate = float(np.exp(theta[names.index("log_rate")]))

        def baseline_cumhaz(t):
            return rate * np.asarray(t, dtype=np.float64)

        return cls(beta_x=beta_x, beta_z=beta_z,
                   baseline_cumhaz=baseline_cumhaz, times=times,
                   z_marginal=z_marginal, z_given_x1=z_given_x1,
                   z_given_x0=z_given_x0, **options)


@dataclass(frozen=True)
class MarginalCurve:
    """Per-time effect values with an optional Monte Carlo SE."""

    times: np.ndarray
    values: np.ndarray
    mc_se: Optional[np.ndarray]
    method: str


def _nodes_and_weights(dist, request, rng):
    """(z points, probability weights, is_stochastic) for one law."""
    if isinstance(dist, EmpiricalZ):
        z = dist.values
        return z, np.full(z.size, 1.0 / z.size), True
    if request.method == "mc":
        if rng is None:
            raise ParameterError(
                "method='mc' with a NormalZ distribution needs a seed"
            )
        z = rng.normal(dist.mean, dist.sd, size=request.mc_draws)
        return z, np.full(z.size, 1.0 / z.size), True
    u, w = np.polynomial.hermite.hermgauss(request.quad_nodes)
    z = dist.mean + math.sqrt(2.0) * dist.sd * u
    return z, w / math.sqrt(math.pi), False


def _arm_log_ratio(request, x_value, z, w):
    """log E[e^{bz Z} S(t|x,Z)] - log E[S(t|x,Z)] plus influence rows.

    Returns (log_ratio over times, per-point influence matrix or None).
    Times where either expectation vanishes come back NaN.
    """
    h0 = np.asarray(request.baseline_cumhaz(request.times),
                    dtype=np.float64)
    if h0.shape != request.times.shape:
        raise ParameterError(
            "baseline_cumhaz must return one value per time point"
        )
    bz_z = request.beta_z * z
    with np.errstate(over="ignore", under="ignore"):
        # survival matrix over (z points, times)
        s = np.exp(-np.outer(np.exp(request.beta_x * x_value + bz_z), h0))
        a = np.exp(bz_z)[:, None] * s
    num = w @ a
    den = w @ s
    with np.errstate(divide="ignore", invalid="ignore"):
        log_ratio = np.where((num > 0.0) & (den > 0.0),
                             np.log(num) - np.log(den), np.nan)
        influence = a / num - s / den
    return log_ratio, influence


def _curve(request, dist1, dist0, shared_draws):
    """Assemble beta_x + arm1 - arm0 with optional MC standard errors."""
    rng = (np.random.default_rng(request.seed)
           if request.seed is not None else None)
    z1, w1, stoch1 = _nodes_and_weights(dist1, request, rng)
    if shared_draws:
        z0, w0, stoch0 = z1, w1, stoch1
    else:
        z0, w0, stoch0 = _nodes_and_weights(dist0, request, rng)
    r1, if1 = _arm_log_ratio(request, 1.0, z1, w1)
    r0, if0 = _arm_log_ratio(request, 0.0, z0, w0)
    values = request.beta_x + r1 - r0
    stochastic = stoch1 or stoch0
    if not stochastic:
        return MarginalCurve(request.times, values, None, "quadrature")
    if shared_draws:
        # same draws in both arms: variance of the combined influence
        se = np.std(if1 - if0, axis=0, ddof=1) / math.sqrt(z1.size)
    else:
        v1 = np.var(if1, axis=0, ddof=1) / z1.size if stoch1 else 0.0
        v0 = np.var(if0, axis=0, ddof=1) / z0.size if stoch0 else 0.0
        se = np.sqrt(v1 + v0)
    method = "mc" if request.method == "mc" else "empirical"
    return MarginalCurve(request.times, values, se, method)


def marginal_causal_loghr(request):
    """Marginal log hazard ratio of x under intervention, per time.

    Both treatment arms integrate over the marginal law of Z (the same
    draws when that law is sampled), so confounding by Z is removed by
    construction.
    """
    return _curve(request, request.z_marginal, request.z_marginal,
                  shared_draws=True)


def marginal_unadjusted_loghr(request):
    """Unadjusted marginal log hazard ratio, per time.

    Arm expectations use the conditional laws Z|X=1 and Z|X=0, so the
    curve reflects both the treatment effect and the covariate
    imbalance.
    """
    if request.z_given_x1 is None or request.z_given_x0 is None:
        raise ParameterError(
            "unadjusted contrast needs z_given_x1 and z_given_x0"
        )
    return _curve(request, request.z_given_x1, request.z_given_x0,
                  shared_draws=False)


def confounding_bias(request):
    """Causal minus unadjusted curve; SEs add in quadrature."""
    causal = marginal_causal_loghr(request)
    unadj = marginal_unadjusted_loghr(request)
    values = causal.values - unadj.values
    if causal.mc_se is None and unadj.mc_se is None:
        se = None
    else:
        v1 = 0.0 if causal.mc_se is None else causal.mc_se ** 2
        v0 = 0.0 if unadj.mc_se is None else unadj.mc_se ** 2
        se = np.sqrt(v1 + v0)
    method = (causal.method if causal.method == unadj.method
              else f"{causal.method}/{unadj.method}")
    return MarginalCurve(request.times, values, se, method)


def _coefficient(fitted, name):
    if isinstance(fitted, FittedModel):
        names = list(fitted.parameter_names())
        key = f"beta.{name}"
        return float(fitted.theta[names.index(key)]) if key in names else None
    # mapping of covariate name -> coefficient
    value = fitted.get(name)
    return None if value is None else float(value)


def aft_marginal_contrast(fitted, z_given_x1, z_given_x0, x="x", z="z"):
    """Marginal acceleration contrast -beta_x - beta_z (E[Z|1] - E[Z|0]).

    ``fitted`` is an AFT FittedModel or a plain {name: coefficient}
    mapping. A missing z coefficient contributes nothing, which is the
    collapsibility statement: with balanced covariate means the
    marginal contrast equals the conditional one regardless of Z.
    """
    beta_x = _coefficient(fitted, x)
    if beta_x is None:
        raise ParameterError(f"no coefficient for treatment {x!r}")
    beta_z = _coefficient(fitted, z)
    if beta_z is None:
        return -beta_x
    gap = _z_mean(z_given_x1) - _z_mean(z_given_x0)
    return -beta_x - beta_z * gap


def tde_marginal_contrast(fitted, times, x1, x0=None):
    """-beta_x(t) read off a spline AFT fit with time-dependent terms.

    The time-dependent coefficient of the contrast x1 vs x0 is
    -log phi(x1, t) + log phi(x0, t), so the marginal acceleration
    contrast is its negative, log phi(x1, t) - log phi(x0, t). With no
    time-dependent terms this is constant at -x1.beta (x0 = 0).
    """
    from . import tde

    if not isinstance(fitted, FittedModel):
        raise ParameterError("tde_marginal_contrast expects a FittedModel")
    if fitted.spec.family != "fpaft":
        raise ParameterError("time-dependent contrasts need an fpaft fit")
    times = np.asarray(times, dtype=np.float64)
    if np.any(times <= 0.0):
        raise ParameterError("times must be positive")
    x1 = np.asarray(x1, dtype=np.float64)
    x0 = (np.zeros_like(x1) if x0 is None
          else np.asarray(x0, dtype=np.float64))
    phi1 = tde.phi_t(fitted.model, x1, times, fitted.theta)
    phi0 = tde.phi_t(fitted.model, x0, times, fitted.theta)
    return np.log(phi1) - np.log(phi0)


def comparison_table(params, replicates, seed, df=3):
    """Mean treatment coefficient per working model on causal-scenario data.

    Fits four models to each replicate: exponential PH and spline AFT,
    each with and without the confounder, and averages the estimated
    treatment coefficient and its standard error over converged fits.

    Parameters
    ----------
    params : CausalScenarioParams
        Generator settings (n, correlation, rates).
    replicates : int
        Number of independent datasets.
    seed : int
        Base seed; replicate streams are spawned from it.
    df : int
        Spline degrees of freedom for the AFT fits.

    Returns
    -------
    list of dict
        One row per model: label, mean_coef, mean_se, n_converged.
    """
    from .estimation import fit
    from .models import ModelSpec
    from .simulation import sample_causal

    if replicates < 1:
        raise ParameterError("replicates must be at least 1")
    roster = (
        ("exponential PH (x+z)",
         ModelSpec(family="exponential", covariates=("x", "z"))),
        (f"spline AFT df={df} (x+z)",
         ModelSpec(family="fpaft", covariates=("x", "z"), df=df)),
        (f"spline AFT df={df} (x only)",
         ModelSpec(family="fpaft", covariates=("x",), df=df)),
        ("exponential PH (x only)",
         ModelSpec(family="exponential", covariates=("x",))),
    )
    children = np.random.SeedSequence(seed).spawn(replicates)
    coefs = {label: [] for label, _ in roster}
    ses = {label: [] for label, _ in roster}
    for child in children:
        data = sample_causal(params, child)
        for label, spec in roster:
            fitted = fit(spec, data)
            se = fitted.se()
            if fitted.converged and se is not None:
                idx = list(fitted.parameter_names()).index("beta.x")
                coefs[label].append(float(fitted.theta[idx]))
                ses[label].append(float(se[idx]))
    rows = []
    for label, _ in roster:
        done = coefs[label]
        rows.append({
            "model": label,
            "mean_coef": float(np.mean(done)) if done else math.nan,
            "mean_se": float(np.mean(ses[label])) if done else math.nan,
            "n_converged": len(done),
        })
    return rows
