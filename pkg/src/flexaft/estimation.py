"""Maximum-likelihood fitting with a safeguarded Newton optimizer.

The Newton direction uses the analytic score and an observed information
matrix obtained by central finite differences of that score (step
1e-5 * (1 + |theta_j|) per coordinate). Indefinite information is
repaired by eigenvalue flooring; steps are halved whenever the
log-likelihood fails to increase or lands in the -inf region.
Non-convergence is reported as a flag, never an exception, so study
harnesses can tabulate it.
"""

import numpy as np
from scipy.stats import rankdata

from dataclasses import dataclass, field

from . import models as model_zoo
from .data import nelson_aalen
from .errors import (FlexAftError, IdentifiabilityError, ParameterError,
                     UndefinedScoreError)

__all__ = [
    "FitOptions",
    "FittedModel",
    "SurvivalPrediction",
    "initialize",
    "fit",
    "covariance",
    "predict_survival",
    "compare",
]

# Evaluation noise of the summed log-likelihood, in units of
# np.spacing(1 + |ll|). The spline basis cancels cubes of the full knot
# span down to O(1) values, so each subject contributes roughly
# ulp(span^3 * |gamma|) of rounding error and the total wanders a few
# hundred ulps even with exactly rounded summation. Line-search
# acceptance and the monotone-ascent check share this constant.
LOGLIK_NOISE_ULPS = 4096.0


@dataclass(frozen=True)
class FitOptions:
    max_iterations: int = 200
    gradient_tol: float = 1e-6
    param_tol: float = 1e-8
    max_step_halvings: int = 30
    hessian_step: float = 1e-5
    init: object = None
    bic_sample_size: str = "events"  # "events" (default) or "rows"
    reknot: bool = False

    def __post_init__(self):
        if (self.max_iterations < 1 or self.gradient_tol <= 0
                or self.param_tol <= 0 or self.max_step_halvings < 1
                or self.hessian_step <= 0):
            raise ParameterError("fit options must be positive")
        if self.bic_sample_size not in ("events", "rows"):
            raise ParameterError(
                f"bic_sample_size must be 'events' or 'rows', got "
                f"{self.bic_sample_size!r}"
            )


@dataclass
class FittedModel:
    """Result of one maximum-likelihood fit."""

    spec: object
    model: object
    theta: np.ndarray
    loglik: float
    score: np.ndarray
    converged: bool
    iterations: int
    trace: tuple
    covariance: object  # ndarray, or None when absent
    singular_information: bool
    n_events: int
    n_rows: int
    bic_sample_size: str
    aic: float = field(init=False)
    bic: float = field(init=False)
    data_checksum: str = ""

    def __post_init__(self):
        k = self.theta.shape[0]
        self.aic = -2.0 * self.loglik + 2.0 * k
        n = self.n_events if self.bic_sample_size == "events" else self.n_rows
        self.bic = -2.0 * self.loglik + k * float(np.log(n))

    @property
    def k(self):
        return self.theta.shape[0]

    def parameter_names(self):
        return self.model.parameter_names()

    def se(self):
        """Standard errors from the covariance diagonal, or None."""
        if self.covariance is None:
            return None
        return np.sqrt(np.diag(self.covariance))


def _spec_n_params(spec):
    p = len(spec.covariates)
    if spec.family == "fpaft":
        return p + spec.df + 1 + sum(d for _, d in spec.tde)
    if spec.family == "weibull":
        return p + 2
    if spec.family == "gengamma":
        return p + 3
    return p + 1


def _check_identifiable(spec, data):
    k = _spec_n_params(spec)
    if data.n_events < k:
        raise IdentifiabilityError(
            f"{spec.label()} has {k} parameters but the data has only "
            f"{data.n_events} events"
        )


def _cumhaz_regression(data):
    """(intercept, slope) of log Nelson-Aalen on log event time."""
    na = nelson_aalen(data)
    if na.times.size < 2:
        return None
    logt = np.log(na.times)
    logh = np.log(na.values)
    design = np.column_stack([np.ones_like(logt), logt])
    coef, *_ = np.linalg.lstsq(design, logh, rcond=None)
    return float(coef[0]), float(coef[1])


def _weibull_start(data):
    fitted = _cumhaz_regression(data)
    if fitted is None:
        rate = data.n_events / data.total_exposure
        return np.log(rate), 0.0
    intercept, slope = fitted
    return intercept, float(np.log(max(slope, 0.05)))


def _initialize_model(model, data):
    p = model.p
    if model.family == "exponential":
        rate = data.n_events / data.total_exposure
        return np.concatenate([np.zeros(p), [np.log(rate)]])
    if model.family == "weibull":
        log_lam, log_gam = _weibull_start(data)
        return np.concatenate([np.zeros(p), [log_lam, log_gam]])
    if model.family == "gengamma":
        log_lam, log_gam = _weibull_start(data)
        gam = np.exp(log_gam)
        return np.concatenate([np.zeros(p),
                               [-log_lam / gam, -log_gam, 1.0]])

    # fpaft: least squares of the spline basis at log event times against
    # log Nelson-Aalen, falling back to the Weibull line when degenerate
    from . import splines

    log_lam, log_gam = _weibull_start(data)
    fallback_gamma = np.zeros(model.df + 1)
    fallback_gamma[0] = log_lam
    fallback_gamma[1] = np.exp(log_gam)
    n_tde = model.n_params - p - model.df - 1
    na = nelson_aalen(data)
    gamma = fallback_gamma
    if na.times.size >= model.df + 1:
        logt = np.log(na.times)
        design = np.column_stack([np.ones_like(logt),
                                  splines.basis(logt, model.knots)])
        coef, *_ = np.linalg.lstsq(design, np.log(na.values), rcond=None)
        if np.all(np.isfinite(coef)):
            gamma = coef
    theta = np.concatenate([np.zeros(p), gamma, np.zeros(n_tde)])
    if not np.isfinite(model.loglik(data, theta)):
        theta = np.concatenate([np.zeros(p), fallback_gamma,
                               np.zeros(n_tde)])
    return theta


def initialize(spec, data):
    """Starting parameter vector for a fit of ``spec`` on ``data``.

    Raises IdentifiabilityError when the data carries fewer events than
    the model has parameters.
    """
    _check_identifiable(spec, data)
    model = model_zoo.build_model(spec, data)
    return _initialize_model(model, data)


def _fd_hessian(model, data, theta, step):
    """Central-difference Hessian of the log-likelihood via the score."""
    k = theta.shape[0]
    hess = np.empty((k, k))
    for j in range(k):
        h = step * (1.0 + abs(theta[j]))
        for attempt in range(3):
            up = theta.copy()
            up[j] += h
            down = theta.copy()
            down[j] -= h
            ll_up, g_up = model.loglik_and_score(data, up)
            ll_down, g_down = model.loglik_and_score(data, down)
            if np.isfinite(ll_up) and np.isfinite(ll_down):
                break
            h *= 0.1
        else:
            raise UndefinedScoreError(
                f"hessian step leaves the likelihood domain at "
                f"coordinate {j}"
            )
        hess[:, j] = (g_up - g_down) / (2.0 * h)
    return 0.5 * (hess + hess.T)


def _ascent_direction(hess, grad):
    """Newton direction with the information floored positive definite."""
    eigval, eigvec = np.linalg.eigh(-hess)
    scale = float(np.max(np.abs(eigval)))
    if not np.isfinite(scale) or scale <= 0.0:
        return grad
    floored = np.maximum(eigval, 1e-8 * scale)
    return eigvec @ ((eigvec.T @ grad) / floored)


def _newton(model, data, theta, options):
    ll, grad = model.loglik_and_score(data, theta)
    if not np.isfinite(ll):
        return theta, ll, grad, False, 0, (ll,)
    trace = [ll]
    iterations = 0
    converged = bool(np.max(np.abs(grad)) < options.gradient_tol)
    while not converged and iterations < options.max_iterations:
        try:
            hess = _fd_hessian(model, data, theta, options.hessian_step)
            direction = _ascent_direction(hess, grad)
        except UndefinedScoreError:
            direction = grad
        alpha = 1.0
        accepted = False
        strict = False
        g_max = np.max(np.abs(grad))
        # near the optimum the Newton improvement sits below the
        # floating-point noise of the summed log-likelihood, so a step
        # holding ll to within that noise while cutting the score by 10%
        # also counts as progress
        slack = LOGLIK_NOISE_ULPS * np.spacing(1.0 + abs(ll))
        for _ in range(options.max_step_halvings + 1):
            candidate = theta + alpha * direction
            ll_new, grad_new = model.loglik_and_score(data, candidate)
            if np.isfinite(ll_new):
                if ll_new > ll:
                    accepted = True
                    strict = True
                    break
                if (ll_new >= ll - slack
                        and np.max(np.abs(grad_new)) < 0.9 * g_max):
                    accepted = True
                    break
            alpha *= 0.5
        if not accepted:
            break
        delta = candidate - theta
        theta, ll, grad = candidate, ll_new, grad_new
        trace.append(ll)
        iterations += 1
        converged = bool(np.max(np.abs(grad)) < options.gradient_tol)
        # score-cutting steps are intrinsically tiny at stiff optima and
        # shrink max|score| geometrically, so only strict-ascent steps
        # are subject to the small-step stopping rule
        if strict and np.max(
                np.abs(delta) / (1.0 + np.abs(theta))) < options.param_tol:
            break
    return theta, ll, grad, converged, iterations, tuple(trace)


def _covariance_at(model, data, theta, step):
    """(covariance or None, singular flag) from the observed information."""
    try:
        hess = _fd_hessian(model, data, theta, step)
    except UndefinedScoreError:
        return None, True
    info = -hess
    eigval = np.linalg.eigvalsh(info)
    if not np.all(np.isfinite(eigval)) or np.min(eigval) <= 0.0:
        return None, True
    # exactly collinear designs survive the PD check on rounding noise
    # alone; the stiffest legitimate spline fits stay above 1e-8
    if np.min(eigval) <= 1e-11 * np.max(eigval):
        return None, True
    cov = np.linalg.inv(info)
    return 0.5 * (cov + cov.T), False


def _reknot(model, data, theta, options):
    """One-step re-knotting on the fitted log accelerated times."""
    from . import splines

    if model.family != "fpaft" or model.has_tde:
        return model, theta
    beta, gamma, _ = model.split(theta)
    events = data.event == 1
    u = np.log(data.time[events]) - data.design_matrix(
        model.covariate_names)[events] @ beta
    try:
        new_knots = splines.make_knots(u, model.knots.df)
    except FlexAftError:
        return model, theta
    new_model = model_zoo.FpaftModel(model.covariate_names, new_knots)
    target = splines.evaluate(u, gamma, model.knots)
    design = np.column_stack([np.ones_like(u),
                              splines.basis(u, new_knots)])
    coef, *_ = np.linalg.lstsq(design, target, rcond=None)
    new_theta = np.concatenate([beta, coef])
    if not np.isfinite(new_model.loglik(data, new_theta)):
        return model, theta
    return new_model, new_theta


def fit(spec, data, options=None):
    """Fit one model by maximum likelihood; never raises on
    non-convergence (check ``converged``)."""
    options = options or FitOptions()
    _check_identifiable(spec, data)
    model = model_zoo.build_model(spec, data)
    if options.init is not None:
        theta0 = np.asarray(options.init, dtype=np.float64)
        if theta0.shape != (model.n_params,):
            raise ParameterError(
                f"init has shape {theta0.shape}, expected "
                f"({model.n_params},)"
            )
    else:
        theta0 = _initialize_model(model, data)
    theta, ll, grad, converged, iterations, trace = _newton(
        model, data, theta0, options)
    if options.reknot and converged:
        model2, theta2 = _reknot(model, data, theta, options)
        if model2 is not model:
            theta, ll, grad, converged, it2, trace2 = _newton(
                model2, data, theta2, options)
            model = model2
            iterations += it2
            trace = trace + trace2
    if converged:
        cov, singular = _covariance_at(model, data, theta,
                                       options.hessian_step)
    else:
        cov, singular = None, False
    return FittedModel(
        spec=spec, model=model, theta=theta, loglik=ll, score=grad,
        converged=converged, iterations=iterations, trace=trace,
        covariance=cov, singular_information=singular,
        n_events=data.n_events, n_rows=data.n,
        bic_sample_size=options.bic_sample_size,
        data_checksum=data.checksum(),
    )


def covariance(fitted):
    """Stored covariance (inverse observed information), or None when the
    fit did not converge or the information was singular."""
    return fitted.covariance


@dataclass(frozen=True)
class SurvivalPrediction:
    """Survival curve with delta-method intervals on log(-log S).

    Points where the transform or its standard error is undefined
    (survival numerically 0 or 1, singular perturbation) are masked via
    ``valid`` and carry nan values.
    """

    times: np.ndarray
    survival: np.ndarray
    se_loglog: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    valid: np.ndarray


def _loglog(survival):
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.log(-np.log(survival))


def predict_survival(fitted, x, times):
    """Predicted S(t | x) with 95% intervals on the log(-log) scale."""
    times = np.atleast_1d(np.asarray(times, dtype=np.float64))
    if np.any(times <= 0):
        raise ParameterError("prediction times must be positive")
    if not fitted.converged:
        raise FlexAftError("prediction requires a converged fit")
    if fitted.covariance is None:
        raise FlexAftError(
            "prediction requires a covariance matrix (information was "
            "singular)"
        )
    x = np.asarray(x, dtype=np.float64)
    model, theta = fitted.model, fitted.theta
    surv = np.asarray(model.survival(times, x, theta), dtype=np.float64)
    g_hat = _loglog(surv)
    k = theta.shape[0]
    grads = np.empty((k, times.shape[0]))
    # points where S pins to 0 or 1 go NaN here and are masked below
    with np.errstate(invalid="ignore", divide="ignore"):
        for j in range(k):
            h = 1e-5 * (1.0 + abs(theta[j]))
            up = theta.copy()
            up[j] += h
            down = theta.copy()
            down[j] -= h
            grads[j] = (_loglog(model.survival(times, x, up))
                        - _loglog(model.survival(times, x, down))) / (2.0 * h)
        var = np.einsum("it,ij,jt->t", grads, fitted.covariance, grads)
        se = np.sqrt(var)
    valid = (np.isfinite(g_hat) & np.isfinite(se)
             & (surv > 0.0) & (surv < 1.0))
    se = np.where(valid, se, np.nan)
    g_masked = np.where(valid, g_hat, np.nan)
    lower = np.exp(-np.exp(g_masked + 1.96 * se))
    upper = np.exp(-np.exp(g_masked - 1.96 * se))
    return SurvivalPrediction(
        times=times, survival=np.where(valid, surv, np.nan),
        se_loglog=se, lower=lower, upper=upper, valid=valid,
    )


def compare(fits):
    """AIC/BIC ranking of fits of the same data (ties get average rank)."""
    fits = list(fits)
    if not fits:
        raise ParameterError("compare needs at least one fitted model")
    checksums = {f.data_checksum for f in fits}
    if len(checksums) != 1:
        raise FlexAftError(
            "cannot compare fits of different datasets (checksums differ)"
        )
    aic_rank = rankdata([f.aic for f in fits], method="average")
    bic_rank = rankdata([f.bic for f in fits], method="average")
    rows = []
    for f, ra, rb in zip(fits, aic_rank, bic_rank):
        rows.append({
            "model": f.spec.label(),
            "loglik": f.loglik,
            "k": f.k,
            "aic": f.aic,
            "bic": f.bic,
            "aic_rank": float(ra),
            "bic_rank": float(rb),
            "converged": f.converged,
        })
    return rows
