"""Parametric AFT model families and the exponential PH comparator.

All AFT families share one convention: the acceleration factor is
phi(x; beta) = exp(-x . beta) and survival satisfies
S(t | x) = S0(t * phi(x)), so positive coefficients lengthen survival in
every family and estimates are directly comparable across families.

Parameter vectors are flat float arrays laid out as
[beta (one per covariate), baseline block, tde blocks]; each model class
reports its layout through ``parameter_names``.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import digamma, gammainc, gammaincc, gammaln
from scipy.stats import norm

from . import splines
from ._backend import fpaft_loglik_score
from .errors import KnotError, ParameterError, UndefinedScoreError

__all__ = [
    "ModelSpec",
    "acceleration_factor",
    "FpaftModel",
    "WeibullAftModel",
    "GenGammaAftModel",
    "ExponentialPhModel",
    "build_model",
    "FAMILIES",
]

FAMILIES = ("fpaft", "weibull", "gengamma", "exponential")


def _fsum(values):
    """Exactly rounded sum, folding overflow and inf-inf into -inf."""
    try:
        total = math.fsum(values)
    except (OverflowError, ValueError):
        return -np.inf
    return total if np.isfinite(total) else -np.inf


@dataclass(frozen=True)
class ModelSpec:
    """Declarative description of one model to fit.

    fields: family name, covariate names, spline df (fpaft only) and
    tde, a tuple of (covariate name, df) pairs requesting a
    time-dependent acceleration factor per covariate (fpaft only).
    """

    family: str
    covariates: tuple = ()
    df: int = 3
    tde: tuple = ()

    def __post_init__(self):
        family = str(self.family).lower()
        covariates = tuple(str(c) for c in self.covariates)
        tde = tuple((str(n), int(d)) for n, d in self.tde)
        object.__setattr__(self, "family", family)
        object.__setattr__(self, "covariates", covariates)
        object.__setattr__(self, "tde", tde)
        if family not in FAMILIES:
            raise ParameterError(
                f"unknown family {family!r}; choose from {FAMILIES}"
            )
        if len(set(covariates)) != len(covariates):
            raise ParameterError(f"duplicate covariates in {covariates}")
        if self.df < 1:
            raise ParameterError(f"df must be >= 1, got {self.df}")
        if tde:
            if family != "fpaft":
                raise ParameterError(
                    "time-dependent acceleration factors require the "
                    "fpaft family"
                )
            names = [n for n, _ in tde]
            if len(set(names)) != len(names):
                raise ParameterError(f"duplicate tde covariates in {names}")
            unknown = [n for n in names if n not in covariates]
            if unknown:
                raise ParameterError(
                    f"tde covariates {unknown} not among model covariates "
                    f"{covariates}"
                )
            if any(d < 1 for _, d in tde):
                raise ParameterError("tde df must be >= 1")

    def label(self):
        name = self.family
        if self.family == "fpaft":
            name = f"fpaft:{self.df}"
        covs = "+".join(self.covariates) if self.covariates else "-"
        suffix = ""
        if self.tde:
            suffix = ";tde " + ",".join(f"{n}:{d}" for n, d in self.tde)
        return f"{name}({covs}{suffix})"


def acceleration_factor(x, beta):
    """phi(x; beta) = exp(-x . beta); strictly positive."""
    x = np.asarray(x, dtype=np.float64)
    beta = np.asarray(beta, dtype=np.float64)
    return np.exp(-(x @ beta))


def _extract(data, names):
    """Pull the arrays a likelihood needs out of a dataset."""
    x = data.design_matrix(names)
    log_y = np.log(data.time)
    log_entry = np.full(data.n, -np.inf)
    has_entry = data.entry > 0
    log_entry[has_entry] = np.log(data.entry[has_entry])
    return log_y, log_entry, data.event, x


def _check_theta(theta, n_params, what):
    theta = np.asarray(theta, dtype=np.float64)
    if theta.shape != (n_params,):
        raise ParameterError(
            f"{what} expects {n_params} parameters, got shape {theta.shape}"
        )
    return theta


class FpaftModel:
    """Flexible parametric AFT: log H(t|x) = s(log(t * phi) | gamma, knots).

    The baseline log cumulative hazard is a restricted cubic spline in
    log accelerated time. Optional time-dependent acceleration factors
    add, per chosen covariate, a spline in log time (no intercept, that
    shift belongs to beta) inside the log acceleration factor; see the
    tde module for those likelihood pieces.
    """

    family = "fpaft"

    def __init__(self, covariate_names, knots, tde_knots=()):
        self.covariate_names = tuple(covariate_names)
        if not isinstance(knots, splines.KnotVector):
            raise ParameterError("knots must be a KnotVector")
        self.knots = knots
        tde_knots = tuple(tde_knots)
        for name, kv in tde_knots:
            if name not in self.covariate_names:
                raise ParameterError(
                    f"tde covariate {name!r} not in {self.covariate_names}"
                )
            if not isinstance(kv, splines.KnotVector):
                raise ParameterError("tde knots must be KnotVector values")
        self.tde_knots = tde_knots

    @property
    def p(self):
        return len(self.covariate_names)

    @property
    def df(self):
        return self.knots.df

    @property
    def has_tde(self):
        return bool(self.tde_knots)

    @property
    def n_params(self):
        return (self.p + self.df + 1
                + sum(kv.df for _, kv in self.tde_knots))

    def parameter_names(self):
        names = [f"beta.{c}" for c in self.covariate_names]
        names += [f"gamma.{j}" for j in range(self.df + 1)]
        for cov, kv in self.tde_knots:
            names += [f"tde.{cov}.{j}" for j in range(1, kv.df + 1)]
        return tuple(names)

    def split(self, theta):
        """(beta, gamma, {tde covariate: coefficients}) views of theta."""
        theta = _check_theta(theta, self.n_params, self.label())
        beta = theta[: self.p]
        gamma = theta[self.p: self.p + self.df + 1]
        tde = {}
        at = self.p + self.df + 1
        for cov, kv in self.tde_knots:
            tde[cov] = theta[at: at + kv.df]
            at += kv.df
        return beta, gamma, tde

    def label(self):
        return ModelSpec("fpaft", self.covariate_names, self.knots.df,
                         tuple((n, kv.df) for n, kv in self.tde_knots)
                         ).label()

    # -- model functions ------------------------------------------------

    def log_cum_hazard(self, t, x, theta):
        beta, gamma, tde = self.split(theta)
        t = np.asarray(t, dtype=np.float64)
        if self.has_tde:
            from . import tde as tde_mod
            phi = tde_mod.phi_t(self, x, t, theta)
            u = np.log(t) + np.log(phi)
        else:
            u = np.log(t) - float(np.asarray(x) @ beta)
        return splines.evaluate(u, gamma, self.knots)

    def hazard(self, t, x, theta):
        if self.has_tde:
            from . import tde as tde_mod
            return tde_mod.tde_hazard(self, t, x, theta)
        beta, gamma, _ = self.split(theta)
        t = np.asarray(t, dtype=np.float64)
        u = np.log(t) - float(np.asarray(x) @ beta)
        s = splines.evaluate(u, gamma, self.knots)
        sp = splines.evaluate_derivative(u, gamma, self.knots)
        return np.exp(s) * sp / t

    def survival(self, t, x, theta):
        return np.exp(-np.exp(self.log_cum_hazard(t, x, theta)))

    # -- likelihood -----------------------------------------------------

    def loglik_and_score(self, data, theta):
        theta = _check_theta(theta, self.n_params, self.label())
        if self.has_tde:
            from . import tde as tde_mod
            return tde_mod.tde_loglik_and_score(self, data, theta)
        beta, gamma, _ = self.split(theta)
        log_y, log_entry, event, x = _extract(data, self.covariate_names)
        return fpaft_loglik_score(log_y, log_entry, event, x, beta, gamma,
                                  self.knots.as_array())

    def loglik(self, data, theta):
        if self.has_tde:
            from . import tde as tde_mod
            return tde_mod.tde_loglik(self, data, theta)
        return self.loglik_and_score(data, theta)[0]

    def score(self, data, theta):
        ll, grad = self.loglik_and_score(data, theta)
        if not np.isfinite(ll):
            raise UndefinedScoreError(
                "score undefined: log-likelihood is -inf at this point"
            )
        return grad

    def loglik_contributions(self, data, theta):
        """Per-subject log-likelihood terms (sums to loglik).

        Independent numpy re-derivation, deliberately not sharing code
        with the fused kernel.
        """
        if self.has_tde:
            from . import tde as tde_mod
            return tde_mod.tde_loglik_contributions(self, data, theta)
        beta, gamma, _ = self.split(theta)
        log_y, log_entry, event, x = _extract(data, self.covariate_names)
        u = log_y - x @ beta
        s = splines.evaluate(u, gamma, self.knots)
        sp = splines.evaluate_derivative(u, gamma, self.knots)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            out = np.where(event == 1,
                           s - log_y + np.log(np.where(sp > 0, sp, np.nan)),
                           0.0)
            out = out - np.exp(s)
            entry = np.isfinite(log_entry)
            u0 = log_entry[entry] - x[entry] @ beta
            s0 = splines.evaluate(u0, gamma, self.knots)
            out[entry] += np.exp(s0)
        return out


class WeibullAftModel:
    """Weibull AFT: log H(t|x) = log(lambda) + gamma * log(t * phi).

    Parameters are [beta..., log_lambda, log_gamma]; the log link keeps
    lambda and gamma positive. Identical to FpaftModel with df = 1 under
    gamma.0 = log(lambda), gamma.1 = gamma.
    """

    family = "weibull"

    def __init__(self, covariate_names):
        self.covariate_names = tuple(covariate_names)

    @property
    def p(self):
        return len(self.covariate_names)

    @property
    def n_params(self):
        return self.p + 2

    def parameter_names(self):
        return tuple([f"beta.{c}" for c in self.covariate_names]
                     + ["log_lambda", "log_gamma"])

    def split(self, theta):
        theta = _check_theta(theta, self.n_params, self.label())
        return theta[: self.p], theta[self.p], theta[self.p + 1]

    def label(self):
        return ModelSpec("weibull", self.covariate_names).label()

    def log_cum_hazard(self, t, x, theta):
        beta, log_lam, log_gam = self.split(theta)
        t = np.asarray(t, dtype=np.float64)
        u = np.log(t) - float(np.asarray(x) @ beta)
        return log_lam + np.exp(log_gam) * u

    def hazard(self, t, x, theta):
        beta, log_lam, log_gam = self.split(theta)
        t = np.asarray(t, dtype=np.float64)
        gam = np.exp(log_gam)
        u = np.log(t) - float(np.asarray(x) @ beta)
        return np.exp(log_lam + gam * u) * gam / t

    def survival(self, t, x, theta):
        return np.exp(-np.exp(self.log_cum_hazard(t, x, theta)))

    def _pieces(self, data, theta):
        beta, log_lam, log_gam = self.split(theta)
        log_y, log_entry, event, x = _extract(data, self.covariate_names)
        gam = np.exp(log_gam)
        lam = np.exp(log_lam)
        z = gam * (log_y - x @ beta)
        entry = np.isfinite(log_entry)
        z0 = gam * (log_entry[entry] - x[entry] @ beta)
        return beta, log_lam, log_gam, lam, gam, log_y, event, x, z, \
            entry, z0

    def loglik_contributions(self, data, theta):
        (_, log_lam, log_gam, lam, _, log_y, event, _, z,
         entry, z0) = self._pieces(data, theta)
        with np.errstate(over="ignore"):
            out = event * (log_lam + log_gam + z - log_y) - lam * np.exp(z)
            out[entry] += lam * np.exp(z0)
        return out

    def loglik(self, data, theta):
        return _fsum(self.loglik_contributions(data, theta))

    def loglik_and_score(self, data, theta):
        (_, _, _, lam, gam, _, event, x, z, entry, z0) = \
            self._pieces(data, theta)
        with np.errstate(over="ignore"):
            hy = lam * np.exp(z)
            h0 = lam * np.exp(z0)
            ll = self.loglik(data, theta)
            d = event.astype(np.float64)
            row = d - hy
            np.add.at(row, np.flatnonzero(entry), h0)
            g_beta = -gam * (x.T @ row)
            g_a = float(np.sum(row))
            g_b = float(np.sum(d * (1.0 + z) - hy * z) + np.sum(h0 * z0))
        grad = np.concatenate([g_beta, [g_a, g_b]])
        if not (np.isfinite(ll) and np.all(np.isfinite(grad))):
            return -np.inf, grad
        return ll, grad

    def score(self, data, theta):
        ll, grad = self.loglik_and_score(data, theta)
        if not np.isfinite(ll):
            raise UndefinedScoreError(
                "score undefined: log-likelihood is -inf at this point"
            )
        return grad


def _reg_inc_gamma_da(a, x):
    """d/da of the regularized lower incomplete gamma P(a, x).

    scipy exposes no shape derivative; Richardson-extrapolated central
    differences with the step scaled to the transition width sqrt(a)
    keep the absolute error near 1e-10 across the relevant range
    (validated against high-precision references in the tests).
    """
    h = 0.006 * (1.0 + np.sqrt(a))
    h = min(h, 0.45 * a)
    d1 = (gammainc(a + h, x) - gammainc(a - h, x)) / (2.0 * h)
    d2 = (gammainc(a + h / 2, x) - gammainc(a - h / 2, x)) / h
    return (4.0 * d2 - d1) / 3.0


class GenGammaAftModel:
    """Generalized gamma AFT in the (mu, sigma, kappa) parameterization.

    With w = (log(t * phi) - mu) / sigma and a = kappa^-2:
    S(t|x) = Q(a, a e^{kappa w}) for kappa > 0, P(a, a e^{kappa w}) for
    kappa < 0, and the lognormal survival at kappa = 0. kappa = 1 is the
    Weibull family. Parameters are [beta..., mu, log_sigma, kappa].

    Within |kappa| < 1e-7 the lognormal limit is used and the kappa
    component of the score is approximated by 0 (the branch is far
    narrower than any optimizer step).
    """

    family = "gengamma"
    kappa_eps = 1e-7

    def __init__(self, covariate_names):
        self.covariate_names = tuple(covariate_names)

    @property
    def p(self):
        return len(self.covariate_names)

    @property
    def n_params(self):
        return self.p + 3

    def parameter_names(self):
        return tuple([f"beta.{c}" for c in self.covariate_names]
                     + ["mu", "log_sigma", "kappa"])

    def split(self, theta):
        theta = _check_theta(theta, self.n_params, self.label())
        return theta[: self.p], theta[self.p], theta[self.p + 1], \
            theta[self.p + 2]

    def label(self):
        return ModelSpec("gengamma", self.covariate_names).label()

    def _w(self, t, x, theta):
        beta, mu, log_sigma, _ = self.split(theta)
        t = np.asarray(t, dtype=np.float64)
        u = np.log(t) - float(np.asarray(x) @ beta)
        return (u - mu) / np.exp(log_sigma)

    def _log_survival_w(self, w, kappa):
        if abs(kappa) < self.kappa_eps:
            return norm.logsf(w)
        a = kappa ** -2.0
        with np.errstate(over="ignore", divide="ignore"):
            xarg = a * np.exp(kappa * w)
            if kappa > 0:
                s = gammaincc(a, xarg)
            else:
                s = gammainc(a, xarg)
            return np.log(s)

    def _log_density_w(self, w, kappa, log_sigma, log_t):
        """log f(t) for t with standardized residual w."""
        if abs(kappa) < self.kappa_eps:
            return norm.logpdf(w) - log_sigma - log_t
        a = kappa ** -2.0
        with np.errstate(over="ignore", invalid="ignore"):
            e = np.exp(kappa * w)
            return (np.log(abs(kappa)) + a * np.log(a)
                    + a * (kappa * w - e)
                    - gammaln(a) - log_sigma - log_t)

    def survival(self, t, x, theta):
        kappa = self.split(theta)[3]
        w = self._w(t, x, theta)
        return np.exp(self._log_survival_w(w, kappa))

    def log_cum_hazard(self, t, x, theta):
        kappa = self.split(theta)[3]
        w = self._w(t, x, theta)
        log_s = self._log_survival_w(w, kappa)
        with np.errstate(divide="ignore"):
            return np.log(-log_s)

    def hazard(self, t, x, theta):
        _, _, log_sigma, kappa = self.split(theta)
        t = np.asarray(t, dtype=np.float64)
        w = self._w(t, x, theta)
        log_f = self._log_density_w(w, kappa, log_sigma, np.log(t))
        log_s = self._log_survival_w(w, kappa)
        return np.exp(log_f - log_s)

    def loglik_contributions(self, data, theta):
        beta, mu, log_sigma, kappa = self.split(theta)
        log_y, log_entry, event, x = _extract(data, self.covariate_names)
        with np.errstate(all="ignore"):
            sigma = np.exp(log_sigma)
            w = (log_y - x @ beta - mu) / sigma
            log_f = self._log_density_w(w, kappa, log_sigma, log_y)
            log_s = self._log_survival_w(w, kappa)
            out = np.where(event == 1, log_f, log_s)
            entry = np.isfinite(log_entry)
            if entry.any():
                w0 = (log_entry[entry] - x[entry] @ beta - mu) / sigma
                out[entry] -= self._log_survival_w(w0, kappa)
        return out

    def loglik(self, data, theta):
        return _fsum(self.loglik_contributions(data, theta))

    def _dlog_s_parts(self, w, kappa):
        """(dlogS/dw, dlogS/dkappa) at standardized residuals w."""
        a = kappa ** -2.0
        da = -2.0 * a / kappa
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            kw = kappa * w
            e = np.exp(kw)
            xarg = a * e
            if kappa > 0:
                s = gammaincc(a, xarg)
                sign = 1.0
            else:
                s = gammainc(a, xarg)
                sign = -1.0
            # g = gamma-density(xarg; a) * xarg, assembled in log space so
            # xarg underflow cannot produce 0 * inf
            g = np.exp(a * (np.log(a) + kw) - xarg - gammaln(a))
            ds_dw = -abs(kappa) * g
            ds_da = -sign * _reg_inc_gamma_da(a, xarg)
            ds_dx_dxdk = -sign * (g / a) * (da + a * w)
            dlogs_dw = ds_dw / s
            dlogs_dk = (ds_da * da + ds_dx_dxdk) / s
        return dlogs_dw, dlogs_dk

    def loglik_and_score(self, data, theta):
        beta, mu, log_sigma, kappa = self.split(theta)
        ll = self.loglik(data, theta)
        if not np.isfinite(ll):
            return -np.inf, np.empty(self.n_params)
        log_y, log_entry, event, x = _extract(data, self.covariate_names)
        with np.errstate(over="ignore", invalid="ignore"):
            sigma = np.exp(log_sigma)
            w = (log_y - x @ beta - mu) / sigma
            d = event.astype(np.float64)
            entry = np.isfinite(log_entry)
            w0 = (log_entry[entry] - x[entry] @ beta - mu) / sigma

        if abs(kappa) < self.kappa_eps:
            dlogf_dw = -w
            dlogf_dk = np.zeros_like(w)
            with np.errstate(over="ignore"):
                dlogs_dw = -np.exp(norm.logpdf(w) - norm.logsf(w))
                dlogs_dk = np.zeros_like(w)
                dlogs0_dw = -np.exp(norm.logpdf(w0) - norm.logsf(w0))
            dlogs0_dk = np.zeros_like(w0)
        else:
            a = kappa ** -2.0
            da = -2.0 * a / kappa
            with np.errstate(over="ignore"):
                e = np.exp(kappa * w)
            dlogf_dw = a * kappa * (1.0 - e)
            dlogf_dk = (1.0 / kappa
                        + da * (np.log(a) + 1.0 + kappa * w - e
                                - digamma(a))
                        + a * w * (1.0 - e))
            dlogs_dw, dlogs_dk = self._dlog_s_parts(w, kappa)
            dlogs0_dw, dlogs0_dk = self._dlog_s_parts(w0, kappa)

        ev = event.astype(bool)
        r_w = np.where(ev, dlogf_dw, dlogs_dw)
        r_k = np.where(ev, dlogf_dk, dlogs_dk)
        g_beta = -(x.T @ (r_w / sigma)) + (x[entry].T @ (dlogs0_dw / sigma))
        g_mu = float(-np.sum(r_w) / sigma + np.sum(dlogs0_dw) / sigma)
        g_ls = float(np.sum(-d - r_w * w) + np.sum(dlogs0_dw * w0))
        g_k = float(np.sum(r_k) - np.sum(dlogs0_dk))
        grad = np.concatenate([g_beta, [g_mu, g_ls, g_k]])
        if not np.all(np.isfinite(grad)):
            return -np.inf, grad
        return ll, grad

    def score(self, data, theta):
        ll, grad = self.loglik_and_score(data, theta)
        if not np.isfinite(ll):
            raise UndefinedScoreError(
                "score undefined: log-likelihood is -inf at this point"
            )
        return grad


class ExponentialPhModel:
    """Constant-hazard proportional hazards: h(t|x) = exp(theta0 + x.theta).

    The likelihood sum_i d_i (theta0 + x theta) - (y_i - t0_i)
    exp(theta0 + x theta) is the exposure form of a Poisson regression
    with log offset, so coefficient estimates are log hazard ratios.
    Parameters are [beta..., log_rate].
    """

    family = "exponential"

    def __init__(self, covariate_names):
        self.covariate_names = tuple(covariate_names)

    @property
    def p(self):
        return len(self.covariate_names)

    @property
    def n_params(self):
        return self.p + 1

    def parameter_names(self):
        return tuple([f"beta.{c}" for c in self.covariate_names]
                     + ["log_rate"])

    def split(self, theta):
        theta = _check_theta(theta, self.n_params, self.label())
        return theta[: self.p], theta[self.p]

    def label(self):
        return ModelSpec("exponential", self.covariate_names).label()

    def log_cum_hazard(self, t, x, theta):
        beta, log_rate = self.split(theta)
        t = np.asarray(t, dtype=np.float64)
        return log_rate + float(np.asarray(x) @ beta) + np.log(t)

    def hazard(self, t, x, theta):
        beta, log_rate = self.split(theta)
        t = np.asarray(t, dtype=np.float64)
        return np.exp(log_rate + float(np.asarray(x) @ beta)) \
            * np.ones_like(t)

    def survival(self, t, x, theta):
        return np.exp(-np.exp(self.log_cum_hazard(t, x, theta)))

    def loglik_contributions(self, data, theta):
        beta, log_rate = self.split(theta)
        x = data.design_matrix(self.covariate_names)
        lin = log_rate + x @ beta
        with np.errstate(over="ignore"):
            return data.event * lin - (data.time - data.entry) * np.exp(lin)

    def loglik(self, data, theta):
        return _fsum(self.loglik_contributions(data, theta))

    def loglik_and_score(self, data, theta):
        beta, log_rate = self.split(theta)
        x = data.design_matrix(self.covariate_names)
        lin = log_rate + x @ beta
        with np.errstate(over="ignore"):
            expect = (data.time - data.entry) * np.exp(lin)
        resid = data.event - expect
        grad = np.concatenate([x.T @ resid, [float(np.sum(resid))]])
        ll = _fsum(data.event * lin - expect)
        if not (np.isfinite(ll) and np.all(np.isfinite(grad))):
            return -np.inf, grad
        return ll, grad

    def score(self, data, theta):
        ll, grad = self.loglik_and_score(data, theta)
        if not np.isfinite(ll):
            raise UndefinedScoreError(
                "score undefined: log-likelihood is -inf at this point"
            )
        return grad


def build_model(spec, data=None, knots=None, tde_knots=None):
    """Construct the model object for a spec, placing knots if needed.

    FPAFT knots come from the quantiles of log event times (uncensored
    rows, acceleration factor treated as 1) and stay frozen during
    optimization; pass explicit ``knots`` / ``tde_knots`` to reuse a
    previous placement (e.g. when reloading a model file).
    """
    if spec.family == "weibull":
        return WeibullAftModel(spec.covariates)
    if spec.family == "gengamma":
        return GenGammaAftModel(spec.covariates)
    if spec.family == "exponential":
        return ExponentialPhModel(spec.covariates)
    if knots is None:
        if data is None:
            raise ParameterError("need data or explicit knots for fpaft")
        log_events = np.log(data.time[data.event == 1])
        if log_events.size == 0:
            raise KnotError("cannot place knots: no events in data")
        knots = splines.make_knots(log_events, spec.df)
    if tde_knots is None:
        tde_knots = []
        for name, df_p in spec.tde:
            log_events = np.log(data.time[data.event == 1])
            tde_knots.append((name, splines.make_knots(log_events, df_p)))
    return FpaftModel(spec.covariates, knots, tuple(tde_knots))


def spec_of(model):
    """Recover the ModelSpec describing a model instance."""
    if isinstance(model, FpaftModel):
        return ModelSpec("fpaft", model.covariate_names, model.knots.df,
                         tuple((n, kv.df) for n, kv in model.tde_knots))
    return ModelSpec(model.family, model.covariate_names)
