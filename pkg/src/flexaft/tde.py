"""Time-dependent acceleration factors for the spline AFT family.

A covariate p with a time-dependent effect contributes
x_p * s_p(log t | gamma_p, k_p) to the minus-log acceleration factor, so

    phi(x, t) = exp(-x.beta - sum_p x_p s_p(log t))

The tde splines carry no intercept: a constant shift is absorbed by the
covariate's beta. The instantaneous acceleration factor
eta = phi + t dphi/dt integrates back to t * phi(x, t), which is the
quantity the likelihood needs inside the baseline spline.

The hazard uses the chain-rule derivative of the cumulative hazard,
i.e. the baseline spline slope is evaluated at log(t * phi(x, t)); the
finite-difference consistency tests pin this form down.
"""

import math

import numpy as np

from . import splines
from .errors import UndefinedScoreError
from .models import _extract

__all__ = [
    "phi_t",
    "dphi_dt",
    "eta",
    "tde_hazard",
    "tde_survival",
    "tde_loglik",
    "tde_loglik_and_score",
    "tde_loglik_contributions",
]


def _tde_terms(model, x, log_t, theta, order):
    """sum_p x_p s_p^{(order)}(log t) for a single covariate vector x."""
    _, _, tde_coeffs = model.split(theta)
    x = np.asarray(x, dtype=np.float64)
    total = np.zeros_like(np.asarray(log_t, dtype=np.float64))
    design = (splines.basis, splines.basis_derivative)[order]
    for name, kv in model.tde_knots:
        xp = float(x[model.covariate_names.index(name)])
        coeffs = tde_coeffs[name]
        total = total + xp * (design(log_t, kv) @ coeffs)
    return total


def phi_t(model, x, t, theta):
    """Acceleration factor phi(x, t); strictly positive."""
    beta = model.split(theta)[0]
    t = np.asarray(t, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    return np.exp(-(x @ beta) - _tde_terms(model, x, np.log(t), theta, 0))


def dphi_dt(model, x, t, theta):
    """d phi / d t = (phi / t) * (-sum_p x_p s_p'(log t))."""
    t = np.asarray(t, dtype=np.float64)
    phi = phi_t(model, x, t, theta)
    return phi / t * (-_tde_terms(model, x, np.log(t), theta, 1))


def eta(model, x, t, theta):
    """Instantaneous acceleration factor phi + t dphi/dt.

    Integrates to t * phi(x, t) over [0, t]; may go negative for extreme
    tde coefficients (only the hazard, not eta, must stay positive).
    """
    t = np.asarray(t, dtype=np.float64)
    phi = phi_t(model, x, t, theta)
    return phi * (1.0 - _tde_terms(model, x, np.log(t), theta, 1))


def tde_hazard(model, t, x, theta):
    """Hazard exp(s(w)) s'(w) / t * [1 - sum_p x_p s_p'(log t)],
    w = log(t * phi(x, t))."""
    _, gamma, _ = model.split(theta)
    t = np.asarray(t, dtype=np.float64)
    w = np.log(t) + np.log(phi_t(model, x, t, theta))
    s = splines.evaluate(w, gamma, model.knots)
    sp = splines.evaluate_derivative(w, gamma, model.knots)
    bracket = 1.0 - _tde_terms(model, x, np.log(t), theta, 1)
    return np.exp(s) * sp / t * bracket


def tde_survival(model, t, x, theta):
    """exp(-exp(s(log(t * phi(x, t)))))."""
    _, gamma, _ = model.split(theta)
    t = np.asarray(t, dtype=np.float64)
    w = np.log(t) + np.log(phi_t(model, x, t, theta))
    return np.exp(-np.exp(splines.evaluate(w, gamma, model.knots)))


def _row_quantities(model, data, theta):
    beta, gamma, tde_coeffs = model.split(theta)
    log_y, log_entry, event, x = _extract(data, model.covariate_names)
    n = data.n
    adj = np.zeros(n)
    bracket = np.ones(n)
    entry = np.isfinite(log_entry)
    adj0 = np.zeros(int(entry.sum()))
    cols = {name: model.covariate_names.index(name)
            for name, _ in model.tde_knots}
    for name, kv in model.tde_knots:
        xp = x[:, cols[name]]
        c = tde_coeffs[name]
        adj += xp * (splines.basis(log_y, kv) @ c)
        bracket -= xp * (splines.basis_derivative(log_y, kv) @ c)
        adj0 += xp[entry] * (splines.basis(log_entry[entry], kv) @ c)
    w = log_y - x @ beta - adj
    w0 = log_entry[entry] - x[entry] @ beta - adj0
    return (beta, gamma, tde_coeffs, log_y, log_entry, event, x, entry,
            w, w0, bracket, cols)


def tde_loglik_contributions(model, data, theta):
    """Per-subject log-likelihood terms; undefined rows become nan."""
    (_, gamma, _, log_y, _, event, _, entry, w, w0, bracket,
     _) = _row_quantities(model, data, theta)
    s = splines.evaluate(w, gamma, model.knots)
    sp = splines.evaluate_derivative(w, gamma, model.knots)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        good = (sp > 0) & (bracket > 0)
        log_terms = np.log(np.where(good, sp, np.nan)) \
            + np.log(np.where(good, bracket, np.nan))
        out = np.where(event == 1, s - log_y + log_terms, 0.0)
        out = out - np.exp(s)
        s0 = splines.evaluate(w0, gamma, model.knots)
        out[entry] += np.exp(s0)
    return out


def tde_loglik(model, data, theta):
    (_, gamma, _, log_y, _, event, _, entry, w, w0, bracket,
     _) = _row_quantities(model, data, theta)
    ev = event == 1
    s = splines.evaluate(w, gamma, model.knots)
    sp = splines.evaluate_derivative(w, gamma, model.knots)
    if np.any(sp[ev] <= 0.0) or np.any(bracket[ev] <= 0.0):
        return -np.inf
    with np.errstate(over="ignore"):
        exit_terms = np.where(
            ev, s - log_y + np.log(np.where(ev, sp, 1.0))
            + np.log(np.where(ev, bracket, 1.0)), 0.0) - np.exp(s)
        entry_terms = np.exp(splines.evaluate(w0, gamma, model.knots))
    try:
        ll = math.fsum(np.concatenate([exit_terms, entry_terms]))
    except (OverflowError, ValueError):
        return -np.inf
    return ll if np.isfinite(ll) else -np.inf


def tde_loglik_and_score(model, data, theta):
    """(loglik, gradient) with the gradient laid out like theta.

    Gradient content is unspecified when the log-likelihood is -inf.
    """
    (beta, gamma, tde_coeffs, log_y, log_entry, event, x, entry, w, w0,
     bracket, cols) = _row_quantities(model, data, theta)
    bad = (-np.inf, np.empty(model.n_params))
    ev = event == 1
    d = event.astype(np.float64)
    vmat = splines.basis(w, model.knots)
    dmat = splines.basis_derivative(w, model.knots)
    d2mat = splines.basis_second_derivative(w, model.knots)
    coef = gamma[1:]
    s = gamma[0] + vmat @ coef
    sp = dmat @ coef
    spp = d2mat @ coef
    if np.any(sp[ev] <= 0.0) or np.any(bracket[ev] <= 0.0):
        return bad
    with np.errstate(over="ignore"):
        big_a = np.exp(s)
        v0 = splines.basis(w0, model.knots)
        d0 = splines.basis_derivative(w0, model.knots)
        s0 = gamma[0] + v0 @ coef
        sp0 = d0 @ coef
        big_a0 = np.exp(s0)
        exit_terms = np.where(
            ev, s - log_y + np.log(np.where(ev, sp, 1.0))
            + np.log(np.where(ev, bracket, 1.0)), 0.0) - big_a
    try:
        ll = math.fsum(np.concatenate([exit_terms, big_a0]))
    except (OverflowError, ValueError):
        return bad
    if not np.isfinite(ll):
        return bad

    inv_sp = np.divide(d, sp, out=np.zeros_like(d), where=ev)
    # multiplier of dw/dtheta per row; entry rows add big_a0 * sp0 times
    # dw0/dtheta, and dw0/dtheta equals dw/dtheta for beta and tde blocks
    # evaluated at the entry time
    g_row = np.where(ev, sp + spp * np.divide(1.0, sp, out=np.ones_like(sp),
                                              where=ev), 0.0)
    g_row = g_row * d - big_a * sp
    g0_row = big_a0 * sp0

    g_beta = -(x.T @ g_row) - (x[entry].T @ g0_row)

    g_gamma = np.empty(model.df + 1)
    g_gamma[0] = float(np.sum(d - big_a) + np.sum(big_a0))
    g_gamma[1:] = (vmat.T @ (d - big_a) + dmat.T @ inv_sp
                   + v0.T @ big_a0)

    blocks = [g_beta, g_gamma]
    inv_bracket = np.divide(d, bracket, out=np.zeros_like(d), where=ev)
    for name, kv in model.tde_knots:
        xp = x[:, cols[name]]
        vp = splines.basis(log_y, kv)
        dp = splines.basis_derivative(log_y, kv)
        vp0 = splines.basis(log_entry[entry], kv)
        block = -(vp.T @ (g_row * xp) + dp.T @ (inv_bracket * xp)
                  + vp0.T @ (g0_row * xp[entry]))
        blocks.append(block)
    grad = np.concatenate(blocks)
    if not np.all(np.isfinite(grad)):
        return bad
    return ll, grad
