"""Pure numpy compute kernels.

These are the hot inner loops of the package: evaluation of the restricted
cubic spline design matrix and the fused log-likelihood/score of the
time-fixed spline AFT model. A compiled twin lives in _kernels.pyx; the
two implement the same contract and flexaft._backend picks one at import
time. Keep the semantics of both in lockstep (the parity tests compare
them on random inputs).
"""

import math

import numpy as np

BACKEND_NAME = "python"


def spline_design(u, knots, order=0):
    """Design matrix of a restricted cubic spline basis, without intercept.

    Parameters
    ----------
    u : ndarray, shape (n,)
        Evaluation points.
    knots : ndarray, shape (K,)
        Strictly increasing knot vector, boundary knots included (K >= 2).
    order : int
        0 for basis values, 1 for first derivatives, 2 for second
        derivatives with respect to ``u``.

    Returns
    -------
    ndarray, shape (n, K - 1)
        Column 0 is the linear term ``u`` (1 / 0 for orders 1 / 2);
        column j (j >= 1) is the truncated cubic term anchored at interior
        knot ``knots[j]``, which keeps the function linear beyond the
        boundary knots.
    """
    u = np.ascontiguousarray(u, dtype=np.float64)
    knots = np.asarray(knots, dtype=np.float64)
    n_basis = knots.shape[0] - 1
    out = np.empty((u.shape[0], n_basis))
    if order == 0:
        out[:, 0] = u
    elif order == 1:
        out[:, 0] = 1.0
    elif order == 2:
        out[:, 0] = 0.0
    else:
        raise ValueError(f"order must be 0, 1 or 2, got {order!r}")
    kmin = knots[0]
    kmax = knots[-1]
    span = kmax - kmin
    lo = np.maximum(u - kmin, 0.0)
    hi = np.maximum(u - kmax, 0.0)
    for j in range(1, n_basis):
        lam = (kmax - knots[j]) / span
        mid = np.maximum(u - knots[j], 0.0)
        if order == 0:
            out[:, j] = mid**3 - lam * lo**3 - (1.0 - lam) * hi**3
        elif order == 1:
            out[:, j] = 3.0 * (mid**2 - lam * lo**2 - (1.0 - lam) * hi**2)
        else:
            out[:, j] = 6.0 * (mid - lam * lo - (1.0 - lam) * hi)
    return out


def fpaft_loglik_score(log_y, log_entry, event, x, beta, gamma, knots):
    """Log-likelihood and score of the time-fixed spline AFT model.

    Parameters
    ----------
    log_y : ndarray, shape (n,)
        Log exit times.
    log_entry : ndarray, shape (n,)
        Log entry times, ``-inf`` for rows entering at time zero.
    event : ndarray of uint8, shape (n,)
        1 for an observed event, 0 for censoring.
    x : ndarray, shape (n, p)
        Covariate matrix (p may be 0).
    beta : ndarray, shape (p,)
        Covariate coefficients of the log acceleration factor.
    gamma : ndarray, shape (K,)
        Spline coefficients, intercept first (K - 1 basis columns).
    knots : ndarray, shape (K,)
        Knot vector on the log accelerated-time axis.

    Returns
    -------
    (float, ndarray)
        The log-likelihood and the score stacked as
        ``[d/dbeta (p), d/dgamma (K)]``. When the log-likelihood is
        ``-inf`` (undefined region: non-monotone spline at an event row,
        overflow) the gradient content is unspecified and must not be
        used.
    """
    log_y = np.ascontiguousarray(log_y, dtype=np.float64)
    event = np.asarray(event).astype(bool)
    x = np.ascontiguousarray(x, dtype=np.float64)
    beta = np.asarray(beta, dtype=np.float64)
    gamma = np.asarray(gamma, dtype=np.float64)
    n = log_y.shape[0]
    p = beta.shape[0]
    bad = (-np.inf, np.empty(p + gamma.shape[0]))

    xb = x @ beta if p else np.zeros(n)
    u = log_y - xb
    basis = spline_design(u, knots, 0)
    dbasis = spline_design(u, knots, 1)
    d2basis = spline_design(u, knots, 2)
    coef = gamma[1:]
    s = gamma[0] + basis @ coef
    sp = dbasis @ coef
    spp = d2basis @ coef
    if np.any(sp[event] <= 0.0):
        return bad
    with np.errstate(over="ignore"):
        expo = np.exp(s)

    entry = np.isfinite(log_entry)
    u0 = log_entry[entry] - (xb[entry] if p else 0.0)
    basis0 = spline_design(u0, knots, 0)
    dbasis0 = spline_design(u0, knots, 1)
    s0 = gamma[0] + basis0 @ coef
    sp0 = dbasis0 @ coef
    with np.errstate(over="ignore"):
        expo0 = np.exp(s0)

    ev = event.astype(np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_sp = np.where(event, np.log(np.where(event, sp, 1.0)), 0.0)
    # exactly rounded total: the optimizer separates iterates whose
    # true log-likelihoods differ by a few ulps
    try:
        ll = math.fsum(
            np.concatenate([ev * (s - log_y + log_sp) - expo, expo0])
        )
    except (OverflowError, ValueError):
        return bad
    if not np.isfinite(ll):
        return bad

    inv_sp = np.where(event, 1.0, 0.0)
    inv_sp = np.divide(ev, sp, out=inv_sp, where=event)
    g_gamma = np.empty(gamma.shape[0])
    g_gamma[0] = np.sum(ev) - np.sum(expo) + np.sum(expo0)
    g_gamma[1:] = (
        basis.T @ (ev - expo) + dbasis.T @ inv_sp + basis0.T @ expo0
    )
    if p:
        # event rows contribute s' + s''/s', all rows contribute -e^s * s',
        # entry rows add e^{s0} * s0'; the covariate enters with sign -x.
        row = np.where(event, sp + spp / np.where(event, sp, 1.0), 0.0)
        row = row - expo * sp
        np.add.at(row, np.flatnonzero(entry), expo0 * sp0)
        g_beta = -(x.T @ row)
    else:
        g_beta = np.empty(0)
    grad = np.concatenate([g_beta, g_gamma])
    if not np.all(np.isfinite(grad)):
        return bad
    return ll, grad
