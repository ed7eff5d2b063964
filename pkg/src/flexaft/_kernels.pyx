# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the kernels in _kernels_py.

Same contract, same semantics; the parity tests compare the two backends
on random inputs. Keep any behavioural change mirrored in _kernels_py.
"""

from libc.math cimport exp, log, isfinite, INFINITY

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND_NAME = "compiled"


cdef inline void _fill_basis(
    double u, double[::1] knots, double[::1] lam,
    double[::1] v, double[::1] dv, double[::1] d2v,
) noexcept nogil:
    """Fill basis values and first/second derivatives at one point."""
    cdef Py_ssize_t nb = knots.shape[0] - 1
    cdef double kmin = knots[0]
    cdef double kmax = knots[nb]
    cdef double lo, hi, mid, w
    cdef Py_ssize_t j
    v[0] = u
    dv[0] = 1.0
    d2v[0] = 0.0
    lo = u - kmin if u > kmin else 0.0
    hi = u - kmax if u > kmax else 0.0
    for j in range(1, nb):
        w = lam[j]
        mid = u - knots[j] if u > knots[j] else 0.0
        v[j] = mid * mid * mid - w * lo * lo * lo \
            - (1.0 - w) * hi * hi * hi
        dv[j] = 3.0 * (mid * mid - w * lo * lo - (1.0 - w) * hi * hi)
        d2v[j] = 6.0 * (mid - w * lo - (1.0 - w) * hi)


def spline_design(u, knots, int order=0):
    """See _kernels_py.spline_design."""
    if order not in (0, 1, 2):
        raise ValueError(f"order must be 0, 1 or 2, got {order!r}")
    cdef double[::1] uu = np.ascontiguousarray(u, dtype=np.float64)
    cdef double[::1] kk = np.ascontiguousarray(knots, dtype=np.float64)
    cdef Py_ssize_t n = uu.shape[0]
    cdef Py_ssize_t nb = kk.shape[0] - 1
    out_arr = np.empty((n, nb))
    cdef double[:, ::1] out = out_arr
    cdef double kmin = kk[0]
    cdef double kmax = kk[nb]
    cdef double span = kmax - kmin
    cdef double lam, lo, hi, mid, ui
    cdef Py_ssize_t i, j
    with nogil:
        for i in range(n):
            ui = uu[i]
            if order == 0:
                out[i, 0] = ui
            elif order == 1:
                out[i, 0] = 1.0
            else:
                out[i, 0] = 0.0
            lo = ui - kmin if ui > kmin else 0.0
            hi = ui - kmax if ui > kmax else 0.0
            for j in range(1, nb):
                lam = (kmax - kk[j]) / span
                mid = ui - kk[j] if ui > kk[j] else 0.0
                if order == 0:
                    out[i, j] = mid * mid * mid - lam * lo * lo * lo \
                        - (1.0 - lam) * hi * hi * hi
                elif order == 1:
                    out[i, j] = 3.0 * (mid * mid - lam * lo * lo
                                       - (1.0 - lam) * hi * hi)
                else:
                    out[i, j] = 6.0 * (mid - lam * lo - (1.0 - lam) * hi)
    return out_arr


def fpaft_loglik_score(log_y, log_entry, event, x, beta, gamma, knots):
    """See _kernels_py.fpaft_loglik_score."""
    cdef double[::1] ly = np.ascontiguousarray(log_y, dtype=np.float64)
    cdef double[::1] l0 = np.ascontiguousarray(log_entry, dtype=np.float64)
    cdef unsigned char[::1] ev = np.ascontiguousarray(
        np.asarray(event).astype(np.uint8))
    cdef double[:, ::1] xm = np.ascontiguousarray(x, dtype=np.float64)
    cdef double[::1] b = np.ascontiguousarray(beta, dtype=np.float64)
    cdef double[::1] g = np.ascontiguousarray(gamma, dtype=np.float64)
    cdef double[::1] kk = np.ascontiguousarray(knots, dtype=np.float64)

    cdef Py_ssize_t n = ly.shape[0]
    cdef Py_ssize_t p = b.shape[0]
    cdef Py_ssize_t ng = g.shape[0]
    cdef Py_ssize_t nb = kk.shape[0] - 1

    grad_arr = np.zeros(p + ng)
    cdef double[::1] grad = grad_arr
    cdef double[::1] lam = np.empty(nb)
    cdef double[::1] v = np.empty(nb)
    cdef double[::1] dv = np.empty(nb)
    cdef double[::1] d2v = np.empty(nb)

    cdef double kmin = kk[0]
    cdef double kmax = kk[nb]
    cdef double span = kmax - kmin
    cdef Py_ssize_t i, j, k
    # Kahan-compensated total: the optimizer separates iterates whose
    # true log-likelihoods differ by a few ulps
    cdef double ll = 0.0
    cdef double comp = 0.0
    cdef double term, cy, ct
    cdef double xb, u, s, sp, spp, es, rowf, u0, s0, sp0, es0, eweight
    cdef bint ok = 1

    lam[0] = 0.0
    for j in range(1, nb):
        lam[j] = (kmax - kk[j]) / span

    with nogil:
        for i in range(n):
            xb = 0.0
            for k in range(p):
                xb += xm[i, k] * b[k]
            u = ly[i] - xb
            _fill_basis(u, kk, lam, v, dv, d2v)
            s = g[0]
            sp = 0.0
            spp = 0.0
            for j in range(nb):
                s += g[j + 1] * v[j]
                sp += g[j + 1] * dv[j]
                spp += g[j + 1] * d2v[j]
            if ev[i] and sp <= 0.0:
                ok = 0
                break
            es = exp(s)
            if not isfinite(es):
                ok = 0
                break
            eweight = 1.0 if ev[i] else 0.0
            if ev[i]:
                term = (s - ly[i] + log(sp)) - es
            else:
                term = -es
            cy = term - comp
            ct = ll + cy
            comp = (ct - ll) - cy
            ll = ct
            rowf = -es * sp
            if ev[i]:
                rowf += sp + spp / sp
            grad[p] += eweight - es
            for j in range(nb):
                grad[p + 1 + j] += (eweight - es) * v[j]
                if ev[i]:
                    grad[p + 1 + j] += dv[j] / sp
            if isfinite(l0[i]):
                u0 = l0[i] - xb
                _fill_basis(u0, kk, lam, v, dv, d2v)
                s0 = g[0]
                sp0 = 0.0
                for j in range(nb):
                    s0 += g[j + 1] * v[j]
                    sp0 += g[j + 1] * dv[j]
                es0 = exp(s0)
                if not isfinite(es0):
                    ok = 0
                    break
                cy = es0 - comp
                ct = ll + cy
                comp = (ct - ll) - cy
                ll = ct
                rowf += es0 * sp0
                grad[p] += es0
                for j in range(nb):
                    grad[p + 1 + j] += es0 * v[j]
            for k in range(p):
                grad[k] -= xm[i, k] * rowf
    if not ok or not isfinite(ll):
        return -INFINITY, grad_arr
    for k in range(p + ng):
        if not isfinite(grad[k]):
            return -INFINITY, grad_arr
    return ll, grad_arr
