"""Restricted cubic splines in the truncated power parameterization.

The basis for a knot vector (k_min, k_2, ..., k_max) with K knots has
K - 1 columns and no intercept:

    v_1(u) = u
    v_j(u) = (u - k_j)^3_+ - lam_j (u - k_min)^3_+ - (1 - lam_j)(u - k_max)^3_+

with lam_j = (k_max - k_j) / (k_max - k_min), which makes every basis
function (hence any spline in the span) exactly linear outside the
boundary knots. Spline coefficients are plain float arrays with the
intercept first, so a spline with df basis columns has df + 1
coefficients.

The df convention used throughout the package: df = number of basis
columns = number of knots - 1, so df - 1 interior knots and df = 1 is the
pure linear (Weibull) case.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from ._backend import spline_design
from .errors import KnotError, ParameterError

__all__ = [
    "KnotVector",
    "make_knots",
    "basis",
    "basis_derivative",
    "basis_second_derivative",
    "evaluate",
    "evaluate_derivative",
    "evaluate_second_derivative",
]


@dataclass(frozen=True)
class KnotVector:
    """Ordered knot locations on the log-time scale.

    Parameters
    ----------
    knots : tuple of float
        Strictly increasing, at least two entries (the boundary knots).
    """

    knots: tuple

    def __post_init__(self):
        knots = tuple(float(k) for k in self.knots)
        object.__setattr__(self, "knots", knots)
        if len(knots) < 2:
            raise KnotError(f"need at least 2 knots, got {len(knots)}")
        arr = np.asarray(knots)
        if not np.all(np.isfinite(arr)):
            raise KnotError(f"knots must be finite, got {knots}")
        if not np.all(np.diff(arr) > 0):
            raise KnotError(f"knots must be strictly increasing, got {knots}")

    @property
    def df(self):
        """Number of basis columns spanned by these knots."""
        return len(self.knots) - 1

    @property
    def interior(self):
        return self.knots[1:-1]

    @property
    def weights(self):
        """lam_j for each interior knot, all in [0, 1]."""
        k = np.asarray(self.knots)
        return tuple((k[-1] - k[1:-1]) / (k[-1] - k[0]))

    def as_array(self):
        return np.asarray(self.knots, dtype=np.float64)


def make_knots(values, df):
    """Place df + 1 knots on the quantiles of ``values``.

    Boundary knots go at the min and max; the df - 1 interior knots sit
    at equally spaced quantiles (df=3 puts them at the 1/3 and 2/3
    quantiles). Quantiles use the order-statistic definition with linear
    interpolation (numpy default). df=1 yields boundary knots only, a
    pure linear basis.

    Heavily tied data can produce duplicate quantiles; duplicates are
    collapsed with a warning, reducing the effective df.

    Raises
    ------
    KnotError
        Fewer than df + 1 distinct values, or all values equal.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise KnotError("cannot place knots on an empty value list")
    if df < 1:
        raise ParameterError(f"df must be >= 1, got {df}")
    distinct = np.unique(values)
    if distinct.size < df + 1:
        raise KnotError(
            f"need at least {df + 1} distinct values for df={df}, "
            f"got {distinct.size}"
        )
    probs = np.linspace(0.0, 1.0, df + 1)
    knots = np.quantile(values, probs)
    collapsed = np.unique(knots)
    if collapsed.size < knots.size:
        warnings.warn(
            f"tied quantiles collapsed {knots.size} knots to "
            f"{collapsed.size}; effective df reduced to {collapsed.size - 1}",
            stacklevel=2,
        )
        knots = collapsed
    if knots.size < 2:
        raise KnotError("knot placement degenerated to a single point")
    return KnotVector(tuple(knots))


def _design(u, knots, order):
    u_arr = np.atleast_1d(np.asarray(u, dtype=np.float64))
    out = spline_design(u_arr, knots.as_array(), order)
    if np.ndim(u) == 0:
        return out[0]
    return out


def basis(u, knots):
    """Basis values at ``u``; shape (..., df), no intercept column."""
    return _design(u, knots, 0)


def basis_derivative(u, knots):
    """First derivative of each basis column with respect to ``u``."""
    return _design(u, knots, 1)


def basis_second_derivative(u, knots):
    """Second derivative of each basis column with respect to ``u``."""
    return _design(u, knots, 2)


def _check_coeffs(coeffs, knots):
    coeffs = np.asarray(coeffs, dtype=np.float64)
    if coeffs.ndim != 1 or coeffs.shape[0] != knots.df + 1:
        raise ParameterError(
            f"expected {knots.df + 1} spline coefficients "
            f"(intercept + {knots.df} basis columns), got shape "
            f"{coeffs.shape}"
        )
    return coeffs


def evaluate(u, coeffs, knots):
    """s(u) = coeffs[0] + sum_j coeffs[j] v_j(u)."""
    coeffs = _check_coeffs(coeffs, knots)
    return coeffs[0] + _design(u, knots, 0) @ coeffs[1:]


def evaluate_derivative(u, coeffs, knots):
    """ds/du at ``u`` (the intercept drops out)."""
    coeffs = _check_coeffs(coeffs, knots)
    return _design(u, knots, 1) @ coeffs[1:]


def evaluate_second_derivative(u, coeffs, knots):
    """d2s/du2 at ``u``."""
    coeffs = _check_coeffs(coeffs, knots)
    return _design(u, knots, 2) @ coeffs[1:]
