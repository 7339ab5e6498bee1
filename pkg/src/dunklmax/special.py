"""Normalized Bessel functions and quadrature rules.

The normalized Bessel function of order ``nu`` is

    j_nu(x) = Gamma(nu + 1) * J_nu(x) / (x / 2)**nu,

so that ``j_nu(0) = 1``.  It is even and entire in ``x``.  Away from the
origin it is evaluated through :func:`scipy.special.jv`; near the origin the
power series is summed directly, which avoids the ``0/0`` in the quotient.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import gammaln, jv, roots_jacobi

__all__ = [
    "BesselDomainError",
    "QuadratureRule",
    "normalized_bessel",
    "normalized_bessel_radial_derivative",
    "bessel_series",
    "series_coefficients",
    "gauss_legendre",
    "gauss_jacobi",
    "panel_rule",
    "HermiteTable",
    "bessel_table",
]

# Below this argument the power series is used (a dozen terms reach 1e-17).
_SERIES_CUTOFF = 1.0


class BesselDomainError(ValueError):
    pass


def _check_order(nu):
    if nu < -0.5:
        raise BesselDomainError(f"order {nu} < -1/2 is not supported")


def series_coefficients(nu, terms):
    """Coefficients c_m with j_nu(x) = sum_m c_m x**(2m)."""
    m = np.arange(terms)
    logc = gammaln(nu + 1) - gammaln(m + 1) - gammaln(m + nu + 1) - 2 * m * np.log(2.0)
    return np.where(m % 2 == 0, 1.0, -1.0) * np.exp(logc)


def bessel_series(nu, x, terms=40):
    """Power-series evaluation of j_nu, valid for moderate |x|.

    Used for small arguments and, at high term counts, as an independent
    reference for the production evaluator.
    """
    x = np.asarray(x, dtype=float)
    c = series_coefficients(nu, terms)
    z = x * x
    out = np.zeros_like(z)
    for cm in c[::-1]:
        out = out * z + cm
    return out


def normalized_bessel(nu, x):
    """Normalized Bessel function j_nu(x) for real nu >= -1/2 and x >= 0."""
    _check_order(nu)
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise BesselDomainError("normalized_bessel requires x >= 0")
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    out = np.empty_like(x)
    small = x <= _SERIES_CUTOFF
    if small.any():
        out[small] = bessel_series(nu, x[small], terms=16)
    big = ~small
    if big.any():
        xb = x[big]
        if nu == -0.5:
            out[big] = np.cos(xb)
        elif nu == 0.5:
            out[big] = np.sin(xb) / xb
        else:
            # exp/log form keeps the prefactor finite for large nu
            logpref = gammaln(nu + 1) - nu * np.log(xb / 2)
            out[big] = np.exp(logpref) * jv(nu, xb)
    return out[0] if scalar else out


def normalized_bessel_radial_derivative(nu, x, order=1):
    """First or second derivative of j_nu at x >= 0.

    Uses d/dx j_nu(x) = -x j_{nu+1}(x) / (2 (nu + 1)).
    """
    _check_order(nu)
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise BesselDomainError("derivative requires x >= 0")
    j1 = normalized_bessel(nu + 1, x)
    if order == 1:
        return -x * j1 / (2 * (nu + 1))
    j2 = normalized_bessel(nu + 2, x)
    return -j1 / (2 * (nu + 1)) + x * x * j2 / (4 * (nu + 1) * (nu + 2))


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and positive weights on an interval.

    ``degree`` is the polynomial exactness degree of the underlying rule when
    the weight function is 1 (for Jacobi-weighted rules it refers to the
    smooth factor).
    """

    nodes: np.ndarray
    weights: np.ndarray
    domain: tuple[float, float]
    degree: int

    def integrate(self, f):
        return np.dot(self.weights, f(self.nodes))

    def __len__(self):
        return len(self.nodes)


@lru_cache(maxsize=64)
def _leggauss(n):
    x, w = leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre(n, a=-1.0, b=1.0):
    """n-point Gauss-Legendre rule on [a, b], exact to degree 2n - 1."""
    if n < 1:
        raise ValueError("n must be positive")
    if not a < b:
        raise ValueError("need a < b")
    x, w = _leggauss(n)
    half = 0.5 * (b - a)
    return QuadratureRule(half * x + 0.5 * (a + b), half * w, (a, b), 2 * n - 1)


@lru_cache(maxsize=64)
def _jacobi_origin(n, power):
    # weight (1 + x)^power on [-1, 1]
    x, w = roots_jacobi(n, 0.0, power)
    return x, w


def gauss_jacobi(n, a, b, power):
    """Rule for int_a^b g(r) (r - a)**power dr with weights absorbing the power."""
    if power <= -1:
        raise ValueError("power must exceed -1")
    x, w = _jacobi_origin(n, float(power))
    half = 0.5 * (b - a)
    nodes = half * x + 0.5 * (a + b)
    weights = w * half ** (power + 1)
    return QuadratureRule(nodes, weights, (a, b), 2 * n - 1)


def panel_rule(a, b, width, order=16, origin_power=None, min_panels=1):
    """Composite Gauss rule on [a, b] with panels no wider than ``width``.

    When ``origin_power`` is given the weight ``(r - a)**origin_power`` is
    folded into the weights: Gauss-Jacobi on the first panel, plain
    Gauss-Legendre times the power elsewhere.
    """
    if not a < b:
        raise ValueError("need a < b")
    npan = max(min_panels, int(np.ceil((b - a) / width)))
    edges = np.linspace(a, b, npan + 1)
    x, w = _leggauss(order)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :])
    weights = half[:, None] * w[None, :]
    if origin_power is not None and origin_power != 0:
        weights = weights * (nodes - a) ** origin_power
        first = gauss_jacobi(order, edges[0], edges[1], origin_power)
        nodes[0] = first.nodes
        weights[0] = first.weights
    return QuadratureRule(nodes.ravel(), weights.ravel(), (a, b), 2 * order - 1)


class HermiteTable:
    """Piecewise Hermite interpolation of a function on a uniform grid.

    Values and first derivatives are stored at ``h``-spaced knots on
    ``[0, xmax]``; the cubic interpolation error is at most ``h**4 / 384``
    times the fourth derivative.  When second derivatives are supplied the
    interpolant is quintic (error ``h**6 / 46080`` times the sixth
    derivative).  Arguments beyond ``xmax`` evaluate to ``fill`` when it is
    given, otherwise they raise.
    """

    def __init__(self, values, derivs, h, fill=None, second=None):
        self.f = np.ascontiguousarray(values, dtype=float)
        self.df = np.ascontiguousarray(derivs, dtype=float)
        self.h = float(h)
        self.xmax = self.h * (len(self.f) - 1)
        self.fill = fill
        # per-cell polynomial in the local coordinate s in [0, 1]
        f0, f1 = self.f[:-1], self.f[1:]
        d0, d1 = self.df[:-1] * self.h, self.df[1:] * self.h
        jump = f1 - f0
        if second is None:
            cols = [f0, d0, 3 * jump - 2 * d0 - d1, -2 * jump + d0 + d1]
        else:
            dd = np.asarray(second, dtype=float) * self.h ** 2
            s0, s1 = dd[:-1], dd[1:]
            cols = [f0, d0, 0.5 * s0,
                    10 * jump - 6 * d0 - 4 * d1 - 1.5 * s0 + 0.5 * s1,
                    -15 * jump + 8 * d0 + 7 * d1 + 1.5 * s0 - s1,
                    6 * jump - 3 * d0 - 3 * d1 - 0.5 * s0 + 0.5 * s1]
        self._coef = np.stack(cols, axis=1)

    @classmethod
    def from_function(cls, func, dfunc, xmax, h, fill=None, d2func=None):
        n = int(np.ceil(xmax / h)) + 1
        x = h * np.arange(n)
        second = None if d2func is None else d2func(x)
        return cls(func(x), dfunc(x), h, fill=fill, second=second)

    def __call__(self, x, nu=0):
        """Interpolant (``nu = 0``) or its ``nu``-th derivative at ``x``."""
        x = np.asarray(x, dtype=float)
        t = x * (1.0 / self.h)
        n = len(self.f) - 1
        i = t.astype(np.intp)
        bad = (x < 0) | (i > n) | ((i == n) & (x != self.xmax))
        anybad = bad.any()
        if anybad and self.fill is None:
            raise ValueError(f"table evaluated outside [0, {self.xmax}]")
        np.clip(i, 0, n - 1, out=i)
        s = t - i
        c = self._coef[i]
        deg = c.shape[-1] - 1
        if nu == 0:
            out = c[..., deg] * s
            for m in range(deg - 1, 0, -1):
                out += c[..., m]
                out *= s
            out += c[..., 0]
        else:
            # differentiate the local polynomial term by term
            fac = [math.prod(range(m - nu + 1, m + 1)) for m in range(deg + 1)]
            out = np.zeros(s.shape)
            for m in range(deg, nu - 1, -1):
                out = out * s + fac[m] * c[..., m]
            out = out / self.h ** nu
        if anybad:
            out[bad] = 0.0 if nu else self.fill
        return out


_TABLES: dict = {}


def bessel_table(nu, xmax, h=0.01):
    """Cached :class:`HermiteTable` of j_nu on [0, xmax] (grown on demand)."""
    key = (float(nu), float(h))
    tab = _TABLES.get(key)
    if tab is None or tab.xmax < xmax:
        size = max(xmax, 2 * tab.xmax if tab is not None else xmax, 64.0)
        tab = HermiteTable.from_function(
            lambda x: normalized_bessel(nu, x),
            lambda x: normalized_bessel_radial_derivative(nu, x, 1),
            size, h)
        _TABLES[key] = tab
    return tab
