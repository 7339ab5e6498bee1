"""Multiplicity data for product reflection groups Z_2^d.

The positive roots are the coordinate vectors e_1..e_d, so the weight is
w_k(x) = prod |x_i|**(2 k_i) and every constant has a closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.special import gammaln, roots_jacobi

from .special import normalized_bessel, panel_rule

__all__ = [
    "MultiplicitySetting",
    "HypothesisError",
    "weight",
    "mehta_constant",
    "sphere_mass",
    "sphere_rule",
    "WeightedPolarMeasure",
    "dunkl_operator_1d",
    "dunkl_kernel_rank1",
    "dunkl_kernel",
]


class HypothesisError(ValueError):
    """Raised when a setting violates the D >= 2 requirement of the maximal theory."""


@dataclass(frozen=True)
class MultiplicitySetting:
    d: int
    multiplicities: tuple[float, ...] = field(default=())

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("dimension must be positive")
        k = self.multiplicities
        if k == ():
            k = (0.0,) * self.d
        elif np.isscalar(k):
            k = (float(k),) * self.d
        k = tuple(float(v) for v in k)
        if len(k) != self.d:
            raise ValueError(f"need {self.d} multiplicities, got {len(k)}")
        if any(v < 0 for v in k):
            raise ValueError("multiplicities must be nonnegative")
        object.__setattr__(self, "multiplicities", k)

    @classmethod
    def uniform(cls, d, k):
        return cls(d, (float(k),) * d)

    @property
    def k(self):
        return self.multiplicities

    @property
    def gamma(self):
        return math.fsum(self.multiplicities)

    @property
    def D(self):
        """Homogeneous dimension 2*gamma + d."""
        return 2 * self.gamma + self.d

    @property
    def lam(self):
        """Bessel order gamma + d/2 - 1 of the radial transform."""
        return self.gamma + self.d / 2 - 1

    @cached_property
    def c_k(self):
        return mehta_constant(self)

    @cached_property
    def d_k(self):
        return sphere_mass(self)

    @cached_property
    def c_gamma(self):
        return math.exp(-(self.lam * math.log(2.0) + gammaln(self.lam + 1)))

    def require_maximal(self):
        if self.D < 2:
            raise HypothesisError(
                f"homogeneous dimension D = {self.D:g} < 2; the spherical maximal "
                "theory requires 2*gamma + d >= 2")

    def critical_range(self):
        """Open interval (D/(D-1), D) of exponents covered by the maximal theorem."""
        D = self.D
        lo = D / (D - 1) if D > 1 else math.inf
        return lo, D

    def to_dict(self):
        return {"d": self.d, "multiplicities": list(self.multiplicities)}

    @classmethod
    def from_dict(cls, data):
        return cls(int(data["d"]), tuple(data["multiplicities"]))

    def label(self):
        ks = ",".join(f"{v:g}" for v in self.multiplicities)
        return f"d={self.d},k=({ks})"


def weight(setting, x):
    """w_k(x) = prod_i |x_i|**(2 k_i); x has trailing dimension d."""
    x = np.asarray(x, dtype=float)
    if setting.d == 1 and (x.ndim == 0 or x.shape[-1] != 1):
        x = x[..., None]
    k = np.asarray(setting.multiplicities)
    return np.prod(np.abs(x) ** (2 * k), axis=-1)


def mehta_constant(setting):
    """c_k = (int exp(-|x|^2/2) w_k dx)^-1 via the one-dimensional Gamma integrals."""
    # int |t|^{2k} e^{-t^2/2} dt = 2^{k+1/2} Gamma(k+1/2)
    logint = sum((k + 0.5) * math.log(2.0) + gammaln(k + 0.5) for k in setting.multiplicities)
    return math.exp(-logint)


def sphere_mass(setting):
    """d_k = int_{S^{d-1}} w_k dsigma with sigma the (unnormalized) surface measure."""
    return setting.c_gamma / setting.c_k


def _jacobi01(n, a, b):
    """Rule on [0, 1] for weight v**(a-1) * (1-v)**(b-1)."""
    x, w = roots_jacobi(n, b - 1, a - 1)
    v = 0.5 * (1 + x)
    return v, w / 2 ** (a + b - 1)


def sphere_rule(setting, n=16, weighted=True):
    """Quadrature on S^{d-1} adapted to the coordinate-hyperplane singularities.

    Points are parametrized by t_i = y_i**2 on the simplex (stick-breaking),
    with a Gauss-Jacobi factor per stick absorbing t_i**(k_i - 1/2), and all
    2**d sign patterns.  With ``weighted`` the weights include w_k(y).
    Returns ``(points, weights)``; points has shape (m, d).
    """
    d = setting.d
    if d == 1:
        pts = np.array([[1.0], [-1.0]])
        return pts, np.ones(2)
    alpha = np.array([(k if weighted else 0.0) + 0.5 for k in setting.multiplicities])
    tail = np.cumsum(alpha[::-1])[::-1]
    grids = []
    for i in range(d - 1):
        v, w = _jacobi01(n, alpha[i], tail[i + 1])
        grids.append((v, w))
    mesh_v = np.meshgrid(*[g[0] for g in grids], indexing="ij")
    mesh_w = np.meshgrid(*[g[1] for g in grids], indexing="ij")
    V = np.stack([m.ravel() for m in mesh_v], axis=-1)
    W = np.prod(np.stack([m.ravel() for m in mesh_w], axis=-1), axis=-1)
    t = np.empty((len(V), d))
    rest = np.ones(len(V))
    for i in range(d - 1):
        t[:, i] = rest * V[:, i]
        rest = rest * (1 - V[:, i])
    t[:, d - 1] = rest
    y = np.sqrt(t)
    signs = np.array(np.meshgrid(*([[1.0, -1.0]] * d), indexing="ij")).reshape(d, -1).T
    pts = (signs[:, None, :] * y[None, :, :]).reshape(-1, d)
    wts = np.tile(W, len(signs)) * 2.0 / 2 ** d
    if not weighted:
        return pts, wts
    return pts, wts


@dataclass
class WeightedPolarMeasure:
    """Polar product rule for int_{R^d} f dnu_k over the ball of radius r_max."""

    setting: MultiplicitySetting
    r_max: float
    radial_width: float = 0.25
    angular_order: int = 16

    def __post_init__(self):
        D = self.setting.D
        self.radial = panel_rule(0.0, self.r_max, self.radial_width, order=16,
                                 origin_power=D - 1)
        pts, wts = sphere_rule(self.setting, self.angular_order, weighted=True)
        self.angular = (pts, wts)

    def integrate(self, f):
        """Integrate a function of points x (shape (..., d)) against nu_k."""
        pts, wts = self.angular
        r = self.radial.nodes
        x = r[:, None, None] * pts[None, :, :]
        vals = f(x)
        return float(np.einsum("i,j,ij->", self.radial.weights, wts, vals))

    def integrate_radial(self, F):
        """d_k * int_0^r_max F(r) r^(D-1) dr for a radial profile F."""
        return self.setting.d_k * float(np.dot(self.radial.weights, F(self.radial.nodes)))


def dunkl_operator_1d(k, f, df, x):
    """Rank-one Dunkl operator f'(x) + k (f(x) - f(-x)) / x.

    ``df`` is the derivative of ``f``.  At x = 0 the difference quotient is
    replaced by its limit 2 k f'(0).
    """
    x = np.asarray(x, dtype=float)
    safe = np.where(x == 0, 1.0, x)
    quotient = np.where(x == 0, 2 * df(np.zeros_like(x)), (f(x) - f(-x)) / safe)
    return df(x) + k * quotient


def dunkl_kernel_rank1(k, x, y):
    """E_k(x, i y) for the rank-one group, complex valued."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    t = x * y
    at = np.abs(t)
    even = normalized_bessel(k - 0.5, at)
    odd = t / (2 * k + 1) * normalized_bessel(k + 0.5, at)
    return even + 1j * odd


def dunkl_kernel(setting, x, y):
    """E_k(x, i y) for Z_2^d: the product of rank-one kernels."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    out = np.ones(np.broadcast_shapes(x.shape, y.shape)[:-1], dtype=complex)
    for i, k in enumerate(setting.multiplicities):
        out = out * dunkl_kernel_rank1(k, x[..., i], y[..., i])
    return out
