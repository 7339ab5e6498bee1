"""Radial Dunkl calculus.

For a radial function f(x) = F(|x|) the Dunkl transform reduces to

    F_k f(rho) = c_gamma * int_0^inf F(r) j_lam(rho r) r^(D-1) dr,

a unitary, involutive Hankel-type transform on L^2(r^(D-1) dr).  Here
lam = gamma + d/2 - 1 and c_gamma = 1 / (2^lam Gamma(lam + 1)); this constant
is the one that makes exp(-r^2/2) a fixed point.

Every radial function carries an ``extent`` (radius beyond which it is
negligible) and a ``band`` (extent of its transform).  Quadrature panels are
sized from the two so that the Bessel oscillation is always resolved.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import erf

from .setting import dunkl_kernel, dunkl_kernel_rank1, sphere_rule
from .special import bessel_table, normalized_bessel, panel_rule

__all__ = [
    "GridSpec",
    "RadialFunction",
    "SpectralMultiplier",
    "LineFunction",
    "DivergenceError",
    "ResolutionError",
    "GridMismatchError",
    "radial_rule",
    "hankel_matrix",
    "dunkl_transform_radial",
    "inverse_transform_radial",
    "spectrum",
    "sphere_transform",
    "sphere_transform_radial_derivative",
    "sphere_transform_direct",
    "translate_rank1",
    "convolve_radial",
    "apply_multiplier",
    "lp_tail_check",
    "gaussian",
    "gaussian_moment",
    "plateau",
    "ring",
    "modulated_gaussian",
    "read_csv",
    "line_lp_norm",
    "smooth_test_set",
    "write_csv",
]

# |F| below this fraction of its peak counts as negligible
NEGLIGIBLE = 1e-17
PANEL_ORDER = 16
# a 16-point Gauss panel spanning two periods of exp(i w r) errs by < 1e-19
PERIODS_PER_PANEL = 2.0
MAX_NODES = 250_000
# matrices larger than this use the tabulated Bessel function (error < 1e-11)
TABLE_THRESHOLD = 250_000


class DivergenceError(ArithmeticError):
    pass


class ResolutionError(ValueError):
    pass


class GridMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class GridSpec:
    """Log-spaced sampling grid (plus the origin) for radial profiles."""

    n: int = 2048
    r_min: float = 1e-4
    r_max: float = 1e3

    def points(self):
        return np.concatenate([[0.0], np.geomspace(self.r_min, self.r_max, self.n)])

    @property
    def grid_id(self):
        return f"log{self.n}_{self.r_min:g}_{self.r_max:g}"


DEFAULT_GRID = GridSpec()


@dataclass(frozen=True, eq=False)
class RadialFunction:
    """Radial profile F with f(x) = F(|x|).

    ``func`` is a vectorized evaluator on r >= 0.  ``dual`` optionally gives
    the closed-form transform as ``dual(setting, rho)``.  Sample-backed
    instances keep their knots in ``knots``.
    """

    func: Callable[[np.ndarray], np.ndarray]
    extent: float
    band: float
    support: Optional[float] = None
    label: str = ""
    dual: Optional[Callable] = None
    knots: Optional[tuple] = field(default=None, repr=False)

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        out = self.func(np.abs(r))
        if self.support is not None:
            out = np.where(np.abs(r) > self.support, 0.0, out)
        return out

    def samples(self, grid=DEFAULT_GRID):
        r = grid.points() if isinstance(grid, GridSpec) else np.asarray(grid, dtype=float)
        return r, self(r)

    @property
    def grid(self):
        return self.knots[0] if self.knots is not None else DEFAULT_GRID.points()

    @property
    def values(self):
        return self(self.grid)

    def dilate(self, a):
        """Profile of f(x / a)."""
        f = self.func
        dual = None
        if self.dual is not None:
            g = self.dual
            dual = lambda s, rho: a ** s.D * g(s, a * np.asarray(rho))
        return RadialFunction(lambda r: f(np.asarray(r) / a), self.extent * a, self.band / a,
                              None if self.support is None else self.support * a,
                              f"{self.label}(./{a:g})", dual)

    def scaled(self, c):
        f = self.func
        dual = None
        if self.dual is not None:
            g = self.dual
            dual = lambda s, rho: c * g(s, rho)
        return replace(self, func=lambda r: c * f(r), dual=dual, knots=None)

    def abs(self):
        f = self.func
        return replace(self, func=lambda r: np.abs(f(r)), dual=None, knots=None,
                       label=f"|{self.label}|")

    @classmethod
    def from_samples(cls, r, values, extent=None, band=None, support=None, label=""):
        """Interpolating profile: cubic in log r, even quadratic patch near 0."""
        r = np.asarray(r, dtype=float)
        v = np.asarray(values)
        if r[0] == 0:
            v0 = v[0]
            r, v = r[1:], v[1:]
        else:
            v0 = v[0]
        if np.any(np.diff(r) <= 0) or r[0] <= 0:
            raise ValueError("radii must be positive and strictly increasing")
        spline = CubicSpline(np.log(r), v)
        r1, v1 = r[0], v[0]
        rmax = r[-1]

        def func(x):
            x = np.asarray(x, dtype=float)
            out = np.zeros(x.shape, dtype=v.dtype)
            inner = x < r1
            mid = (~inner) & (x <= rmax)
            out[inner] = v0 + (v1 - v0) * (x[inner] / r1) ** 2
            out[mid] = spline(np.log(x[mid]))
            return out

        if extent is None:
            big = np.nonzero(np.abs(v) > NEGLIGIBLE * max(np.abs(v).max(), np.abs(v0)))[0]
            extent = r[min(big[-1] + 1, len(r) - 1)] if len(big) else r1
        if band is None:
            inside = r[r <= extent]
            h = np.diff(inside).max() if len(inside) > 1 else r1
            band = math.pi / h
        knots = (np.concatenate([[0.0], r]), np.concatenate([[v0], v]))
        return cls(func, float(extent), float(band), support, label, None, knots)


@dataclass(frozen=True, eq=False)
class SpectralMultiplier:
    """Radial frequency profile applied by pointwise multiplication.

    ``deriv`` is the radial derivative of the profile when available.
    """

    profile: RadialFunction
    deriv: Optional[Callable] = None

    def __call__(self, rho):
        return self.profile(rho)

    def apply(self, fhat):
        m = self.profile
        return RadialFunction(lambda rho: fhat(rho) * m(rho), min(fhat.extent, m.extent),
                              fhat.band + m.band, label=f"{m.label}*{fhat.label}")


@dataclass(frozen=True, eq=False)
class LineFunction:
    """A (not necessarily even) function on the real line."""

    func: Callable
    extent: float
    band: float
    label: str = ""

    def __call__(self, x):
        return self.func(np.asarray(x, dtype=float))


# ---------------------------------------------------------------------------
# quadrature helpers


def radial_rule(setting, extent, freq, order=PANEL_ORDER, min_panels=4):
    """Panel rule for int_0^extent g(r) r^(D-1) dr with g oscillating at ``freq``.

    The weight r^(D-1) is folded into the weights.
    """
    width = PERIODS_PER_PANEL * 2 * math.pi / max(freq, 1e-300)
    width = min(width, extent / min_panels)
    rule = panel_rule(0.0, extent, width, order=order, origin_power=setting.D - 1)
    if len(rule) > MAX_NODES:
        raise ResolutionError(
            f"{len(rule)} quadrature nodes needed (extent {extent:g}, frequency {freq:g})")
    return rule


def hankel_matrix(setting, targets, nodes, chunk=4_000_000):
    """c_gamma * j_lam(targets x nodes), evaluated in row chunks."""
    targets = np.asarray(targets, dtype=float)
    nodes = np.asarray(nodes, dtype=float)
    out = np.empty((len(targets), len(nodes)))
    step = max(1, chunk // max(len(nodes), 1))
    big = len(targets) * len(nodes) > TABLE_THRESHOLD
    if big:
        tab = bessel_table(setting.lam, np.abs(targets).max() * np.abs(nodes).max() + 1.0)
    for i in range(0, len(targets), step):
        arg = np.abs(np.outer(targets[i:i + step], nodes))
        out[i:i + step] = tab(arg) if big else normalized_bessel(setting.lam, arg)
    return setting.c_gamma * out


def _hankel_apply(setting, targets, nodes, wvals):
    targets = np.asarray(targets, dtype=float)
    flat = targets.ravel()
    out = np.zeros(flat.shape, dtype=np.result_type(wvals, float))
    step = max(1, 4_000_000 // max(len(nodes), 1))
    for i in range(0, len(flat), step):
        out[i:i + step] = hankel_matrix(setting, flat[i:i + step], nodes) @ wvals
    return out.reshape(targets.shape)


def lp_tail_check(setting, f, p=1.0, atol=1e-10):
    """Raise DivergenceError when |F|^p is not negligible beyond extent(f)."""
    r = np.linspace(f.extent, 2 * f.extent, 33)
    tail = np.abs(f(r)) ** p * r ** setting.D
    core = panel_rule(0.0, f.extent, f.extent / 8, origin_power=setting.D - 1)
    mass = np.dot(core.weights, np.abs(f(core.nodes)) ** p)
    if tail.max() > atol * max(mass, 1e-300):
        raise DivergenceError(
            f"profile {f.label!r} is not negligible beyond its extent {f.extent:g}")


def _check_tail(setting, f, atol):
    lp_tail_check(setting, f, 1.0, atol)


def dunkl_transform_radial(setting, f, atol=1e-10, exact=False):
    """Dunkl transform of a radial function, returned as a lazy profile.

    The result evaluates c_gamma * sum_n w_n F(r_n) j_lam(rho r_n) over a
    panel rule on [0, extent(f)] resolving frequencies up to band(f); it is
    zero beyond band(f).  With ``exact`` and a closed form available, the
    closed form is used instead.
    """
    if exact and f.dual is not None:
        g = f.dual
        return RadialFunction(lambda rho: g(setting, rho), f.band, f.extent,
                              label=f"F[{f.label}]", dual=None)
    _check_tail(setting, f, atol)
    rule = radial_rule(setting, f.extent, 2 * f.band)
    wvals = rule.weights * f(rule.nodes)
    nodes = rule.nodes
    band = f.band

    def fhat(rho):
        rho = np.asarray(rho, dtype=float)
        out = _hankel_apply(setting, np.minimum(rho, band), nodes, wvals)
        return np.where(rho > band, 0.0, out)

    def back(s, r):
        # transform of the transform is the original profile
        return f(r)

    return RadialFunction(fhat, band, f.extent, label=f"F[{f.label}]", dual=back)


def inverse_transform_radial(setting, g, atol=1e-10):
    """Inverse radial transform; the radial transform is its own inverse."""
    out = dunkl_transform_radial(setting, g, atol=atol)
    return replace(out, label=f"F^-1[{g.label}]")


def spectrum(setting, f):
    """Callable rho -> F_k f(rho), closed form when available."""
    if f.dual is not None:
        g = f.dual
        return lambda rho: g(setting, np.asarray(rho, dtype=float))
    return dunkl_transform_radial(setting, f)


def spectral_rule(setting, band, out_extent, order=PANEL_ORDER):
    """Frequency-side rule on [0, band] for outputs up to radius ``out_extent``."""
    return radial_rule(setting, band, out_extent, order=order)


# ---------------------------------------------------------------------------
# the transform of the sphere measure


def sphere_transform(setting, r):
    """F_k(sigma)(r) = c_gamma j_lam(r)."""
    return setting.c_gamma * normalized_bessel(setting.lam, np.abs(np.asarray(r, dtype=float)))


def sphere_transform_radial_derivative(setting, r):
    """(1/r) d/dr F_k(sigma)(r) = -c_gamma j_{lam+1}(r) / (2 (lam + 1))."""
    lam = setting.lam
    return -setting.c_gamma * normalized_bessel(lam + 1, np.abs(np.asarray(r, dtype=float))) / (2 * (lam + 1))


def sphere_transform_direct(setting, x, order=24):
    """c_k int_S E_k(-i x, y) w_k(y) dsigma(y) by quadrature on the sphere.

    ``x`` has shape (..., d).  For d = 1 the sphere is {-1, 1} and the rule
    is exact.
    """
    x = np.asarray(x, dtype=float)
    pts, wts = sphere_rule(setting, order, weighted=True)
    E = np.conj(dunkl_kernel(setting, x[..., None, :], pts))
    return setting.c_k * np.real(E @ wts)


# ---------------------------------------------------------------------------
# translation and convolution


def _line_rule(k, extent, freq):
    width = min(PERIODS_PER_PANEL * 2 * math.pi / freq, extent / 4)
    half = panel_rule(0.0, extent, width, order=PANEL_ORDER, origin_power=2 * k)
    nodes = np.concatenate([-half.nodes[::-1], half.nodes])
    weights = np.concatenate([half.weights[::-1], half.weights])
    if len(nodes) > MAX_NODES:
        raise ResolutionError(f"{len(nodes)} nodes needed on the line")
    return nodes, weights


def translate_rank1(k, x, f, extent=None, band=None):
    """Dunkl translate tau_x f on the line, computed through the transform.

    ``f`` is a :class:`RadialFunction` (an even function) or a
    :class:`LineFunction`.  The result is a :class:`LineFunction` supported
    (numerically) in [-|x| - extent, |x| + extent].
    """
    extent = f.extent if extent is None else extent
    band = f.band if band is None else band
    c_k = 1.0 / (2 ** (k + 0.5) * math.gamma(k + 0.5))
    out_extent = abs(x) + extent
    y, wy = _line_rule(k, extent, 2 * band)
    xi, wxi = _line_rule(k, band, abs(x) + out_extent + extent)
    fy = f(y)
    # F_k f(xi) = c_k sum f(y) E_k(-i xi, y) |y|^{2k}
    Ff = np.empty(len(xi), dtype=complex)
    step = max(1, 2_000_000 // len(y))
    for i in range(0, len(xi), step):
        E = np.conj(dunkl_kernel_rank1(k, y[None, :], xi[i:i + step, None]))
        Ff[i:i + step] = c_k * (E @ (wy * fy))
    Ex = dunkl_kernel_rank1(k, x, xi)
    coef = c_k * wxi * Ex * Ff

    def tau(z):
        z = np.asarray(z, dtype=float)
        flat = z.ravel()
        out = np.zeros(flat.shape)
        inside = np.abs(flat) <= out_extent
        zz = flat[inside]
        vals = np.empty(len(zz))
        st = max(1, 2_000_000 // len(xi))
        for i in range(0, len(zz), st):
            E = dunkl_kernel_rank1(k, zz[i:i + st, None], xi[None, :])
            vals[i:i + st] = np.real(E @ coef)
        out[inside] = vals
        return out.reshape(z.shape)

    return LineFunction(tau, out_extent, band, label=f"tau_{x:g}[{getattr(f, 'label', '')}]")


def line_lp_norm(k, g, p, extent, freq):
    """(int_R |g(y)|^p |y|^(2k) dy)^(1/p) for a function on the line."""
    y, w = _line_rule(k, extent, max(p, 1.0) * freq)
    return float(np.dot(w, np.abs(g(y)) ** p) ** (1.0 / p))


def convolve_radial(setting, f, g):
    """Radial Dunkl convolution: inverse transform of F_k f * F_k g."""
    if f.knots is not None and g.knots is not None:
        if len(f.knots[0]) != len(g.knots[0]) or np.any(f.knots[0] != g.knots[0]):
            raise GridMismatchError("sample grids of the two profiles differ")
    band = min(f.band, g.band)
    extent = f.extent + g.extent
    fh = spectrum(setting, f)
    gh = spectrum(setting, g)
    rule = spectral_rule(setting, band, 2 * extent)
    wvals = rule.weights * fh(rule.nodes) * gh(rule.nodes)
    nodes = rule.nodes
    dual = None
    if f.dual is not None and g.dual is not None:
        fd, gd = f.dual, g.dual
        dual = lambda s, rho: fd(s, rho) * gd(s, rho)

    def conv(r):
        r = np.asarray(r, dtype=float)
        out = _hankel_apply(setting, np.minimum(r, extent), nodes, wvals)
        return np.where(r > extent, 0.0, out)

    return RadialFunction(conv, extent, band, label=f"{f.label}*{g.label}", dual=dual)


def apply_multiplier(setting, f, mult, out_extent, mult_reach=0.0, label=None):
    """Inverse transform of F_k f * mult, a lazy profile zero beyond ``out_extent``.

    ``mult`` is a vectorized function of the frequency radius and
    ``mult_reach`` the spatial extent of its kernel (the oscillation rate of
    ``mult`` in rho).
    """
    fh = spectrum(setting, f)
    band = f.band
    rule = spectral_rule(setting, band, out_extent + mult_reach + f.extent)
    wvals = rule.weights * fh(rule.nodes) * mult(rule.nodes)
    nodes = rule.nodes

    def out(r):
        r = np.asarray(r, dtype=float)
        vals = _hankel_apply(setting, np.minimum(r, out_extent), nodes, wvals)
        return np.where(r > out_extent, 0.0, vals)

    return RadialFunction(out, float(out_extent), band,
                          label=label or f"T[{f.label}]")


# ---------------------------------------------------------------------------
# standard profiles

_GAUSS_CUT = math.sqrt(2 * math.log(1 / NEGLIGIBLE))


def gaussian(width=1.0):
    """exp(-r^2 / (2 width^2)); its transform is width^D exp(-width^2 rho^2 / 2)."""
    a = float(width)
    return RadialFunction(
        lambda r: np.exp(-0.5 * (np.asarray(r) / a) ** 2),
        _GAUSS_CUT * a, _GAUSS_CUT / a, label=f"gauss({a:g})",
        dual=lambda s, rho: a ** s.D * np.exp(-0.5 * (a * np.asarray(rho)) ** 2))


def gaussian_moment(width=1.0, m=1):
    """r^(2m) exp(-r^2 / (2 width^2))."""
    a = float(width)
    cut = _GAUSS_CUT + 0.8 * m
    return RadialFunction(
        lambda r: (np.asarray(r) / a) ** (2 * m) * np.exp(-0.5 * (np.asarray(r) / a) ** 2),
        cut * a, cut / a, label=f"gauss{m}({a:g})")


def plateau(radius=1.0, edge=0.1):
    """Smoothed indicator of the ball: a Gaussian-blurred top hat, even in r."""
    a, w = float(radius), float(edge)
    s = math.sqrt(2) * w

    def F(r):
        r = np.asarray(r)
        return 0.5 * (erf((a - r) / s) + erf((a + r) / s))

    return RadialFunction(F, a + _GAUSS_CUT * w, _GAUSS_CUT / w + 1.0 / a,
                          label=f"plateau({a:g},{w:g})")


def ring(center=1.0, width=0.3):
    """Even ring profile exp(-(r-c)^2/2a^2) + exp(-(r+c)^2/2a^2)."""
    c, a = float(center), float(width)

    def F(r):
        r = np.asarray(r)
        return np.exp(-0.5 * ((r - c) / a) ** 2) + np.exp(-0.5 * ((r + c) / a) ** 2)

    return RadialFunction(F, c + _GAUSS_CUT * a, _GAUSS_CUT / a, label=f"ring({c:g},{a:g})")


def modulated_gaussian(width=1.0, freq=1.0):
    """exp(-r^2/2a^2) cos(b r)."""
    a, b = float(width), float(freq)
    return RadialFunction(
        lambda r: np.exp(-0.5 * (np.asarray(r) / a) ** 2) * np.cos(b * np.asarray(r)),
        _GAUSS_CUT * a, _GAUSS_CUT / a + b, label=f"modgauss({a:g},{b:g})")


def smooth_test_set():
    """Twenty smooth radial profiles of varied width, shape and oscillation."""
    out = [gaussian(a) for a in (0.3, 0.6, 1.0, 1.7, 2.5)]
    out += [gaussian_moment(a, m) for a in (0.5, 1.2) for m in (1, 2)]
    out += [plateau(a, w) for a, w in ((0.8, 0.2), (1.5, 0.3), (2.5, 0.5))]
    out += [ring(c, a) for c, a in ((1.0, 0.3), (2.0, 0.4), (3.0, 0.6), (1.5, 0.8))]
    out += [modulated_gaussian(a, b) for a, b in ((1.0, 3.0), (0.7, 6.0), (2.0, 1.5), (1.4, 4.0))]
    return out


# ---------------------------------------------------------------------------
# CSV exchange


def write_csv(path, f, grid=DEFAULT_GRID):
    r, v = f.samples(grid)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["r", "value"])
        for ri, vi in zip(r, v):
            w.writerow([repr(float(ri)), repr(float(vi))])


def read_csv(path, **kwargs):
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return RadialFunction.from_samples(data[:, 0], data[:, 1], **kwargs)
