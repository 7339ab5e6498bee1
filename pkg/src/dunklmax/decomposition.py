"""Dyadic frequency decomposition of the spherical mean.

Construction
------------
b(u) = exp(-1 / (1 - (u/s)^2)) on [0, s) is a compactly supported radial
bump.  Its radial transform

    psi(y) = c_gamma int_0^s b(u) j_lam(u y) u^(D-1) du

is an even Schwartz function with psi(0) > 0.  The smooth cutoff is
psi_0(y) = P(y) psi(y) with an even polynomial P = sum a_i y^i chosen so that
psi_0(0) = 1 and the derivatives of orders 1 <= i < D/2 vanish at 0.  The
dyadic pieces are

    psi_j(y) = psi_0(y / 2^j) - psi_0(y / 2^(j-1)),   j >= 1,

which telescope to psi_0(y / 2^J).  Multiplying by the sphere transform gives
m_j = c_gamma j_lam psi_j, and phi_j is its inverse transform.

Because P is even, P(|y|) psi(y) is the transform of
beta = sum a_2m (-Laplacian)^m b, supported in the ball of radius s.  Hence
phi_j = c_gamma S_1[beta_j] lives in the annulus 1 - s/2^(j-1) <= |x| <=
1 + s/2^(j-1), and is evaluated in space by the spherical product formula.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy.integrate import simpson
from scipy.special import gammaln

from .maximal import (
    DilationMultiplier,
    EmptyGridError,
    MaximalProfile,
    RGrid,
    XGrid,
    _BlockedSweep,
    maximal_sweep,
    power_profile,
)
from .radial import (
    PERIODS_PER_PANEL,
    RadialFunction,
    ResolutionError,
    gaussian,
    plateau,
    ring,
)
from .special import (
    HermiteTable,
    bessel_table,
    normalized_bessel,
    normalized_bessel_radial_derivative,
    panel_rule,
    series_coefficients,
)

__all__ = [
    "DyadicFamily",
    "dyadic_family",
    "DecaySlopeFit",
    "DegenerateFitError",
    "LevelError",
    "SingularSystemError",
    "TruncationWarning",
    "build_base_bump",
    "bump_profile",
    "bump_laplacian_terms",
    "solve_psi0_coefficients",
    "dyadic_piece",
    "multiplier_mj",
    "kernel_phi_j",
    "level_family",
    "level_x_grid",
    "level_r_grid",
    "maximal_phi_j",
    "square_function",
    "g_function",
    "g_tilde_function",
    "multiplier_l2_mass",
    "psi1_power_bound",
    "decay_slope_fit",
]

MIN_SUPPORT_NODES = 64
# psi is set to zero where it has decayed below this fraction of psi(0)
TAIL_TOL = 1e-15
SERIES_TERMS = 40
LEVEL_REACH = 2.5
LEVEL_R_DENSITY = 16


class LevelError(IndexError):
    pass


class SingularSystemError(ArithmeticError):
    pass


class DegenerateFitError(ValueError):
    pass


class TruncationWarning(UserWarning):
    pass


# ---------------------------------------------------------------------------
# the bump and its Laplacians


def _bump_poly(n):
    """Polynomials P_n with g^(n)(v) = P_n(w) g(v) for g = exp(-w), w = 1/(1-v)."""
    polys = [np.array([1.0])]
    for _ in range(n):
        p = polys[-1]
        # d/dv [P(w) e^-w] = (P'(w) - P(w)) w^2 e^-w
        dp = npoly.polysub(npoly.polyder(p), p)
        polys.append(npoly.polymul(dp, [0.0, 0.0, 1.0]))
    return polys


def bump_laplacian_terms(D, m):
    """Delta^m written as sum c * q^a H^(n)(q) for a radial H(u^2) in dimension D.

    Returned as a dict {(a, n): c}.  Uses Delta[H(q)] = 2D H' + 4q H''.
    """
    terms = {(0, 0): 1.0}
    for _ in range(m):
        new = {}
        for (a, n), c in terms.items():
            for key, val in (((a - 1, n), 2 * D * a + 4 * a * (a - 1)),
                             ((a, n + 1), 2 * D + 8 * a),
                             ((a + 1, n + 2), 4.0)):
                if val != 0:
                    new[key] = new.get(key, 0.0) + c * val
        terms = new
    return terms


def bump_profile(s, laplacian_coeffs=(1.0,), D=None):
    """Evaluator of sum_m coeffs[m] (-Delta)^m b for the bump b of radius s."""
    coeffs = [float(c) for c in laplacian_coeffs]
    if len(coeffs) > 1 and D is None:
        raise ValueError("dimension needed for Laplacians")
    plan = []
    for m, cm in enumerate(coeffs):
        if cm == 0:
            continue
        for (a, n), c in bump_laplacian_terms(D, m).items():
            plan.append((a, n, cm * c * (-1) ** m))
    polys = _bump_poly(max(n for _, n, _ in plan))

    def F(u):
        u = np.asarray(u, dtype=float)
        q = u * u
        v = q / (s * s)
        inside = v < 1
        w = np.where(inside, 1.0 / np.where(inside, 1 - v, 1.0), 0.0)
        g = np.where(inside, np.exp(-w), 0.0)
        out = np.zeros(u.shape)
        for a, n, c in plan:
            pv = npoly.polyval(w, polys[n])
            out += c * q ** a * pv * g / s ** (2 * n)
        return np.where(inside, out, 0.0)

    return F


def build_base_bump(setting, support_radius=0.5, support_nodes=128):
    """The bump b of radius s as a radial profile, with its transform psi as dual.

    ``support_nodes`` Gauss nodes resolve b in the transform; fewer than 64
    raises :class:`ResolutionError`.
    """
    s = float(support_radius)
    if not s > 0:
        raise ValueError("support radius must be positive")
    if support_nodes < MIN_SUPPORT_NODES:
        raise ResolutionError(
            f"{support_nodes} nodes inside the bump support; need >= {MIN_SUPPORT_NODES}")
    return _bump_with_transform(setting, s, support_nodes)[0]


def _bump_with_transform(setting, s, support_nodes):
    bt = _BumpTransform(setting, s, support_nodes)
    prof = RadialFunction(bt.b, s, bt.ycut, support=s, label=f"bump({s:g})",
                          dual=lambda st, y: bt(np.asarray(y, dtype=float)))
    return prof, bt


class _BumpTransform:
    """psi(y) and derivatives by direct quadrature over the bump support."""

    def __init__(self, setting, s, support_nodes=128, tail_tol=TAIL_TOL):
        self.setting = setting
        self.s = s
        self.b = bump_profile(s)
        self.order = 16
        self.min_panels = max(1, support_nodes // self.order)
        rule = self._rule(0.0)
        self.psi0 = setting.c_gamma * float(np.dot(rule.weights, self.b(rule.nodes)))
        self.tail_tol = tail_tol
        self.ycut = self._find_cut()

    def _rule(self, ymax):
        width = min(self.s / self.min_panels, PERIODS_PER_PANEL * 2 * math.pi / max(ymax, 1e-300))
        return panel_rule(0.0, self.s, width, order=self.order,
                          origin_power=self.setting.D - 1)

    def values(self, y, nu=0, fast=False):
        """psi^(nu)(y) for nu in {0, 1, 2}; ``fast`` uses tabulated Bessel functions."""
        return self.all_values(y, fast)[nu] if nu else self.all_values(y, fast, top=0)[0]

    def all_values(self, y, fast=False, top=2):
        """(psi, psi', psi'') at y, sharing the Bessel evaluations."""
        y = np.atleast_1d(np.asarray(y, dtype=float))
        lam, cg = self.setting.lam, self.setting.c_gamma
        out = np.zeros((3, len(y)))
        order = np.argsort(y)
        if fast:
            size = self.s * self.ycut_hint + 1.0
            J = lambda nu_, arg: bessel_table(nu_, size, h=0.0025)(arg)
        else:
            J = normalized_bessel
        for blk in np.array_split(order, max(1, len(y) // 256)):
            if len(blk) == 0:
                continue
            yb = y[blk]
            rule = self._rule(yb.max())
            u, w = rule.nodes, rule.weights * self.b(rule.nodes)
            z = np.outer(yb, u)
            out[0, blk] = cg * J(lam, z) @ w
            if top >= 1:
                j1 = J(lam + 1, z)
                wu = w * u * u
                out[1, blk] = -cg * yb / (2 * (lam + 1)) * (j1 @ wu)
            if top >= 2:
                j2 = J(lam + 2, z)
                d2 = -j1 / (2 * (lam + 1)) + z * z * j2 / (4 * (lam + 1) * (lam + 2))
                out[2, blk] = cg * d2 @ wu
        return out

    ycut_hint = 2000.0

    def _find_cut(self):
        step = 5.0 / self.s
        y = step * np.arange(1, int(self.ycut_hint / 5) + 1)
        vals = np.abs(self.values(y))
        big = np.nonzero(vals > self.tail_tol * self.psi0)[0]
        last = y[big[-1]] if len(big) else step
        return float(last + 2 * step)

    def __call__(self, y):
        return self.values(y)


def _bump_moments(setting, s, count):
    """M_2m = int_0^s b(u) u^(2m + D - 1) du for m < count."""
    rule = panel_rule(0.0, s, s / 64, order=16, origin_power=setting.D - 1)
    b = bump_profile(s)(rule.nodes)
    return np.array([np.dot(rule.weights, b * rule.nodes ** (2 * m)) for m in range(count)])


def _psi_taylor(setting, s, terms=SERIES_TERMS):
    """Taylor coefficients of psi in powers of y (odd ones zero)."""
    c = series_coefficients(setting.lam, terms)
    M = _bump_moments(setting, s, terms)
    even = setting.c_gamma * c * M
    out = np.zeros(2 * terms)
    out[::2] = even
    return out


def solve_psi0_coefficients(setting, taylor, top=None):
    """Coefficients a_0..a_top making psi_0 = (sum a_i y^i) psi flat at 0.

    ``taylor`` holds the Taylor coefficients of psi (psi^(i)(0) = i! taylor[i]).
    The rows 0 <= i < D/2 of sum_{j<=i} i!/(i-j)! a_j psi^(i-j)(0) = delta_i0
    are solved by forward substitution; coefficients with no condition
    (i >= D/2) are set to zero.  ``top`` defaults to ceil(D/2).
    """
    D = setting.D
    top = math.ceil(D / 2) if top is None else int(top)
    deriv = np.array([math.factorial(i) * taylor[i] for i in range(top + 1)])
    if deriv[0] == 0:
        raise SingularSystemError("psi(0) = 0; the flatness system is singular")
    a = np.zeros(top + 1)
    for i in range(top + 1):
        if not i < D / 2:
            break
        rhs = 1.0 if i == 0 else 0.0
        acc = sum(math.factorial(i) / math.factorial(i - j) * a[j] * deriv[i - j]
                  for j in range(i))
        a[i] = (rhs - acc) / (math.factorial(i) * deriv[0])
    return a


def _flatness_residuals(setting, taylor, a):
    """|psi_0^(i)(0)| for 1 <= i < D/2."""
    t0 = npoly.polymul(a, taylor)
    return [abs(math.factorial(i) * t0[i]) for i in range(1, math.ceil(setting.D / 2))
            if i < setting.D / 2]


# ---------------------------------------------------------------------------
# the family


@dataclass(eq=False)
class DyadicFamily:
    """Immutable dyadic decomposition built from the bump of radius ``s``."""

    setting: object
    s: float = 0.5
    J: int = 8
    table_step: float = 0.0625
    support_nodes: int = 128
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.setting.require_maximal()
        if self.J < 0:
            raise LevelError("J must be nonnegative")
        s = float(self.s)
        if not s > 0:
            raise ValueError("support radius must be positive")
        if self.support_nodes < MIN_SUPPORT_NODES:
            raise ResolutionError(f"{self.support_nodes} nodes inside the bump support; "
                                  f"need >= {MIN_SUPPORT_NODES}")
        self.bump, self._bt = _bump_with_transform(self.setting, s, self.support_nodes)
        self.taylor = _psi_taylor(self.setting, self.s)
        self.J0 = math.ceil(self.setting.D / 2)
        self.coefficients = solve_psi0_coefficients(self.setting, self.taylor)
        self.coefficients_floor = solve_psi0_coefficients(
            self.setting, self.taylor, top=math.floor(self.setting.D / 2))
        self.t = self.s
        self.ycut = self._bt.ycut
        self._build_tables()

    # -- psi_0 ---------------------------------------------------------------

    def _build_tables(self):
        h = self.table_step
        y = h * np.arange(int(math.ceil(self.ycut / h)) + 1)
        bt = self._bt
        bt.ycut_hint = self.ycut
        p0, p1, p2 = bt.all_values(y, fast=True)
        a = self.coefficients
        P = npoly.polyval(y, a)
        dP = npoly.polyval(y, npoly.polyder(a)) if len(a) > 1 else 0 * y
        ddP = npoly.polyval(y, npoly.polyder(a, 2)) if len(a) > 2 else 0 * y
        self._psi_table = HermiteTable(p0, p1, h, fill=0.0, second=p2)
        self._psi0_table = HermiteTable(P * p0, dP * p0 + P * p1, h, fill=0.0,
                                        second=ddP * p0 + 2 * dP * p1 + P * p2)
        # Taylor series of psi_0 - 1 near the origin (exact cancellation there)
        t0 = npoly.polymul(a, self.taylor)[:2 * SERIES_TERMS]
        t0[0] = 0.0
        self._series = t0
        self._series_radius = 2.0 / self.s

    def psi(self, y, nu=0):
        """The transform of the bump (radial profile in y)."""
        return self._psi_table(np.abs(np.asarray(y, dtype=float)), nu)

    def psi0_minus_one(self, y, nu=0):
        y = np.abs(np.asarray(y, dtype=float))
        small = y <= self._series_radius
        coef = npoly.polyder(self._series, nu) if nu else self._series
        ser = npoly.polyval(np.where(small, y, 0.0), coef)
        tab = self._psi0_table(np.where(small, 0.0, y), nu)
        if nu == 0:
            tab = tab - 1.0
        return np.where(small, ser, tab)

    def psi0(self, y, nu=0):
        out = self.psi0_minus_one(y, nu)
        return out + 1.0 if nu == 0 else out

    def piece(self, j, y, nu=0):
        """psi_j (or its nu-th derivative) at y."""
        self._check(j)
        y = np.asarray(y, dtype=float)
        if j == 0:
            return self.psi0(y, nu)
        a, b = 2.0 ** -j, 2.0 ** -(j - 1)
        return (a ** nu * self.psi0_minus_one(a * y, nu)
                - b ** nu * self.psi0_minus_one(b * y, nu))

    def _check(self, j):
        if not (isinstance(j, (int, np.integer)) and 0 <= j <= self.J):
            raise LevelError(f"level {j} outside 0..{self.J}")

    # -- pieces in space ------------------------------------------------------

    @cached_property
    def beta(self):
        """Inverse transform of psi_0, supported in the ball of radius s."""
        laps = np.zeros(len(self.coefficients) // 2 + 1)
        for i, ai in enumerate(self.coefficients):
            if ai != 0:
                if i % 2:
                    raise ValueError("odd coefficient in the cutoff polynomial")
                laps[i // 2] = ai
        return bump_profile(self.s, laps, self.setting.D)

    def piece_radius(self, j):
        """Radius of the ball carrying the inverse transform of psi_j."""
        return self.s if j == 0 else self.s * 2.0 ** -(j - 1)

    def piece_inverse(self, j):
        """Inverse transform of psi_j as a compactly supported profile."""
        self._check(j)
        D, beta = self.setting.D, self.beta
        if j == 0:
            F = beta
        else:
            a, b = 2.0 ** j, 2.0 ** (j - 1)
            F = lambda u: a ** D * beta(a * np.asarray(u)) - b ** D * beta(b * np.asarray(u))
        rad = self.piece_radius(j)
        return RadialFunction(F, rad, self.ycut * 2.0 ** j, support=rad,
                              label=f"beta_{j}", dual=lambda st, y: self.piece(j, y))

    def kernel_annulus(self, j):
        rad = self.piece_radius(j)
        return max(0.0, 1.0 - rad), 1.0 + rad

    # -- multipliers ----------------------------------------------------------

    def multiplier_value(self, j, u, nu=0):
        """m_j = c_gamma j_lam psi_j and its first two derivatives."""
        lam, cg = self.setting.lam, self.setting.c_gamma
        u = np.abs(np.asarray(u, dtype=float))
        jl = normalized_bessel(lam, u)
        p = self.piece(j, u)
        if nu == 0:
            return cg * jl * p
        d1 = normalized_bessel_radial_derivative(lam, u, 1)
        p1 = self.piece(j, u, 1)
        if nu == 1:
            return cg * (d1 * p + jl * p1)
        d2 = normalized_bessel_radial_derivative(lam, u, 2)
        return cg * (d2 * p + 2 * d1 * p1 + jl * self.piece(j, u, 2))

    def multiplier_cutoff(self, j):
        return self.ycut * 2.0 ** j

    def _table(self, key, j, umax):
        tab = self._cache.get((key, j))
        cut = self.multiplier_cutoff(j)
        if tab is None or (tab.xmax < umax and tab.xmax < cut):
            size = min(cut, max(umax, 2 * tab.xmax if tab else 0.0, 256.0))
            if key == "m":
                f = lambda x: self.multiplier_value(j, x)
                df = lambda x: self.multiplier_value(j, x, 1)
            else:
                f = lambda x: x * self.multiplier_value(j, x, 1)
                df = lambda x: (self.multiplier_value(j, x, 1)
                                + x * self.multiplier_value(j, x, 2))
            tab = HermiteTable.from_function(f, df, size, 0.01, fill=0.0)
            self._cache[(key, j)] = tab
        return tab

    def multiplier(self, j, derivative=False):
        """m_j (or u m_j'(u) with ``derivative``) as a tabulated dilation multiplier."""
        self._check(j)
        key = "g" if derivative else "m"
        inner, outer = self.kernel_annulus(j)

        def func(u):
            u = np.asarray(u, dtype=float)
            if u.size == 0:
                return np.zeros(u.shape)
            return self._table(key, j, float(u.max()))(u)

        label = f"{'rdm' if derivative else 'm'}_{j}"
        return DilationMultiplier(func, inner, outer, label,
                                  deriv=None if derivative else (lambda u: self.multiplier_value(j, u, 1)))

    # -- export ---------------------------------------------------------------

    def flatness_residuals(self, floor=False):
        a = self.coefficients_floor if floor else self.coefficients
        return _flatness_residuals(self.setting, self.taylor, a)

    @property
    def grid_id(self):
        return f"bump{self.s:g}_h{self.table_step:g}_n{self.support_nodes}"

    def manifest(self):
        return {
            "setting": self.setting.to_dict(),
            "bump": {"form": "exp(-1/(1-(u/s)^2)) for u < s", "s": f"{self.s:.17g}"},
            "coefficients": [f"{a:.17g}" for a in self.coefficients],
            "coefficients_floor": [f"{a:.17g}" for a in self.coefficients_floor],
            "J0": self.J0,
            "t": f"{self.t:.17g}",
            "J": self.J,
            "grid_id": self.grid_id,
            "residuals_ceil": [f"{r:.6e}" for r in self.flatness_residuals()],
            "residuals_floor": [f"{r:.6e}" for r in self.flatness_residuals(floor=True)],
        }

    def manifest_json(self):
        return json.dumps(self.manifest(), indent=2, sort_keys=True)


@lru_cache(maxsize=16)
def dyadic_family(setting, s=0.5, J=8, table_step=0.0625, support_nodes=128):
    """Cached :class:`DyadicFamily` constructor."""
    return DyadicFamily(setting, s, J, table_step, support_nodes)


def dyadic_piece(family, j):
    """psi_j as a radial profile in the frequency variable."""
    family._check(j)
    return RadialFunction(lambda y: family.piece(j, y), family.ycut * 2.0 ** j,
                          family.piece_radius(j), label=f"psi_{j}")


def multiplier_mj(setting, family, j):
    return family.multiplier(j)


# ---------------------------------------------------------------------------
# kernels in space


def _sphere_average_compact(setting, g, rad, x, panels=24, order=16):
    """S_1 g(x) for radial g supported in the ball of radius rad < 1.

    With z^2 = x^2 + 1 - 2 x t and z^2 = |x-1|^2 + tau^2 the product formula
    becomes an integral over tau in [0, sqrt(rad^2 - (x-1)^2)] with weight
    tau^(2 lam) and a smooth remaining factor.
    """
    lam = setting.lam
    x = np.atleast_1d(np.asarray(x, dtype=float))
    const = math.exp(gammaln(lam + 1) - gammaln(lam + 0.5)) / math.sqrt(math.pi)
    out = np.zeros(len(x))
    zlo = np.abs(x - 1)
    live = (zlo < rad) & (x > 0)
    for i in np.nonzero(live)[0]:
        xi, lo = x[i], zlo[i]
        T = math.sqrt(rad * rad - lo * lo)
        rule = panel_rule(0.0, T, T / panels, order=order,
                          origin_power=2 * lam if lam != 0 else None)
        tau = rule.nodes
        z = np.sqrt(lo * lo + tau * tau)
        upper = ((xi + 1) ** 2 - z * z) / (2 * xi)
        fac = (2 * xi) ** (0.5 - lam) / xi * upper ** (lam - 0.5)
        out[i] = const * np.dot(rule.weights, g(z) * fac)
    return out


def kernel_phi_j(setting, family, j):
    """phi_j = c_gamma S_1[inverse transform of psi_j], exactly supported in its annulus."""
    family._check(j)
    if family.s >= 1:
        raise ValueError("space-side kernels need bump radius s < 1")
    g = family.piece_inverse(j)
    rad = family.piece_radius(j)
    cg = setting.c_gamma
    inner, outer = family.kernel_annulus(j)

    def phi(x):
        x = np.asarray(x, dtype=float)
        flat = np.abs(x).ravel()
        return (cg * _sphere_average_compact(setting, g, rad, flat)).reshape(x.shape)

    return RadialFunction(phi, outer, family.multiplier_cutoff(j), support=outer,
                          label=f"phi_{j}",
                          dual=lambda st, u: family.multiplier_value(j, u))


# ---------------------------------------------------------------------------
# maximal functions and square functions


def level_x_grid(f, j, base=XGrid(), reach=LEVEL_REACH):
    """Output grid long enough for level-j profiles of f.

    The shell of phi_{j,r} has width about r 2^-j, so f * phi_{j,r} only
    settles into its x^-D tail once x is a multiple of 2^j times the extent
    of f; ``x_max`` grows accordingly so tail fits see the asymptotic regime.
    """
    x_max = max(base.x_max, reach * 2.0 ** j * f.extent)
    return XGrid(base.per_decade, base.x_min, float(x_max))


def level_family(setting, p=2.0):
    """Small family of distinct shapes for per-level norm estimates.

    Norm ratios are dilation invariant, so one member per shape suffices: a
    Gaussian, a smoothed plateau, a ring, and a power-law profile just
    inside L^p.
    """
    return [gaussian(0.4), plateau(0.6, 0.2), ring(1.0, 0.3),
            power_profile(0.99 * setting.D / p, sigma_min=0.4, scales=8)]


def level_r_grid(j, per_unit=LEVEL_R_DENSITY):
    """Radius grid for square functions at level j.

    Along log r the integrand oscillates on a scale of 2^-j, so the density
    per decade grows like 2^j.
    """
    return RGrid(max(64, int(per_unit * 2 ** j)), refine_iters=0)


def maximal_phi_j(setting, family, f, j, r_grid=RGrid(), x_grid=None):
    """sup_r |f * phi_{j,r}| on the output grid (level-scaled by default)."""
    if x_grid is None:
        x_grid = level_x_grid(f, j)
    return maximal_sweep(setting, f, family.multiplier(j), r_grid, x_grid,
                         operator=f"maximal_phi_{j}")


def square_function(setting, f, mult, r_grid=RGrid(64, refine_iters=0), x_grid=XGrid(),
                    label="g", warn_tol=1e-6):
    """(int_0^inf |F_k^-1[F_k f * m(r .)](x)|^2 dr/r)^(1/2) on the output grid.

    The kernel annulus must stay away from the origin so the r-range is
    finite; contributions at the ends of the grid above ``warn_tol`` of the
    integral emit a :class:`TruncationWarning`.
    """
    setting.require_maximal()
    if mult.inner <= 0:
        raise ValueError("square functions need a kernel supported away from the origin")
    x = x_grid.points()
    radii = r_grid.points()
    cap = (x[-1] + f.extent) / mult.inner * (1 + 1e-9)
    if radii[-1] > cap:
        radii = radii[radii <= cap * 10 ** (2.0 / r_grid.per_decade)]
    if len(radii) < 3:
        raise EmptyGridError("too few radii for the square function")
    sweep = _BlockedSweep(setting, f, mult, x, radii[-1])
    vals = sweep.grid(radii) ** 2
    lr = np.log(radii)
    total = simpson(vals, x=lr, axis=1)
    ends = vals[:, 0] * (1.0 / max(setting.D / 2, 1.0))
    if np.any(ends > warn_tol * np.maximum(total, 1e-300)):
        warnings.warn(f"{label}: contribution below r_min exceeds {warn_tol:g}",
                      TruncationWarning, stacklevel=2)
    out = np.sqrt(np.maximum(total, 0.0))
    return MaximalProfile(setting, f, label, x, out, radii, None, 0, r_grid, x_grid)


def g_function(setting, family, f, j, r_grid=None, x_grid=None):
    """Square function of f * phi_{j,r} over dr/r, for j >= 1."""
    if j < 1:
        raise LevelError("the square function needs j >= 1 (m_0(0) != 0)")
    if x_grid is None:
        x_grid = level_x_grid(f, j)
    if r_grid is None:
        r_grid = level_r_grid(j)
    return square_function(setting, f, family.multiplier(j), r_grid, x_grid,
                           label=f"g_{j}")


def g_tilde_function(setting, family, f, j, r_grid=None, x_grid=None):
    """Square function with the multiplier u m_j'(u), i.e. r d/dr phi_{j,r}."""
    if j < 1:
        raise LevelError("the square function needs j >= 1")
    if x_grid is None:
        x_grid = level_x_grid(f, j)
    if r_grid is None:
        r_grid = level_r_grid(j)
    return square_function(setting, f, family.multiplier(j, derivative=True), r_grid,
                           x_grid, label=f"gt_{j}")


def multiplier_l2_mass(family, j, derivative=False, per_unit=64):
    """int_0^inf |M(u)|^2 du/u for M = m_j (or u m_j'), by quadrature in log u.

    By Plancherel this is exactly ||g_j f||_2^2 / ||f||_2^2 for every f.
    """
    lo = 1e-6
    hi = family.multiplier_cutoff(j)
    rule = panel_rule(math.log(lo), math.log(hi), 1.0 / per_unit, order=16)
    u = np.exp(rule.nodes)
    if derivative:
        vals = u * family.multiplier_value(j, u, 1)
    else:
        vals = family.multiplier_value(j, u)
    return float(np.dot(rule.weights, vals ** 2))


def psi1_power_bound(family, decades=2, points=41):
    """Small-argument behaviour of psi_1 on [10^-decades t, t].

    Returns (C, ratios, slope): C = max |psi_1(y)| / y^(D/2) over the window,
    the pointwise ratios log|psi_1(y)| / log(y) on the lowest decade, and the
    fitted log-log slope.
    """
    D = family.setting.D
    t = family.t
    y = t * np.geomspace(10.0 ** -decades, 1.0, points)
    v = np.abs(family.piece(1, y))
    C = float(np.max(v / y ** (D / 2)))
    low = y <= t * 10.0 ** (1 - decades)
    ratios = np.log(v[low]) / np.log(y[low])
    slope = float(np.polyfit(np.log(y[low]), np.log(v[low]), 1)[0])
    return C, ratios, slope


# ---------------------------------------------------------------------------
# slope fits


@dataclass
class DecaySlopeFit:
    """Least-squares fit log2(value) = intercept + slope * j."""

    series: list
    slope: float
    intercept: float
    window: tuple
    residual: float

    def to_dict(self):
        return {"series": [[int(j), float(v)] for j, v in self.series],
                "slope": self.slope, "intercept": self.intercept,
                "window": list(self.window), "residual": self.residual}


def decay_slope_fit(series, window=None):
    """Fit log2(value) against j over ``window`` = (j_min, j_max)."""
    pairs = sorted((int(j), float(v)) for j, v in series)
    if window is not None:
        pairs = [(j, v) for j, v in pairs if window[0] <= j <= window[1]]
    if len(pairs) < 4:
        raise DegenerateFitError("need at least 4 levels for a slope fit")
    js = np.array([p[0] for p in pairs], dtype=float)
    vs = np.array([p[1] for p in pairs])
    if not np.all(np.isfinite(vs)) or np.any(vs <= 0):
        raise DegenerateFitError("values must be positive and finite")
    lv = np.log2(vs)
    A = np.stack([np.ones_like(js), js], axis=1)
    coef, *_ = np.linalg.lstsq(A, lv, rcond=None)
    resid = lv - A @ coef
    return DecaySlopeFit(pairs, float(coef[1]), float(coef[0]),
                         (int(js[0]), int(js[-1])), float(np.sqrt(np.mean(resid ** 2))))
