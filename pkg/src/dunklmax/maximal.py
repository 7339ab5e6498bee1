"""Spherical means, maximal functions and empirical operator norms.

All operators act on radial inputs and are evaluated on the frequency side:
a dilation family of multipliers m(r |xi|) is applied to F_k f and the
result is transformed back on a fixed set of output radii.  For a sweep over
many radii the output is one dense product

    values[x, r] = sum_n c_gamma j_lam(x rho_n) w_n F_k f(rho_n) m(r rho_n),

so the cost is a single matrix multiply per block of radii.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict
from typing import Callable, Optional

import numpy as np
from scipy.integrate import simpson
from scipy.special import gammaln, ive

from .parallel import pmap
from .radial import (
    DivergenceError,
    RadialFunction,
    apply_multiplier,
    gaussian,
    hankel_matrix,
    lp_tail_check,
    plateau,
    radial_rule,
    ring,
    spectral_rule,
    spectrum,
)
from .setting import HypothesisError, MultiplicitySetting
from .special import bessel_table, gauss_jacobi, gauss_legendre, normalized_bessel, panel_rule

__all__ = [
    "RGrid",
    "XGrid",
    "DilationMultiplier",
    "MaximalProfile",
    "NormReport",
    "EmptyGridError",
    "sphere_multiplier",
    "ball_multiplier",
    "ball_multiplier_quadrature",
    "spherical_mean",
    "spherical_mean_direct",
    "gaussian_spherical_mean",
    "maximal_sweep",
    "spherical_maximal",
    "hl_maximal",
    "lp_norm",
    "profile_norm",
    "superlevel_measure",
    "weak_type_ratio",
    "operator_norm_estimate",
    "power_profile",
    "standard_family",
]

GOLDEN = (math.sqrt(5) - 1) / 2
# radii beyond CAP_FACTOR * (x_max + extent) are skipped for kernels that are
# not hollow; the averages there decay like r^-D
CAP_FACTOR = 2.0
SWEEP_CHUNK = 1_000_000
SWEEP_RADII = 16


class EmptyGridError(ValueError):
    pass


@dataclass(frozen=True)
class RGrid:
    """Geometric radius grid r_i = r_min * 10^(i / per_decade), r_i <= r_max."""

    per_decade: int = 512
    r_min: float = 1e-3
    r_max: float = 1e3
    refine_iters: int = 6

    def points(self):
        if self.per_decade < 1 or not self.r_min < self.r_max:
            raise EmptyGridError("radius grid is empty")
        n = int(math.floor(self.per_decade * math.log10(self.r_max / self.r_min) + 1e-9))
        return self.r_min * 10.0 ** (np.arange(n + 1) / self.per_decade)

    def doubled(self):
        return RGrid(2 * self.per_decade, self.r_min, self.r_max, self.refine_iters)

    @property
    def grid_id(self):
        return f"r{self.per_decade}_{self.r_min:g}_{self.r_max:g}_g{self.refine_iters}"


@dataclass(frozen=True)
class XGrid:
    """Output radii: the origin plus a geometric grid up to x_max."""

    per_decade: int = 32
    x_min: float = 1e-2
    x_max: float = 16.0

    def points(self):
        n = int(math.floor(self.per_decade * math.log10(self.x_max / self.x_min) + 1e-9))
        return np.concatenate([[0.0], self.x_min * 10.0 ** (np.arange(n + 1) / self.per_decade)])

    def doubled(self):
        return XGrid(2 * self.per_decade, self.x_min, self.x_max)

    @property
    def grid_id(self):
        return f"x{self.per_decade}_{self.x_min:g}_{self.x_max:g}"


@dataclass(frozen=True, eq=False)
class DilationMultiplier:
    """Frequency profile m applied at radius r as m(r |xi|).

    The r = 1 kernel (inverse transform of m) lives in the annulus
    ``inner <= |x| <= outer``; ``deriv`` is m' when known.
    """

    func: Callable
    inner: float
    outer: float
    label: str
    deriv: Optional[Callable] = None

    def __call__(self, u):
        return self.func(u)


def _table_eval(nu):
    def ev(u):
        u = np.asarray(u, dtype=float)
        if u.size == 0:
            return np.zeros(u.shape)
        return bessel_table(nu, float(u.max()) + 1.0)(u)
    return ev


def sphere_multiplier(setting):
    """j_lam(u): the spherical-mean multiplier (normalized so m(0) = 1)."""
    return DilationMultiplier(_table_eval(setting.lam), 1.0, 1.0, "sphere")


def ball_multiplier(setting):
    """Normalized ball average D int_0^1 j_lam(u s) s^(D-1) ds = j_{lam+1}(u)."""
    return DilationMultiplier(_table_eval(setting.lam + 1), 0.0, 1.0, "ball")


def ball_multiplier_quadrature(setting, u, order=16):
    """Numerical D int_0^1 j_lam(u s) s^(D-1) ds (independent check of the closed form)."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    D = setting.D
    width = min(0.25, 2 * math.pi / max(u.max(), 1.0))
    rule = panel_rule(0.0, 1.0, width, order=order, origin_power=D - 1)
    vals = normalized_bessel(setting.lam, np.abs(np.outer(u, rule.nodes)))
    return D * vals @ rule.weights


# ---------------------------------------------------------------------------
# single spherical means


def spherical_mean(setting, f, r):
    """S_r f for radial f, as a lazy radial profile supported in extent(f) + r."""
    setting.require_maximal()
    r = float(r)
    if not r > 0:
        raise ValueError("radius must be positive")
    m = sphere_multiplier(setting)
    return apply_multiplier(setting, f, lambda rho: m(r * rho), f.extent + r,
                            mult_reach=r, label=f"S_{r:g}[{f.label}]")


def spherical_mean_direct(setting, f, r, x, panels=64, order=16):
    """S_r f(x) from the spherical product formula for radial f.

    S_r f(x) = C_lam int_0^pi F(sqrt(x^2 + r^2 - 2 x r cos t)) sin(t)^(2 lam) dt,
    C_lam = Gamma(lam + 1) / (sqrt(pi) Gamma(lam + 1/2)).  It shares no code
    with the spectral route and serves as its oracle.
    """
    lam = setting.lam
    x = np.atleast_1d(np.asarray(x, dtype=float))
    edges = np.linspace(0.0, math.pi, panels + 1)
    nodes, weights = [], []
    for i in range(panels):
        a, b = edges[i], edges[i + 1]
        if i == 0 and lam != 0:
            q = gauss_jacobi(order, a, b, 2 * lam)
            t, w = q.nodes, q.weights * (np.sinc(q.nodes / math.pi)) ** (2 * lam)
        elif i == panels - 1 and lam != 0:
            q = gauss_jacobi(order, 0.0, b - a, 2 * lam)
            t = math.pi - q.nodes
            w = q.weights * (np.sinc(q.nodes / math.pi)) ** (2 * lam)
        else:
            q = gauss_legendre(order, a, b)
            t, w = q.nodes, q.weights * np.sin(q.nodes) ** (2 * lam)
        nodes.append(t)
        weights.append(w)
    t = np.concatenate(nodes)
    w = np.concatenate(weights)
    const = math.exp(gammaln(lam + 1) - gammaln(lam + 0.5)) / math.sqrt(math.pi)
    z = np.sqrt(np.maximum(x[:, None] ** 2 + r * r - 2 * x[:, None] * r * np.cos(t)[None, :], 0.0))
    return const * (f(z) @ w)


def gaussian_spherical_mean(setting, width, r, x):
    """Closed form of S_r applied to exp(-|y|^2 / (2 width^2)).

    Equals exp(-(x^2 + r^2) / 2a^2) j_lam(i x r / a^2), with j_lam(i y) =
    Gamma(lam + 1) (2/y)^lam I_lam(y); for d = 3, k = 0 this is the classical
    exp(-(x^2+r^2)/2) sinh(x r)/(x r) at a = 1.
    """
    lam = setting.lam
    a2 = width * width
    x = np.asarray(x, dtype=float)
    y = x * r / a2
    ys = np.where(y == 0, 1.0, y)
    jl = np.exp(gammaln(lam + 1) + lam * np.log(2 / ys)) * ive(lam, ys)
    jl = np.where(y == 0, 1.0, jl)
    return np.exp(-0.5 * (x - r) ** 2 / a2) * jl


# ---------------------------------------------------------------------------
# maximal functions


@dataclass(eq=False)
class MaximalProfile:
    """Pointwise sup over a radius grid, sampled at the output radii ``x``."""

    setting: MultiplicitySetting
    input: RadialFunction
    operator: str
    x: np.ndarray
    values: np.ndarray
    radii: np.ndarray
    argmax: np.ndarray
    refinements: int
    r_grid: RGrid
    x_grid: XGrid
    recompute: Optional[Callable] = field(default=None, repr=False)

    def norm(self, p):
        return profile_norm(self.setting, self.x, self.values, p)

    def as_radial(self):
        return RadialFunction.from_samples(self.x, self.values, extent=self.x[-1],
                                           label=f"{self.operator}[{self.input.label}]")

    def refined(self):
        """Profile on the doubled r-grid, never below the current values."""
        if self.recompute is None:
            raise ValueError("profile cannot be refined")
        new = self.recompute(self.r_grid.doubled())
        better = new.values >= self.values
        new.values = np.where(better, new.values, self.values)
        new.argmax = np.where(better, new.argmax, self.argmax)
        new.refinements = self.refinements + 1
        return new


class _Sweep:
    """Dense evaluator of x -> F_k^-1[F_k f * m(r .)](x) for many r."""

    def __init__(self, setting, f, mult, x, r_cap):
        self.mult = mult
        self.x = x
        self.reach = f.extent
        self.r_cap = r_cap
        fh = spectrum(setting, f)
        freq = x.max() + r_cap * max(mult.outer, 1e-3) + f.extent
        rule = spectral_rule(setting, f.band, freq)
        self.rho = rule.nodes
        coef = rule.weights * fh(self.rho)
        self.A = hankel_matrix(setting, x, self.rho) * coef[None, :]

    def _active(self, radii):
        """Per-x index range [i0, i1) of radii whose kernel annulus can reach f."""
        lo = np.maximum(self.x - self.reach, 0.0) / self.mult.outer
        i0 = np.searchsorted(radii, lo * (1 - 1e-9))
        if self.mult.inner > 0:
            hi = (self.x + self.reach) / self.mult.inner
            i1 = np.searchsorted(radii, hi * (1 + 1e-9), side="right")
        else:
            i1 = np.full(len(self.x), np.searchsorted(radii, self.r_cap * (1 + 1e-9), side="right"))
        return i0, i1

    def grid(self, radii):
        """Values at every (x, r) pair; pairs outside the support are exactly 0."""
        out = np.zeros((len(self.x), len(radii)))
        i0, i1 = self._active(radii)
        step = max(1, min(SWEEP_CHUNK // len(self.rho), SWEEP_RADII))
        cols = np.arange(len(radii))
        for i in range(int(i0.min()), int(i1.max()), step):
            k = min(i + step, len(radii))
            rows = np.nonzero((i1 > i) & (i0 < k))[0]
            if len(rows) == 0:
                continue
            a, b = rows[0], rows[-1] + 1
            B = self.mult(np.outer(self.rho, radii[i:k]))
            blk = self.A[a:b] @ B
            c = cols[i:k]
            inside = (c[None, :] >= i0[a:b, None]) & (c[None, :] < i1[a:b, None])
            out[a:b, i:k] = np.where(inside, blk, 0.0)
        return out

    def pointwise(self, radii):
        """Value at x_i with its own radius radii[i]."""
        out = np.empty(len(self.x))
        step = max(1, SWEEP_CHUNK // len(self.rho))
        for i in range(0, len(self.x), step):
            M = self.mult(radii[i:i + step, None] * self.rho[None, :])
            out[i:i + step] = np.einsum("ij,ij->i", self.A[i:i + step], M)
        return out


class _BlockedSweep:
    """Sweep split into octave blocks of output radii.

    Each block gets its own frequency rule sized for its largest x and the
    largest radius whose kernel annulus can still reach f, so points near
    the origin do not pay for the far field.
    """

    def __init__(self, setting, f, mult, x, r_max):
        self.x = x
        e = f.extent
        edges = [max(2.0 * e, x[x > 0][0] if np.any(x > 0) else 1.0)]
        while edges[-1] < x[-1]:
            edges.append(2.0 * edges[-1])
        self.blocks = []
        start = 0
        for edge in edges:
            stop = int(np.searchsorted(x, edge * (1 + 1e-12), side="right"))
            if stop > start:
                xb = x[start:stop]
                cap = min(_radius_cap(mult, f, xb[-1], r_max), r_max)
                self.blocks.append((start, stop, _Sweep(setting, f, mult, xb, cap)))
                start = stop
        if start < len(x):
            cap = min(_radius_cap(mult, f, x[-1], r_max), r_max)
            self.blocks.append((start, len(x), _Sweep(setting, f, mult, x[start:], cap)))

    def grid(self, radii):
        out = np.zeros((len(self.x), len(radii)))
        for a, b, sw in self.blocks:
            out[a:b] = sw.grid(radii)
        return out

    def pointwise(self, radii):
        out = np.empty(len(self.x))
        for a, b, sw in self.blocks:
            out[a:b] = sw.pointwise(radii[a:b])
        return out


def _radius_cap(mult, f, x_max, r_max):
    reach = x_max + f.extent
    cap = reach / mult.inner * (1 + 1e-9) if mult.inner > 0 else CAP_FACTOR * reach
    return min(cap, r_max)


def maximal_sweep(setting, f, mult, r_grid=RGrid(), x_grid=XGrid(), operator=None):
    """sup_r |F_k^-1[F_k f * m(r .)]| on the output grid, with golden-section refinement.

    Radii whose kernel annulus cannot reach the output range are dropped;
    around each point's discrete argmax a golden-section search in log r
    runs for ``r_grid.refine_iters`` steps.  Returned values are the max of
    all evaluated radii.
    """
    setting.require_maximal()
    x = x_grid.points()
    radii = r_grid.points()
    radii = radii[radii <= _radius_cap(mult, f, x[-1], r_grid.r_max)]
    if len(radii) == 0:
        raise EmptyGridError("no radii left in the grid")
    sweep = _BlockedSweep(setting, f, mult, x, radii[-1])
    vals = np.abs(sweep.grid(radii))
    idx = np.argmax(vals, axis=1)
    best = vals[np.arange(len(x)), idx]
    arg = radii[idx]
    if r_grid.refine_iters > 0 and len(radii) > 2:
        lo = np.log(radii[np.clip(idx - 1, 0, len(radii) - 1)])
        hi = np.log(radii[np.clip(idx + 1, 0, len(radii) - 1)])
        c = hi - GOLDEN * (hi - lo)
        d = lo + GOLDEN * (hi - lo)
        fc = np.abs(sweep.pointwise(np.exp(c)))
        fd = np.abs(sweep.pointwise(np.exp(d)))
        for _ in range(r_grid.refine_iters):
            left = fc > fd
            lo = np.where(left, lo, c)
            hi = np.where(left, d, hi)
            nc = np.where(left, hi - GOLDEN * (hi - lo), d)
            nd = np.where(left, c, lo + GOLDEN * (hi - lo))
            fnew = np.abs(sweep.pointwise(np.exp(np.where(left, nc, nd))))
            fc, fd = np.where(left, fnew, fd), np.where(left, fc, fnew)
            c, d = nc, nd
            for cand, fv in ((c, fc), (d, fd)):
                up = fv > best
                best = np.where(up, fv, best)
                arg = np.where(up, np.exp(cand), arg)
    name = operator or mult.label

    def recompute(grid):
        return maximal_sweep(setting, f, mult, grid, x_grid, operator=name)

    return MaximalProfile(setting, f, name, x, best, radii, arg, 0, r_grid, x_grid, recompute)


def spherical_maximal(setting, f, r_grid=RGrid(), x_grid=XGrid()):
    """Spherical maximal function M f = sup_r |S_r f|."""
    return maximal_sweep(setting, f, sphere_multiplier(setting), r_grid, x_grid,
                         operator="spherical_maximal")


def hl_maximal(setting, f, r_grid=RGrid(), x_grid=XGrid()):
    """Hardy-Littlewood type maximal function: sup of normalized ball averages."""
    return maximal_sweep(setting, f, ball_multiplier(setting), r_grid, x_grid,
                         operator="hl_maximal")


# ---------------------------------------------------------------------------
# norms and level sets


def lp_norm(setting, f, p):
    """Weighted L^p norm (d_k int |F|^p r^(D-1) dr)^(1/p); p may be inf."""
    if isinstance(f, MaximalProfile):
        return f.norm(p)
    p = float(p)
    if p < 1:
        raise ValueError("p must be >= 1")
    if math.isinf(p):
        rule = radial_rule(setting, f.extent, f.band)
        r = np.linspace(0, f.extent, 4097)
        return float(max(np.abs(f(rule.nodes)).max(), np.abs(f(r)).max()))
    rule = radial_rule(setting, f.extent, p * f.band)
    vals = np.abs(f(rule.nodes))
    lp_tail_check(setting, f, p)
    return float((setting.d_k * np.dot(rule.weights, vals ** p)) ** (1 / p))


def _tail_slope(x, v, window=0.5):
    """Power-law decay exponent a (v ~ x^-a) fitted on [window * x_max, x_max]."""
    sel = (x >= window * x[-1]) & (v > 0)
    if sel.sum() < 3:
        return None
    a, _ = np.polyfit(np.log(x[sel]), np.log(v[sel]), 1)
    return -a


def profile_norm(setting, x, values, p, tail=True):
    """Weighted L^p norm of a sampled profile on an origin-plus-log grid.

    The integral is Simpson in log r; below the first positive radius the
    profile is treated as constant.  With ``tail`` a power law fitted over
    the last octave extends the profile to infinity, and a non-integrable
    tail raises :class:`DivergenceError`.
    """
    x = np.asarray(x, dtype=float)
    v = np.abs(np.asarray(values, dtype=float))
    p = float(p)
    if math.isinf(p):
        return float(v.max())
    D = setting.D
    pos = x > 0
    xs, g = x[pos], v[pos] ** p
    total = simpson(g * xs ** D, x=np.log(xs))
    total += (v[0] ** p if x[0] == 0 else g[0]) * xs[0] ** D / D
    if tail and v[-1] > 0:
        a = _tail_slope(xs, v[pos])
        if a is None or a * p <= D:
            raise DivergenceError(
                f"sampled profile decays like x^-{a if a is not None else 0:.3g}; "
                f"not in L^{p:g} with D = {D:g}")
        total += g[-1] * xs[-1] ** D / (a * p - D)
    return float((setting.d_k * total) ** (1 / p))


def superlevel_measure(setting, x, values, alpha, tail=True):
    """nu_k{|x| : values > alpha} for a sampled radial profile.

    Level crossings are located by linear interpolation; beyond the last
    sample the fitted power-law tail is used.
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(values, dtype=float)
    D = setting.D
    above = v > alpha
    if not above.any():
        return 0.0
    edges = np.diff(np.concatenate([[0], above.astype(np.int8), [0]]))
    starts = np.nonzero(edges == 1)[0]
    stops = np.nonzero(edges == -1)[0] - 1
    total = 0.0
    for i0, i1 in zip(starts, stops):
        if i0 == 0:
            a = 0.0
        else:
            t = (alpha - v[i0 - 1]) / (v[i0] - v[i0 - 1])
            a = x[i0 - 1] + t * (x[i0] - x[i0 - 1])
        if i1 == len(x) - 1:
            b = x[-1]
            if tail:
                slope = _tail_slope(x[x > 0], v[x > 0])
                if slope is not None and slope > 0:
                    b = x[-1] * (v[-1] / alpha) ** (1 / slope)
                else:
                    b = math.inf
        else:
            t = (v[i1] - alpha) / (v[i1] - v[i1 + 1])
            b = x[i1] + t * (x[i1 + 1] - x[i1])
        total += b ** D - a ** D
    return setting.d_k / D * total


def weak_type_ratio(setting, maximal, f, alphas=None):
    """sup_alpha alpha * nu_k{values > alpha} / ||f||_{1,k}.

    By default alpha runs over the sampled values (just below each), so
    every superlevel set used lies inside the output grid.  Explicit
    ``alphas`` below the last sample use the fitted power-law tail.
    """
    v = maximal.values
    tail = alphas is not None
    if alphas is None:
        pos = np.unique(v[v > 0])
        alphas = pos * (1 - 1e-12)
    norm1 = lp_norm(setting, f, 1)
    best = 0.0
    for a in np.asarray(alphas, dtype=float):
        if a <= 0 or (not tail and a < v[-1] * (1 - 1e-9)):
            continue
        best = max(best, a * superlevel_measure(setting, maximal.x, v, a, tail=tail))
    return best / norm1


# ---------------------------------------------------------------------------
# empirical operator norms


@dataclass
class NormReport:
    """Family sup of ||T f||_{p,k} / ||f||_{p,k} with its provenance."""

    operator: str
    setting: MultiplicitySetting
    p: float
    j: Optional[int]
    estimate: float
    argmax: str
    family: str
    family_size: int
    grid_id: str
    seed: Optional[int]
    ratios: list = field(default_factory=list)

    CSV_FIELDS = ("operator", "d", "gamma", "D", "p", "j", "estimate",
                  "family_size", "grid_id", "seed")

    def to_dict(self):
        out = asdict(self)
        out["setting"] = self.setting.to_dict()
        return out

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        data["setting"] = MultiplicitySetting.from_dict(data["setting"])
        return cls(**data)

    def csv_row(self):
        s = self.setting
        return {"operator": self.operator, "d": s.d, "gamma": f"{s.gamma:.12g}",
                "D": f"{s.D:.12g}", "p": f"{self.p:.12g}",
                "j": "" if self.j is None else self.j,
                "estimate": f"{self.estimate:.12g}", "family_size": self.family_size,
                "grid_id": self.grid_id, "seed": "" if self.seed is None else self.seed}


def operator_norm_estimate(op, setting, p, family, *, op_id=None, strict=False, j=None,
                           family_label="custom", grid_id="", seed=None):
    """Lower bound for the L^p_k operator norm of ``op`` over a test family.

    ``op`` maps a :class:`RadialFunction` to a RadialFunction or a
    :class:`MaximalProfile`.  In strict mode the spherical maximal operator is
    refused outside D/(D-1) < p < D.  Members whose image is not in L^p
    (diverging tail) give an infinite ratio.
    """
    family = list(family)
    if not family:
        raise ValueError("test family is empty")
    op_id = op_id or getattr(op, "__name__", "operator")
    if strict and op_id == "spherical_maximal":
        setting.require_maximal()
        lo, hi = setting.critical_range()
        if not lo < p < hi:
            raise HypothesisError(
                f"p = {p:g} outside ({lo:g}, {hi:g}) for D = {setting.D:g}")

    def ratio(f):
        out = op(f)
        try:
            num = lp_norm(setting, out, p)
        except DivergenceError:
            return math.inf
        return num / lp_norm(setting, f, p)

    ratios = pmap(ratio, family)
    i = int(np.argmax(ratios))
    return NormReport(op_id, setting, float(p), j, float(ratios[i]), family[i].label,
                      family_label, len(family), grid_id, seed, [float(r) for r in ratios])


# ---------------------------------------------------------------------------
# test families


def power_profile(beta, sigma_min=0.1, scales=16):
    """Smooth stand-in for r^-beta on [sigma_min, 1]: a Gaussian scale mixture.

    sum_i sigma_i^-beta exp(-r^2 / 2 sigma_i^2) dlog(sigma) over geometric
    sigma_i in [sigma_min, 1] behaves like r^-beta between the two scales and
    has a closed-form transform.
    """
    sig = np.geomspace(sigma_min, 1.0, scales)
    dl = math.log(sig[1] / sig[0]) if scales > 1 else 1.0
    w = sig ** (-beta) * dl
    parts = [gaussian(s) for s in sig]

    def F(r):
        r = np.asarray(r, dtype=float)
        return sum(wi * g.func(r) for wi, g in zip(w, parts))

    def dual(s, rho):
        rho = np.asarray(rho, dtype=float)
        return sum(wi * g.dual(s, rho) for wi, g in zip(w, parts))

    return RadialFunction(F, parts[-1].extent, parts[0].band,
                          label=f"power({beta:.4g},{sigma_min:g})", dual=dual)


def _mixture(parts, weights, label):
    def F(r):
        return sum(w * g(r) for w, g in zip(weights, parts))

    dual = None
    if all(g.dual is not None for g in parts):
        def dual(s, rho):
            return sum(w * g.dual(s, rho) for w, g in zip(weights, parts))

    return RadialFunction(F, max(g.extent for g in parts), max(g.band for g in parts),
                          label=label, dual=dual)


def standard_family(setting, p=2.0, size=30, seed=0,
                    kinds=("gaussian", "plateau", "power", "mixture"), widths=(0.2, 0.8)):
    """Seeded radial test family of nonnegative smooth profiles.

    Five Gaussians with widths spanning ``widths``, five smoothed plateaus,
    five power-law profiles with exponents approaching D/p from below, then
    random mixtures of Gaussians, rings and plateaus until ``size`` members.
    ``kinds`` selects which of the four groups take part.
    """
    rng = np.random.default_rng(seed)
    lo, hi = widths
    out = []
    if "gaussian" in kinds:
        out += [gaussian(a) for a in np.geomspace(lo, hi, 5)]
    if "plateau" in kinds:
        out += [plateau(a, 0.2) for a in np.geomspace(0.3, 1.2, 5)]
    if "power" in kinds:
        crit = setting.D / p
        out += [power_profile(crit * t) for t in (0.5, 0.75, 0.9, 0.95, 0.99)]
    i = 0
    while "mixture" in kinds and len(out) < size:
        n = int(rng.integers(2, 5))
        parts = []
        for _ in range(n):
            kind = rng.integers(3)
            if kind == 0:
                parts.append(gaussian(rng.uniform(lo, hi)))
            elif kind == 1:
                parts.append(ring(rng.uniform(0.3, 1.5), rng.uniform(0.2, 0.5)))
            else:
                parts.append(plateau(rng.uniform(0.3, 1.2), 0.2))
        weights = rng.uniform(0.2, 1.0, n)
        out.append(_mixture(parts, weights, f"mix{seed}-{i}"))
        i += 1
    return out[:size]


def normalized(setting, f, p):
    """f scaled to unit L^p_k norm."""
    return f.scaled(1.0 / lp_norm(setting, f, p))
