import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dunklmax import MultiplicitySetting
from dunklmax.radial import (
    DivergenceError,
    GridMismatchError,
    GridSpec,
    RadialFunction,
    ResolutionError,
    apply_multiplier,
    convolve_radial,
    dunkl_transform_radial,
    gaussian,
    gaussian_moment,
    inverse_transform_radial,
    line_lp_norm,
    plateau,
    radial_rule,
    read_csv,
    ring,
    smooth_test_set,
    sphere_transform,
    sphere_transform_direct,
    sphere_transform_radial_derivative,
    spectrum,
    translate_rank1,
    write_csv,
)
from dunklmax.special import normalized_bessel

RHO = np.linspace(0.0, 6.0, 61)


def strip(f):
    from dataclasses import replace
    return replace(f, dual=None)


def test_gaussian_is_transformed_to_closed_form(setting):
    for a in (0.5, 1.0, 1.8):
        f = gaussian(a)
        num = dunkl_transform_radial(setting, strip(f))
        assert np.max(np.abs(num(RHO) - f.dual(setting, RHO))) < 1e-12


def test_unit_gaussian_is_a_fixed_point(setting):
    F = dunkl_transform_radial(setting, strip(gaussian(1.0)))
    assert np.allclose(F(RHO), np.exp(-RHO ** 2 / 2), atol=1e-13)


def test_plateau_transform_against_mpmath():
    s = MultiplicitySetting(2, (0.5, 0.5))
    f = plateau(1.0, 0.2)
    F = dunkl_transform_radial(s, f)
    mp.mp.dps = 20
    for rho in (0.0, 1.3, 4.0):
        ref = s.c_gamma * mp.quad(
            lambda r: float(f(float(r))) * float(normalized_bessel(s.lam, float(rho * r)))
            * r ** (s.D - 1), np.linspace(0, f.extent, 9).tolist())
        assert abs(F(np.array([rho]))[0] - float(ref)) < 1e-11


def test_transform_is_involutive(setting):
    f = ring(1.5, 0.4)
    back = inverse_transform_radial(setting, dunkl_transform_radial(setting, f))
    r = np.linspace(0, 4, 41)
    assert np.max(np.abs(back(r) - f(r))) < 1e-10


@given(a=st.floats(0.3, 3.0), b=st.floats(0.0, 4.0))
@settings(max_examples=25, deadline=None)
def test_plancherel_for_modulated_gaussians(a, b):
    from dunklmax.radial import modulated_gaussian
    s = MultiplicitySetting(1, (1.0,))
    f = modulated_gaussian(a, b)
    F = dunkl_transform_radial(s, f)
    rf = radial_rule(s, f.extent, 2 * f.band)
    rF = radial_rule(s, F.extent, 2 * F.band)
    n0 = np.dot(rf.weights, f(rf.nodes) ** 2)
    n1 = np.dot(rF.weights, F(rF.nodes) ** 2)
    assert n1 / n0 == pytest.approx(1.0, abs=1e-9)


def test_dilation_rule(setting):
    f, a = gaussian_moment(0.8, 1), 1.7
    lhs = dunkl_transform_radial(setting, f.dilate(a))(RHO)
    rhs = a ** setting.D * dunkl_transform_radial(setting, f)(a * RHO)
    assert np.max(np.abs(lhs - rhs)) < 1e-11 * a ** setting.D
    g = gaussian(0.9).dilate(a)
    assert np.allclose(g.dual(setting, RHO), gaussian(0.9 * a).dual(setting, RHO))


def test_scaled_and_abs():
    f = ring(1.0, 0.3).scaled(-2.0)
    r = np.linspace(0, 2, 9)
    assert np.allclose(f.abs()(r), 2 * ring(1.0, 0.3)(r))
    s = MultiplicitySetting(1, (1.0,))
    g = gaussian(1.0).scaled(3.0)
    assert np.allclose(g.dual(s, RHO), 3 * np.exp(-RHO ** 2 / 2))


def test_compact_support_is_respected():
    f = RadialFunction(lambda r: np.ones_like(r), 1.0, 10.0, support=1.0)
    assert f(np.array([0.5, 1.5])).tolist() == [1.0, 0.0]


def test_slowly_decaying_input_is_rejected():
    s = MultiplicitySetting(1, (1.0,))
    f = RadialFunction(lambda r: 1 / (1 + np.asarray(r) ** 2), 10.0, 5.0, label="lorentz")
    with pytest.raises(DivergenceError):
        dunkl_transform_radial(s, f)


def test_unresolvable_input_is_rejected():
    s = MultiplicitySetting(1, (1.0,))
    with pytest.raises(ResolutionError):
        radial_rule(s, 1e4, 1e4)


def test_csv_round_trip(tmp_path):
    f = gaussian(0.7)
    path = tmp_path / "g.csv"
    write_csv(path, f, GridSpec(400, 1e-3, 20.0))
    g = read_csv(path)
    r = np.linspace(0, 5, 101)
    assert np.max(np.abs(g(r) - f(r))) < 1e-6
    assert g.knots is not None and g.grid[0] == 0.0
    assert np.allclose(g.values, f(g.grid))


def test_sampled_profile_transform():
    s = MultiplicitySetting(3)
    r, v = gaussian(1.0).samples(GridSpec(3000, 1e-4, 12.0))
    f = RadialFunction.from_samples(r, v)
    F = dunkl_transform_radial(s, f)
    assert np.max(np.abs(F(RHO[:31]) - np.exp(-RHO[:31] ** 2 / 2))) < 1e-6
    with pytest.raises(ValueError):
        RadialFunction.from_samples([0.0, 2.0, 1.0], [1, 2, 3])


def test_convolution_of_gaussians(setting):
    a, b = 0.6, 0.9
    c = math.hypot(a, b)
    h = convolve_radial(setting, strip(gaussian(a)), strip(gaussian(b)))
    exact = gaussian(c).scaled((a * b / c) ** setting.D)
    r = np.linspace(0, 4, 41)
    assert np.max(np.abs(h(r) - exact(r))) < 1e-10
    closed = convolve_radial(setting, gaussian(a), gaussian(b))
    assert np.allclose(spectrum(setting, closed)(RHO), exact.dual(setting, RHO))


def test_convolution_requires_matching_sample_grids():
    s = MultiplicitySetting(1, (1.0,))
    f = RadialFunction.from_samples(*gaussian(1.0).samples(GridSpec(200, 1e-3, 12.0)))
    g = RadialFunction.from_samples(*gaussian(1.0).samples(GridSpec(300, 1e-3, 12.0)))
    with pytest.raises(GridMismatchError):
        convolve_radial(s, f, g)


def test_identity_multiplier(setting):
    f = plateau(1.0, 0.2)
    g = apply_multiplier(setting, f, lambda rho: np.ones_like(rho), 5.0)
    r = np.linspace(0, 3, 31)
    assert np.max(np.abs(g(r) - f(r))) < 1e-10
    assert g(np.array([6.0]))[0] == 0.0


def test_sphere_transform_closed_form_by_quadrature():
    for s in (MultiplicitySetting(1, (1.0,)), MultiplicitySetting(2, (0.5, 0.5)),
              MultiplicitySetting(3)):
        r = np.linspace(0, 30, 61)
        u = np.array([0.6, 0.8, 0.0][:s.d]) if s.d > 1 else np.array([1.0])
        u = u / np.linalg.norm(u)
        order = 24 if s.d == 1 else 70
        direct = sphere_transform_direct(s, r[:, None] * u, order=order)
        assert np.max(np.abs(direct - sphere_transform(s, r))) < 1e-10
    s3 = MultiplicitySetting(3)
    r = np.linspace(0.1, 20, 50)
    assert np.allclose(sphere_transform(s3, r), 4 * math.pi * np.sin(r) / r
                       / (2 * math.pi) ** 1.5, atol=1e-14)


def test_sphere_transform_derivative(setting):
    r, h = np.linspace(0.5, 20, 40), 1e-5
    fd = (sphere_transform(setting, r + h) - sphere_transform(setting, r - h)) / (2 * h) / r
    assert np.max(np.abs(sphere_transform_radial_derivative(setting, r) - fd)) < 1e-9


def test_smooth_test_set():
    fs = smooth_test_set()
    assert len(fs) == 20 and len({f.label for f in fs}) == 20


@pytest.mark.parametrize("k", [0.0, 0.5, 1.0])
def test_rank_one_translation(k):
    f = gaussian(0.7)
    for x in (0.5, 2.0):
        t = translate_rank1(k, x, f)
        assert abs(t(np.array([0.0]))[0] - f(x)) < 1e-12
        l1 = line_lp_norm(k, t, 1, t.extent, f.band) / line_lp_norm(k, f, 1, f.extent, f.band)
        l2 = line_lp_norm(k, t, 2, t.extent, f.band) / line_lp_norm(k, f, 2, f.extent, f.band)
        assert l1 == pytest.approx(1.0, abs=1e-10)
        assert l2 <= 1 + 1e-10
    if k == 0.0:
        y = np.linspace(-3, 3, 25)
        assert np.max(np.abs(translate_rank1(0.0, 0.8, f)(y) - f(y + 0.8))) < 1e-12


def _line_integral(k, func, extent, freq):
    from dunklmax.special import panel_rule
    half = panel_rule(0.0, extent, min(2 * math.pi / freq, extent / 4), origin_power=2 * k)
    y = np.concatenate([-half.nodes[::-1], half.nodes])
    w = np.concatenate([half.weights[::-1], half.weights])
    return float(np.dot(w, func(y)))


@pytest.mark.parametrize("k", [0.5, 1.0])
def test_translation_is_self_adjoint(k):
    f, g, x = gaussian(0.7), ring(1.0, 0.3), 1.3
    tf, tg = translate_rank1(k, x, f), translate_rank1(k, x, g)
    ext = x + max(f.extent, g.extent)
    freq = 2 * max(f.band, g.band)
    lhs = _line_integral(k, lambda y: tf(y) * g(y), ext, freq)
    rhs = _line_integral(k, lambda y: f(y) * tg(y), ext, freq)
    assert abs(lhs - rhs) <= 1e-8 * abs(lhs)


def test_translation_contracts_radial_test_set():
    k = 1.0
    for f in smooth_test_set()[::4]:
        t = translate_rank1(k, 0.9, f)
        for p in (1, 2):
            ratio = line_lp_norm(k, t, p, t.extent, f.band) / line_lp_norm(k, f, p, f.extent, f.band)
            assert ratio <= 1 + 1e-6
