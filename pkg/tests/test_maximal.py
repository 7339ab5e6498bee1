import json
import math

import numpy as np
import pytest
from scipy.special import gamma as G

from dunklmax import HypothesisError, MultiplicitySetting
from dunklmax.maximal import (
    EmptyGridError,
    NormReport,
    RGrid,
    XGrid,
    ball_multiplier,
    ball_multiplier_quadrature,
    gaussian_spherical_mean,
    hl_maximal,
    lp_norm,
    normalized,
    operator_norm_estimate,
    power_profile,
    profile_norm,
    spherical_maximal,
    spherical_mean,
    spherical_mean_direct,
    standard_family,
    superlevel_measure,
    weak_type_ratio,
)
from dunklmax.radial import DivergenceError, dunkl_transform_radial, gaussian, plateau, ring

D_SETTINGS = [MultiplicitySetting(1, (1.0,)), MultiplicitySetting(2, (0.5, 0.5)),
              MultiplicitySetting(3), MultiplicitySetting(2)]
X = np.linspace(0.0, 3.0, 31)
SMALL = dict(r_grid=RGrid(64), x_grid=XGrid(32, 1e-2, 16.0))


@pytest.mark.parametrize("s", D_SETTINGS, ids=lambda s: s.label())
def test_spherical_mean_three_ways(s):
    for r in (0.3, 1.0, 2.5):
        spectral = spherical_mean(s, gaussian(1.0), r)(X)
        direct = spherical_mean_direct(s, gaussian(1.0), r, X)
        closed = gaussian_spherical_mean(s, 1.0, r, X)
        assert np.max(np.abs(spectral - closed)) < 1e-10
        assert np.max(np.abs(direct - closed)) < 1e-10


def test_classical_spherical_mean_in_three_dimensions():
    s = MultiplicitySetting(3)
    x, r = X[1:], 1.3
    ref = np.exp(-(x ** 2 + r ** 2) / 2) * np.sinh(x * r) / (x * r)
    assert np.allclose(gaussian_spherical_mean(s, 1.0, r, x), ref, rtol=1e-13)


def test_spherical_mean_of_non_gaussian():
    s = MultiplicitySetting(1, (1.0,))
    f = ring(1.0, 0.3)
    spectral = spherical_mean(s, f, 0.7)(X)
    assert np.max(np.abs(spectral - spherical_mean_direct(s, f, 0.7, X))) < 1e-10
    with pytest.raises(ValueError):
        spherical_mean(s, f, 0.0)


@pytest.mark.parametrize("s", D_SETTINGS, ids=lambda s: s.label())
def test_ball_multiplier_closed_form(s):
    u = np.linspace(0, 40, 81)
    assert np.max(np.abs(ball_multiplier(s)(u) - ball_multiplier_quadrature(s, u))) < 1e-10


def test_maximal_dominates_input_and_single_means():
    s = MultiplicitySetting(1, (1.0,))
    f = plateau(0.8, 0.2)
    M = spherical_maximal(s, f, **SMALL)
    # the smallest radius is 1e-3, so S_r f = f + O(r^2)
    assert np.min(M.values - np.abs(f(M.x))) > -1e-5
    for r in (0.5, 2.0):
        assert np.all(M.values >= np.abs(spherical_mean(s, f, r)(M.x)) - 1e-6)
    R = M.refined()
    assert np.all(R.values >= M.values) and R.refinements == 1
    assert np.all((M.argmax >= 1e-3 / 1.1) & (M.argmax <= 1e3))


def test_gaussian_maximal_against_closed_form_sup():
    s = MultiplicitySetting(3)
    # golden-section refinement converges geometrically in the bracket width
    M = spherical_maximal(s, gaussian(1.0), RGrid(64, refine_iters=30), SMALL["x_grid"])
    r = np.geomspace(1e-3, 1e3, 200001)
    x = M.x[::8]
    ref = np.array([np.max(gaussian_spherical_mean(s, 1.0, r, xi)) for xi in x])
    assert np.allclose(M.values[::8], ref, rtol=1e-8)


def test_maximal_functions_require_the_hypothesis():
    s = MultiplicitySetting(1, (0.25,))
    with pytest.raises(HypothesisError):
        spherical_maximal(s, gaussian(1.0), **SMALL)
    with pytest.raises(EmptyGridError):
        RGrid(0).points()


@pytest.mark.parametrize("p", [1.0, 1.6, 2.0, 3.0])
def test_gaussian_lp_norm_closed_form(p):
    for s in D_SETTINGS:
        a, D = 0.7, s.D
        ref = (s.d_k * 0.5 * (2 * a * a / p) ** (D / 2) * G(D / 2)) ** (1 / p)
        assert lp_norm(s, gaussian(a), p) == pytest.approx(ref, rel=1e-12)
    assert lp_norm(s, gaussian(a), math.inf) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        lp_norm(s, gaussian(a), 0.5)


def test_profile_norm_matches_quadrature_and_detects_divergence():
    s = MultiplicitySetting(1, (1.0,))
    x = XGrid(64, 1e-3, 12.0).points()
    v = gaussian(1.0)(x)
    assert profile_norm(s, x, v, 2) == pytest.approx(lp_norm(s, gaussian(1.0), 2), rel=1e-6)
    slow = 1 / (1 + x) ** 1.0
    with pytest.raises(DivergenceError):
        profile_norm(s, x, slow, 2)
    fast = 1 / (1 + x) ** 4
    assert np.isfinite(profile_norm(s, x, fast, 2))


def test_superlevel_measure_of_step():
    s = MultiplicitySetting(1, (1.0,))
    x = np.linspace(0, 4, 401)
    v = np.where(x <= 2.0, 1.0, 0.0)
    # ball of radius ~2: d_k/D * 2^D, exact up to one interpolation cell
    assert superlevel_measure(s, x, v, 0.5) == pytest.approx(2 / 3 * 2.005 ** 3, rel=1e-12)
    assert superlevel_measure(s, x, v, 2.0) == 0.0


def test_weak_type_ratio_is_dilation_invariant():
    s = MultiplicitySetting(1, (1.0,))
    a = 10 ** 0.25
    f = plateau(0.8, 0.2)
    H1 = hl_maximal(s, f, RGrid(64), XGrid(32, 1e-2, 16))
    H2 = hl_maximal(s, f.dilate(a), RGrid(64, 1e-3 * a, 1e3 * a), XGrid(32, 1e-2 * a, 16 * a))
    assert weak_type_ratio(s, H1, f) == pytest.approx(weak_type_ratio(s, H2, f.dilate(a)),
                                                      rel=1e-9)
    assert H1.norm(2) / lp_norm(s, f, 2) == pytest.approx(
        H2.norm(2) / lp_norm(s, f.dilate(a), 2), rel=1e-9)


def test_weak_type_ratio_is_scale_invariant_in_amplitude():
    s = MultiplicitySetting(1, (1.0,))
    f = gaussian(0.5)
    H = hl_maximal(s, f, **SMALL)
    H3 = hl_maximal(s, f.scaled(3.0), **SMALL)
    assert weak_type_ratio(s, H, f) == pytest.approx(weak_type_ratio(s, H3, f.scaled(3.0)))
    assert weak_type_ratio(s, H, f, alphas=[0.2, 0.5]) > 0


def test_standard_family_is_seeded():
    s = MultiplicitySetting(1, (1.0,))
    a = standard_family(s, 2.0, 30, seed=4)
    b = standard_family(s, 2.0, 30, seed=4)
    c = standard_family(s, 2.0, 30, seed=5)
    r = np.linspace(0, 3, 17)
    assert len(a) == 30
    assert all(np.array_equal(f(r), g(r)) for f, g in zip(a, b))
    assert any(not np.array_equal(f(r), g(r)) for f, g in zip(a, c))
    only = standard_family(s, 2.0, 30, kinds=("gaussian",))
    assert len(only) == 5
    assert all(lp_norm(s, f, 2.0) < math.inf for f in a)


def test_power_profile_closed_form_transform():
    s = MultiplicitySetting(1, (1.0,))
    f = power_profile(1.2, sigma_min=0.3, scales=6)
    from dataclasses import replace
    num = dunkl_transform_radial(s, replace(f, dual=None))
    rho = np.linspace(0, 8, 33)
    assert np.max(np.abs(num(rho) - f.dual(s, rho))) < 1e-10


def test_normalized_has_unit_norm():
    s = MultiplicitySetting(2)
    assert lp_norm(s, normalized(s, ring(1.0, 0.3), 1.6), 1.6) == pytest.approx(1.0)


def test_operator_norm_estimate_and_report_round_trip():
    s = MultiplicitySetting(1, (1.0,))
    fam = standard_family(s, 2.0, 6, kinds=("gaussian", "plateau"))
    rep = operator_norm_estimate(lambda f: spherical_maximal(s, f, **SMALL), s, 2.0, fam,
                                 op_id="spherical_maximal", family_label="t", seed=0)
    assert 1.0 <= rep.estimate < 3.0
    assert rep.estimate == max(rep.ratios) and rep.family_size == 6
    back = NormReport.from_dict(json.loads(rep.to_json()))
    assert back == rep
    assert tuple(rep.csv_row()) == NormReport.CSV_FIELDS
    with pytest.raises(ValueError):
        operator_norm_estimate(lambda f: f, s, 2.0, [])


def test_strict_mode_refuses_exponents_outside_the_range():
    s = MultiplicitySetting(1, (1.0,))
    fam = [gaussian(1.0)]
    op = lambda f: spherical_maximal(s, f, **SMALL)
    for p in (1.4, 3.0):
        with pytest.raises(HypothesisError):
            operator_norm_estimate(op, s, p, fam, op_id="spherical_maximal", strict=True)
    rep = operator_norm_estimate(op, s, 3.5, fam, op_id="spherical_maximal")
    assert rep.estimate > 0


def test_divergent_image_gives_infinite_ratio():
    s = MultiplicitySetting(1, (1.0,))
    # near the lower endpoint p -> D/(D-1) the maximal function of a bump
    # decays like x^-(D-1) and fails to be in L^p
    rep = operator_norm_estimate(lambda f: spherical_maximal(s, f, **SMALL), s, 1.2,
                                 [gaussian(1.0)], op_id="spherical_maximal")
    assert rep.estimate == math.inf


def test_refinement_converges_and_argmax_is_stable():
    s = MultiplicitySetting(1, (1.0,))
    cell = math.log(10) / 64
    for f in standard_family(s, 2.0, 30, seed=0)[::6]:
        M = spherical_maximal(s, f, RGrid(64), XGrid())
        R = M.refined()
        R2 = R.refined()
        assert np.all(R2.values >= R.values)
        step1 = np.max(np.abs(R.values - M.values) / M.values)
        step2 = np.max(np.abs(R2.values - R.values) / R.values)
        assert step2 <= 1e-4 and step2 <= step1
        assert np.max(np.abs(np.log(R.argmax / M.argmax))) < cell
