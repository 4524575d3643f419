import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from eisndt.asymptotics import (CrackPolarizationMatrix, PoleSet, analytic_completion,
                                boundary_moments, crack_polarization, dg_evaluate, dg_from_boundary,
                                dg_from_poles, estimate_order, fundamental_solution,
                                fundamental_solution_gradient, g_im_evaluate,
                                g_re_evaluate, high_freq_perturbation, k_omega_apply,
                                low_freq_perturbation, pole_set, recover_poles, uniform_resample)
from eisndt.errors import (AtPole, CoincidentPoints, MissingFluxData, NonUniformSampling,
                           OnBranchCut, PoleOutsideCircle, RankDeficient, ZeroLambda)
from eisndt.samples import BoundarySamples, CrackFlux
from eisndt.scene import Bar, Crack, Scene, builtin_model
from eisndt.spectro import lambda_c, lambda_d

from conftest import circle_points

W800K = 2 * math.pi * 8e5

# frozen from tests/oracles/segment_integrals.py
ORACLE_P, ORACLE_Q, ORACLE_X = (-0.03, 0.01), (0.04, -0.02), (0.06, 0.08)
KERNEL_INTEGRAL = (0.3831620484643764, 0.6108096702759246)
SUBTENDED_ANGLE = 0.712357598094329


def samples(values, n=None, radius=0.1):
    values = np.asarray(values)
    return BoundarySamples(circle_points(len(values), radius), values)


# -- kernels ----------------------------------------------------------------

def test_fundamental_solution_values():
    assert fundamental_solution((0.6, 0.8), (0.0, 0.0)) == 0.0
    r = math.exp(-2 * math.pi)
    assert fundamental_solution((r, 0.0), (0.0, 0.0)) == pytest.approx(1.0, rel=1e-14)
    with pytest.raises(CoincidentPoints):
        fundamental_solution((0.1, 0.2), (0.1, 0.2))
    with pytest.raises(CoincidentPoints):
        fundamental_solution_gradient((0.1, 0.2), (0.1, 0.2))


def test_fundamental_solution_gradient_by_finite_differences():
    x, h = np.array([0.03, 0.04]), 1e-7
    fd = [(fundamental_solution(x + h * e, (0, 0)) - fundamental_solution(x - h * e, (0, 0))) / (2 * h)
          for e in np.eye(2)]
    assert np.allclose(fundamental_solution_gradient(x, (0, 0)), fd, atol=1e-6)


def test_k_omega_on_constants_and_cosines():
    n = 256
    t = 2 * math.pi * np.arange(n) / n
    assert np.allclose(k_omega_apply(samples(np.ones(n))).values, 0.5, atol=1e-10)
    assert np.abs(k_omega_apply(samples(np.cos(t))).values).max() <= 1e-10
    assert np.abs(k_omega_apply(samples(np.cos(3 * t) + 1j * np.sin(7 * t))).values).max() <= 1e-10


def test_k_omega_sampling_errors():
    with pytest.raises(NonUniformSampling):
        k_omega_apply(samples(np.ones(32)))
    pts = circle_points(128)
    pts[5] *= 1.01
    with pytest.raises(NonUniformSampling):
        k_omega_apply(BoundarySamples(pts, np.ones(128)))
    t = np.sort(np.random.default_rng(0).uniform(0, 2 * math.pi, 128))
    with pytest.raises(NonUniformSampling):
        k_omega_apply(BoundarySamples(0.1 * np.column_stack([np.cos(t), np.sin(t)]), np.ones(128)))


@given(st.lists(st.floats(-1e3, 1e3), min_size=256, max_size=300),
       st.floats(0.01, 10.0))
def test_k_omega_annihilates_mean_zero_data(values, radius):
    phi = np.asarray(values) - np.mean(values)
    out = k_omega_apply(BoundarySamples(circle_points(len(phi), radius), phi)).values
    assert np.abs(out).max() <= 1e-10 * max(np.abs(phi).max(), 1e-300) + 1e-300


# -- polarization -----------------------------------------------------------

def test_crack_polarization_examples():
    assert np.abs(crack_polarization(1.0, (1, 0), (0, 1)).matrix).max() == 0
    A = crack_polarization(2.0, (1, 0), (0, 1)).matrix
    assert np.allclose(A, np.diag([2.0, 1.0]), atol=1e-15)
    with pytest.raises(ZeroLambda):
        crack_polarization(0.0, (1, 0), (0, 1))
    with pytest.raises(ValueError):
        crack_polarization(2.0, (1, 0), (1, 0))


@given(lam_re=st.floats(1e-4, 10), lam_im=st.floats(-10, 10), t=st.floats(0, 2 * math.pi))
def test_crack_polarization_eigenpairs(lam_re, lam_im, t):
    lam = complex(lam_re, lam_im)
    tau = np.array([math.cos(t), math.sin(t)])
    nu = np.array([-tau[1], tau[0]])
    P: CrackPolarizationMatrix = crack_polarization(lam, tau, nu)
    A = P.matrix
    across, along = P.eigenvalues
    scale = max(1.0, abs(across), abs(along))
    assert np.allclose(A, A.T, atol=1e-14 * scale)
    assert np.allclose(A @ nu, 2 * (1 - 1 / lam) * nu, atol=1e-13 * scale)
    assert np.allclose(A @ tau, 2 * (lam - 1) * tau, atol=1e-13 * scale)
    rebuilt = across * np.outer(nu, nu) + along * np.outer(tau, tau)
    assert np.allclose(rebuilt, A, atol=1e-13 * scale)


# -- high-frequency expansion -------------------------------------------------

def test_empty_scene_gives_zero_perturbation():
    out = high_freq_perturbation(Scene(0.1), W800K, (1.0, 0.0), circle_points(64))
    assert np.all(out.values == 0)


def test_single_bar_dipole_closed_form():
    bar = Bar((0.0, 0.0), 0.01)
    s = Scene(0.1, bars=(bar,))
    x = circle_points(64)
    lam = lambda_d(s, W800K)
    out = high_freq_perturbation(s, W800K, (1.0, 0.0), x).values
    # the sign that matches the finite element solution (see forward tests)
    expected = bar.area / (2 * math.pi * lam) * x[:, 0] / np.sum(x**2, axis=1)
    assert np.allclose(out, expected, rtol=1e-14, atol=0)


def test_crack_quadrature_matches_segment_integral():
    crack = Crack((ORACLE_P, ORACLE_Q), 1e-4)
    s = Scene(0.1, cracks=(crack,))
    a = np.array([0.6, 0.8])
    lam = lambda_c(s, W800K)
    out = high_freq_perturbation(s, W800K, a, [ORACLE_X]).values[0]
    Aa = crack_polarization(lam, crack.tangents[0], crack.normals[0]).matrix @ a
    expected = crack.half_thickness / (2 * math.pi) * (Aa @ np.array(KERNEL_INTEGRAL))
    assert abs(out - expected) <= 1e-8 * abs(expected)


def test_crack_quadrature_matches_log_closed_form():
    # int (x - x')/|x - x'|^2 ds over P->Q, as a complex number, is -tau conj(ln((x-Q)/(x-P)))
    P, Q, x = (complex(*p) for p in (ORACLE_P, ORACLE_Q, ORACLE_X))
    tau = (Q - P) / abs(Q - P)
    closed = -tau * np.conj(np.log((x - Q) / (x - P)))
    assert closed.real == pytest.approx(KERNEL_INTEGRAL[0], rel=1e-12)
    assert closed.imag == pytest.approx(KERNEL_INTEGRAL[1], rel=1e-12)


def test_doubling_quadrature_changes_little():
    s = builtin_model(1)
    x = circle_points(256)
    a = (0.0, 1.0)
    base = high_freq_perturbation(s, W800K, a, x).values
    fine = high_freq_perturbation(s, W800K, a, x, n_gauss=64).values
    assert np.abs(fine - base).max() < 1e-10 * np.abs(base).max()


@pytest.mark.parametrize("a", [(1.0, 0.0), (0.0, 1.0), (0.6, -0.8)])
def test_g_functions_match_perturbation_on_circle(a):
    s = builtin_model(1)
    pts = circle_points(256)
    x = pts[:, 0] + 1j * pts[:, 1]
    phi = high_freq_perturbation(s, W800K, a, pts).values
    g_re, g_im = g_re_evaluate(s, W800K, a, x), g_im_evaluate(s, W800K, a, x)
    scale = np.abs(phi).max()
    assert np.abs(g_re.real + phi.real).max() <= 1e-8 * scale
    assert np.abs(g_im.real + phi.imag).max() <= 1e-8 * scale


# -- meromorphic functions ----------------------------------------------------

def test_g_decays_at_infinity():
    s = builtin_model(1)
    far = np.array([1e6, 1e9])
    assert np.abs(g_re_evaluate(s, W800K, (1.0, 0.0), far)).max() < 1e-8


def test_g_branch_cut_and_poles():
    s = builtin_model(1)
    with pytest.raises(OnBranchCut):
        g_re_evaluate(s, W800K, (1.0, 0.0), [0.01 + 0.03j])
    with pytest.raises(AtPole):
        g_re_evaluate(s, W800K, (1.0, 0.0), [0.05 + 0.0j])
    with pytest.raises(AtPole):
        dg_evaluate(s, W800K, (1.0, 0.0), [-0.07 + 0.03j])
    # just off the cut the function is finite
    assert np.isfinite(g_re_evaluate(s, W800K, (1.0, 0.0), [0.01 + 0.0301j])).all()


def test_dg_matches_finite_differences_on_circle():
    s = builtin_model(1)
    a = (0.6, 0.8)
    x = 0.1 * np.exp(1j * np.linspace(0, 2 * math.pi, 17))
    h = 1e-7
    for part, g in (("re", g_re_evaluate), ("im", g_im_evaluate)):
        fd = (g(s, W800K, a, x + h) - g(s, W800K, a, x - h)) / (2 * h)
        exact = dg_evaluate(s, W800K, a, x, part)
        assert np.abs(fd - exact).max() <= 1e-6 * np.abs(exact).max()


def test_dg_laurent_tail():
    c = 0.3 - 0.2j
    poles = PoleSet(P=np.array([-0.02 + 0.01j]), Q=np.array([0.03 - 0.01j]), c=np.array([c]))
    x = 1e4 * np.exp(1j * np.linspace(0, 6, 7))
    ratio = dg_from_poles(poles, x) * x**2 / (c * (poles.Q[0] - poles.P[0]))
    assert np.abs(ratio - 1).max() < 1e-5


def contour_residue(poles, centre, r=1e-4, n=64):
    t = 2 * math.pi * np.arange(n) / n
    x = centre + r * np.exp(1j * t)
    return np.mean(dg_from_poles(poles, x) * (x - centre))


def test_residues_at_endpoints():
    s = builtin_model(1)
    poles = pole_set(s, W800K, (0.0, 1.0), "re")
    for P, Q, c in zip(poles.P, poles.Q, poles.c):
        assert abs(contour_residue(poles, Q) - c) <= 1e-9 * abs(c)
        assert abs(contour_residue(poles, P) + c) <= 1e-9 * abs(c)


@given(px=st.floats(-0.05, 0.05), py=st.floats(-0.05, 0.05), L=st.floats(0.005, 0.04),
       t=st.floats(0, math.pi), c_re=st.floats(-1, 1), c_im=st.floats(-1, 1))
def test_residue_antisymmetry(px, py, L, t, c_re, c_im):
    P = complex(px, py)
    Q = P + L * complex(math.cos(t), math.sin(t))
    c = complex(c_re, c_im)
    poles = PoleSet(P=np.array([P]), Q=np.array([Q]), c=np.array([c]))
    total = contour_residue(poles, P) + contour_residue(poles, Q)
    assert abs(total) <= 1e-9 * max(1.0, abs(c))


# -- low-frequency expansion --------------------------------------------------

def straight_flux(P, Q, n, flux_value, normal):
    t = np.linspace(0, 1, n + 1)
    pts = np.asarray(P) + t[:, None] * (np.asarray(Q) - np.asarray(P))
    ends = np.stack([pts[:-1], pts[1:]], axis=1)
    return CrackFlux(ends, np.tile(normal, (n, 1)), np.full(n, flux_value, complex), np.zeros((n, 2)))


def test_low_freq_zero_flux_without_bars():
    crack = Crack(((-0.03, 0.0), (0.03, 0.0)), 1e-4)
    s = Scene(0.1, cracks=(crack,))
    flux = {0: straight_flux((-0.03, 0.0), (0.03, 0.0), 20, 0.0, (0.0, 1.0))}
    out = low_freq_perturbation(s, 2 * math.pi * 10, (0.0, 1.0), circle_points(32), flux)
    assert np.all(out.values == 0)


def test_low_freq_needs_flux():
    s = builtin_model(1)
    with pytest.raises(MissingFluxData):
        low_freq_perturbation(s, 1.0, (0.0, 1.0), circle_points(8), None)
    with pytest.raises(MissingFluxData):
        low_freq_perturbation(s, 1.0, (0.0, 1.0), circle_points(8), {0: None})


def test_low_freq_constant_density_is_subtended_angle():
    P, Q = ORACLE_P, ORACLE_Q
    crack = Crack((P, Q), 1e-4)
    s = Scene(0.1, cracks=(crack,))
    lam = lambda_c(s, 2 * math.pi * 10)
    flux = {0: straight_flux(P, Q, 40, 1.0, crack.normals[0])}
    out = low_freq_perturbation(s, 2 * math.pi * 10, (0.0, 1.0), [ORACLE_X], flux).values[0]
    jump = 2 * crack.half_thickness / lam
    # with the normal on the left of P->Q the double layer is minus the angle P->Q seen from x
    assert abs(out - (-SUBTENDED_ANGLE) * jump / (2 * math.pi)) <= 1e-10 * abs(jump)


def test_low_freq_cracks_hide_bars_at_10hz(model1_interface_mesh, model1):
    from eisndt.forward import crack_flux, solve_zero_thickness
    w = 2 * math.pi * 10
    a = (0.0, 1.0)
    field = solve_zero_thickness(model1, model1_interface_mesh, w, a)
    flux = {k: crack_flux(field, k) for k in range(2)}
    x = circle_points(256)
    full = low_freq_perturbation(model1, w, a, x, flux).values
    bars = low_freq_perturbation(model1.without_cracks(), w, a, x, None).values
    assert np.all(np.abs(full - bars) >= 5 * np.abs(bars))


# -- from boundary data to dG ---------------------------------------------------

def test_uniform_resample_is_exact_for_smooth_data():
    rng = np.random.default_rng(1)
    t = np.sort(rng.uniform(0, 2 * math.pi, 400))
    pts = 0.1 * np.column_stack([np.cos(t), np.sin(t)])
    f = lambda th: np.cos(2 * th) + 0.5j * np.sin(th)  # noqa: E731
    out = uniform_resample(BoundarySamples(pts, f(t)), 128)
    theta = np.mod(out.angles, 2 * math.pi)
    assert np.abs(out.values - f(theta)).max() < 1e-5


def test_analytic_completion_recovers_exterior_function():
    n = 256
    x = 0.1 * np.exp(2j * math.pi * np.arange(n) / n)
    g = (2e-4 - 1e-4j) / (x - 0.03 - 0.02j) + 1e-5 * np.log((x - 0.02) / (x + 0.01j))
    h = analytic_completion(g.real)
    assert np.abs(h - g).max() < 1e-10 * np.abs(g).max()


@pytest.mark.parametrize("part", ["re", "im"])
def test_dg_from_boundary_matches_closed_form(part):
    s = builtin_model(1)
    a = (0.0, 1.0)
    pts = circle_points(512)
    phi = high_freq_perturbation(s, W800K, a, pts)
    dg = dg_from_boundary(phi, part)
    x = pts[:, 0] + 1j * pts[:, 1]
    exact = dg_evaluate(s, W800K, a, x, part)
    assert np.abs(dg.values - exact).max() <= 1e-8 * np.abs(exact).max()


# -- pole recovery ----------------------------------------------------------------

def synthetic(scene, a=(0.0, 1.0), part="re", n=512):
    pts = circle_points(n)
    x = pts[:, 0] + 1j * pts[:, 1]
    return BoundarySamples(pts, dg_evaluate(scene, W800K, a, x, part), np.asarray(a), W800K)


def test_one_bar_centre_from_two_moments():
    z, d = 0.031 - 0.024j, 3e-4 + 1e-5j
    poles = PoleSet(z=np.array([z]), d=np.array([d]))
    pts = circle_points(256)
    dg = BoundarySamples(pts, dg_from_poles(poles, pts[:, 0] + 1j * pts[:, 1]))
    m, R = boundary_moments(dg, 3)
    mu = m * R ** np.arange(3)
    assert mu[1] == pytest.approx(-d, rel=1e-12)
    assert mu[2] / (2 * mu[1]) == pytest.approx(z, rel=1e-12)
    report = recover_poles(dg, 0, 1)
    assert abs(report.bars[0][0] - z) < 1e-12 and report.residual < 1e-9


def test_no_defects_gives_empty_report():
    dg = BoundarySamples(circle_points(64), np.zeros(64))
    assert np.allclose(boundary_moments(dg, 10)[0], 0)
    report = recover_poles(dg, 0, 0)
    assert report.cracks == [] and report.bars == []


@pytest.mark.parametrize("part", ["re", "im"])
def test_model1_synthetic_poles(part):
    s = builtin_model(1)
    report = recover_poles(synthetic(s, part=part), 2, 2)
    truth = sorted(frozenset((complex(*c.points[0]), complex(*c.points[-1]))) for c in s.cracks)
    got = [{P, Q} for P, Q, _ in report.cracks]
    assert len(got) == 2
    for ends in truth:
        match = min(got, key=lambda g: max(min(abs(e - f) for f in g) for e in ends))
        assert max(min(abs(e - f) for f in match) for e in ends) < 1e-9
    centres = sorted(z for z, _ in report.bars)
    assert np.allclose(centres, [-0.05, 0.05], atol=1e-9, rtol=0)
    assert report.residual < 1e-9
    poles = pole_set(s, W800K, (0.0, 1.0), part)
    residues = sorted(abs(c) for _, _, c in report.cracks)
    assert np.allclose(residues, sorted(abs(poles.c)), rtol=1e-6)


def test_rank_deficient_hints():
    dg = synthetic(Scene(0.1, bars=(Bar((0.02, 0.01), 0.01),)))
    with pytest.raises(RankDeficient):
        recover_poles(dg, 2, 3)


def test_pole_outside_circle():
    # truncated Laurent series of a segment whose endpoints lie beyond the circle
    pts = circle_points(256)
    x = pts[:, 0] + 1j * pts[:, 1]
    P, Q = 0.11 + 0.01j, 0.13 - 0.02j
    values = sum((Q**k - P**k) / x ** (k + 1) for k in range(24))
    with pytest.raises(PoleOutsideCircle):
        recover_poles(BoundarySamples(pts, values), 1, 0)


def test_exterior_singularity_is_invisible():
    poles = PoleSet(z=np.array([0.2 + 0.0j]), d=np.array([1e-3]))
    pts = circle_points(256)
    dg = BoundarySamples(pts, dg_from_poles(poles, pts[:, 0] + 1j * pts[:, 1]))
    with pytest.raises(RankDeficient):
        recover_poles(dg, 0, 1)


def test_too_few_samples():
    with pytest.raises(NonUniformSampling):
        recover_poles(synthetic(builtin_model(1), n=16), 2, 2)


def test_pole_report_json(tmp_path):
    report = recover_poles(synthetic(builtin_model(1)), 2, 2)
    data = json.loads(report.to_json(tmp_path / "r.json"))
    assert set(data) == {"cracks", "bars", "residual"}
    assert set(data["cracks"][0]) == {"P", "Q", "residue"}
    assert set(data["bars"][0]) == {"z", "strength"}
    assert json.loads((tmp_path / "r.json").read_text()) == data


def test_estimate_order():
    assert estimate_order(synthetic(builtin_model(1))) == 8
