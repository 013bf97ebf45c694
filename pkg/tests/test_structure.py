import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from asymnet import _num
from asymnet.generators import generic_net, paraboloid_net
from asymnet.net import AsymptoticNet, DegenerateNetError
from asymnet.structure import (
    GaugePropagationError,
    VerificationError,
    build_structure,
    compute_omega,
    corner_products_residual,
    moutard_residual,
    omega_conormal_residual,
    propagate_gamma,
    verify_lelieuvre,
)

from .conftest import rel_err, site_rel_err
from .test_net import random_unimodular


def checkerboard(shape, origin=(0, 0)):
    i, j = np.indices(shape)
    return np.where((i + j - origin[0] - origin[1]) % 2 == 0, 1, -1)


# ---- paraboloid: every field by hand ----------------------------------------


def test_paraboloid_fields(para):
    net, s = para
    u, v = np.indices((6, 6), dtype=float)
    assert np.all(s.Omega.values == 1) and np.all(s.gamma.values == 1)
    np.testing.assert_array_equal(s.nu.values, np.stack([-u, -v, -np.ones_like(u)], -1))
    assert np.all(s.xi.values == np.array([0.0, 0.0, -1.0]))
    for f in (s.A, s.B):
        assert np.all(f.values[1:-1, 1:-1] == 0)
    for fam in ("u", "v"):
        p, h, H = (getattr(x, fam).values for x in (s.p, s.h, s.H))
        ok = np.isfinite(p)
        assert ok.any() and np.all(p[ok] == 1) and np.all(h[ok] == 0) and np.all(H[ok] == 0)


def test_paraboloid_reports_exactly_zero(para):
    _, s = para
    for name, r in s.reports.items():
        assert r.max_abs == 0.0, name


def test_paraboloid_omega_from_conormal_hand_value():
    n = np.array([[0.0, 0.0, -1.0], [0.0, -1.0, -1.0], [-1.0, 0.0, -1.0]])
    assert _num.det3(n[0], n[1], n[2]) == 1.0


# ---- hyperboloid closed forms (multiprecision) --------------------------------


@pytest.mark.parametrize("name", ["omega", "gamma", "xi", "nu"])
def test_hyperboloid_vertex_and_quad_fields(hyp, name):
    s, ana = hyp.structure, hyp.analytic
    got = {"omega": s.Omega, "gamma": s.gamma, "xi": s.xi, "nu": s.nu}[name].values
    with hyp.ctx():
        want = getattr(ana, name)()
    assert site_rel_err(got, want) < 1e-30


@pytest.mark.parametrize("name", ["p_u", "p_v", "h_u", "h_v", "H_u", "H_v"])
def test_hyperboloid_edge_fields(hyp, name):
    got = getattr(hyp.structure, name).values
    with hyp.ctx():
        want = getattr(hyp.analytic, name)()
    assert site_rel_err(got, want) < 1e-28


def test_hyperboloid_edge_fields_cover_interior(hyp):
    ok_v = np.isfinite(_num.to_float(hyp.structure.p_v.values))
    ok_u = np.isfinite(_num.to_float(hyp.structure.p_u.values))
    # v-edges need a quad on both sides in u; u-edges on both sides in v
    assert ok_v[1:-1].all() and not ok_v[[0, -1]].any()
    assert ok_u[:, 1:-1].all() and not ok_u[:, [0, -1]].any()


def test_hyperboloid_reports(hyp):
    for name, r in hyp.structure.reports.items():
        assert r.max_abs <= 1e-30, (name, r.max_abs)


def test_float_hyperboloid_reports(hyp_float):
    _, _, s = hyp_float
    for name, r in s.reports.items():
        assert r.max_abs <= 1e-10, (name, r.max_abs)


def test_structure_invariants(hyp):
    s = hyp.structure
    with hyp.ctx():
        assert rel_err(s.Omega.values**2, s.M.values) < 1e-35
        assert all(g > 0 for g in s.gamma.values.ravel())
        p, h = s.p_v.values, s.h_v.values
        ok = np.isfinite(_num.to_float(p))
        assert rel_err(h[ok], p[ok] - 1 / p[ok]) < 1e-35


# ---- generic nets: the generator's own co-normals and gauge -------------------


def test_generic_net_recovers_generator_data(generic):
    net, s, conormals, gamma = generic
    assert rel_err(s.gamma.values, gamma) < 1e-10
    assert rel_err(s.nu.values, conormals) < 1e-10
    for name, r in s.reports.items():
        assert r.max_abs <= 1e-9, (name, r.max_abs)
    # a generic net has a genuine cubic form
    assert np.nanmax(np.abs(s.A.values)) > 1e-3


# ---- gauge covariance ---------------------------------------------------------


@pytest.mark.parametrize("seed_quad", [(0, 0), (3, 2)])
def test_checkerboard_covariance(seed_quad):
    net, _, gamma = generic_net(8, 8, 0)
    lam = 2.0
    a = build_structure(net, 1.0, seed_quad, tol=None)
    b = build_structure(net, lam, seed_quad, tol=None)
    sq = checkerboard(a.gamma.values.shape, seed_quad)
    np.testing.assert_allclose(b.gamma.values, a.gamma.values * lam**sq, rtol=1e-12)
    sv = checkerboard(a.nu.values.shape[:2], seed_quad)
    np.testing.assert_allclose(b.nu.values, a.nu.values * lam ** (-sv)[..., None], rtol=1e-12)
    for f in ("A", "B"):
        x, y = getattr(a, f).values, getattr(b, f).values
        np.testing.assert_allclose(y, x * lam**sv, rtol=1e-10, atol=1e-14)
    for f in ("Omega", "M"):
        np.testing.assert_array_equal(getattr(a, f).values, getattr(b, f).values)
    for f in ("p_u", "p_v", "h_u", "h_v", "H_u", "H_v"):
        np.testing.assert_allclose(getattr(b, f).values, getattr(a, f).values, rtol=1e-12, atol=1e-14)
    assert b.reports["cubic_fourfold"].max_abs < 1e-9


def test_doubling_seed_gamma_exact_on_paraboloid():
    net = paraboloid_net(4, 4)
    g = propagate_gamma(net, 2.0).values
    np.testing.assert_array_equal(g, 2.0 ** checkerboard(g.shape))


# ---- equi-affine maps ---------------------------------------------------------


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_equiaffine_invariance(seed):
    rng = np.random.default_rng(seed)
    net, _, gamma = generic_net(6, 6, 2)
    L = random_unimodular(rng)
    t = rng.standard_normal(3)
    a = build_structure(net, gamma[0, 0], tol=None)
    b = build_structure(net.transformed(L, t), gamma[0, 0], tol=None)
    tol = 1e-10 * np.linalg.cond(L) ** 2
    for f in ("Omega", "gamma", "A", "B", "p_v", "p_u", "h_v", "h_u", "H_v", "H_u"):
        assert rel_err(getattr(b, f).values, getattr(a, f).values) < tol, f
    assert rel_err(b.xi.values, a.xi.values @ L.T) < tol
    assert rel_err(b.nu.values, a.nu.values @ np.linalg.inv(L)) < tol


def test_scaling_by_two():
    net, _, _ = generic_net(5, 5, 0)
    a, b = compute_omega(net).values, compute_omega(net.transformed(2 * np.eye(3))).values
    np.testing.assert_allclose(b, a * 2**1.5, rtol=1e-13)


# ---- negative controls --------------------------------------------------------


def test_negated_conormal_hits_incident_edges():
    net, _, gamma = generic_net(8, 8, 0)
    s = build_structure(net, gamma[0, 0], tol=None)
    i, j = 3, 5
    bad = s.nu.replace_at(i, j, -s.nu.values[i, j])
    ru, rv = verify_lelieuvre(net, bad)
    assert set(ru.sites_above(1e-9)) == {(i - 1, j), (i, j)}
    assert set(rv.sites_above(1e-9)) == {(i, j - 1), (i, j)}
    np.testing.assert_allclose([ru.residual[i, j], rv.residual[i, j]], 2.0, rtol=1e-9)
    m = moutard_residual(bad, s.gamma)
    assert set(m.sites_above(1e-9)) == {(i - 1, j - 1), (i - 1, j), (i, j - 1), (i, j)}


def test_perturbed_gamma_hits_one_quad():
    net, _, gamma = generic_net(8, 8, 2)
    s = build_structure(net, gamma[0, 0], tol=None)
    g = s.gamma.replace_at(4, 2, s.gamma.values[4, 2] * (1 + 1e-3))
    assert moutard_residual(s.nu, g).sites_above(1e-9) == [(4, 2)]


def test_scaled_xi_hits_corner_products():
    net, _, gamma = generic_net(8, 8, 2)
    s = build_structure(net, gamma[0, 0], tol=None)
    eps = 1e-4
    xi = s.xi.replace_at(2, 6, s.xi.values[2, 6] * (1 + eps))
    r = corner_products_residual(s.nu, xi, s.gamma)
    assert r.sites_above(1e-9) == [(2, 6)]
    g = s.gamma.values[2, 6]
    assert r.residual[2, 6] == pytest.approx(eps * max(g, 1 / g), rel=1e-4)


def test_perturbed_omega_localized():
    net, _, gamma = generic_net(8, 8, 5)
    s = build_structure(net, gamma[0, 0], tol=None)
    om = s.Omega.replace_at(5, 5, s.Omega.values[5, 5] * (1 + 1e-6))
    r = omega_conormal_residual(s.nu, s.gamma, om)
    assert r.sites_above(1e-9) == [(5, 5)]


# ---- gates and errors -----------------------------------------------------------


def test_degenerate_net_rejected_before_fields():
    q = paraboloid_net(3, 3).positions.copy()
    q[2, 2] = q[2, 1] - (q[2, 2] - q[2, 1])
    with pytest.raises(DegenerateNetError) as info:
        build_structure(AsymptoticNet.from_array(q))
    assert info.value.quad in {(1, 1), (2, 1), (1, 2)}


def test_nonplanar_net_fails_gate_then_gauge():
    net, _, gamma = generic_net(6, 6, 0)
    q = net.positions.copy()
    q[3, 3] += 1e-3 * np.array([0.3, -0.2, 1.0])
    bent = AsymptoticNet.from_array(q)
    with pytest.raises(VerificationError, match="planarity"):
        build_structure(bent, gamma[0, 0])
    with pytest.raises(GaugePropagationError) as info:
        build_structure(bent, gamma[0, 0], planarity_tol=None)
    v = info.value.vertex
    assert abs(v[0] - 3) <= 1 and abs(v[1] - 3) <= 1


def test_tolerance_gate_raises_verification_error(hyp_float):
    net, ana, _ = hyp_float
    with pytest.raises(VerificationError):
        build_structure(net, ana.gamma()[0, 0], tol=1e-18)


@pytest.mark.parametrize("g0,seed_quad,exc", [(0.0, (0, 0), ValueError), (-1.0, (0, 0), ValueError),
                                              (1.0, (9, 0), IndexError)])
def test_propagation_arguments(g0, seed_quad, exc):
    with pytest.raises(exc):
        propagate_gamma(paraboloid_net(3, 3), g0, seed_quad)


def test_multiprecision_fields_are_mpf(hyp_small):
    s = hyp_small.structure
    assert isinstance(s.Omega.values[0, 0], mpmath.mpf)
    assert isinstance(s.nu.values[0, 0, 0], mpmath.mpf)
