import mpmath
import numpy as np
import pytest

from asymnet._num import to_float
from asymnet.generators import (
    HyperboloidSpec,
    generic_net,
    hyperboloid_net,
    integrate_lelieuvre,
    minimal_net,
    moutard_conormals,
    paraboloid_net,
)
from asymnet.grid import diff1, diff2
from asymnet.net import DegenerateNetError, planarity_report, quad_M
from asymnet.structure import build_structure

from .conftest import MP_DPS, centred_hyperboloid, rel_err, site_rel_err


# ---- hyperboloid ----------------------------------------------------------------------


@pytest.mark.parametrize("which", ["q1", "q2"])
def test_printed_edge_differences(hyp, which):
    with hyp.ctx():
        got = (diff1 if which == "q1" else diff2)(hyp.net.q).values
        assert site_rel_err(got, getattr(hyp.analytic, which)()) < 1e-35


def test_recentring_is_a_translation(hyp_small):
    with hyp_small.ctx():
        a, b = hyp_small.analytic.q(), hyp_small.analytic.q_recentred()
        d = a - b
        assert rel_err(d, np.broadcast_to(d[0, 0], d.shape)) < 1e-35
        assert rel_err(d[0, 0], np.array([0, 0, 1])) < 1e-35


def test_points_lie_on_the_quadric(hyp_small):
    with hyp_small.ctx():
        q = hyp_small.analytic.q()
        x, y, z = q[..., 0], q[..., 1], q[..., 2]
        assert rel_err(y * y + z * z - x * x, np.full(x.shape, mpmath.mpf(1))) < 1e-35


def test_float_and_multiprecision_agree():
    spec = HyperboloidSpec(nu=5, nv=5)
    a, _ = hyperboloid_net(spec)
    with mpmath.workdps(MP_DPS):
        b, _ = hyperboloid_net(HyperboloidSpec(nu=5, nv=5, dps=MP_DPS))
    assert rel_err(a.positions, b.positions) < 1e-14
    assert not a.multiprecision and b.multiprecision


@pytest.mark.parametrize("kw", [dict(c=0.0), dict(du=-0.1), dict(u0=-1.0, v0=0.5), dict(nu=0)])
def test_spec_validation(kw):
    with pytest.raises(ValueError):
        HyperboloidSpec(**kw)


def test_smooth_H_value():
    _, ana = hyperboloid_net(HyperboloidSpec(c=4.0, nu=2, nv=2))
    assert ana.smooth_H() == pytest.approx(4.0**-1.5)


def test_discrete_H_second_order():
    errs = []
    for step in (0.02, 0.01):
        case = centred_hyperboloid(step)
        with case.ctx():
            errs.append(abs(case.structure.H_v.values[2, 1] - case.analytic.smooth_H()))
    assert 3.5 <= float(errs[0] / errs[1]) <= 4.5


def test_discrete_omega_second_order():
    errs = []
    for step in (0.02, 0.01):
        case = centred_hyperboloid(step, quad_centred=True)
        with case.ctx():
            d = mpmath.mpf(step)
            om = case.structure.Omega.values[2, 2] / (d * d)
            errs.append(abs(om - case.analytic.smooth_omega(mpmath.mpf(2), mpmath.mpf(2))))
    assert 3.5 <= float(errs[0] / errs[1]) <= 4.5


# ---- minimal nets -----------------------------------------------------------------------


def paraboloid_curves(nu=4, nv=4):
    u = np.arange(nu + 1, dtype=float)
    v = np.arange(nv + 1, dtype=float)
    f = np.stack([-u, 0 * u, -0.5 + 0 * u], -1)
    g = np.stack([0 * v, -v, -0.5 + 0 * v], -1)
    return f, g


def test_minimal_net_reproduces_paraboloid():
    f, g = paraboloid_curves()
    net = minimal_net(f, g)
    ref = paraboloid_net(4, 4).positions
    np.testing.assert_array_equal(net.positions - net.positions[0, 0], ref - ref[0, 0])


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_minimal_net_has_unit_gauge(seed):
    rng = np.random.default_rng(seed)
    f, g = paraboloid_curves(6, 5)
    f = f + 0.2 * rng.standard_normal(f.shape).cumsum(axis=0) / 3
    g = g + 0.2 * rng.standard_normal(g.shape).cumsum(axis=0) / 3
    net = minimal_net(f, g)
    s = build_structure(net, 1.0)
    for part in (s.p.u, s.p.v):
        vals = part.values[np.isfinite(part.values)]
        np.testing.assert_allclose(vals, 1.0, atol=1e-12)
    for part in (s.H.u, s.H.v):
        assert np.nanmax(np.abs(part.values)) <= 1e-12
    np.testing.assert_allclose(s.gamma.values, 1.0, atol=1e-12)
    assert planarity_report(net)[0].max_abs < 1e-12
    _, closure = integrate_lelieuvre(f[:, None] + g[None, :])
    assert closure.max_abs <= 1e-12


def test_minimal_net_rejects_folded_input():
    f, g = paraboloid_curves()
    with pytest.raises(DegenerateNetError):
        minimal_net(f, -g)


def test_minimal_net_shape_check():
    with pytest.raises(ValueError):
        minimal_net(np.zeros((3, 2)), np.zeros((3, 3)))


# ---- Lelieuvre integration and Moutard recurrence ----------------------------------------


def test_lelieuvre_closure_localizes_a_bad_conormal():
    f, g = paraboloid_curves(5, 5)
    n = f[:, None] + g[None, :]
    n[2, 3] += np.array([0.1, -0.05, 0.2])
    _, closure = integrate_lelieuvre(n)
    assert set(closure.sites_above(1e-9)) == {(1, 2), (1, 3), (2, 2), (2, 3)}


def test_lelieuvre_respects_base_point():
    f, g = paraboloid_curves(2, 2)
    net, _ = integrate_lelieuvre(f[:, None] + g[None, :], base=(1.0, 2.0, 3.0))
    np.testing.assert_array_equal(net.positions[0, 0], [1.0, 2.0, 3.0])


def test_moutard_recurrence_satisfies_equation():
    rng = np.random.default_rng(3)
    gamma = np.exp(0.1 * rng.standard_normal((4, 5)))
    row0, col0 = rng.standard_normal((5, 3)), rng.standard_normal((6, 3))
    col0[0] = row0[0]
    n = moutard_conormals(gamma, row0, col0)
    lhs = gamma[..., None] ** 2 * (n[:-1, :-1] + n[1:, 1:])
    np.testing.assert_allclose(lhs, n[:-1, 1:] + n[1:, :-1], rtol=1e-13)


# ---- generic and paraboloid nets -----------------------------------------------------------


def test_generic_net_is_deterministic():
    a, _, _ = generic_net(6, 6, 2)
    b, _, _ = generic_net(6, 6, 2)
    np.testing.assert_array_equal(a.positions, b.positions)


def test_generic_net_multiprecision():
    with mpmath.workdps(MP_DPS):
        net, n, gamma = generic_net(5, 5, 0, dps=MP_DPS)
        s = build_structure(net, gamma[0, 0], tol=None)
    assert net.multiprecision
    assert max(r.max_abs for r in s.reports.values()) < 1e-30


def test_paraboloid_offsets():
    net = paraboloid_net(2, 3, u0=1, v0=-1)
    np.testing.assert_array_equal(net.positions[0, 0], [-1.0, 1.0, 1.0])
    assert np.all(to_float(quad_M(net).values) == 1.0)
