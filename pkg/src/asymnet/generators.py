"""Oracle nets: the sampled hyperboloid, minimal nets, Lelieuvre integration.

All hyperboloid closed forms live in :class:`AnalyticHyperboloid`.  Lattice
index ``(i, j)`` of any site is mapped to the analytic parameters of its
generating vertex by :meth:`HyperboloidSpec.params`; half-step shifts then
become ``du/2`` and ``dv/2`` inside the formulas.
"""
from __future__ import annotations

from dataclasses import dataclass

import mpmath
import numpy as np

from . import _num
from .grid import Family, SiteField, StaggeredDomain
from .net import AsymptoticNet, DegenerateNetError, quad_M
from .report import ResidualReport, relative


class _NumpyMath:
    sinh, cosh, sqrt, exp = np.sinh, np.cosh, np.sqrt, np.exp

    @staticmethod
    def num(x):
        return float(x)

    @staticmethod
    def power(x, e):
        return np.power(x, e)


class _MpMath:
    sinh = np.vectorize(mpmath.sinh, otypes=[object])
    cosh = np.vectorize(mpmath.cosh, otypes=[object])
    sqrt = np.vectorize(mpmath.sqrt, otypes=[object])
    exp = np.vectorize(mpmath.exp, otypes=[object])

    @staticmethod
    def num(x):
        return mpmath.mpf(x)

    @staticmethod
    def power(x, e):
        return np.vectorize(lambda t: mpmath.power(t, e), otypes=[object])(x)


@dataclass(frozen=True)
class HyperboloidSpec:
    """Sampling of y^2 + z^2 - x^2 = c^2 on an asymptotic-parameter rectangle.

    ``dps`` switches all arithmetic to mpmath at that many digits (the caller
    should keep ``mpmath.workdps(dps)`` active while analysing the net).
    ``recentre`` translates the net by (0, 0, -c), computed without
    cancellation; this is an equi-affine change that keeps float64 accuracy
    far from the throat of the hyperboloid.
    """

    c: float = 1.0
    u0: float = 1.0
    v0: float = 1.0
    du: float = 0.1
    dv: float = 0.2
    nu: int = 20
    nv: int = 20
    dps: int | None = None
    recentre: bool = True

    def __post_init__(self):
        if not (self.c > 0 and self.du > 0 and self.dv > 0):
            raise ValueError("c, du, dv must be positive")
        if not self.u0 + self.v0 > 0:
            raise ValueError("u0 + v0 must be positive (the parametrization is singular at u+v=0)")
        StaggeredDomain(self.nu, self.nv)

    @property
    def domain(self) -> StaggeredDomain:
        return StaggeredDomain(self.nu, self.nv)

    @property
    def _m(self):
        return _MpMath if self.dps else _NumpyMath

    def params(self, i, j):
        """Analytic (u, v) of the lattice vertex (i, j); arrays broadcast."""
        m = self._m
        i, j = np.asarray(i), np.asarray(j)
        if self.dps:
            i, j = _num.to_mp(i), _num.to_mp(j)
        return m.num(self.u0) + i * m.num(self.du), m.num(self.v0) + j * m.num(self.dv)


class AnalyticHyperboloid:
    """Closed-form values at lattice sites.

    Each evaluator takes index arrays ``(i, j)`` of the site's generating
    vertex, defaulting to every site of its family.  Edge quantities on
    u-edges are the v-edge formulas with the roles of u and v exchanged.
    """

    def __init__(self, spec: HyperboloidSpec):
        self.spec = spec

    def _grid(self, family, i, j):
        if i is None:
            a, b = self.spec.domain.shape(family)
            i, j = np.meshgrid(np.arange(a), np.arange(b), indexing="ij")
        u, v = self.spec.params(i, j)
        m = self.spec._m
        return m, m.num(self.spec.c), m.num(self.spec.du), m.num(self.spec.dv), u, v

    # vertex quantities
    def q(self, i=None, j=None):
        m, c, _, _, u, v = self._grid(Family.VERTEX, i, j)
        s = m.sinh(u + v)
        return np.stack([-c * m.cosh(u - v) / s, -c * m.sinh(u - v) / s, c * m.cosh(u + v) / s], -1)

    def q_recentred(self, i=None, j=None):
        m, c, _, _, u, v = self._grid(Family.VERTEX, i, j)
        s = m.sinh(u + v)
        return np.stack([-c * m.cosh(u - v) / s, -c * m.sinh(u - v) / s, c * m.exp(-(u + v)) / s], -1)

    def nu(self, i=None, j=None):
        m, c, _, _, u, v = self._grid(Family.VERTEX, i, j)
        k = m.sqrt(c + 0 * u) / m.sinh(u + v)
        return np.stack([k * m.cosh(u - v), k * m.sinh(v - u), k * m.cosh(u + v)], -1)

    # edge differences
    def q1(self, i=None, j=None):
        m, c, du, _, u, v = self._grid(Family.UEDGE, i, j)
        s = u + v
        k = c * m.sinh(du) / (m.sinh(s) * m.sinh(s + du))
        return np.stack([k * m.cosh(2 * v), -k * m.sinh(2 * v), -k], -1)

    def q2(self, i=None, j=None):
        m, c, _, dv, u, v = self._grid(Family.VEDGE, i, j)
        s = u + v
        k = c * m.sinh(dv) / (m.sinh(s) * m.sinh(s + dv))
        return np.stack([k * m.cosh(2 * u), k * m.sinh(2 * u), -k], -1)

    # quad quantities
    def omega(self, i=None, j=None):
        m, c, du, dv, u, v = self._grid(Family.QUAD, i, j)
        s = u + v
        den = m.sqrt(m.sinh(s + du + dv) * m.sinh(s + du) * m.sinh(s + dv) * m.sinh(s))
        return 2 * m.power(c + 0 * s, 1.5) * m.sinh(du) * m.sinh(dv) / den

    def gamma(self, i=None, j=None):
        m, _, du, dv, u, v = self._grid(Family.QUAD, i, j)
        s = u + v
        return m.sqrt(m.sinh(s + du + dv) * m.sinh(s) / (m.sinh(s + du) * m.sinh(s + dv)))

    def xi(self, i=None, j=None):
        m, c, du, dv, u, v = self._grid(Family.QUAD, i, j)
        s = u + v
        den = 2 * m.sqrt(c + 0 * s) * m.sqrt(m.sinh(s + dv) * m.sinh(s + du + dv) * m.sinh(s) * m.sinh(s + du))
        x = -m.cosh(du) * m.sinh(2 * v + dv) - m.cosh(dv) * m.sinh(2 * u + du)
        y = m.cosh(du) * m.cosh(2 * v + dv) - m.cosh(dv) * m.cosh(2 * u + du)
        z = m.sinh(2 * u + 2 * v + du + dv)
        return np.stack([x / den, y / den, z / den], -1)

    # edge quantities: a is the step across the edge, b the step along it
    @staticmethod
    def _p(m, s, a, b):
        return m.sqrt(m.sinh(s - a) * m.sinh(s + a + b) / (m.sinh(s - a + b) * m.sinh(s + a)))

    @staticmethod
    def _h(m, s, a, b):
        den = m.sqrt(m.sinh(s - a) * m.sinh(s + a) * m.sinh(s - a + b) * m.sinh(s + a + b))
        return -2 * m.sinh(b) * m.sinh(a) * m.cosh(a) / den

    @staticmethod
    def _H(m, c, s, a, b):
        num = m.power(c + 0 * s, -1.5) * m.cosh(a) * m.sqrt(m.sinh(s + b) * m.sinh(s))
        den = m.power(m.sinh(s - a) * m.sinh(s + a) * m.sinh(s - a + b) * m.sinh(s + a + b), 0.25)
        return num / den

    def p_v(self, i=None, j=None):
        m, _, du, dv, u, v = self._grid(Family.VEDGE, i, j)
        return self._p(m, u + v, du, dv)

    def p_u(self, i=None, j=None):
        m, _, du, dv, u, v = self._grid(Family.UEDGE, i, j)
        return self._p(m, u + v, dv, du)

    def h_v(self, i=None, j=None):
        m, _, du, dv, u, v = self._grid(Family.VEDGE, i, j)
        return self._h(m, u + v, du, dv)

    def h_u(self, i=None, j=None):
        m, _, du, dv, u, v = self._grid(Family.UEDGE, i, j)
        return self._h(m, u + v, dv, du)

    def H_v(self, i=None, j=None):
        m, c, du, dv, u, v = self._grid(Family.VEDGE, i, j)
        return self._H(m, c, u + v, du, dv)

    def H_u(self, i=None, j=None):
        m, c, du, dv, u, v = self._grid(Family.UEDGE, i, j)
        return self._H(m, c, u + v, dv, du)

    # smooth values
    def smooth_H(self):
        return self.spec._m.num(self.spec.c) ** self.spec._m.num(-1.5)

    def smooth_omega(self, u, v):
        m = self.spec._m
        c = m.num(self.spec.c)
        return 2 * m.power(c + 0 * np.asarray(u), 1.5) / m.sinh(np.asarray(u) + v) ** 2


def hyperboloid_net(spec: HyperboloidSpec) -> tuple[AsymptoticNet, AnalyticHyperboloid]:
    ana = AnalyticHyperboloid(spec)
    ctx = mpmath.workdps(spec.dps) if spec.dps else _nullctx()
    with ctx:
        q = ana.q_recentred() if spec.recentre else ana.q()
    return AsymptoticNet.from_array(q), ana


class _nullctx:
    def __enter__(self):
        return self

    def __exit__(self, *a):
        return False


def integrate_lelieuvre(nu, gamma=None, base=(0.0, 0.0, 0.0)) -> tuple[AsymptoticNet, ResidualReport]:
    """Integrate q from co-normals: bottom row first, then each column upward.

    The report is the per-quad closure defect between the two paths around
    the quad, relative to the largest edge increment involved.
    """
    n = np.asarray(nu.values if isinstance(nu, SiteField) else nu)
    if n.ndim != 3 or n.shape[2] != 3:
        raise ValueError("co-normals need shape (nu+1, nv+1, 3)")
    a, b = n.shape[:2]
    q = np.empty(n.shape, dtype=n.dtype)
    q[0, 0] = _num.to_mp(np.asarray(base, float)) if _num.is_mp(n) else np.asarray(base, float)
    inc_u = _num.cross(n[:-1], n[1:])
    inc_v = -_num.cross(n[:, :-1], n[:, 1:])
    for i in range(a - 1):
        q[i + 1, 0] = q[i, 0] + inc_u[i, 0]
    for i in range(a):
        for j in range(b - 1):
            q[i, j + 1] = q[i, j] + inc_v[i, j]
    right_up = inc_u[:, :-1] + inc_v[1:]
    up_right = inc_v[:-1] + inc_u[:, 1:]
    scale = [_num.norm(x) for x in (inc_u[:, :-1], inc_v[1:], inc_v[:-1], inc_u[:, 1:])]
    res = relative(_num.norm(right_up - up_right), *scale)
    report = ResidualReport.from_values("lelieuvre_closure", Family.QUAD, res)
    return AsymptoticNet.from_array(q), report


def minimal_net(f, g, base=(0.0, 0.0, 0.0)) -> AsymptoticNet:
    """Net whose co-normals are nu(u, v) = f(u) + g(v) (gauge identically 1)."""
    f, g = np.asarray(f), np.asarray(g)
    if f.ndim != 2 or g.ndim != 2 or f.shape[1] != 3 or g.shape[1] != 3:
        raise ValueError("f and g must be sampled curves of shape (n, 3)")
    nu = f[:, None, :] + g[None, :, :]
    net, _ = integrate_lelieuvre(nu, base=base)
    M = _num.to_float(quad_M(net).values)
    bad = np.argwhere(~(M > 0))
    if len(bad):
        i, j = (int(x) for x in bad[0])
        raise DegenerateNetError((i, j), M[i, j])
    return net


def paraboloid_net(nu: int = 4, nv: int = 4, u0: int = 0, v0: int = 0) -> AsymptoticNet:
    """q(u, v) = (v, u, -uv) on integer samples; M = 1, nu = (-u, -v, -1)."""
    u = np.arange(u0, u0 + nu + 1, dtype=float)[:, None]
    v = np.arange(v0, v0 + nv + 1, dtype=float)[None, :]
    u, v = np.broadcast_arrays(u, v)
    return AsymptoticNet.from_array(np.stack([v, u, -u * v], -1))


def moutard_conormals(gamma, row0, col0) -> np.ndarray:
    """Co-normals from the Moutard recurrence with prescribed gauge and boundary.

    ``gamma`` is (nu, nv), ``row0`` the co-normals along v = 0 (nu+1, 3) and
    ``col0`` along u = 0 (nv+1, 3); ``row0[0]`` must equal ``col0[0]``.
    """
    gamma, row0, col0 = np.asarray(gamma), np.asarray(row0), np.asarray(col0)
    nu_, nv_ = gamma.shape
    n = np.empty((nu_ + 1, nv_ + 1, 3), dtype=np.result_type(gamma, row0, col0))
    n[:, 0], n[0, :] = row0, col0
    for i in range(nu_):
        for j in range(nv_):
            n[i + 1, j + 1] = (n[i, j + 1] + n[i + 1, j]) / gamma[i, j] ** 2 - n[i, j]
    return n


def generic_net(nu: int = 8, nv: int = 8, seed: int = 0, amplitude: float = 0.15, dps: int | None = None):
    """A non-quadric asymptotic net with nonzero cubic form and curvature.

    Smooth random perturbation of the paraboloid co-normals, run through the
    Moutard recurrence and integrated.  Returns (net, conormals, gamma).
    The recurrence amplifies the gauge's deviation from 1, so some seeds give
    folded nets (gauge propagation then fails) or very large ones; the test
    suite uses seeds 0, 2 and 7.
    """
    rng = np.random.default_rng(seed)

    def smooth(n, k=3):
        t = np.linspace(0.0, 1.0, n)
        coef = rng.standard_normal((k, 3))
        return sum(np.outer(np.sin((m + 1) * np.pi * t / 2), coef[m]) / (m + 1) for m in range(k))

    su = rng.standard_normal(3)
    ti, tj = np.meshgrid(np.linspace(0, 1, nu), np.linspace(0, 1, nv), indexing="ij")
    gamma = np.exp(amplitude * (su[0] * np.sin(2 * ti + 1) * np.cos(1.5 * tj) + su[1] * ti * tj + 0.5 * su[2] * (ti - tj)))
    u = np.arange(nu + 1, dtype=float)
    v = np.arange(nv + 1, dtype=float)
    row0 = np.stack([-u, 0 * u, -np.ones_like(u)], -1) + amplitude * smooth(nu + 1)
    col0 = np.stack([0 * v, -v, -np.ones_like(v)], -1) + amplitude * smooth(nv + 1)
    col0[0] = row0[0]
    if dps:
        with mpmath.workdps(dps):
            gamma, row0, col0 = _num.to_mp(gamma), _num.to_mp(row0), _num.to_mp(col0)
            n = moutard_conormals(gamma, row0, col0)
            net, _ = integrate_lelieuvre(n)
    else:
        n = moutard_conormals(gamma, row0, col0)
        net, _ = integrate_lelieuvre(n)
    return net, n, gamma
