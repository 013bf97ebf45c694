"""Discrete affine structure of an asymptotic net.

Quantities and where they live:

* ``Omega``, ``gamma``, ``xi``: quads
* ``nu`` (co-normal): vertices
* ``A``: vertices with both u-neighbours; ``B``: vertices with both v-neighbours
* ``p``, ``h``, ``H``: edges with a quad on each side

Sign conventions fixed here and used throughout:

* ``B`` is the determinant ``[q2(u,v+1/2), q2(u,v-1/2), gamma*xi]``.  This is the
  orientation for which the structural and compatibility identities hold.
* ``H = -h / sqrt(Omega * Omega')``, so that the discrete hyperboloid has
  positive mean curvature converging to the smooth value ``c**-1.5``.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import _num, config
from .grid import EdgePair, Family, SiteField, StaggeredDomain, mixed12, shifted
from .net import AsymptoticNet, DegenerateNetError, assert_nondegenerate, planarity_report
from .report import ResidualReport, relative

Q, V, UE, VE = Family.QUAD, Family.VERTEX, Family.UEDGE, Family.VEDGE
H = 0.5


class GaugePropagationError(ValueError):
    def __init__(self, vertex, message):
        self.vertex = vertex
        super().__init__(f"gauge propagation failed at vertex {vertex}: {message}")


class VerificationError(ValueError):
    def __init__(self, report: ResidualReport, tol: float):
        self.report, self.tol = report, tol
        super().__init__(
            f"{report.name}: max residual {report.max_abs:.3e} at {report.argmax} exceeds {tol:.1e}"
        )


def compute_omega(net: AsymptoticNet) -> SiteField:
    M = assert_nondegenerate(net)
    return M.with_values(_num.sqrt(M.values))


def _corner_vectors(net: AsymptoticNet, omega: SiteField) -> dict[str, np.ndarray]:
    """Per-quad cross products divided by Omega, keyed by corner."""
    q1, q2 = net.q1().values, net.q2().values
    om = omega.values[..., None]
    lo, hi = q1[:, :-1], q1[:, 1:]
    left, right = q2[:-1], q2[1:]
    return {
        "LL": _num.cross(lo, left) / om,
        "LR": _num.cross(lo, right) / om,
        "UL": _num.cross(hi, left) / om,
        "UR": _num.cross(hi, right) / om,
    }


# (di, dj, my corner, power of my gamma, their corner, power of r giving their gamma)
_NEIGHBOURS = (
    (1, 0, "LR", 1, "LL", -1),
    (0, 1, "UL", 1, "LL", -1),
    (-1, 0, "LL", -1, "LR", 1),
    (0, -1, "LL", -1, "UL", 1),
)
_CORNER_VERTEX = {"LL": (0, 0), "LR": (1, 0), "UL": (0, 1), "UR": (1, 1)}


def propagate_gamma(
    net: AsymptoticNet,
    gamma0=1.0,
    seed_quad: tuple[int, int] = (0, 0),
    omega: SiteField | None = None,
    tol: float = config.GAUGE_COLLINEARITY_TOL,
) -> SiteField:
    """Gauge field making the four co-normal formulas agree at every vertex.

    Breadth-first from ``seed_quad``; each neighbour's gamma solves the
    coincidence of co-normals at a shared vertex.
    """
    if omega is None:
        omega = compute_omega(net)
    dom = net.domain
    like = net.positions
    g0 = _num.scalar(gamma0, like) if not _num.is_mp(like) else _as_mp(gamma0)
    if not g0 > 0:
        raise ValueError(f"gamma0 must be positive, got {gamma0}")
    si, sj = seed_quad
    if not (0 <= si < dom.nu and 0 <= sj < dom.nv):
        raise IndexError(f"seed quad {seed_quad} outside the domain")
    W = _corner_vectors(net, omega)
    gamma = _num.full_nan((dom.nu, dom.nv), like)
    gamma[si, sj] = g0
    done = np.zeros((dom.nu, dom.nv), bool)
    done[si, sj] = True
    queue = deque([(si, sj)])
    while queue:
        i, j = queue.popleft()
        g = gamma[i, j]
        for di, dj, mine, mexp, theirs, texp in _NEIGHBOURS:
            a, b = i + di, j + dj
            if not (0 <= a < dom.nu and 0 <= b < dom.nv) or done[a, b]:
                continue
            x = W[mine][i, j] * (g if mexp > 0 else 1 / g)
            y = W[theirs][a, b]
            yy = _num.dot(y, y)
            r = _num.dot(x, y) / yy
            ci, cj = _CORNER_VERTEX[mine]
            vertex = (i + ci, j + cj)
            off = _num.norm(x - r * y)
            if not off <= tol * _num.norm(x):
                raise GaugePropagationError(
                    vertex, f"co-normal directions differ (relative {float(off / _num.norm(x)):.3e})"
                )
            if not r > 0:
                raise GaugePropagationError(vertex, "co-normal formulas have opposite orientation")
            gamma[a, b] = r if texp > 0 else 1 / r
            done[a, b] = True
            queue.append((a, b))
    return SiteField(dom, Q, gamma)


def _as_mp(x):
    import mpmath

    return mpmath.mpf(x)


def _conormal_candidates(net: AsymptoticNet, gamma: SiteField, omega: SiteField) -> list[np.ndarray]:
    """The four co-normal formulas at each vertex, NaN where the quad is missing."""
    W = _corner_vectors(net, omega)
    g = gamma.values[..., None]
    dom = net.domain
    per_quad = {
        "LL": W["LL"] / g,  # vertex is the lower-left corner of quad (u+1/2, v+1/2)
        "LR": W["LR"] * g,
        "UR": W["UR"] / g,
        "UL": W["UL"] * g,
    }
    offsets = {"LL": (H, H), "LR": (-H, H), "UR": (-H, -H), "UL": (H, -H)}
    out = []
    for key in ("LL", "LR", "UR", "UL"):
        f = SiteField(dom, Q, per_quad[key])
        out.append(shifted(f, V, *offsets[key]))
    return out


def conormals(net: AsymptoticNet, gamma: SiteField, omega: SiteField | None = None) -> SiteField:
    if omega is None:
        omega = compute_omega(net)
    cands = _conormal_candidates(net, gamma, omega)
    nu = cands[0].copy()
    for c in cands[1:]:
        missing = ~_num.isfinite(nu).all(axis=-1)
        nu[missing] = c[missing]
    return SiteField(net.domain, V, nu)


def conormal_coincidence_report(net, gamma, omega) -> ResidualReport:
    """Largest disagreement between available co-normal formulas, relative to |nu|."""
    cands = _conormal_candidates(net, gamma, omega)
    ref = conormals(net, gamma, omega).values
    scale = _num.to_float(_num.norm(ref))
    worst = np.zeros(scale.shape)
    for c in cands:
        d = _num.to_float(_num.norm(c - ref))
        worst = np.where(np.isnan(d), worst, np.maximum(worst, d))
    return ResidualReport.from_values("conormal_coincidence", V, relative(worst, scale))


def verify_lelieuvre(net: AsymptoticNet, nu: SiteField) -> tuple[ResidualReport, ResidualReport]:
    """nu x nu_u = q1 on u-edges and nu x nu_v = -q2 on v-edges (relative)."""
    n = nu.values
    q1, q2 = net.q1().values, net.q2().values
    du = _num.norm(_num.cross(n[:-1], n[1:]) - q1)
    dv = _num.norm(_num.cross(n[:, :-1], n[:, 1:]) + q2)
    ru = ResidualReport.from_values("lelieuvre_u", UE, relative(du, _num.norm(q1)))
    rv = ResidualReport.from_values("lelieuvre_v", VE, relative(dv, _num.norm(q2)))
    return ru, rv


def moutard_residual(nu: SiteField, gamma: SiteField) -> ResidualReport:
    n, g = nu.values, gamma.values[..., None]
    lhs = g**2 * (n[:-1, :-1] + n[1:, 1:])
    rhs = n[:-1, 1:] + n[1:, :-1]
    res = relative(_num.norm(lhs - rhs), _num.norm(lhs), _num.norm(rhs))
    return ResidualReport.from_values("moutard", Q, res)


def affine_normal(net: AsymptoticNet, omega: SiteField) -> SiteField:
    q12 = mixed12(net.q).values
    return SiteField(net.domain, Q, q12 / omega.values[..., None])


def corner_products_residual(nu: SiteField, xi: SiteField, gamma: SiteField) -> ResidualReport:
    n, x, g = nu.values, xi.values, gamma.values
    devs = [
        _num.dot(n[:-1, :-1], x) - 1 / g,
        _num.dot(n[1:, :-1], x) - g,
        _num.dot(n[:-1, 1:], x) - g,
        _num.dot(n[1:, 1:], x) - 1 / g,
    ]
    res = np.max(np.abs(np.stack([_num.to_float(d) for d in devs])), axis=0)
    return ResidualReport.from_values("corner_products", Q, res)


def _cubic_variants(net: AsymptoticNet, gamma: SiteField, xi: SiteField):
    """Four printed determinant variants for A and B at every vertex (NaN if absent)."""
    q1, q2 = net.q1(), net.q2()
    gx = SiteField(net.domain, Q, gamma.values[..., None] * xi.values)
    xg = SiteField(net.domain, Q, xi.values / gamma.values[..., None])
    quads = ((gx, H, H), (xg, H, -H), (xg, -H, H), (gx, -H, -H))
    a_m, a_p = shifted(q1, V, -H, 0), shifted(q1, V, H, 0)
    b_p, b_m = shifted(q2, V, 0, H), shifted(q2, V, 0, -H)
    A, B, scaleA, scaleB = [], [], [], []
    for f, du, dv in quads:
        w = shifted(f, V, du, dv)
        A.append(_num.det3(a_m, a_p, w))
        B.append(_num.det3(b_p, b_m, w))
        nw = _num.norm(w)
        scaleA.append(_num.norm(a_m) * _num.norm(a_p) * nw)
        scaleB.append(_num.norm(b_p) * _num.norm(b_m) * nw)
    return A, B, scaleA, scaleB


def _first_defined(variants, like):
    out = variants[0].copy()
    for v in variants[1:]:
        miss = ~_num.isfinite(out)
        out[miss] = v[miss]
    return out


def _spread(variants, scales) -> np.ndarray:
    vals = np.stack([_num.to_float(v) for v in variants])
    sc = np.stack([_num.to_float(s) for s in scales])
    count = np.isfinite(vals).sum(axis=0)
    spread = np.fmax.reduce(vals, axis=0) - np.fmin.reduce(vals, axis=0)
    spread = np.where(count >= 2, spread, np.nan)
    return relative(spread, np.fmax.reduce(sc, axis=0))


def cubic_forms(net: AsymptoticNet, gamma: SiteField, xi: SiteField):
    """Cubic-form coefficients A, B and the fourfold consistency report.

    The value stored is the first printed variant whose quad exists.  The
    report compares all available variants, relative to the determinant's
    natural scale |q_a||q_b||gamma xi|.
    """
    with np.errstate(invalid="ignore", divide="ignore"):
        A, B, sA, sB = _cubic_variants(net, gamma, xi)
        a_val = _first_defined(A, net.positions)
        b_val = _first_defined(B, net.positions)
        spread = np.fmax(_spread(A, sA), _spread(B, sB))
    dom = net.domain
    return (
        SiteField(dom, V, a_val),
        SiteField(dom, V, b_val),
        ResidualReport.from_values("cubic_fourfold", V, spread),
    )


def cubic_scales(net: AsymptoticNet, gamma: SiteField, xi: SiteField) -> tuple[np.ndarray, np.ndarray]:
    """Natural magnitude of A and B at each vertex (largest available variant scale)."""
    with np.errstate(invalid="ignore"):
        _, _, sA, sB = _cubic_variants(net, gamma, xi)
        fa = np.stack([_num.to_float(s) for s in sA])
        fb = np.stack([_num.to_float(s) for s in sB])
        return np.fmax.reduce(fa, axis=0), np.fmax.reduce(fb, axis=0)


def edge_quantities(gamma: SiteField, omega: SiteField):
    """(p, h, H) as EdgePairs on edges with a quad on both sides."""
    p_v = shifted(gamma, VE, H, 0) * shifted(gamma, VE, -H, 0)
    p_u = shifted(gamma, UE, 0, H) * shifted(gamma, UE, 0, -H)
    om_v = shifted(omega, VE, H, 0) * shifted(omega, VE, -H, 0)
    om_u = shifted(omega, UE, 0, H) * shifted(omega, UE, 0, -H)
    dom = gamma.domain
    h_v, h_u = p_v - 1 / p_v, p_u - 1 / p_u
    H_v, H_u = -h_v / _num.sqrt(om_v), -h_u / _num.sqrt(om_u)
    mk = lambda u, v: EdgePair(SiteField(dom, UE, u), SiteField(dom, VE, v))  # noqa: E731
    return mk(p_u, p_v), mk(h_u, h_v), mk(H_u, H_v)


def omega_conormal_residual(nu: SiteField, gamma: SiteField, omega: SiteField) -> ResidualReport:
    n = nu.values
    expr = _num.det3(n[:-1, :-1], n[:-1, 1:], n[1:, :-1]) / gamma.values
    res = relative(np.abs(_num.to_float(expr - omega.values)), np.abs(_num.to_float(omega.values)))
    return ResidualReport.from_values("omega_from_conormal", Q, res)


@dataclass(frozen=True, eq=False)
class AffineStructure:
    net: AsymptoticNet
    M: SiteField
    Omega: SiteField
    gamma: SiteField
    nu: SiteField
    xi: SiteField
    A: SiteField
    B: SiteField
    p: EdgePair
    h: EdgePair
    H: EdgePair
    gamma_seed: float
    seed_quad: tuple[int, int]
    reports: dict[str, ResidualReport] = field(default_factory=dict)

    @property
    def domain(self) -> StaggeredDomain:
        return self.net.domain

    # convenience accessors matching the usual field names
    @property
    def p_u(self):
        return self.p.u

    @property
    def p_v(self):
        return self.p.v

    @property
    def h_u(self):
        return self.h.u

    @property
    def h_v(self):
        return self.h.v

    @property
    def H_u(self):
        return self.H.u

    @property
    def H_v(self):
        return self.H.v

    def cubic_scales(self):
        return cubic_scales(self.net, self.gamma, self.xi)


def build_structure(
    net: AsymptoticNet,
    gamma0=1.0,
    seed_quad: tuple[int, int] = (0, 0),
    tol: float | None = config.IDENTITY_TOL,
    planarity_tol: float | None = config.PLANARITY_TOL,
) -> AffineStructure:
    """Compute every field and attach the defining-identity reports.

    With ``tol`` set, any report above it raises :class:`VerificationError`;
    pass ``tol=None`` to only collect reports.
    """
    M = assert_nondegenerate(net)
    planar, degenerate = planarity_report(net)
    if planarity_tol is not None and planar.max_abs > planarity_tol:
        raise VerificationError(planar, planarity_tol)
    omega = M.with_values(_num.sqrt(M.values))
    gamma = propagate_gamma(net, gamma0, seed_quad, omega)
    nu = conormals(net, gamma, omega)
    xi = affine_normal(net, omega)
    A, B, fourfold = cubic_forms(net, gamma, xi)
    p, h, Hm = edge_quantities(gamma, omega)
    lu, lv = verify_lelieuvre(net, nu)
    reports = {
        r.name: r
        for r in (
            planar,
            conormal_coincidence_report(net, gamma, omega),
            lu,
            lv,
            moutard_residual(nu, gamma),
            corner_products_residual(nu, xi, gamma),
            fourfold,
            omega_conormal_residual(nu, gamma, omega),
        )
    }
    if tol is not None:
        for r in reports.values():
            if r.name != "planarity" and r.max_abs > tol:
                raise VerificationError(r, tol)
    return AffineStructure(
        net, M, omega, gamma, nu, xi, A, B, p, h, Hm, gamma0, tuple(seed_quad), reports
    )


__all__ = [
    "AffineStructure",
    "DegenerateNetError",
    "GaugePropagationError",
    "VerificationError",
    "affine_normal",
    "build_structure",
    "compute_omega",
    "conormals",
    "corner_products_residual",
    "cubic_forms",
    "edge_quantities",
    "moutard_residual",
    "omega_conormal_residual",
    "propagate_gamma",
    "verify_lelieuvre",
]
