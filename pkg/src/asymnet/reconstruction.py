"""Integrate (Omega, A, B, H) back into an asymptotic net, and the inverse map.

Marching scheme (vertex indices):

1. rows 0 and 1 are extended in u with the second-difference expansions that
   only look backwards (third and fourth q11 variants);
2. columns 0 and 1 are extended in v likewise (second and fourth q22 variants);
3. every remaining vertex (u+1, v+1) closes the quad below-left of it,
   ``q(u+1,v+1) = q(u+1,v) + q(u,v+1) - q(u,v) + Omega * xi``, with xi carried
   in u through the normal difference xi1m.

The same xi is also predicted in v from the quad below (through xi2m); the
per-quad gap between the two predictions is the coherence residual.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import _num, config
from .compatibility import compat_from_scalars
from .grid import EdgePair, Family, SiteField, StaggeredDomain, shifted
from .net import AsymptoticNet
from .report import ResidualReport, relative
from .structure import build_structure

Q, V, UE, VE = Family.QUAD, Family.VERTEX, Family.UEDGE, Family.VEDGE
H = 0.5


class ReconstructionError(ValueError):
    def __init__(self, message: str, report: ResidualReport | None = None):
        self.report = report
        super().__init__(message)


@dataclass(frozen=True, eq=False)
class CompatData:
    """Input of the reconstruction: metric, cubic form, mean curvature, gauge seed, frame."""

    domain: StaggeredDomain
    Omega: SiteField
    A: SiteField
    B: SiteField
    H_u: SiteField
    H_v: SiteField
    frame: np.ndarray  # q(0,0), q(1,0), q(0,1), q(1,1)
    gamma_seed: float = 1.0
    seed_quad: tuple[int, int] = (0, 0)

    def __post_init__(self):
        fr = np.array(self.frame, copy=True)
        if fr.shape != (4, 3):
            raise ValueError(f"frame must hold four points in R^3, got shape {fr.shape}")
        fr.setflags(write=False)
        object.__setattr__(self, "frame", fr)
        for name, fam in (("Omega", Q), ("A", V), ("B", V), ("H_u", UE), ("H_v", VE)):
            f = getattr(self, name)
            if f.family is not fam:
                raise ValueError(f"{name} must live on {fam.value}s, got {f.family.value}")
        if not np.all(_num.to_float(self.Omega.values) > 0):
            raise ValueError("Omega must be positive on every quad")

    @property
    def multiprecision(self) -> bool:
        return _num.is_mp(self.Omega.values)

    def frame_determinant(self):
        q00, q10, q01, q11 = self.frame
        return _num.det3(q10 - q00, q01 - q00, q11 - q00)


@dataclass(frozen=True)
class AffineMap:
    linear: np.ndarray
    translation: np.ndarray

    def __call__(self, points):
        pts = np.asarray(points)
        return pts @ np.asarray(self.linear).T + np.asarray(self.translation)

    @property
    def det(self) -> float:
        return float(_num.det3(*np.asarray(self.linear).T))

    def apply(self, net: AsymptoticNet) -> AsymptoticNet:
        return net.transformed(self.linear, self.translation)


def p_from_H(Omega: SiteField, H_u: SiteField, H_v: SiteField) -> tuple[EdgePair, EdgePair]:
    """(p, h) from the mean curvature: h = -H sqrt(Omega Omega'), p the positive root of p - 1/p = h."""
    with np.errstate(invalid="ignore"):
        om_u = shifted(Omega, UE, 0, H) * shifted(Omega, UE, 0, -H)
        om_v = shifted(Omega, VE, H, 0) * shifted(Omega, VE, -H, 0)
        h_u = -H_u.values * _num.sqrt(om_u)
        h_v = -H_v.values * _num.sqrt(om_v)
        p_u = (h_u + _num.sqrt(h_u * h_u + 4)) / 2
        p_v = (h_v + _num.sqrt(h_v * h_v + 4)) / 2
    pair = lambda a, b: EdgePair(H_u.with_values(a), H_v.with_values(b))  # noqa: E731
    return pair(p_u, p_v), pair(h_u, h_v)


class GaugeRecovery(NamedTuple):
    gamma: SiteField
    loop: ResidualReport
    plaquette: ResidualReport


def _sweep(p: EdgePair, seed, seed_quad, u_first: bool):
    """gamma along the seed row (or column) first, then along every column (row)."""
    pu, pv = p.u.values, p.v.values
    nu, nv = pv.shape[0] - 1, pu.shape[1] - 1
    g = _num.full_nan((nu, nv), pu)
    si, sj = seed_quad
    g[si, sj] = seed

    def along_u(j, i0):
        for i in range(i0 + 1, nu):
            g[i, j] = pv[i, j] / g[i - 1, j]
        for i in range(i0 - 1, -1, -1):
            g[i, j] = pv[i + 1, j] / g[i + 1, j]

    def along_v(i, j0):
        for j in range(j0 + 1, nv):
            g[i, j] = pu[i, j] / g[i, j - 1]
        for j in range(j0 - 1, -1, -1):
            g[i, j] = pu[i, j + 1] / g[i, j + 1]

    if u_first:
        along_u(sj, si)
        for i in range(nu):
            along_v(i, sj)
    else:
        along_v(si, sj)
        for j in range(nv):
            along_u(j, si)
    return g


def gamma_from_p(p: EdgePair, gamma_seed=1.0, seed_quad=(0, 0)) -> GaugeRecovery:
    """Solve p = gamma * gamma' across every interior edge, starting from the seed quad.

    Two independent sweeps (u-first and v-first) are compared quad by quad.
    Since both sweeps share the seed row and column, the check is complemented
    by the plaquette condition p_N p_S = p_E p_W at interior vertices, which
    any gauge-generated p satisfies.
    """
    pu, pv = p.u.values, p.v.values
    dom = p.u.domain
    if not np.all(_num.to_float(pu[:, 1:-1]) > 0) or not np.all(_num.to_float(pv[1:-1]) > 0):
        raise ValueError("p must be positive on every interior edge")
    seed = _num.scalar(gamma_seed, pu)
    if not seed > 0:
        raise ValueError(f"gamma seed must be positive, got {gamma_seed}")
    g1 = _sweep(p, seed, seed_quad, True)
    g2 = _sweep(p, seed, seed_quad, False)
    assert np.all(_num.to_float(g1) > 0), "non-positive gauge from positive p"
    loop = relative(np.abs(_num.to_float(g1 - g2)), np.abs(_num.to_float(g1)), np.abs(_num.to_float(g2)))
    with np.errstate(invalid="ignore"):
        ns = shifted(p.v, V, 0, H) * shifted(p.v, V, 0, -H)
        ew = shifted(p.u, V, H, 0) * shifted(p.u, V, -H, 0)
        plaq = relative(np.abs(_num.to_float(ns - ew)), np.abs(_num.to_float(ns)), np.abs(_num.to_float(ew)))
    return GaugeRecovery(
        SiteField(dom, Q, g1),
        ResidualReport.from_values("gauge_loop", Q, loop),
        ResidualReport.from_values("gauge_plaquette", V, plaq),
    )


class Reconstruction(NamedTuple):
    net: AsymptoticNet
    coherence: ResidualReport
    gauge: GaugeRecovery


def _frame_check(data: CompatData, tol: float):
    det = data.frame_determinant()
    target = data.Omega.values[0, 0] ** 2
    rel = abs(float((det - target) / target))
    if not rel <= tol:
        raise ReconstructionError(
            f"frame determinant {float(det):.6e} differs from Omega(1/2,1/2)^2 = {float(target):.6e} "
            f"(relative {rel:.2e})"
        )


def reconstruct(
    data: CompatData,
    data_tol: float | None = config.RECONSTRUCT_DATA_TOL,
    frame_tol: float = config.FRAME_TOL,
    coherence_tol: float | None = None,
) -> Reconstruction:
    """March the structural equations outward from the frame.

    ``data_tol`` gates the compatibility residuals of the input (None skips the
    check); ``coherence_tol`` defaults to 1e-10 * (nu + nv).
    """
    dom = data.domain
    nu, nv = dom.nu, dom.nv
    if nu < 2 or nv < 2:
        raise ReconstructionError("reconstruction needs at least 2x2 quads")
    _frame_check(data, frame_tol)
    p, h = p_from_H(data.Omega, data.H_u, data.H_v)
    gauge = gamma_from_p(p, data.gamma_seed, data.seed_quad)
    gauge_bad = max(gauge.loop.max_abs, gauge.plaquette.max_abs)
    if data_tol is not None:
        if gauge_bad > data_tol:
            # the plaquette report is local to the bad edge; the loop report smears along a sweep
            worst = gauge.plaquette if gauge.plaquette.max_abs > data_tol else gauge.loop
            raise ReconstructionError(f"p is not generated by a gauge ({gauge_bad:.2e})", worst)
        compat = compat_from_scalars(data.Omega, gauge.gamma, data.A, data.B, p, h)
        for rep in compat.reports().values():
            if rep.max_abs > data_tol:
                raise ReconstructionError(
                    f"input violates {rep.name}: residual {rep.max_abs:.2e} at {rep.argmax}", rep
                )

    Om, g = data.Omega.values, gauge.gamma.values
    A, B = data.A.values, data.B.values
    pu, pv, hu, hv = p.u.values, p.v.values, h.u.values, h.v.values
    like = data.Omega.values
    q = _num.full_nan((nu + 1, nv + 1, 3), like)
    q[0, 0], q[1, 0], q[0, 1], q[1, 1] = data.frame

    # rows 0 and 1
    for u in range(1, nu):
        o = Om[u - 1, 0]
        q2 = q[u, 1] - q[u, 0]
        o1m = pv[u, 0] * Om[u, 0] - Om[u - 1, 0]
        o1p = Om[u, 0] - pv[u, 0] * Om[u - 1, 0]
        q11_0 = o1m / o * (q[u, 0] - q[u - 1, 0]) + g[u - 1, 0] * A[u, 0] / o * q2
        q11_1 = (o1p / o * (q[u, 1] - q[u - 1, 1]) + g[u, 0] * A[u, 1] / o * q2) / pv[u, 0]
        q[u + 1, 0] = 2 * q[u, 0] - q[u - 1, 0] + q11_0
        q[u + 1, 1] = 2 * q[u, 1] - q[u - 1, 1] + q11_1
    # columns 0 and 1
    for v in range(1, nv):
        o = Om[0, v - 1]
        q1 = q[1, v] - q[0, v]
        o2m = pu[0, v] * Om[0, v] - Om[0, v - 1]
        o2p = Om[0, v] - pu[0, v] * Om[0, v - 1]
        q22_0 = g[0, v - 1] * B[0, v] / o * q1 + o2m / o * (q[0, v] - q[0, v - 1])
        q22_1 = (g[0, v] * B[1, v] / o * q1 + o2p / o * (q[1, v] - q[1, v - 1])) / pu[0, v]
        q[0, v + 1] = 2 * q[0, v] - q[0, v - 1] + q22_0
        q[1, v + 1] = 2 * q[1, v] - q[1, v - 1] + q22_1

    xi = _num.full_nan((nu, nv, 3), like)
    xi_col = _num.full_nan((nu, nv, 3), like)
    for i in range(nu):
        xi[i, 0] = (q[i + 1, 1] - q[i, 1] - q[i + 1, 0] + q[i, 0]) / Om[i, 0]
    for j in range(nv):
        xi[0, j] = (q[1, j + 1] - q[0, j + 1] - q[1, j] + q[0, j]) / Om[0, j]

    for v in range(1, nv):
        for u in range(1, nu):
            o_l, o = Om[u - 1, v], Om[u, v]
            q1 = q[u, v] - q[u - 1, v]
            q2 = q[u, v + 1] - q[u, v]
            a2m = A[u, v + 1] / g[u - 1, v] - g[u - 1, v] * A[u, v]
            xi1m = pv[u, v] * (-hv[u, v] / o_l * q1 + a2m / (o_l * o) * q2)
            xi[u, v] = (xi[u - 1, v] + xi1m) / pv[u, v]
            q[u + 1, v + 1] = q[u + 1, v] + q[u, v + 1] - q[u, v] + o * xi[u, v]
            # the same normal predicted from the quad below
            o_b = Om[u, v - 1]
            b1p = g[u, v] * B[u + 1, v] - B[u, v] / g[u, v]
            xi2m = b1p / (o * o_b) * (q[u + 1, v] - q[u, v]) - hu[u, v] / o * q2
            xi_col[u, v] = (xi[u, v - 1] + xi2m) / pu[u, v]

    with np.errstate(invalid="ignore"):
        gap = _num.norm(xi - xi_col)
        coh = relative(gap, _num.norm(xi), _num.norm(xi_col))
    coherence = ResidualReport.from_values("coherence", Q, coh)
    tol = coherence_tol if coherence_tol is not None else 1e-10 * (nu + nv)
    if coherence.max_abs > tol:
        raise ReconstructionError(
            f"row and column marching disagree by {coherence.max_abs:.2e} at quad {coherence.argmax}", coherence
        )
    return Reconstruction(AsymptoticNet.from_array(q), coherence, gauge)


def extract(net: AsymptoticNet, gamma_seed=1.0, seed_quad=(0, 0), tol: float | None = config.IDENTITY_TOL) -> CompatData:
    """Package a net's own (Omega, A, B, H) and first four points as reconstruction input."""
    s = build_structure(net, gamma_seed, seed_quad, tol=tol)
    q = net.positions
    frame = np.stack([q[0, 0], q[1, 0], q[0, 1], q[1, 1]])
    return CompatData(net.domain, s.Omega, s.A, s.B, s.H.u, s.H.v, frame, s.gamma_seed, tuple(seed_quad))


def _frame_matrix(q):
    """Columns: the three frame edge vectors q(1,0)-q(0,0), q(0,1)-q(0,0), q(1,1)-q(0,0)."""
    return np.stack([q[1, 0] - q[0, 0], q[0, 1] - q[0, 0], q[1, 1] - q[0, 0]], axis=1)


def _inverse3(m):
    c0, c1, c2 = m[:, 0], m[:, 1], m[:, 2]
    det = _num.det3(c0, c1, c2)
    rows = np.stack([_num.cross(c1, c2), _num.cross(c2, c0), _num.cross(c0, c1)])
    return rows / det, det


def affine_align(net_a: AsymptoticNet, net_b: AsymptoticNet, det_tol: float = config.ALIGN_DET_TOL):
    """The affine map carrying net_a's first-quad frame onto net_b's, and the
    largest vertex misfit after mapping all of net_a, relative to net_b's diameter."""
    if net_a.domain != net_b.domain:
        raise ValueError("nets live on different domains")
    qa, qb = net_a.positions, net_b.positions
    ea, eb = _frame_matrix(qa), _frame_matrix(qb)
    inv, det = _inverse3(ea)
    scale = float(np.prod([_num.to_float(_num.norm(ea[:, k])) for k in range(3)]))
    if not abs(float(det)) > det_tol * scale:
        raise ValueError(f"degenerate frame in the first net (det {float(det):.3e})")
    linear = eb @ inv
    translation = qb[0, 0] - linear @ qa[0, 0]
    amap = AffineMap(linear, translation)
    mapped = amap(qa)
    err = float(np.max(_num.to_float(_num.norm(mapped - qb))))
    diam = net_b.diameter()
    return amap, (err / diam if diam > 0 else err)


__all__ = [
    "AffineMap",
    "CompatData",
    "GaugeRecovery",
    "Reconstruction",
    "ReconstructionError",
    "affine_align",
    "extract",
    "gamma_from_p",
    "p_from_H",
    "reconstruct",
]
