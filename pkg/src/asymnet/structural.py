"""Difference fields of the affine structure, the structural equations as
residuals, and the minimal / affine-sphere classifications."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import _num, config, formulas
from .grid import EdgePair, Family, SiteField, diff11, diff22, shifted
from .report import ResidualReport, merge, relative
from .structure import AffineStructure

Q, V, UE, VE = Family.QUAD, Family.VERTEX, Family.UEDGE, Family.VEDGE
H = 0.5


@dataclass(frozen=True, eq=False)
class DerivedFields:
    Omega1_minus: SiteField
    Omega1_plus: SiteField
    Omega2_minus: SiteField
    Omega2_plus: SiteField
    A2_plus: SiteField
    A2_minus: SiteField
    B1_plus: SiteField
    B1_minus: SiteField
    xi1_minus: SiteField
    xi1_plus: SiteField
    xi2_minus: SiteField
    xi2_plus: SiteField
    reports: dict[str, ResidualReport] = field(default_factory=dict)


def _vec(x):
    return np.asarray(x)[..., None]


def _orthogonality(name, diff: SiteField, nu: SiteField, du, dv) -> ResidualReport:
    n = shifted(nu, diff.family, du, dv)
    d = diff.values
    res = relative(np.abs(_num.to_float(_num.dot(d, n))), _num.to_float(_num.norm(d) * _num.norm(n)))
    return ResidualReport.from_values(name, diff.family, res)


def scalar_differences(Omega: SiteField, gamma: SiteField, A: SiteField, B: SiteField, p: EdgePair) -> dict:
    """Edge differences of Omega, A and B: O1m, O1p, A2p, A2m on v-edges and
    O2m, O2p, B1p, B1m on u-edges.  Needs no immersion, only scalar data."""
    dom = Omega.domain
    with np.errstate(invalid="ignore", divide="ignore"):
        # v-edge (u, v+1/2): right quad (+1/2, 0), left quad (-1/2, 0)
        pv = p.v.values
        om_r, om_l = shifted(Omega, VE, H, 0), shifted(Omega, VE, -H, 0)
        g_r, g_l = shifted(gamma, VE, H, 0), shifted(gamma, VE, -H, 0)
        a_up, a_dn = shifted(A, VE, 0, H), shifted(A, VE, 0, -H)
        # u-edge (u+1/2, v): upper quad (0, +1/2), lower quad (0, -1/2)
        pu = p.u.values
        om_t, om_b = shifted(Omega, UE, 0, H), shifted(Omega, UE, 0, -H)
        g_t, g_b = shifted(gamma, UE, 0, H), shifted(gamma, UE, 0, -H)
        b_rt, b_lt = shifted(B, UE, H, 0), shifted(B, UE, -H, 0)
        vals = {
            "O1m": (VE, pv * om_r - om_l),
            "O1p": (VE, om_r - pv * om_l),
            "A2p": (VE, g_r * a_up - a_dn / g_r),
            "A2m": (VE, a_up / g_l - g_l * a_dn),
            "O2m": (UE, pu * om_t - om_b),
            "O2p": (UE, om_t - pu * om_b),
            "B1p": (UE, g_t * b_rt - b_lt / g_t),
            "B1m": (UE, b_rt / g_b - g_b * b_lt),
        }
    return {k: SiteField(dom, fam, a) for k, (fam, a) in vals.items()}


def derived_fields(structure: AffineStructure) -> DerivedFields:
    s = structure
    dom = s.domain
    sd = scalar_differences(s.Omega, s.gamma, s.A, s.B, s.p)
    xi = s.xi
    with np.errstate(invalid="ignore", divide="ignore"):
        pv, pu = _vec(s.p.v.values), _vec(s.p.u.values)
        xi_r, xi_l = shifted(xi, VE, H, 0), shifted(xi, VE, -H, 0)
        xi_t, xi_b = shifted(xi, UE, 0, H), shifted(xi, UE, 0, -H)
        x1m, x1p = pv * xi_r - xi_l, xi_r - pv * xi_l
        x2m, x2p = pu * xi_t - xi_b, xi_t - pu * xi_b
    out = DerivedFields(
        sd["O1m"], sd["O1p"], sd["O2m"], sd["O2p"], sd["A2p"], sd["A2m"], sd["B1p"], sd["B1m"],
        SiteField(dom, VE, x1m), SiteField(dom, VE, x1p), SiteField(dom, UE, x2m), SiteField(dom, UE, x2p),
    )
    with np.errstate(invalid="ignore", divide="ignore"):
        reps = [
            _orthogonality("orth_xi1_minus", out.xi1_minus, s.nu, 0, -H),
            _orthogonality("orth_xi1_plus", out.xi1_plus, s.nu, 0, H),
            _orthogonality("orth_xi2_minus", out.xi2_minus, s.nu, -H, 0),
            _orthogonality("orth_xi2_plus", out.xi2_plus, s.nu, H, 0),
        ]
    out.reports.update({r.name: r for r in reps})
    return out


def _sphere_k(structure: AffineStructure) -> EdgePair:
    p, h = structure.p, structure.h
    with np.errstate(invalid="ignore", divide="ignore"):
        ku = -h.u.values * p.u.values / (1 + p.u.values)
        kv = -h.v.values * p.v.values / (1 + p.v.values)
    return EdgePair(p.u.with_values(ku), p.v.with_values(kv))


def identity_env(structure: AffineStructure, fields: DerivedFields | None = None) -> dict:
    """Name -> field mapping consumed by the identity tables."""
    if fields is None:
        fields = derived_fields(structure)
    s, f = structure, fields
    return {
        "q11": diff11(s.net.q),
        "q22": diff22(s.net.q),
        "q1": s.net.q1(),
        "q2": s.net.q2(),
        "Omega": s.Omega,
        "gamma": s.gamma,
        "xi": s.xi,
        "nu": s.nu,
        "A": s.A,
        "B": s.B,
        "p": s.p,
        "h": s.h,
        "k": _sphere_k(s),
        "O1m": f.Omega1_minus,
        "O1p": f.Omega1_plus,
        "O2m": f.Omega2_minus,
        "O2p": f.Omega2_plus,
        "A2p": f.A2_plus,
        "A2m": f.A2_minus,
        "B1p": f.B1_plus,
        "B1m": f.B1_minus,
        "xi1m": f.xi1_minus,
        "xi1p": f.xi1_plus,
        "xi2m": f.xi2_minus,
        "xi2p": f.xi2_plus,
    }


class VariantResiduals(NamedTuple):
    """Combined report (site-wise max) plus one report per variant."""

    combined: ResidualReport
    variants: dict[str, ResidualReport]

    @property
    def max_abs(self) -> float:
        return self.combined.max_abs


def _run(name: str, table, env) -> VariantResiduals:
    per = {}
    for ident in table:
        per[ident.name] = ResidualReport.from_values(ident.name, ident.anchor, formulas.evaluate(ident, env))
    by_family: dict[Family, list] = {}
    for r in per.values():
        by_family.setdefault(r.family, []).append(r)
    if len(by_family) == 1:
        combined = merge(name, list(per.values()))
    else:
        # different anchor families: keep the worst family's report
        parts = [merge(f"{name}_{fam.value}", rs) for fam, rs in by_family.items()]
        worst = max(parts, key=lambda r: r.max_abs)
        combined = ResidualReport.from_values(name, worst.family, worst.residual)
    return VariantResiduals(combined, per)


def q_second_derivative_residuals(structure, fields=None, table=None) -> VariantResiduals:
    """Residuals of the eight second-difference expansions at interior vertices.

    ``table`` defaults to the corrected q11/q22 variants; pass
    ``formulas.Q22_PRINTED_ALTERNATES`` or a custom list to test others.
    """
    env = identity_env(structure, fields)
    return _run("q_second_derivatives", table or formulas.Q11 + formulas.Q22, env)


def xi_derivative_residuals(structure, fields=None, table=None) -> VariantResiduals:
    env = identity_env(structure, fields)
    return _run("xi_derivatives", table or formulas.XI1 + formulas.XI2, env)


class Minimality(NamedTuple):
    minimal: bool
    max_abs_h: float
    witness: tuple[str, tuple[int, int]] | None


def is_minimal(structure: AffineStructure, tol: float = config.CLASSIFY_TOL) -> Minimality:
    """Minimal iff |h| <= tol on every interior edge; witness is the worst edge."""
    best, witness = 0.0, None
    for fam, part in ((UE, structure.h.u), (VE, structure.h.v)):
        r = ResidualReport.from_values("h", fam, part.values)
        if r.argmax is not None and (witness is None or r.max_abs > best):
            best, witness = r.max_abs, (fam.value, r.argmax)
    return Minimality(best <= tol, best, witness)


class SphereTest(NamedTuple):
    report: ResidualReport
    is_sphere: bool
    a_report: ResidualReport
    b_report: ResidualReport


def affine_sphere_residual(structure: AffineStructure, tol: float = config.CLASSIFY_TOL) -> SphereTest:
    """A(u,v+1)/gamma(u-1/2,v+1/2) = A(u,v)/gamma(u+1/2,v+1/2) and the B sibling.

    Normalized by the natural magnitude of the cubic form at the two vertices
    (|q_a||q_b||gamma xi|), floored at ``RATIO_EPS``.
    """
    s = structure
    sA, sB = s.cubic_scales()
    A, B, g = s.A, s.B, s.gamma
    scA = SiteField(s.domain, V, sA)
    scB = SiteField(s.domain, V, sB)
    with np.errstate(invalid="ignore", divide="ignore"):
        ga, gb = shifted(g, VE, -H, 0), shifted(g, VE, H, 0)
        ra = shifted(A, VE, 0, H) / ga - shifted(A, VE, 0, -H) / gb
        na = np.fmax(shifted(scA, VE, 0, H) / _num.to_float(ga), shifted(scA, VE, 0, -H) / _num.to_float(gb))
        gc, gd = shifted(g, UE, 0, -H), shifted(g, UE, 0, H)
        rb = shifted(B, UE, H, 0) / gc - shifted(B, UE, -H, 0) / gd
        nb = np.fmax(shifted(scB, UE, H, 0) / _num.to_float(gc), shifted(scB, UE, -H, 0) / _num.to_float(gd))
        res_a = relative(np.abs(_num.to_float(ra)), np.fmax(na, config.RATIO_EPS))
        res_b = relative(np.abs(_num.to_float(rb)), np.fmax(nb, config.RATIO_EPS))
    a_rep = ResidualReport.from_values("sphere_A", VE, res_a)
    b_rep = ResidualReport.from_values("sphere_B", UE, res_b)
    worst = a_rep if a_rep.max_abs >= b_rep.max_abs else b_rep
    combined = ResidualReport.from_values("affine_sphere", worst.family, worst.residual)
    ok = a_rep.max_abs <= tol and b_rep.max_abs <= tol
    return SphereTest(combined, ok, a_rep, b_rep)


class BobenkoTest(NamedTuple):
    c: float
    spread: float
    constant: bool
    per_quad: np.ndarray
    excluded: tuple
    gauge_scale: float


def _parity(shape, seed):
    i, j = np.indices(shape)
    return np.where((i + j - seed[0] - seed[1]) % 2 == 0, 1, -1)


def bobenko_constant_test(structure: AffineStructure, tol: float = config.CLASSIFY_TOL) -> BobenkoTest:
    """Is (1 - gamma^2)/(Omega gamma) constant over quads for some admissible gauge?

    Gauges differ by gamma -> lambda**sigma * gamma with sigma = +-1 alternating
    over quads, so the test first picks the lambda minimizing the spread of c
    (closed form) and then measures it.  This makes the answer independent of
    the gauge seed.  Arithmetic stays in the structure's precision since
    1 - gamma^2 cancels badly where gamma is close to 1.
    """
    s = structure
    g0, om = s.gamma.values, s.Omega.values
    with np.errstate(invalid="ignore", divide="ignore"):
        gf, of = _num.to_float(g0), _num.to_float(om)
        bad = ~np.isfinite(gf) | ~np.isfinite(of) | (np.abs(of * gf) < config.BOBENKO_EPS)
    excluded = tuple((int(i), int(j)) for i, j in zip(*np.nonzero(bad)))
    ok = ~bad
    sigma = _parity(g0.shape, s.seed_quad)
    if not ok.any():
        return BobenkoTest(float("nan"), float("nan"), False, np.full(gf.shape, np.nan), excluded, 1.0)
    g, o, sg = g0[ok], om[ok], sigma[ok]
    a, b = 1 / (o * g), g / o
    alpha = np.where(sg > 0, -b, a)
    beta = np.where(sg > 0, a, -b)
    one = _num.scalar(1, g0)
    lam = one
    if alpha.size > 1:
        alpha = alpha - alpha.sum() / alpha.size
        beta = beta - beta.sum() / beta.size
        saa, sbb = np.dot(alpha, alpha), np.dot(beta, beta)
        if float(saa) > 0 and float(sbb) > 0 and np.isfinite(float(saa)) and np.isfinite(float(sbb)):
            lam = _num.sqrt(_num.sqrt(sbb / saa))
    gam = np.where(sg > 0, g * lam, g / lam)
    c = (1 - gam * gam) / (o * gam)
    mean = c.sum() / c.size
    dev = np.max(_num.to_float(np.abs(c - mean)))
    mean_f = float(mean)
    spread = 0.0 if dev == 0.0 else float(dev / (abs(mean_f) + config.BOBENKO_EPS))
    per_quad = np.full(gf.shape, np.nan)
    per_quad[ok] = _num.to_float(c)
    return BobenkoTest(mean_f, spread, spread <= tol, per_quad, excluded, float(lam))


def affine_sphere_xi_identity_residual(structure, fields=None) -> VariantResiduals:
    env = identity_env(structure, fields)
    return _run("sphere_xi", formulas.SPHERE_XI, env)


__all__ = [
    "BobenkoTest",
    "DerivedFields",
    "Minimality",
    "SphereTest",
    "VariantResiduals",
    "affine_sphere_residual",
    "affine_sphere_xi_identity_residual",
    "bobenko_constant_test",
    "derived_fields",
    "scalar_differences",
    "identity_env",
    "is_minimal",
    "q_second_derivative_residuals",
    "xi_derivative_residuals",
]
