"""Compatibility equations between Omega, A, B and the gauge, as residual fields."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _num, config, formulas
from .grid import EdgePair, Family, SiteField, diff11, shifted
from .report import ResidualReport, relative
from .structural import DerivedFields, derived_fields, identity_env, scalar_differences
from .structure import AffineStructure

V = Family.VERTEX
H = 0.5


@dataclass(frozen=True, eq=False)
class CompatResiduals:
    eq1: ResidualReport
    eq2: ResidualReport
    eq3: ResidualReport
    mixed_xi: ResidualReport | None = None
    printed: dict | None = None

    @property
    def max_abs(self) -> float:
        reps = [self.eq1, self.eq2, self.eq3] + ([self.mixed_xi] if self.mixed_xi else [])
        return max(r.max_abs for r in reps)

    def reports(self) -> dict[str, ResidualReport]:
        out = {"eq1": self.eq1, "eq2": self.eq2, "eq3": self.eq3}
        if self.mixed_xi is not None:
            out["mixed_xi"] = self.mixed_xi
        return out


def scalar_env(Omega: SiteField, gamma: SiteField, A: SiteField, B: SiteField, p: EdgePair, h: EdgePair) -> dict:
    env = {"Omega": Omega, "gamma": gamma, "A": A, "B": B, "p": p, "h": h}
    env.update(scalar_differences(Omega, gamma, A, B, p))
    return env


def _report(ident, env, name=None):
    return ResidualReport.from_values(name or ident.name, ident.anchor, formulas.evaluate(ident, env))


def compat_from_scalars(Omega, gamma, A, B, p, h) -> CompatResiduals:
    """The three equations evaluated on scalar data alone (no immersion needed)."""
    env = scalar_env(Omega, gamma, A, B, p, h)
    printed = {i.name: _report(i, env) for i in formulas.COMPAT_PRINTED}
    return CompatResiduals(
        _report(formulas.COMPAT_EQ1, env, "eq1"),
        _report(formulas.COMPAT_EQ2, env, "eq2"),
        _report(formulas.COMPAT_EQ3, env, "eq3"),
        None,
        printed,
    )


def mixed_xi_identity_residual(structure: AffineStructure, fields: DerivedFields | None = None) -> ResidualReport:
    env = identity_env(structure, fields)
    return _report(formulas.MIXED_XI, env)


def compat_residuals(structure: AffineStructure, fields: DerivedFields | None = None) -> CompatResiduals:
    """eq1 as typeset; eq2 and eq3 in their re-derived form (typeset forms under ``printed``)."""
    if fields is None:
        fields = derived_fields(structure)
    s = structure
    base = compat_from_scalars(s.Omega, s.gamma, s.A, s.B, s.p, s.h)
    return CompatResiduals(base.eq1, base.eq2, base.eq3, mixed_xi_identity_residual(s, fields), base.printed)


def _cramer(b1, b2, b3, x, tol):
    d = _num.det3(b1, b2, b3)
    scale = _num.norm(b1) * _num.norm(b2) * _num.norm(b3)
    with np.errstate(invalid="ignore", divide="ignore"):
        bad = ~(np.abs(_num.to_float(d)) > tol * _num.to_float(scale))
        coeffs = [_num.det3(x, b2, b3) / d, _num.det3(b1, x, b3) / d, _num.det3(b1, b2, x) / d]
    return coeffs, bad


@dataclass(frozen=True, eq=False)
class TwoWayResult:
    report: ResidualReport
    route1: list
    route2: list
    data: list
    route1_closed_form_q1: np.ndarray
    excluded: tuple

    @property
    def q1_coefficient_gap(self):
        """route1 - route2 in the q1(u+1/2, v) coordinate, at vertices."""
        return self.route1[0] - self.route2[0]


def q112_two_way_residual(
    structure: AffineStructure, fields: DerivedFields | None = None, basis_tol: float = 1e-12
) -> TwoWayResult:
    """Third mixed difference q_112(u, v+1/2) computed two ways, anchored at vertex (u, v).

    Route 1 writes it through the normal difference xi1m(u, v+1/2); route 2 as
    the difference of two second-difference expansions.  Both are expanded in
    the basis {q1(u+1/2,v), q2(u,v+1/2), xi(u+1/2,v+1/2)}, together with the
    plain data q11(u,v+1) - q11(u,v).  The report is the largest coordinate
    disagreement (times its basis vector length) relative to the largest term.
    """
    if fields is None:
        fields = derived_fields(structure)
    s = structure
    sh = lambda f, du, dv: f.shifted(V, du, dv)  # noqa: E731
    with np.errstate(invalid="ignore", divide="ignore"):
        Opp, Omp, Opm = sh(s.Omega, H, H), sh(s.Omega, -H, H), sh(s.Omega, H, -H)
        gpp, gpm = sh(s.gamma, H, H), sh(s.gamma, H, -H)
        pN, hN = sh(s.p, 0, H), sh(s.h, 0, H)
        A_here, A_up = s.A.values, sh(s.A, 0, 1)
        O1p_N, O1p_S = sh(fields.Omega1_plus, 0, H), sh(fields.Omega1_plus, 0, -H)
        x1m = sh(fields.xi1_minus, 0, H)
        q1, q2 = s.net.q1(), s.net.q2()
        b1, b2, b3 = sh(q1, H, 0), sh(q2, 0, H), sh(s.xi, H, H)
        q1_up, q2_dn = sh(q1, H, 1), sh(q2, 0, -H)
        col = lambda a: np.asarray(a)[..., None]  # noqa: E731

        route1 = col(Opp - pN * Omp) * b3 + col(Omp) * x1m
        upper = col(O1p_N / Opp) * q1_up + col(gpp * A_up / Opp) * b2
        lower = col(O1p_S / Opm) * b1 + col(gpm * A_here / Opm) * q2_dn
        route2 = upper - lower
        q11 = diff11(s.net.q)
        data = sh(q11, 0, 1) - q11.values

    tol = basis_tol
    c1, bad = _cramer(b1, b2, b3, route1, tol)
    c2, _ = _cramer(b1, b2, b3, route2, tol)
    cd, _ = _cramer(b1, b2, b3, data, tol)
    # each coordinate gap is weighted by its basis vector and compared with the
    # largest term |c_k b_k| at the site, so coordinates that vanish do not blow up
    norms = [_num.to_float(_num.norm(b)) for b in (b1, b2, b3)]
    scale = np.zeros(bad.shape)
    gaps = np.zeros(bad.shape)
    for k in range(3):
        for c in (c1, c2, cd):
            scale = np.fmax(scale, np.abs(_num.to_float(c[k])) * norms[k])
        for other in (c2, cd):
            gaps = np.fmax(gaps, np.abs(_num.to_float(c1[k] - other[k])) * norms[k])
        gaps = np.where(np.isnan(_num.to_float(c1[k] - c2[k])), np.nan, gaps)
    worst = relative(gaps, scale)
    applicable = ~np.isnan(worst)
    excluded = tuple((int(i), int(j)) for i, j in zip(*np.nonzero(bad & applicable)))
    worst = np.where(bad, np.nan, worst)
    with np.errstate(invalid="ignore", divide="ignore"):
        closed = -hN * Omp / Opp
    report = ResidualReport.from_values("q112_two_way", V, worst, excluded)
    return TwoWayResult(report, c1, c2, cd, closed, excluded)


def eq1_raw(structure: AffineStructure) -> np.ndarray:
    """Unnormalized LHS - RHS of the first equation at vertices."""
    s = structure
    env = scalar_env(s.Omega, s.gamma, s.A, s.B, s.p, s.h)
    return formulas.evaluate_raw(formulas.COMPAT_EQ1, env)


__all__ = [
    "CompatResiduals",
    "TwoWayResult",
    "compat_from_scalars",
    "compat_residuals",
    "eq1_raw",
    "mixed_xi_identity_residual",
    "q112_two_way_residual",
    "scalar_env",
]
