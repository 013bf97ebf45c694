"""Every residual suite and classification run in one call, for the CLI and tests."""
from __future__ import annotations

from dataclasses import dataclass, field

from . import config
from .compatibility import compat_residuals, q112_two_way_residual
from .net import AsymptoticNet, DegenerateNetError, planarity_report
from .report import ResidualReport
from .structural import (
    affine_sphere_residual,
    affine_sphere_xi_identity_residual,
    bobenko_constant_test,
    derived_fields,
    is_minimal,
    q_second_derivative_residuals,
    xi_derivative_residuals,
)
from .structure import AffineStructure, GaugePropagationError, build_structure


@dataclass
class SuiteRun:
    reports: dict[str, ResidualReport] = field(default_factory=dict)
    errors: list[dict] = field(default_factory=list)
    structure: AffineStructure | None = None

    def failures(self, tol: float) -> list[str]:
        return [name for name, r in self.reports.items() if not r.max_abs <= tol]

    def passed(self, tol: float) -> bool:
        return not self.errors and not self.failures(tol)


def run_suites(net: AsymptoticNet, gamma0=1.0, seed_quad=(0, 0)) -> SuiteRun:
    """Structure, structural and compatibility residuals.

    Planarity is always reported.  If the gauge cannot be built (degenerate
    quad, co-normals that do not agree) the remaining suites are skipped and
    the failure is listed under ``errors``.
    """
    run = SuiteRun()
    planar, degenerate = planarity_report(net)
    run.reports["planarity"] = planar
    try:
        s = build_structure(net, gamma0, seed_quad, tol=None, planarity_tol=None)
    except DegenerateNetError as e:
        run.errors.append({"suite": "nondegeneracy", "quad": list(e.quad), "message": str(e)})
        return run
    except GaugePropagationError as e:
        run.errors.append({"suite": "gauge", "vertex": list(e.vertex), "message": str(e)})
        return run
    run.structure = s
    run.reports.update(s.reports)
    f = derived_fields(s)
    run.reports.update(f.reports)
    run.reports.update(q_second_derivative_residuals(s, f).variants)
    run.reports.update(xi_derivative_residuals(s, f).variants)
    c = compat_residuals(s, f)
    run.reports.update({f"compat_{k}": r for k, r in c.reports().items()})
    run.reports["q112_two_way"] = q112_two_way_residual(s, f).report
    return run


def classify(structure: AffineStructure, tol: float = config.CLASSIFY_TOL) -> dict:
    m = is_minimal(structure, tol)
    sph = affine_sphere_residual(structure, tol)
    bob = bobenko_constant_test(structure, tol)
    out = {
        "tolerance": tol,
        "minimal": {"value": m.minimal, "max_abs_h": m.max_abs_h, "witness": m.witness},
        "affine_sphere": {
            "value": sph.is_sphere,
            "residual": sph.report.max_abs,
            "argmax": sph.report.argmax,
        },
        "bobenko": {
            "value": bob.constant,
            "c": bob.c,
            "spread": bob.spread,
            "excluded": list(bob.excluded),
        },
    }
    if sph.is_sphere:
        out["affine_sphere"]["xi_identity_residual"] = affine_sphere_xi_identity_residual(structure).max_abs
    return out


__all__ = ["SuiteRun", "classify", "run_suites"]
