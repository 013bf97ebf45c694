from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _num
from .grid import Family


@dataclass(frozen=True, eq=False)
class ResidualReport:
    """Per-site residuals of one identity; NaN marks sites where it does not apply."""

    name: str
    family: Family
    residual: np.ndarray
    max_abs: float
    mean_abs: float
    argmax: tuple[int, int] | None
    excluded: tuple = field(default=())

    @classmethod
    def from_values(cls, name: str, family: Family, values, excluded=()) -> "ResidualReport":
        r = np.abs(_num.to_float(values))
        r.setflags(write=False)
        ok = np.isfinite(r)
        if not ok.any():
            return cls(name, Family(family), r, 0.0, 0.0, None, tuple(excluded))
        masked = np.where(ok, r, -1.0)
        idx = np.unravel_index(int(np.argmax(masked)), r.shape)
        return cls(
            name,
            Family(family),
            r,
            float(r[idx]),
            float(r[ok].mean()),
            (int(idx[0]), int(idx[1])),
            tuple(excluded),
        )

    @property
    def site_count(self) -> int:
        return int(np.isfinite(self.residual).sum())

    def passes(self, tol: float) -> bool:
        return self.max_abs <= tol

    def sites_above(self, tol: float) -> list[tuple[int, int]]:
        ok = np.isfinite(self.residual) & (np.nan_to_num(self.residual, nan=0.0) > tol)
        return [(int(i), int(j)) for i, j in zip(*np.nonzero(ok))]

    def summary(self) -> dict:
        return {
            "name": self.name,
            "family": self.family.value,
            "max_abs": self.max_abs,
            "mean_abs": self.mean_abs,
            "argmax": list(self.argmax) if self.argmax is not None else None,
            "sites": self.site_count,
        }


def merge(name: str, reports: list[ResidualReport]) -> ResidualReport:
    """Site-wise maximum over reports on the same family."""
    fam = reports[0].family
    stack = np.stack([r.residual for r in reports])
    with np.errstate(invalid="ignore"):
        allnan = np.all(np.isnan(stack), axis=0)
        vals = np.where(allnan, np.nan, np.nanmax(np.where(np.isnan(stack), -np.inf, stack), axis=0))
    return ResidualReport.from_values(name, fam, vals)


def relative(diff_norm, *term_norms) -> np.ndarray:
    """diff / largest term as float64, with 0/0 read as 0 and NaN kept as NaN."""
    num = _num.to_float(diff_norm)
    scale = np.zeros(num.shape)
    for t in term_norms:
        scale = np.maximum(scale, np.broadcast_to(_num.to_float(t), num.shape))
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(scale > 0, num / np.where(scale > 0, scale, 1.0), np.where(num == 0, 0.0, np.inf))
    return np.where(np.isnan(num) | np.isnan(scale), np.nan, out)
