"""Staggered rectangular lattice: vertices, u-edges, v-edges and quads.

Index convention (used by every module): a half-integer site is stored at the
integer index of its lower-left generating vertex.

=========  ==================  ===============  =================
family     lattice site        stored at        array shape
=========  ==================  ===============  =================
vertex     (u, v)              [u, v]           (nu+1, nv+1)
u-edge     (u+1/2, v)          [u, v]           (nu, nv+1)
v-edge     (u, v+1/2)          [u, v]           (nu+1, nv)
quad       (u+1/2, v+1/2)      [u, v]           (nu, nv)
=========  ==================  ===============  =================

Fields that are only meaningful on part of their family (interior edges, for
instance) hold NaN at the remaining sites.  Stencil reads through
:func:`shifted` return NaN wherever the requested neighbour does not exist, so
any formula evaluated on whole arrays is automatically defined exactly where
all of its operands are.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import _num


class FamilyMismatchError(ValueError):
    pass


class Family(str, Enum):
    VERTEX = "vertex"
    UEDGE = "u-edge"
    VEDGE = "v-edge"
    QUAD = "quad"

    @property
    def half_offset(self) -> tuple[int, int]:
        """Offset of the site from its generating vertex, in half steps."""
        return _HALF[self]


_HALF = {
    Family.VERTEX: (0, 0),
    Family.UEDGE: (1, 0),
    Family.VEDGE: (0, 1),
    Family.QUAD: (1, 1),
}


def family_at(parity_u: int, parity_v: int) -> Family:
    """Family whose sites sit at the given half-step parities."""
    for fam, off in _HALF.items():
        if off == (parity_u % 2, parity_v % 2):
            return fam
    raise AssertionError


@dataclass(frozen=True)
class StaggeredDomain:
    nu: int
    nv: int

    def __post_init__(self):
        if int(self.nu) < 1 or int(self.nv) < 1:
            raise ValueError(f"domain needs at least one quad, got {self.nu}x{self.nv}")

    def shape(self, family: Family) -> tuple[int, int]:
        ou, ov = Family(family).half_offset
        return (self.nu + 1 - ou, self.nv + 1 - ov)

    def site_count(self, family: Family) -> int:
        a, b = self.shape(family)
        return a * b

    def sites(self, family: Family):
        a, b = self.shape(family)
        for i in range(a):
            for j in range(b):
                yield (i, j)

    def interior_mask(self, family: Family) -> np.ndarray:
        """Sites whose full stencil (both neighbours across the site) exists."""
        family = Family(family)
        m = np.zeros(self.shape(family), bool)
        if family is Family.VERTEX:
            m[1:-1, 1:-1] = True
        elif family is Family.VEDGE:
            m[1:-1, :] = True
        elif family is Family.UEDGE:
            m[:, 1:-1] = True
        else:
            m[:] = True
        return m


@dataclass(frozen=True, eq=False)
class SiteField:
    """Values attached to one site family; read-only after construction."""

    domain: StaggeredDomain
    family: Family
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        vals = np.array(self.values, copy=True)
        if vals.shape[:2] != self.domain.shape(self.family):
            raise ValueError(
                f"{self.family.value} field on {self.domain.nu}x{self.domain.nv} needs leading shape "
                f"{self.domain.shape(self.family)}, got {vals.shape[:2]}"
            )
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def is_vector(self) -> bool:
        return self.values.ndim == 3

    @property
    def defined(self) -> np.ndarray:
        ok = _num.isfinite(self.values)
        return ok.all(axis=-1) if self.is_vector else ok

    def at(self, i: int, j: int):
        a, b = self.values.shape[:2]
        if not (0 <= i < a and 0 <= j < b):
            raise IndexError(f"site ({i}, {j}) outside {self.family.value} range {a}x{b}")
        return self.values[i, j]

    def shifted(self, anchor: Family, du: float, dv: float) -> np.ndarray:
        return shifted(self, anchor, du, dv)

    def with_values(self, values) -> "SiteField":
        return SiteField(self.domain, self.family, values)

    def replace_at(self, i: int, j: int, value) -> "SiteField":
        vals = np.array(self.values, copy=True)
        self.at(i, j)
        vals[i, j] = value
        return SiteField(self.domain, self.family, vals)


def _half_steps(d: float) -> int:
    k = round(2 * d)
    if abs(2 * d - k) > 1e-9:
        raise ValueError(f"offset {d} is not a multiple of 1/2")
    return k


def shifted(field: SiteField, anchor: Family, du: float, dv: float) -> np.ndarray:
    """Read ``field`` at site ``anchor_site + (du, dv)`` for every anchor site.

    Offsets are half-integers in lattice units.  The result has the anchor
    family's shape; sites whose target lies outside the field are NaN.
    """
    anchor = Family(anchor)
    au, av = anchor.half_offset
    fu, fv = field.family.half_offset
    su, sv = au + _half_steps(du) - fu, av + _half_steps(dv) - fv
    if su % 2 or sv % 2:
        raise FamilyMismatchError(
            f"offset ({du}, {dv}) from a {anchor.value} site does not land on a {field.family.value} site"
        )
    su, sv = su // 2, sv // 2
    shape = field.domain.shape(anchor) + field.values.shape[2:]
    out = _num.full_nan(shape, field.values)
    a, b = field.values.shape[:2]
    na, nb = shape[:2]
    # anchor index i reads field index i + su
    i0, i1 = max(0, -su), min(na, a - su)
    j0, j1 = max(0, -sv), min(nb, b - sv)
    if i0 < i1 and j0 < j1:
        out[i0:i1, j0:j1] = field.values[i0 + su : i1 + su, j0 + sv : j1 + sv]
    return out


def _require(f: SiteField, family: Family):
    if f.family is not Family(family):
        raise FamilyMismatchError(f"expected a {Family(family).value} field, got {f.family.value}")


def diff1(f: SiteField) -> SiteField:
    """f(u+1, v) - f(u, v) on u-edges (vertex or v-edge input)."""
    if f.family is Family.VERTEX:
        return SiteField(f.domain, Family.UEDGE, f.values[1:] - f.values[:-1])
    if f.family is Family.VEDGE:
        return SiteField(f.domain, Family.QUAD, f.values[1:] - f.values[:-1])
    raise FamilyMismatchError(f"diff1 needs a vertex or v-edge field, got {f.family.value}")


def diff2(f: SiteField) -> SiteField:
    """f(u, v+1) - f(u, v) on v-edges (vertex or u-edge input)."""
    if f.family is Family.VERTEX:
        return SiteField(f.domain, Family.VEDGE, f.values[:, 1:] - f.values[:, :-1])
    if f.family is Family.UEDGE:
        return SiteField(f.domain, Family.QUAD, f.values[:, 1:] - f.values[:, :-1])
    raise FamilyMismatchError(f"diff2 needs a vertex or u-edge field, got {f.family.value}")


def mixed12(f: SiteField) -> SiteField:
    _require(f, Family.VERTEX)
    return diff2(diff1(f))


def diff11(f: SiteField) -> SiteField:
    """Second u-difference at vertices; NaN on the u-boundary."""
    _require(f, Family.VERTEX)
    out = _num.full_nan(f.values.shape, f.values)
    out[1:-1] = f.values[2:] - 2 * f.values[1:-1] + f.values[:-2]
    return SiteField(f.domain, Family.VERTEX, out)


def diff22(f: SiteField) -> SiteField:
    _require(f, Family.VERTEX)
    out = _num.full_nan(f.values.shape, f.values)
    out[:, 1:-1] = f.values[:, 2:] - 2 * f.values[:, 1:-1] + f.values[:, :-2]
    return SiteField(f.domain, Family.VERTEX, out)


class EdgePair:
    """A quantity living on both edge families (p, h, H); reads dispatch by site."""

    def __init__(self, u: SiteField, v: SiteField):
        _require(u, Family.UEDGE)
        _require(v, Family.VEDGE)
        self.u, self.v = u, v

    def shifted(self, anchor: Family, du: float, dv: float) -> np.ndarray:
        au, av = Family(anchor).half_offset
        fam = family_at(au + _half_steps(du), av + _half_steps(dv))
        if fam is Family.UEDGE:
            return shifted(self.u, anchor, du, dv)
        if fam is Family.VEDGE:
            return shifted(self.v, anchor, du, dv)
        raise FamilyMismatchError(f"offset ({du}, {dv}) from {Family(anchor).value} is not an edge")
