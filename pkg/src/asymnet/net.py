from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _num, config
from .grid import Family, SiteField, StaggeredDomain, diff1, diff2, shifted
from .report import ResidualReport


class DegenerateNetError(ValueError):
    def __init__(self, quad, value, message=None):
        self.quad, self.value = quad, value
        super().__init__(message or f"non-degeneracy fails at quad {quad}: M = {float(value):.6g}")


@dataclass(frozen=True, eq=False)
class AsymptoticNet:
    domain: StaggeredDomain
    q: SiteField

    def __post_init__(self):
        if self.q.family is not Family.VERTEX or self.q.values.shape[2:] != (3,):
            raise ValueError("net positions must be a vertex field of 3-vectors")

    @classmethod
    def from_array(cls, positions) -> "AsymptoticNet":
        arr = np.asarray(positions)
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise ValueError(f"positions need shape (nu+1, nv+1, 3), got {arr.shape}")
        if arr.dtype != object:
            arr = arr.astype(float)
        dom = StaggeredDomain(arr.shape[0] - 1, arr.shape[1] - 1)
        if not _num.isfinite(arr).all():
            raise ValueError("positions must be finite")
        return cls(dom, SiteField(dom, Family.VERTEX, arr))

    @property
    def positions(self) -> np.ndarray:
        return self.q.values

    @property
    def multiprecision(self) -> bool:
        return _num.is_mp(self.positions)

    def q1(self) -> SiteField:
        return diff1(self.q)

    def q2(self) -> SiteField:
        return diff2(self.q)

    def diameter(self) -> float:
        x = _num.to_float(self.positions).reshape(-1, 3)
        return float(np.linalg.norm(x.max(axis=0) - x.min(axis=0)))

    def transformed(self, linear, translation=(0.0, 0.0, 0.0)) -> "AsymptoticNet":
        """Image under x -> L x + t (same element type as the net)."""
        L = np.asarray(linear)
        t = np.asarray(translation)
        if self.multiprecision:
            L = L if L.dtype == object else _num.to_mp(L)
            t = t if t.dtype == object else _num.to_mp(t)
        x = self.positions
        out = np.stack([x[..., 0] * L[k, 0] + x[..., 1] * L[k, 1] + x[..., 2] * L[k, 2] + t[k] for k in range(3)], -1)
        return AsymptoticNet.from_array(out)


def quad_M(net: AsymptoticNet) -> SiteField:
    """M(u+1/2, v+1/2) = [q1(u+1/2, v), q2(u, v+1/2), q2(u+1, v+1/2)]."""
    q1, q2 = net.q1().values, net.q2().values
    return SiteField(net.domain, Family.QUAD, _num.det3(q1[:, :-1], q2[:-1], q2[1:]))


def assert_nondegenerate(net: AsymptoticNet, tol: float = config.NONDEGENERACY_TOL) -> SiteField:
    M = quad_M(net)
    mf = _num.to_float(M.values)
    bad = np.argwhere(~(mf > tol))
    if len(bad):
        i, j = (int(x) for x in bad[0])
        raise DegenerateNetError((i, j), M.values[i, j])
    return M


def planarity_report(net: AsymptoticNet) -> tuple[ResidualReport, list[tuple[int, int]]]:
    """Coplanarity of the four cross edges at each interior vertex.

    Returns the report and the list of vertices whose edges admit no
    independent pair (reported as degenerate, residual NaN).
    """
    V = Family.VERTEX
    q1, q2 = net.q1(), net.q2()
    e1p, e1m = shifted(q1, V, 0.5, 0), shifted(q1, V, -0.5, 0)
    e2p, e2m = shifted(q2, V, 0, 0.5), shifted(q2, V, 0, -0.5)
    scale = np.fmax.reduce([_num.to_float(_num.norm(e)) for e in (e1p, e1m, e2p, e2m)])
    a = _num.to_float(_num.det3(e1p, e1m, e2p))
    b = _num.to_float(_num.det3(e1p, e1m, e2m))
    with np.errstate(invalid="ignore", divide="ignore"):
        res = np.maximum(np.abs(a), np.abs(b)) / scale**3
    # parallel u-edges: fall back to the basis {e1+, e2+} (interior vertices only)
    c1 = _num.to_float(_num.norm(_num.cross(e1p, e1m)))
    with np.errstate(invalid="ignore"):
        parallel = (c1 <= 1e-12 * scale**2) & np.isfinite(res)
    c2 = _num.to_float(_num.norm(_num.cross(e1p, e2p)))
    degenerate = []
    for i, j in zip(*np.nonzero(parallel)):
        if c2[i, j] <= 1e-12 * scale[i, j] ** 2:
            res[i, j] = np.nan
            degenerate.append((int(i), int(j)))
        else:
            d1 = abs(float(_num.det3(e1p[i, j], e2p[i, j], e1m[i, j])))
            d2 = abs(float(_num.det3(e1p[i, j], e2p[i, j], e2m[i, j])))
            res[i, j] = max(d1, d2) / scale[i, j] ** 3
    return ResidualReport.from_values("planarity", V, res), degenerate
