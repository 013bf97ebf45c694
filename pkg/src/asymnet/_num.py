"""Array helpers that work for float64 arrays and object arrays of mpmath numbers.

Multiprecision is opt-in: build the input positions as an object array of
``mpmath.mpf`` and run the analysis inside ``mpmath.workdps(n)``.
"""
from __future__ import annotations

import mpmath
import numpy as np

_mp_sqrt = np.vectorize(mpmath.sqrt, otypes=[object])
_mp_isfinite = np.vectorize(lambda x: bool(mpmath.isfinite(x)), otypes=[bool])


def is_mp(a) -> bool:
    return isinstance(a, np.ndarray) and a.dtype == object


def nan_value(like):
    return mpmath.mpf("nan") if is_mp(like) else np.nan


def full_nan(shape, like) -> np.ndarray:
    if is_mp(like):
        out = np.empty(shape, dtype=object)
        out.fill(mpmath.mpf("nan"))
        return out
    return np.full(shape, np.nan)


def to_mp(a) -> np.ndarray:
    """Convert to an object array of mpf at the current working precision."""
    arr = np.asarray(a)
    out = np.empty(arr.shape, dtype=object)
    flat = arr.ravel()
    out.ravel()[:] = [x if isinstance(x, mpmath.mpf) else mpmath.mpf(x.item() if hasattr(x, "item") else x) for x in flat]
    return out


def to_float(a) -> np.ndarray:
    arr = np.asarray(a)
    if arr.dtype == object:
        if not arr.size:
            return arr.astype(float)
        with np.errstate(invalid="ignore"):
            return np.vectorize(float, otypes=[float])(arr)
    return arr.astype(float)


def sqrt(a):
    a = np.asarray(a)
    return _mp_sqrt(a) if a.dtype == object else np.sqrt(a)


def isfinite(a) -> np.ndarray:
    a = np.asarray(a)
    if a.dtype == object:
        return _mp_isfinite(a) if a.size else np.zeros(a.shape, bool)
    return np.isfinite(a)


def dot(a, b):
    return a[..., 0] * b[..., 0] + a[..., 1] * b[..., 1] + a[..., 2] * b[..., 2]


def cross(a, b):
    return np.stack(
        [
            a[..., 1] * b[..., 2] - a[..., 2] * b[..., 1],
            a[..., 2] * b[..., 0] - a[..., 0] * b[..., 2],
            a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0],
        ],
        axis=-1,
    )


def det3(a, b, c):
    """[a, b, c] = (a x b) . c, vectorized over leading axes."""
    return dot(cross(a, b), c)


def norm(a):
    return sqrt(dot(a, a))


def scalar(x, like):
    """Lift a Python number to the element type of ``like``."""
    return mpmath.mpf(x) if is_mp(like) else float(x)
