"""Identity tables and their evaluator.

An identity is ``sum(lhs terms) = sum(rhs terms)`` at every site of an anchor
family.  A term is ``coef * prod(factor**power) * vector`` where each factor
or vector names a field and a half-integer offset from the anchor site.
Fields living on both edge families (``p``, ``h``) are resolved by the parity
of the target site.

The residual at a site is |lhs - rhs| divided by the largest term magnitude,
and is NaN where any operand is missing.

Names used in the tables:

=========  ======================================================
q1, q2     first differences (u-edges, v-edges)
q11, q22   second differences (vertices)
Omega      affine metric (quads);   gamma  gauge (quads)
xi         affine normal (quads)
A, B       cubic-form coefficients (vertices)
p, h       gauge products and h = p - 1/p (edges)
O1m, O1p   u-differences of Omega (v-edges); O2m, O2p on u-edges
A2p, A2m   v-differences of A (v-edges);     B1p, B1m on u-edges
xi1m ...   differences of xi (v-edges for xi1*, u-edges for xi2*)
=========  ======================================================
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _num
from .grid import Family
from .report import relative

H = 0.5
V, UE, VE = Family.VERTEX, Family.UEDGE, Family.VEDGE


@dataclass(frozen=True)
class Factor:
    name: str
    du: float = 0.0
    dv: float = 0.0
    power: int = 1


@dataclass(frozen=True)
class Term:
    factors: tuple[Factor, ...] = ()
    vector: Factor | None = None
    coef: float = 1.0


@dataclass(frozen=True)
class Identity:
    name: str
    anchor: Family
    lhs: tuple[Term, ...]
    rhs: tuple[Term, ...]


def F(name, du=0.0, dv=0.0, power=1) -> Factor:
    return Factor(name, du, dv, power)


def T(*factors, vec=None, coef=1.0) -> Term:
    return Term(tuple(factors), vec, coef)


def _read(env, f: Factor, anchor):
    try:
        field = env[f.name]
    except KeyError:
        raise KeyError(f"identity references unknown field {f.name!r}") from None
    return field.shifted(anchor, f.du, f.dv)


def term_values(term: Term, env, anchor) -> np.ndarray:
    val = None
    for f in term.factors:
        x = _read(env, f, anchor)
        x = x**f.power if f.power != 1 else x
        val = x if val is None else val * x
    if term.coef != 1.0 and val is not None:
        val = term.coef * val
    if term.vector is not None:
        if val is None and term.coef != 1.0:
            return term.coef * _read(env, term.vector, anchor)
        vec = _read(env, term.vector, anchor)
        if val is None:
            return vec
        return np.asarray(val)[..., None] * vec
    return val


def _magnitude(x):
    x = np.asarray(x)
    if x.ndim == 3:
        return _num.norm(x)
    return np.abs(x)


def evaluate(identity: Identity, env) -> np.ndarray:
    """Per-site relative residual (float64, NaN where undefined)."""
    with np.errstate(invalid="ignore", divide="ignore"):
        lhs = [term_values(t, env, identity.anchor) for t in identity.lhs]
        rhs = [term_values(t, env, identity.anchor) for t in identity.rhs]
        diff = sum(lhs) - sum(rhs)
        return relative(_magnitude(diff), *[_magnitude(t) for t in lhs + rhs])


def evaluate_raw(identity: Identity, env):
    """(lhs - rhs) without normalization, in the input element type."""
    with np.errstate(invalid="ignore", divide="ignore"):
        lhs = [term_values(t, env, identity.anchor) for t in identity.lhs]
        rhs = [term_values(t, env, identity.anchor) for t in identity.rhs]
        return sum(lhs) - sum(rhs)


# second differences of the immersion, anchored at vertices
Q11 = (
    Identity("q11_1", V,
             (T(F("p", 0, H), vec=F("q11")),),
             (T(F("O1m", 0, H), F("Omega", H, H, -1), vec=F("q1", H, 0)),
              T(F("gamma", -H, H), F("A"), F("Omega", H, H, -1), vec=F("q2", 0, H)))),
    # the printed coefficient of q2 has an unreadable denominator; this is the
    # quad next to the q1 term, as in the sibling variants
    Identity("q11_2", V,
             (T(vec=F("q11")),),
             (T(F("O1p", 0, -H), F("Omega", H, -H, -1), vec=F("q1", H, 0)),
              T(F("gamma", H, -H), F("A"), F("Omega", H, -H, -1), vec=F("q2", 0, -H)))),
    Identity("q11_3", V,
             (T(vec=F("q11")),),
             (T(F("O1m", 0, H), F("Omega", -H, H, -1), vec=F("q1", -H, 0)),
              T(F("gamma", -H, H), F("A"), F("Omega", -H, H, -1), vec=F("q2", 0, H)))),
    Identity("q11_4", V,
             (T(F("p", 0, -H), vec=F("q11")),),
             (T(F("O1p", 0, -H), F("Omega", -H, -H, -1), vec=F("q1", -H, 0)),
              T(F("gamma", H, -H), F("A"), F("Omega", -H, -H, -1), vec=F("q2", 0, -H)))),
)

Q22 = (
    Identity("q22_1", V,
             (T(F("p", H, 0), vec=F("q22")),),
             (T(F("gamma", H, -H), F("B"), F("Omega", H, H, -1), vec=F("q1", H, 0)),
              T(F("O2m", H, 0), F("Omega", H, H, -1), vec=F("q2", 0, H)))),
    Identity("q22_2", V,
             (T(vec=F("q22")),),
             (T(F("gamma", H, -H), F("B"), F("Omega", H, -H, -1), vec=F("q1", H, 0)),
              T(F("O2m", H, 0), F("Omega", H, -H, -1), vec=F("q2", 0, -H)))),
    Identity("q22_3", V,
             (T(vec=F("q22")),),
             (T(F("gamma", -H, H), F("B"), F("Omega", -H, H, -1), vec=F("q1", -H, 0)),
              T(F("O2p", -H, 0), F("Omega", -H, H, -1), vec=F("q2", 0, H)))),
    Identity("q22_4", V,
             (T(F("p", -H, 0), vec=F("q22")),),
             (T(F("gamma", -H, H), F("B"), F("Omega", -H, -H, -1), vec=F("q1", -H, 0)),
              T(F("O2p", -H, 0), F("Omega", -H, -H, -1), vec=F("q2", 0, -H)))),
)

# Printed edge indices of the two middle q22 variants; kept to show they fail.
Q22_PRINTED_ALTERNATES = (
    Identity("q22_2_printed", V,
             (T(vec=F("q22")),),
             (T(F("gamma", H, -H), F("B"), F("Omega", H, -H, -1), vec=F("q1", H, 0)),
              T(F("O2m", -H, 0), F("Omega", H, -H, -1), vec=F("q2", 0, -H)))),
    Identity("q22_3_printed", V,
             (T(vec=F("q22")),),
             (T(F("gamma", -H, H), F("B"), F("Omega", -H, H, -1), vec=F("q1", -H, 0)),
              T(F("O2p", H, 0), F("Omega", -H, H, -1), vec=F("q2", 0, H)))),
)

# differences of the affine normal; xi1 at v-edges (u, v+1/2), xi2 at u-edges (u+1/2, v)
XI1 = (
    Identity("xi1_1", VE,
             (T(vec=F("xi1m")),),
             (T(F("h"), F("Omega", H, 0, -1), vec=F("q1", H, -H), coef=-1.0),
              T(F("A2p"), F("Omega", H, 0, -1), F("Omega", -H, 0, -1), vec=F("q2")))),
    Identity("xi1_2", VE,
             (T(F("p", 0, 0, -1), vec=F("xi1m")),),
             (T(F("h"), F("Omega", -H, 0, -1), vec=F("q1", -H, -H), coef=-1.0),
              T(F("A2m"), F("Omega", -H, 0, -1), F("Omega", H, 0, -1), vec=F("q2")))),
    Identity("xi1_3", VE,
             (T(F("p", 0, 0, -1), vec=F("xi1p")),),
             (T(F("h"), F("Omega", H, 0, -1), vec=F("q1", H, H), coef=-1.0),
              T(F("A2p"), F("Omega", H, 0, -1), F("Omega", -H, 0, -1), vec=F("q2")))),
    Identity("xi1_4", VE,
             (T(vec=F("xi1p")),),
             (T(F("h"), F("Omega", -H, 0, -1), vec=F("q1", -H, H), coef=-1.0),
              T(F("A2m"), F("Omega", -H, 0, -1), F("Omega", H, 0, -1), vec=F("q2")))),
)

XI2 = (
    Identity("xi2_1", UE,
             (T(vec=F("xi2m")),),
             (T(F("B1p"), F("Omega", 0, H, -1), F("Omega", 0, -H, -1), vec=F("q1")),
              T(F("h"), F("Omega", 0, H, -1), vec=F("q2", -H, H), coef=-1.0))),
    Identity("xi2_2", UE,
             (T(F("p", 0, 0, -1), vec=F("xi2m")),),
             (T(F("B1m"), F("Omega", 0, -H, -1), F("Omega", 0, H, -1), vec=F("q1")),
              T(F("h"), F("Omega", 0, -H, -1), vec=F("q2", -H, -H), coef=-1.0))),
    Identity("xi2_3", UE,
             (T(F("p", 0, 0, -1), vec=F("xi2p")),),
             (T(F("B1p"), F("Omega", 0, H, -1), F("Omega", 0, -H, -1), vec=F("q1")),
              T(F("h"), F("Omega", 0, H, -1), vec=F("q2", H, H), coef=-1.0))),
    Identity("xi2_4", UE,
             (T(vec=F("xi2p")),),
             (T(F("B1m"), F("Omega", 0, -H, -1), F("Omega", 0, H, -1), vec=F("q1")),
              T(F("h"), F("Omega", 0, -H, -1), vec=F("q2", H, -H), coef=-1.0))),
)

# specialised normal differences that hold on affine spheres; k = -h p / (1 + p)
SPHERE_XI = (
    Identity("sphere_xi1m", VE,
             (T(vec=F("xi1m")),),
             (T(F("k"), F("Omega", -H, 0, -1), vec=F("q1", -H, -H)),
              T(F("k"), F("Omega", H, 0, -1), vec=F("q1", H, -H)))),
    Identity("sphere_xi1p", VE,
             (T(vec=F("xi1p")),),
             (T(F("k"), F("Omega", -H, 0, -1), vec=F("q1", -H, H)),
              T(F("k"), F("Omega", H, 0, -1), vec=F("q1", H, H)))),
    Identity("sphere_xi2m", UE,
             (T(vec=F("xi2m")),),
             (T(F("k"), F("Omega", 0, -H, -1), vec=F("q2", -H, -H)),
              T(F("k"), F("Omega", 0, H, -1), vec=F("q2", -H, H)))),
    Identity("sphere_xi2p", UE,
             (T(vec=F("xi2p")),),
             (T(F("k"), F("Omega", 0, -H, -1), vec=F("q2", H, -H)),
              T(F("k"), F("Omega", 0, H, -1), vec=F("q2", H, H)))),
)

# scalar compatibility conditions at vertices
COMPAT_EQ1 = Identity(
    "compat_eq1", V,
    (T(F("Omega", -H, H), F("p", 0, H, -1), F("Omega", H, H, -1)),),
    (T(F("p", 0, -H), F("Omega", -H, -H), F("Omega", H, -H, -1)),
     T(F("A"), F("B"), F("gamma", H, -H), F("gamma", H, H, -1), F("Omega", H, H, -1), F("Omega", H, -H, -1))),
)

# Second and third conditions re-derived by matching the q1 (resp. q2)
# coefficients of the mixed normal-difference identity.  All terms on the left.
COMPAT_EQ2 = Identity(
    "compat_eq2", V,
    (T(F("gamma", -H, -H), F("h", 0, -H), F("Omega", H, -H, -1)),
     T(F("h", 0, H), F("gamma", -H, H, -1), F("Omega", H, H, -1), coef=-1.0),
     T(F("gamma", -H, -H), F("B"), F("A2p", 0, -H), F("gamma", H, H, -1),
       F("Omega", H, H, -1), F("Omega", H, -H, -1), F("Omega", -H, -H, -1)),
     T(F("B1p", H, 0), F("gamma", H, -H, -1), F("Omega", H, H, -1), F("Omega", H, -H, -1), coef=-1.0),
     T(F("gamma", -H, -H), F("B1p", -H, 0), F("p", 0, H, -1), F("Omega", H, H, -1), F("Omega", -H, -H, -1))),
    (),
)

COMPAT_EQ3 = Identity(
    "compat_eq3", V,
    (T(F("gamma", -H, -H), F("h", -H, 0), F("Omega", -H, H, -1)),
     T(F("h", H, 0), F("gamma", H, -H, -1), F("Omega", H, H, -1), coef=-1.0),
     T(F("A2p", 0, H), F("gamma", -H, H, -1), F("Omega", H, H, -1), F("Omega", -H, H, -1), coef=-1.0),
     T(F("gamma", -H, -H), F("A2p", 0, -H), F("p", H, 0, -1), F("Omega", H, H, -1), F("Omega", -H, -H, -1)),
     T(F("gamma", -H, -H), F("B1p", -H, 0), F("A"), F("gamma", H, H, -1),
       F("Omega", H, H, -1), F("Omega", -H, H, -1), F("Omega", -H, -H, -1))),
    (),
)

# The two conditions exactly as typeset; they do not hold on generic nets.
COMPAT_PRINTED = (
    Identity(
        "compat_eq2_printed", V,
        (T(F("gamma", -H, -H), F("h", 0, -H), F("Omega", H, -H, -1)),
         T(F("h", 0, H), F("gamma", -H, H, -1), F("Omega", H, H, -1), coef=-1.0)),
        (T(F("B1p", H, 0), F("gamma", H, -H, -1), F("Omega", H, H, -1), F("Omega", H, -H, -1)),
         T(F("gamma", -H, -H), F("B1p", -H, 0), F("Omega", -H, H, -1), F("Omega", -H, -H, -1), coef=-1.0)),
    ),
    Identity(
        "compat_eq3_printed", V,
        (T(F("gamma", -H, -H), F("h", -H, 0), F("Omega", -H, H, -1)),
         T(F("h", H, 0), F("gamma", H, -H, -1), F("Omega", H, H, -1), coef=-1.0)),
        (T(F("A2p", 0, H), F("gamma", -H, H, -1), F("Omega", H, H, -1), F("Omega", -H, H, -1)),
         T(F("gamma", -H, -H), F("A2p", 0, -H), F("Omega", H, -H, -1), F("Omega", -H, -H, -1), coef=-1.0)),
    ),
)

# Mixed normal-difference identity, anchored at vertices.
MIXED_XI = Identity(
    "mixed_xi", V,
    (T(F("gamma", -H, H, -1), vec=F("xi1m", 0, H)),
     T(F("gamma", H, -H, -1), vec=F("xi1p", 0, -H), coef=-1.0)),
    (T(F("gamma", H, -H, -1), vec=F("xi2m", H, 0)),
     T(F("gamma", -H, H, -1), vec=F("xi2p", -H, 0), coef=-1.0)),
)
