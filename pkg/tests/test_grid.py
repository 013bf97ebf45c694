import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from asymnet.generators import paraboloid_net
from asymnet.grid import (
    EdgePair,
    Family,
    FamilyMismatchError,
    SiteField,
    StaggeredDomain,
    diff1,
    diff2,
    diff11,
    diff22,
    family_at,
    mixed12,
    shifted,
)

FAMILIES = list(Family)


def vertex_field(dom, fn):
    u, v = np.indices((dom.nu + 1, dom.nv + 1), dtype=float)
    return SiteField(dom, Family.VERTEX, fn(u, v))


@pytest.mark.parametrize(
    "family,shape", [(Family.VERTEX, (4, 3)), (Family.UEDGE, (3, 3)), (Family.VEDGE, (4, 2)), (Family.QUAD, (3, 2))]
)
def test_family_shapes(family, shape):
    dom = StaggeredDomain(3, 2)
    assert dom.shape(family) == shape
    assert dom.site_count(family) == shape[0] * shape[1]
    assert len(list(dom.sites(family))) == dom.site_count(family)


def test_domain_rejects_empty():
    with pytest.raises(ValueError):
        StaggeredDomain(0, 3)


def test_field_shape_validated():
    dom = StaggeredDomain(2, 2)
    with pytest.raises(ValueError, match="leading shape"):
        SiteField(dom, Family.QUAD, np.zeros((3, 3)))


def test_field_is_read_only_copy():
    dom = StaggeredDomain(2, 2)
    src = np.zeros((2, 2))
    f = SiteField(dom, Family.QUAD, src)
    src[0, 0] = 5
    assert f.values[0, 0] == 0
    with pytest.raises(ValueError):
        f.values[0, 0] = 1
    g = f.replace_at(1, 1, 7.0)
    assert g.values[1, 1] == 7 and f.values[1, 1] == 0


@pytest.mark.parametrize("i,j", [(-1, 0), (3, 0), (0, 3)])
def test_out_of_range_reads_rejected(i, j):
    f = SiteField(StaggeredDomain(2, 2), Family.VERTEX, np.zeros((3, 3)))
    with pytest.raises(IndexError):
        f.at(i, j)


def test_constant_field_has_zero_differences():
    dom = StaggeredDomain(3, 3)
    f = vertex_field(dom, lambda u, v: 0 * u + 4.0)
    assert np.all(diff1(f).values == 0) and np.all(diff2(f).values == 0)


def test_linear_field_unit_difference():
    dom = StaggeredDomain(2, 2)
    f = vertex_field(dom, lambda u, v: u)
    assert diff1(f).family is Family.UEDGE
    assert np.all(diff1(f).values == 1)


def test_paraboloid_first_difference():
    net = paraboloid_net(3, 3)
    q1 = diff1(net.q).values
    for u in range(3):
        for v in range(4):
            np.testing.assert_array_equal(q1[u, v], [0, 1, -v])


@pytest.mark.parametrize(
    "fn,expected", [(lambda u, v: u + v, 0.0), (lambda u, v: u * v, 1.0)]
)
def test_mixed_difference_of_simple_fields(fn, expected):
    dom = StaggeredDomain(3, 4)
    m = mixed12(vertex_field(dom, fn))
    assert m.family is Family.QUAD
    assert np.all(m.values == expected)


def test_paraboloid_mixed_difference():
    m = mixed12(paraboloid_net(4, 4).q).values
    assert np.all(m == np.array([0.0, 0.0, -1.0]))


def test_family_mismatch():
    dom = StaggeredDomain(2, 2)
    quad = SiteField(dom, Family.QUAD, np.zeros((2, 2)))
    with pytest.raises(FamilyMismatchError):
        diff1(quad)
    with pytest.raises(FamilyMismatchError):
        mixed12(quad)
    v = vertex_field(dom, lambda u, v: u)
    with pytest.raises(FamilyMismatchError):
        shifted(v, Family.VERTEX, 0.5, 0)


def test_second_differences_interior_only():
    dom = StaggeredDomain(3, 3)
    f = vertex_field(dom, lambda u, v: u**2 + 3 * v**2)
    d11, d22 = diff11(f).values, diff22(f).values
    assert np.all(np.isnan(d11[[0, -1]])) and np.all(d11[1:-1] == 2)
    assert np.all(np.isnan(d22[:, [0, -1]])) and np.all(d22[:, 1:-1] == 6)


@pytest.mark.parametrize("family", FAMILIES)
def test_half_offsets_round_trip(family):
    assert family_at(*family.half_offset) is family


# every (anchor, target) pair with every offset that lands on the target family,
# checked against direct index arithmetic over the whole small domain
@pytest.mark.parametrize("anchor", FAMILIES)
@pytest.mark.parametrize("target", FAMILIES)
def test_stencil_matches_index_arithmetic(anchor, target):
    dom = StaggeredDomain(3, 2)
    shape = dom.shape(target)
    vals = np.arange(np.prod(shape), dtype=float).reshape(shape)
    f = SiteField(dom, target, vals)
    au, av = anchor.half_offset
    tu, tv = target.half_offset
    for hu in range(-3, 4):
        for hv in range(-3, 4):
            if (au + hu - tu) % 2 or (av + hv - tv) % 2:
                continue
            out = shifted(f, anchor, hu / 2, hv / 2)
            for i, j in dom.sites(anchor):
                # half-step coordinates of the target site
                ti, tj = 2 * i + au + hu - tu, 2 * j + av + hv - tv
                a, b = ti // 2, tj // 2
                if 0 <= a < shape[0] and 0 <= b < shape[1]:
                    assert out[i, j] == vals[a, b]
                else:
                    assert np.isnan(out[i, j])


def test_edge_pair_dispatch():
    dom = StaggeredDomain(2, 2)
    pu = SiteField(dom, Family.UEDGE, np.full(dom.shape(Family.UEDGE), 1.0))
    pv = SiteField(dom, Family.VEDGE, np.full(dom.shape(Family.VEDGE), 2.0))
    pair = EdgePair(pu, pv)
    assert np.nanmax(pair.shifted(Family.VERTEX, 0.5, 0)) == 1.0
    assert np.nanmax(pair.shifted(Family.VERTEX, 0, 0.5)) == 2.0
    with pytest.raises(FamilyMismatchError):
        pair.shifted(Family.VERTEX, 0.5, 0.5)


domains = st.tuples(st.integers(1, 5), st.integers(1, 5))


@settings(max_examples=40, deadline=None)
@given(domains, st.integers(0, 2**32 - 1))
def test_mixed_difference_commutes(size, seed):
    dom = StaggeredDomain(*size)
    rng = np.random.default_rng(seed)
    f = SiteField(dom, Family.VERTEX, rng.standard_normal((dom.nu + 1, dom.nv + 1, 3)))
    a = mixed12(f).values
    np.testing.assert_array_equal(a, diff2(diff1(f)).values)
    # the other order sums differently; equal up to rounding
    np.testing.assert_allclose(diff1(diff2(f)).values, a, rtol=0, atol=1e-14 * np.abs(f.values).max() * 4)


@settings(max_examples=40, deadline=None)
@given(domains, st.integers(0, 2**32 - 1))
def test_mixed_difference_commutes_exactly_on_integers(size, seed):
    dom = StaggeredDomain(*size)
    rng = np.random.default_rng(seed)
    f = SiteField(dom, Family.VERTEX, rng.integers(-1000, 1000, (dom.nu + 1, dom.nv + 1)).astype(float))
    np.testing.assert_array_equal(diff1(diff2(f)).values, mixed12(f).values)


@settings(max_examples=40, deadline=None)
@given(domains, st.integers(0, 2**32 - 1))
def test_differences_telescope(size, seed):
    """Summing first differences along a row recovers the endpoint difference."""
    dom = StaggeredDomain(*size)
    rng = np.random.default_rng(seed)
    vals = rng.standard_normal((dom.nu + 1, dom.nv + 1))
    f = SiteField(dom, Family.VERTEX, vals)
    np.testing.assert_allclose(diff1(f).values.sum(axis=0), vals[-1] - vals[0], atol=1e-12)
    np.testing.assert_allclose(diff2(f).values.sum(axis=1), vals[:, -1] - vals[:, 0], atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(domains, st.sampled_from(FAMILIES), st.integers(-2, 2), st.integers(-2, 2))
def test_shift_there_and_back(size, family, su, sv):
    """Reading at +d and then back at -d returns the original values where both exist."""
    dom = StaggeredDomain(*size)
    shape = dom.shape(family)
    f = SiteField(dom, family, np.arange(np.prod(shape), dtype=float).reshape(shape) + 1)
    there = SiteField(dom, family, shifted(f, family, su, sv))
    back = shifted(there, family, -su, -sv)
    ok = np.isfinite(back)
    np.testing.assert_array_equal(back[ok], f.values[ok])
