import mpmath
import numpy as np
import pytest

from asymnet.generators import HyperboloidSpec, generic_net, hyperboloid_net, paraboloid_net
from asymnet.structure import build_structure

MP_DPS = 40
# seeds whose random co-normal data stay well away from degenerate quads
GENERIC_SEEDS = (0, 2, 7)


class MpCase:
    """A net built at MP_DPS digits; use ``with case.ctx():`` for follow-up arithmetic."""

    def __init__(self, spec, gamma_seed=None, seed_quad=(0, 0)):
        with mpmath.workdps(MP_DPS):
            self.spec = spec
            self.net, self.analytic = hyperboloid_net(spec)
            g0 = self.analytic.gamma()[seed_quad] if gamma_seed is None else mpmath.mpf(gamma_seed)
            self.structure = build_structure(self.net, g0, seed_quad, tol=None)

    @staticmethod
    def ctx():
        return mpmath.workdps(MP_DPS)


@pytest.fixture(scope="session")
def hyp():
    """Figure configuration: c=1, u0=v0=1, du=0.1, dv=0.2, 20x20, analytic gauge seed."""
    return MpCase(HyperboloidSpec(dps=MP_DPS))


@pytest.fixture(scope="session")
def hyp_equal():
    return MpCase(HyperboloidSpec(du=0.1, dv=0.1, nu=12, nv=12, dps=MP_DPS))


@pytest.fixture(scope="session")
def hyp_small():
    return MpCase(HyperboloidSpec(nu=6, nv=6, dps=MP_DPS))


@pytest.fixture(scope="session")
def hyp_float():
    net, ana = hyperboloid_net(HyperboloidSpec(nu=8, nv=8))
    return net, ana, build_structure(net, ana.gamma()[0, 0], tol=None)


@pytest.fixture(scope="session")
def para():
    net = paraboloid_net(5, 5)
    return net, build_structure(net)


@pytest.fixture(scope="session", params=GENERIC_SEEDS)
def generic(request):
    net, conormals, gamma = generic_net(8, 8, request.param)
    return net, build_structure(net, gamma[0, 0], tol=None), conormals, gamma


def rel_err(a, b):
    """max |a-b| / max |b| in float64 over finite entries."""
    from asymnet._num import to_float

    a, b = to_float(np.asarray(a)), to_float(np.asarray(b))
    ok = np.isfinite(a) & np.isfinite(b)
    scale = np.max(np.abs(b[ok])) if ok.any() else 1.0
    return float(np.max(np.abs(a[ok] - b[ok])) / (scale if scale > 0 else 1.0)) if ok.any() else 0.0


def site_rel_err(a, b):
    """max over sites of |a-b| / |b| (element-wise relative)."""
    from asymnet._num import to_float

    a, b = to_float(np.asarray(a)), to_float(np.asarray(b))
    ok = np.isfinite(a) & np.isfinite(b) & (b != 0)
    return float(np.max(np.abs((a[ok] - b[ok]) / b[ok]))) if ok.any() else 0.0


def centred_hyperboloid(step, half=2, centre=2.0, quad_centred=False):
    """Small multiprecision net with equal steps around a parameter point.

    By default the v-edge (half, half-1) and the u-edge (half-1, half) are
    centred on (centre, centre); with ``quad_centred`` the quad (half, half) is.
    """
    shift = (half + 0.5) * step if quad_centred else None
    u0 = centre - shift if quad_centred else centre - half * step
    v0 = centre - shift if quad_centred else centre - (half - 0.5) * step
    n = 2 * half + (1 if quad_centred else 0)
    return MpCase(HyperboloidSpec(u0=u0, v0=v0, du=step, dv=step, nu=n, nv=n, dps=MP_DPS))
