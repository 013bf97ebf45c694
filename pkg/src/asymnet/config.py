"""Default tolerances, in one place.  Every residual is dimensionless."""

PLANARITY_TOL = 1e-9
NONDEGENERACY_TOL = 0.0
GAUGE_COLLINEARITY_TOL = 1e-6
IDENTITY_TOL = 1e-9
CLASSIFY_TOL = 1e-8
BOBENKO_EPS = 1e-30
RATIO_EPS = 1e-30
RECONSTRUCT_DATA_TOL = 1e-8
FRAME_TOL = 1e-10
ALIGN_DET_TOL = 1e-14


def as_dict() -> dict:
    return {k.lower(): v for k, v in globals().items() if k.isupper()}
