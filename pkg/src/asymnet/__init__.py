"""Discrete affine invariants of asymptotic nets: analysis, verification, reconstruction."""
