"""
Basis construction for the varying coefficients
"""
from .splines import (
    basis_matrix,
    bspline_eval,
    bspline_matrix,
    bspline_spec,
    clamp_counter,
    make_knots,
    power_eval,
    power_matrix,
    power_spec,
    truncated_power_bspline,
)

__all__ = [
    'basis_matrix',
    'bspline_eval',
    'bspline_matrix',
    'bspline_spec',
    'clamp_counter',
    'make_knots',
    'power_eval',
    'power_matrix',
    'power_spec',
    'truncated_power_bspline',
]
