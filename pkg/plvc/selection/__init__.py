"""
Smoothing parameter selection
"""
from .cv import (
    cv_curve,
    literal_loo_score,
    loo_cv_score,
    loo_scores,
    power_grid,
    report_frame,
    select_basis,
    spline_grid,
)

__all__ = [
    'cv_curve',
    'literal_loo_score',
    'loo_cv_score',
    'loo_scores',
    'power_grid',
    'report_frame',
    'select_basis',
    'spline_grid',
]
