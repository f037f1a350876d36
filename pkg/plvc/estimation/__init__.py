"""
Estimators of the partially linear varying coefficient model

This module provides:
- Rank-revealing projection onto the series space
- Partitioned series least squares with sandwich covariance
- Feasible weighted estimation under heteroskedasticity
- The kernel profile baseline
"""
from .kernel import kernel_beta_curve, local_vc_fit, profile_gamma, select_bandwidth
from .projection import SeriesProjector, joint_least_squares, project
from .series import (
    beta_at,
    beta_curves,
    efficiency_gap,
    estimate_variance_function,
    fit,
    fit_two_step_weighted,
    fit_weighted,
    gamma_covariance,
    gamma_summary,
    homoskedastic_covariance,
)

__all__ = [
    'kernel_beta_curve',
    'local_vc_fit',
    'profile_gamma',
    'select_bandwidth',
    'SeriesProjector',
    'joint_least_squares',
    'project',
    'beta_at',
    'beta_curves',
    'efficiency_gap',
    'estimate_variance_function',
    'fit',
    'fit_two_step_weighted',
    'fit_weighted',
    'gamma_covariance',
    'gamma_summary',
    'homoskedastic_covariance',
]
