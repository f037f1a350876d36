"""
Kernel profile estimator of the partially linear varying coefficient model

E_G(A) is estimated at each z_i by kernel-weighted local least squares of A
on x; gamma is the least-squares slope of y - E_G(y) on W - E_G(W).
"""
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from ..models.data import Dataset
from ..models.results import CvCandidate, CvReport, KernelProfileResult, KernelSpec, VarianceModel
from ..utils.errors import LocalRankError, SelectionError
from ..utils.logger import setup_logger
from .series import check_identified, sandwich

logger = setup_logger(__name__)

_SQRT_2PI = np.sqrt(2.0 * np.pi)
LOCAL_CONDITION_TOLERANCE = 1e-2
MIN_EFFECTIVE_PER_PARAMETER = 1.5
MAX_WIDENINGS = 8


def kernel_weights(u: np.ndarray, h: float, kernel: str) -> np.ndarray:
    """
    Kernel weights K(u)/h

    Args:
        u: Normalized distances (z - z0) / h
        h: Bandwidth (> 0)
        kernel: "epanechnikov" or "gaussian"

    Returns:
        Nonnegative weights
    """
    u = np.asarray(u, dtype=float)
    if h <= 0:
        raise ValueError("h must be positive")
    if kernel == "gaussian":
        return np.exp(-0.5 * u * u) / _SQRT_2PI / h
    if kernel == "epanechnikov":
        return 0.75 * np.maximum(0.0, 1.0 - u * u) / h
    raise ValueError(f"Unknown kernel: {kernel}")


def _local_design(x: np.ndarray, u: np.ndarray, order: str) -> np.ndarray:
    if order == "linear":
        return np.hstack([x, x * u[:, None]])
    return x


def effective_size(weights: np.ndarray) -> float:
    """Kish effective sample size (sum w)^2 / sum w^2"""
    total = float(weights.sum())
    if total <= 0:
        return 0.0
    return total * total / float(weights @ weights)


def weighted_solve(design: np.ndarray, target: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """
    Weighted least squares on the rows with positive weight

    Raises LocalRankError when the effective sample size is below
    MIN_EFFECTIVE_PER_PARAMETER times the number of parameters, or when the
    smallest pivot of the column-equilibrated local design falls below
    LOCAL_CONDITION_TOLERANCE times the largest.
    """
    active = weights > 0
    cols = design.shape[1]
    n_eff = effective_size(weights[active])
    details = {"active": int(active.sum()), "effective_size": round(n_eff, 3), "parameters": cols}
    if n_eff < MIN_EFFECTIVE_PER_PARAMETER * cols:
        raise LocalRankError(
            f"Effective local sample {n_eff:.3g} is too small for {cols} parameters",
            details=details,
        )
    root = np.sqrt(weights[active])
    a = design[active] * root[:, None]
    b = target[active] * (root[:, None] if target.ndim == 2 else root)

    norms = np.linalg.norm(a, axis=0)
    if np.any(norms == 0):
        raise LocalRankError("Local design has an empty column", details=details)
    q, r, pivot = linalg.qr(a / norms, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    if diag[-1] <= LOCAL_CONDITION_TOLERANCE * diag[0]:
        raise LocalRankError(
            "Local design is ill-conditioned",
            details={**details, "pivot_ratio": float(diag[-1] / diag[0])},
        )
    coef = np.empty((cols,) + target.shape[1:])
    coef[pivot] = linalg.solve_triangular(r, q.T @ b)
    return coef / (norms[:, None] if coef.ndim == 2 else norms)


def _local_fit(
    target: np.ndarray,
    x: np.ndarray,
    z: np.ndarray,
    z0: float,
    ks: KernelSpec,
    exclude: Optional[int] = None,
    fallback: bool = True,
) -> Tuple[np.ndarray, bool]:
    """
    Level coefficients at z0 and whether fallback weights were used

    With fallback, a failed window is refitted with Gaussian weights, and the
    Gaussian bandwidth is doubled until the local design passes weighted_solve.
    """
    h = ks.bandwidth
    kernel = ks.kernel
    attempt = 0
    while True:
        u = (z - z0) / h
        weights = kernel_weights(u, h, kernel)
        if exclude is not None:
            weights[exclude] = 0.0
        try:
            coef = weighted_solve(_local_design(x, u, ks.local_order), target, weights)
            return coef[:x.shape[1]], attempt > 0
        except LocalRankError:
            if not fallback or attempt > MAX_WIDENINGS:
                raise
        if kernel == "gaussian":
            h *= 2.0
        kernel = "gaussian"
        attempt += 1


def local_vc_fit(target, x, z, z0: float, ks: KernelSpec, exclude: Optional[int] = None) -> np.ndarray:
    """
    Kernel-weighted local least squares of target on x around z0

    Args:
        target: Length-n response (or n x m block of responses)
        x: n x d varying regressors
        z: Index values
        z0: Evaluation point
        ks: Kernel settings
        exclude: Observation left out of the fit

    Returns:
        Level coefficients c(z0), length d (d x m for a block target)
    """
    coef, _ = _local_fit(
        np.asarray(target, dtype=float),
        np.asarray(x, dtype=float),
        np.asarray(z, dtype=float),
        float(z0), ks, exclude=exclude, fallback=False,
    )
    return coef


def _smooth_at_sample(
    targets: np.ndarray,
    ds: Dataset,
    ks: KernelSpec,
    leave_out: bool = False,
) -> Tuple[np.ndarray, List[int]]:
    """Local coefficients at every sample point, shape (n, d, m)"""
    coefs = np.empty((ds.n, ds.d, targets.shape[1]))
    fallback_points = []
    for i in range(ds.n):
        coef, used_fallback = _local_fit(
            targets, ds.x, ds.z, ds.z[i], ks,
            exclude=i if leave_out else None,
        )
        coefs[i] = coef
        if used_fallback:
            fallback_points.append(i)
    if fallback_points:
        logger.warning(f"Fallback weights at {len(fallback_points)} point(s) with h={ks.bandwidth:.4g}")
    return coefs, fallback_points


def _residualize(ds: Dataset, ks: KernelSpec, leave_out: bool = False):
    """y - E_G(y), W - E_G(W) and the local coefficients"""
    targets = np.column_stack([ds.y, ds.w])
    coefs, fallback_points = _smooth_at_sample(targets, ds, ks, leave_out=leave_out)
    projected = np.einsum("id,idm->im", ds.x, coefs)
    residualized = targets - projected
    return residualized[:, 0], residualized[:, 1:], coefs, fallback_points


def _profile_slope(y_resid: np.ndarray, w_resid: np.ndarray, w: np.ndarray, labels: Sequence[str]) -> np.ndarray:
    if w.shape[1] == 0:
        return np.zeros(0)
    check_identified(w, w_resid, labels)
    gamma, _, _, _ = linalg.lstsq(w_resid, y_resid)
    return gamma


def profile_gamma(
    ds: Dataset,
    ks: KernelSpec,
    variance_model: Optional[VarianceModel] = None,
) -> KernelProfileResult:
    """
    Kernel profile estimator

    Args:
        ds: Dataset
        ks: Kernel settings
        variance_model: Optional variance curve; when given, the residualized
            equation is divided by sigma-hat_i before the slope is computed

    Returns:
        KernelProfileResult with gamma-bar and the coefficient curves at the sample z
    """
    y_resid, w_resid, coefs, fallback_points = _residualize(ds, ks)

    if variance_model is not None:
        scale = np.sqrt(variance_model(ds.z))
        y_eq, w_eq = y_resid / scale, w_resid / scale[:, None]
    else:
        y_eq, w_eq = y_resid, w_resid

    gamma = _profile_slope(y_eq, w_eq, ds.w, ds.linear_labels)
    beta = coefs[:, :, 0] - coefs[:, :, 1:] @ gamma
    residuals = y_eq - w_eq @ gamma
    _, _, sigma = sandwich(w_eq, residuals, ds.linear_labels)

    return KernelProfileResult(
        gamma_hat=gamma,
        beta_at_sample=beta,
        residuals=residuals,
        y_resid=y_resid,
        w_resid=w_resid,
        rss=float(residuals @ residuals),
        sigma_hat=sigma,
        kernel_spec=ks,
        fallback_points=fallback_points,
        weighted=variance_model is not None,
        dataset=ds,
    )


def kernel_beta_curve(result: KernelProfileResult, z_grid) -> np.ndarray:
    """Coefficient curves on an arbitrary grid from a local fit of y - W gamma on x"""
    ds = result.dataset
    partial = ds.y - ds.w @ result.gamma_hat
    z_grid = np.atleast_1d(np.asarray(z_grid, dtype=float))
    curves = np.empty((z_grid.size, ds.d))
    for j, z0 in enumerate(z_grid):
        curves[j], _ = _local_fit(partial, ds.x, ds.z, z0, result.kernel_spec)
    return curves


def bandwidth_scores(ds: Dataset, ks: KernelSpec) -> Tuple[float, float]:
    """
    Leave-one-out score and in-sample RSS for one bandwidth

    Observation i is left out of every local fit that predicts it.
    """
    y_loo, w_loo, _, _ = _residualize(ds, ks, leave_out=True)
    gamma_loo = _profile_slope(y_loo, w_loo, ds.w, ds.linear_labels)
    errors = y_loo - w_loo @ gamma_loo

    y_in, w_in, _, _ = _residualize(ds, ks)
    gamma_in = _profile_slope(y_in, w_in, ds.w, ds.linear_labels)
    residuals = y_in - w_in @ gamma_in
    return float(errors @ errors), float(residuals @ residuals)


def bandwidth_grid(lo: float = 0.02, hi: float = 0.40, num: int = 15) -> List[float]:
    """Log-spaced bandwidths"""
    return [float(h) for h in np.geomspace(lo, hi, num)]


def select_bandwidth(
    ds: Dataset,
    grid: Sequence[float],
    template: KernelSpec,
    workers: int = 1,
) -> CvReport:
    """
    Select h by leave-one-out cross-validation

    Args:
        ds: Dataset
        grid: Candidate bandwidths
        template: Kernel and local order shared by all candidates

    Returns:
        CvReport; ties go to the largest h
    """
    from ..selection.cv import assemble_report, evaluate_grid

    if not len(grid):
        raise SelectionError("Empty bandwidth grid")
    specs = [KernelSpec(kernel=template.kernel, bandwidth=float(h), local_order=template.local_order) for h in grid]
    candidates = [CvCandidate(label=f"h={h:.6g}", bandwidth=float(h)) for h in grid]

    results, failures = evaluate_grid(lambda i: bandwidth_scores(ds, specs[i]), len(specs), workers)
    report = assemble_report(candidates, results, failures, tie_key=lambda c: -c.bandwidth)
    logger.info(f"Selected bandwidth {report.selected_candidate.bandwidth:.4g} (cv={report.best_score:.6g})")
    return report
