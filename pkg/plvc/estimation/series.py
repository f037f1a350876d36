"""
Series least-squares estimation of Y = w'gamma + x'beta(z) + u

The partitioned path residualizes W and y against the series design P,
estimates gamma from the residualized regression and recovers the series
coefficients from y - W gamma.
"""
from typing import List, Optional, Sequence

import numpy as np
from scipy import linalg

from ..design.regressors import block_offsets, build_design, interleave
from ..models.basis import BasisSpec
from ..models.data import Dataset
from ..models.results import FitResult, VarianceModel
from ..utils.errors import CollinearityError
from ..utils.logger import setup_logger
from .projection import SeriesProjector

logger = setup_logger(__name__)

# Residualized linear columns with relative norm below this lie in the series space
COLLINEARITY_TOLERANCE = 1e-8
VARIANCE_FLOOR = 1e-8


def check_identified(w: np.ndarray, w_resid: np.ndarray, labels: Sequence[str]) -> None:
    """Raise when (W - W~)'(W - W~) is singular beyond tolerance"""
    q = w.shape[1]
    if q == 0:
        return
    scale = np.linalg.norm(w, axis=0)
    scale[scale == 0] = 1.0
    scaled = w_resid / scale
    _, r, pivot = linalg.qr(scaled, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    rank = int(np.sum(diag > COLLINEARITY_TOLERANCE))
    if rank < q:
        offending = [labels[j] if j < len(labels) else str(j) for j in sorted(pivot[rank:])]
        raise CollinearityError(
            f"Linear block columns {offending} lie in the varying-coefficient space; gamma is not identified",
            details={"columns": offending, "rank": rank, "q": q},
        )


def sandwich(w_resid: np.ndarray, residuals: np.ndarray, labels: Sequence[str] = ()):
    """Phi-hat, Omega-hat and Phi^-1 Omega Phi^-1"""
    n, q = w_resid.shape
    phi = w_resid.T @ w_resid / n
    omega = (w_resid * residuals[:, None] ** 2).T @ w_resid / n
    if q == 0:
        return phi, omega, np.zeros((0, 0))
    try:
        phi_inv = linalg.inv(phi)
    except linalg.LinAlgError as e:
        raise CollinearityError(
            "Phi-hat is singular",
            details={"columns": list(labels)},
        ) from e
    sigma = phi_inv @ omega @ phi_inv
    return phi, omega, (sigma + sigma.T) / 2


def _fit_arrays(
    y: np.ndarray,
    w: np.ndarray,
    p: np.ndarray,
    specs: Sequence[BasisSpec],
    z: np.ndarray,
    linear_labels: Sequence[str],
    varying_labels: Sequence[str],
    dof_correction: bool = True,
    weights: Optional[np.ndarray] = None,
) -> FitResult:
    """Partitioned least squares on already-built arrays"""
    n, q = w.shape
    projector = SeriesProjector(p)

    w_resid = projector.annihilate(w) if q else np.zeros((n, 0))
    y_resid = projector.annihilate(y)
    check_identified(w, w_resid, linear_labels)

    if q:
        gamma, _, _, _ = linalg.lstsq(w_resid, y_resid)
    else:
        gamma = np.zeros(0)
    partial = y - w @ gamma
    alpha = projector.solve(partial)

    fitted = w @ gamma + p @ alpha
    residuals = y - fitted
    rss = float(residuals @ residuals)
    centered = y - y.mean()
    tss = float(centered @ centered)
    r_squared = 1.0 - rss / tss if tss > 0 else (1.0 if rss == 0 else 0.0)

    dof = n - q - projector.rank
    sigma2 = rss / dof if dof_correction and dof > 0 else rss / n
    phi, omega, sigma = sandwich(w_resid, residuals, linear_labels)

    if projector.rank < p.shape[1]:
        logger.debug(f"Series design rank {projector.rank} < K={p.shape[1]}; dropped {projector.dropped_columns.tolist()}")

    return FitResult(
        gamma_hat=gamma,
        alpha_hat=alpha,
        residuals=residuals,
        fitted=fitted,
        w_resid=w_resid,
        rss=rss,
        r_squared=r_squared,
        phi_hat=phi,
        omega_hat=omega,
        sigma_hat=sigma,
        sigma2_hat=sigma2,
        n=n,
        rank=projector.rank,
        dof_correction=dof_correction,
        specs=tuple(specs),
        block_offsets=block_offsets(specs),
        linear_labels=list(linear_labels),
        varying_labels=list(varying_labels),
        z=z,
        weights=weights,
    )


def fit(ds: Dataset, specs: Sequence[BasisSpec], dof_correction: bool = True, strict: Optional[bool] = None) -> FitResult:
    """
    Fit the model by partitioned series least squares

    Args:
        ds: Dataset
        specs: One basis spec per varying coefficient
        dof_correction: Divide RSS by n - q - rank(P) for sigma2-hat
        strict: Raise on index values outside a basis support

    Returns:
        FitResult
    """
    design = build_design(ds, specs, strict=strict)
    result = _fit_arrays(
        ds.y, ds.w, design.p, specs, ds.z,
        ds.linear_labels, ds.varying_labels,
        dof_correction=dof_correction,
    )
    logger.debug(f"Fitted series model: n={ds.n}, q={ds.q}, K={design.total_dimension}, rank={result.rank}, rss={result.rss:.6g}")
    return result


def gamma_covariance(fit_result: FitResult) -> np.ndarray:
    """Sandwich covariance Phi^-1 Omega Phi^-1 of sqrt(n)(gamma-hat - gamma)"""
    _, _, sigma = sandwich(fit_result.w_resid, fit_result.residuals, fit_result.linear_labels)
    return sigma


def homoskedastic_covariance(fit_result: FitResult) -> np.ndarray:
    """sigma2-hat Phi^-1, the efficiency-bound plug-in under homoskedasticity"""
    if fit_result.q == 0:
        return np.zeros((0, 0))
    try:
        phi_inv = linalg.inv(fit_result.phi_hat)
    except linalg.LinAlgError as e:
        raise CollinearityError("Phi-hat is singular", details={"columns": fit_result.linear_labels}) from e
    return fit_result.sigma2_hat * phi_inv


def efficiency_gap(fit_result: FitResult) -> float:
    """||Sigma - sigma2 Phi^-1||_F / ||Sigma||_F"""
    sigma = fit_result.sigma_hat
    norm = np.linalg.norm(sigma)
    if norm == 0:
        return 0.0
    return float(np.linalg.norm(sigma - homoskedastic_covariance(fit_result)) / norm)


def beta_at(fit_result: FitResult, l: int, z, strict: Optional[bool] = None) -> np.ndarray:
    """
    Estimated varying coefficient beta_l at z

    Args:
        fit_result: Fitted model
        l: Block index (0 = varying intercept)
        z: Index value(s)

    Returns:
        Array of beta_l-hat(z)
    """
    if not 0 <= l < fit_result.d:
        raise IndexError(f"block index {l} outside 0..{fit_result.d - 1}")
    basis = fit_result.specs[l].evaluate(z, strict=strict)
    return basis @ fit_result.alpha_block(l)


def beta_curves(fit_result: FitResult, z, strict: Optional[bool] = None) -> np.ndarray:
    """All coefficient curves at z, returning (len(z), d)"""
    return np.column_stack([beta_at(fit_result, l, z, strict=strict) for l in range(fit_result.d)])


def estimate_variance_function(fit_result: FitResult, spec: BasisSpec) -> VarianceModel:
    """
    Least-squares fit of u-hat^2 on a basis of z

    Args:
        fit_result: Unweighted fit supplying residuals and z
        spec: Basis of the variance curve

    Returns:
        VarianceModel clamped to [max(q05(u^2), 1e-8), max(eta_1, q95(fitted))]
    """
    squared = fit_result.residuals ** 2
    basis = spec.evaluate(fit_result.z, strict=False)
    coefficients = SeriesProjector(basis).solve(squared)
    fitted_curve = basis @ coefficients

    floor = max(float(np.quantile(squared, 0.05)), VARIANCE_FLOOR)
    cap = max(floor, float(np.quantile(fitted_curve, 0.95)))
    logger.debug(f"Variance function clamp [{floor:.4g}, {cap:.4g}]")
    return VarianceModel(spec=spec, coefficients=coefficients, floor=floor, cap=cap)


def fit_weighted(
    ds: Dataset,
    specs: Sequence[BasisSpec],
    vm: VarianceModel,
    dof_correction: bool = True,
    strict: Optional[bool] = None,
) -> FitResult:
    """
    Feasible weighted series estimator

    Every term of the model is divided by sigma-hat_i = sqrt(vm(z_i)) and the
    transformed model is fitted by the partitioned procedure. Residuals and
    covariances refer to the transformed model.
    """
    sigma_i = np.sqrt(vm(ds.z))
    p = interleave(ds.x, ds.z, specs, strict=strict)
    result = _fit_arrays(
        ds.y / sigma_i,
        ds.w / sigma_i[:, None],
        p / sigma_i[:, None],
        specs, ds.z,
        ds.linear_labels, ds.varying_labels,
        dof_correction=dof_correction,
        weights=sigma_i,
    )
    logger.debug(f"Fitted weighted series model: n={ds.n}, rank={result.rank}")
    return result


def fit_two_step_weighted(
    ds: Dataset,
    specs: Sequence[BasisSpec],
    variance_spec: BasisSpec,
    dof_correction: bool = True,
) -> FitResult:
    """Unweighted fit, variance curve from its residuals, then the weighted fit"""
    first = fit(ds, specs, dof_correction=dof_correction)
    vm = estimate_variance_function(first, variance_spec)
    return fit_weighted(ds, specs, vm, dof_correction=dof_correction)


def gamma_summary(fit_result: FitResult) -> List[dict]:
    """Estimate, standard error and t-statistic per linear column"""
    se = fit_result.standard_errors()
    t = fit_result.t_statistics()
    return [
        {"name": name, "estimate": float(g), "std_error": float(s), "t_stat": float(tv)}
        for name, g, s, tv in zip(fit_result.linear_labels, fit_result.gamma_hat, se, t)
    ]
