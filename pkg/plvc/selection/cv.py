"""
Leave-one-out least-squares cross-validation

For a linear smoother the leave-one-out prediction error of observation i
is u_i / (1 - h_ii), so one fit per candidate suffices.
"""
import itertools
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import linalg

from ..basis.splines import bspline_spec, power_spec
from ..design.regressors import build_design
from ..estimation.projection import SeriesProjector
from ..models.basis import BasisSpec
from ..models.data import Dataset
from ..models.results import CvCandidate, CvReport, KernelSpec
from ..utils.errors import PLVCError, SaturationError, SelectionError
from ..utils.logger import setup_logger

logger = setup_logger(__name__)

SATURATION_TOLERANCE = 1e-8
TIE_RTOL = 1e-12


def _joint_design(ds: Dataset, specs: Sequence[BasisSpec], strict: Optional[bool] = None) -> np.ndarray:
    return np.hstack([ds.w, build_design(ds, specs, strict=strict).p])


def loo_scores(ds: Dataset, specs: Sequence[BasisSpec], strict: Optional[bool] = None) -> Tuple[float, float]:
    """
    Leave-one-out score and in-sample RSS of one candidate

    Returns:
        (sum_i (u_i / (1 - h_ii))^2, sum_i u_i^2)
    """
    projector = SeriesProjector(_joint_design(ds, specs, strict=strict))
    residuals = projector.annihilate(ds.y)
    leverage = projector.leverage()
    saturated = np.flatnonzero(leverage >= 1.0 - SATURATION_TOLERANCE)
    if saturated.size:
        raise SaturationError(
            f"{saturated.size} observation(s) have leverage 1; the candidate interpolates",
            details={"observations": saturated[:20].tolist(), "rank": projector.rank, "n": ds.n},
        )
    score = float(np.sum((residuals / (1.0 - leverage)) ** 2))
    return score, float(residuals @ residuals)


def loo_cv_score(ds: Dataset, specs: Sequence[BasisSpec], strict: Optional[bool] = None) -> float:
    """Hat-diagonal leave-one-out CV score of the joint regression on [W, P]"""
    return loo_scores(ds, specs, strict=strict)[0]


def literal_loo_score(ds: Dataset, specs: Sequence[BasisSpec]) -> float:
    """Leave-one-out score by n explicit refits (reference implementation)"""
    design = _joint_design(ds, specs)
    total = 0.0
    for i in range(ds.n):
        keep = np.arange(ds.n) != i
        coef, _, _, _ = linalg.lstsq(design[keep], ds.y[keep])
        total += float(ds.y[i] - design[i] @ coef) ** 2
    return total


def describe_specs(specs: Sequence[BasisSpec]) -> CvCandidate:
    """Grid entry for a spec set"""
    dims = tuple(s.dimension for s in specs)
    degrees = {s.degree for s in specs}
    degree = degrees.pop() if len(degrees) == 1 else None
    family = specs[0].family if specs else "none"
    label = f"{family}(m={degree}) k={','.join(str(k) for k in dims)}"
    return CvCandidate(label=label, per_block_k=dims, total_k=int(sum(dims)), degree=degree)


def spline_grid(
    ds: Dataset,
    ks: Sequence[int] = range(4, 17),
    degrees: Sequence[int] = (3,),
    per_block: bool = False,
    lo: Optional[float] = None,
    hi: Optional[float] = None,
) -> List[Tuple[BasisSpec, ...]]:
    """
    Candidate spec sets for basis selection

    Args:
        ds: Dataset (supplies z range and d)
        ks: Per-block basis dimensions
        degrees: Spline degrees to include
        per_block: Cross all blocks' dimensions instead of sharing one k
        lo: Knot range override
        hi: Knot range override

    Returns:
        List of spec tuples ordered by degree then total dimension
    """
    grid = []
    for degree in degrees:
        valid = [k for k in ks if k >= degree + 1]
        specs_by_k = {k: bspline_spec(ds.z, k, degree=degree, lo=lo, hi=hi) for k in valid}
        if per_block:
            for combo in itertools.product(valid, repeat=ds.d):
                grid.append(tuple(specs_by_k[k] for k in combo))
        else:
            for k in valid:
                grid.append(tuple(specs_by_k[k] for _ in range(ds.d)))
    return grid


def power_grid(ds: Dataset, degrees: Sequence[int] = range(1, 8)) -> List[Tuple[BasisSpec, ...]]:
    """Shared power-series candidates"""
    return [tuple(power_spec(m) for _ in range(ds.d)) for m in degrees]


def assemble_report(
    candidates: Sequence[CvCandidate],
    results: Sequence[Optional[Tuple[float, float]]],
    failures: Dict[int, str],
    tie_key: Callable[[CvCandidate], float],
) -> CvReport:
    """
    Deterministic reduction of per-candidate results

    Args:
        candidates: Grid entries
        results: (cv score, in-sample rss) or None when not evaluable
        failures: Error message per non-evaluable candidate
        tie_key: Smaller value wins among candidates tied at the minimum

    Returns:
        CvReport
    """
    evaluable = [r is not None for r in results]
    if not any(evaluable):
        raise SelectionError(
            "No candidate in the grid could be evaluated",
            details={"failures": {str(k): v for k, v in failures.items()}},
        )
    scores = [r[0] if r is not None else float("nan") for r in results]
    rss = [r[1] if r is not None else float("nan") for r in results]

    finite = np.array([s if ok else np.inf for s, ok in zip(scores, evaluable)])
    best = float(np.min(finite))
    ties = [i for i, s in enumerate(finite) if np.isfinite(s) and np.isclose(s, best, rtol=TIE_RTOL, atol=0.0)]
    selected = min(ties, key=lambda i: (tie_key(candidates[i]), i))

    return CvReport(
        candidates=list(candidates),
        scores=scores,
        in_sample_rss=rss,
        evaluable=evaluable,
        selected=selected,
        ties=ties,
        failures=failures,
    )


def evaluate_grid(evaluate: Callable[[int], Tuple[float, float]], size: int, workers: int):
    """Run candidate evaluations, collecting results by index"""
    results: List[Optional[Tuple[float, float]]] = [None] * size
    failures: Dict[int, str] = {}

    def run(index: int):
        try:
            return index, evaluate(index), None
        except PLVCError as e:
            return index, None, f"{e.__class__.__name__}: {e.message}"

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            outcomes = list(executor.map(run, range(size)))
    else:
        outcomes = [run(i) for i in range(size)]

    for index, result, failure in outcomes:
        results[index] = result
        if failure is not None:
            failures[index] = failure
            logger.debug(f"Candidate {index} not evaluable: {failure}")
    return results, failures


def select_basis(
    ds: Dataset,
    grid: Sequence[Sequence[BasisSpec]],
    workers: int = 1,
    strict: Optional[bool] = None,
) -> CvReport:
    """
    Select the series basis by leave-one-out cross-validation

    Args:
        ds: Dataset
        grid: Candidate spec sets
        workers: Thread count for candidate evaluation

    Returns:
        CvReport; ties go to the smallest total K
    """
    if not grid:
        raise SelectionError("Empty selection grid")
    candidates = [describe_specs(specs) for specs in grid]
    results, failures = evaluate_grid(lambda i: loo_scores(ds, grid[i], strict=strict), len(grid), workers)
    report = assemble_report(candidates, results, failures, tie_key=lambda c: (c.total_k, c.degree or 0))
    logger.info(f"Selected {report.selected_candidate.label} (cv={report.best_score:.6g}, {len(failures)} non-evaluable)")
    return report


def report_frame(report: CvReport) -> pd.DataFrame:
    """Tabular form of a CV report"""
    rows = []
    for i, candidate in enumerate(report.candidates):
        rows.append({
            "candidate": candidate.label,
            "per_block_k": ",".join(str(k) for k in candidate.per_block_k),
            "total_k": candidate.total_k,
            "degree": candidate.degree,
            "bandwidth": candidate.bandwidth,
            "cv_score": report.scores[i],
            "in_sample_rss": report.in_sample_rss[i],
            "evaluable": report.evaluable[i],
            "selected": i == report.selected,
        })
    return pd.DataFrame(rows)


def cv_curve(
    ds: Dataset,
    grid: Sequence,
    kernel_template: Optional[KernelSpec] = None,
    workers: int = 1,
) -> pd.DataFrame:
    """
    Full CV curve for plotting

    Args:
        ds: Dataset
        grid: Spec sets, or bandwidths when ``kernel_template`` is given
        kernel_template: Kernel settings for a bandwidth grid

    Returns:
        One row per grid entry with cv_score and in_sample_rss
    """
    if kernel_template is not None:
        from ..estimation.kernel import select_bandwidth
        report = select_bandwidth(ds, grid, kernel_template, workers=workers)
    else:
        report = select_basis(ds, grid, workers=workers)
    return report_frame(report)
