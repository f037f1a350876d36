"""
Wild bootstrap specification test between nested model classes

The bootstrap response is generated from the fitted null model with
residuals multiplied by two-point wild draws; both classes are refitted on
the same regressors and the statistic (RSS_0 - RSS) / RSS is recomputed.
"""
import secrets
from concurrent.futures import ProcessPoolExecutor
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..design.regressors import build_design, interleave
from ..estimation.projection import SeriesProjector
from ..models.basis import BasisSpec
from ..models.data import Dataset
from ..models.results import ModelClass, TestResult
from ..selection.cv import select_basis, spline_grid
from ..utils.errors import BootstrapError, ConfigError, DegenerateFitError, PLVCError
from ..utils.logger import setup_logger

logger = setup_logger(__name__)

MIN_REPLICATES = 99
MAX_DROPPED_SHARE = 0.05
NESTING_RTOL = 1e-8

_SQRT5 = np.sqrt(5.0)
MAMMEN_LOW = (1.0 - _SQRT5) / 2.0
MAMMEN_HIGH = (1.0 + _SQRT5) / 2.0
MAMMEN_P_LOW = (5.0 + _SQRT5) / 10.0


def rss_stat(rss0: float, rss: float) -> float:
    """
    (RSS_0 - RSS) / RSS

    Args:
        rss0: Residual sum of squares of the null model
        rss: Residual sum of squares of the alternative model
    """
    if rss <= 0:
        raise DegenerateFitError(
            "Alternative model fits the sample exactly (RSS <= 0)",
            details={"rss0": rss0, "rss": rss},
        )
    return (rss0 - rss) / rss


def wild_multipliers(n: int, rng: np.random.Generator, kind: str = "mammen") -> np.ndarray:
    """
    Two-point wild bootstrap multipliers

    Args:
        n: Number of draws
        rng: Random generator
        kind: "mammen" ((1-sqrt5)/2 w.p. (5+sqrt5)/10, else (1+sqrt5)/2) or "rademacher"

    Returns:
        Length-n array with mean 0 and variance 1 in distribution
    """
    if n < 1:
        raise ValueError("n must be positive")
    u = rng.random(n)
    if kind == "mammen":
        return np.where(u < MAMMEN_P_LOW, MAMMEN_LOW, MAMMEN_HIGH)
    if kind == "rademacher":
        return np.where(u < 0.5, -1.0, 1.0)
    raise ValueError(f"Unknown multiplier law: {kind}")


def class_design(ds: Dataset, model_class: ModelClass, specs: Sequence[BasisSpec]) -> np.ndarray:
    """
    Regressor matrix of a model class

    parametric_linear: [x, w, z] (x carries the intercept)
    plvc: [w, P]
    full_vc: series design of [x, w], every w column receiving the intercept block's basis
    """
    if model_class.kind == "parametric_linear":
        return np.hstack([ds.x, ds.w, ds.z[:, None]])
    if model_class.kind == "plvc":
        return np.hstack([ds.w, build_design(ds, specs).p])
    full_specs = tuple(specs) + tuple(specs[0] for _ in range(ds.q))
    return interleave(np.hstack([ds.x, ds.w]), ds.z, full_specs)


def fit_model_class(ds: Dataset, model_class: ModelClass, specs: Sequence[BasisSpec]) -> Tuple[np.ndarray, np.ndarray, float]:
    """
    Least-squares fit of a model class

    Returns:
        (fitted values, residuals, RSS)
    """
    projector = SeriesProjector(class_design(ds, model_class, specs))
    fitted = projector.project(ds.y)
    residuals = ds.y - fitted
    return fitted, residuals, float(residuals @ residuals)


class BootstrapPlan:
    """Everything a worker needs to compute bootstrap statistics"""

    def __init__(
        self,
        ds: Dataset,
        null: ModelClass,
        alt: ModelClass,
        specs: Sequence[BasisSpec],
        seed: int,
        B: int,
        multiplier: str,
        reselect: bool,
        grid: Optional[List[Tuple[BasisSpec, ...]]],
    ):
        self.ds = ds
        self.null = null
        self.alt = alt
        self.specs = tuple(specs)
        self.seed = seed
        self.B = B
        self.multiplier = multiplier
        self.reselect = reselect
        self.grid = grid

        self.null_projector = SeriesProjector(class_design(ds, null, specs))
        self.alt_projector = SeriesProjector(class_design(ds, alt, specs))
        self.fitted0 = self.null_projector.project(ds.y)
        self.resid0 = ds.y - self.fitted0

    def replicate(self, b: int, seed_sequence: np.random.SeedSequence) -> float:
        """Bootstrap statistic of replicate b"""
        rng = np.random.default_rng(seed_sequence)
        xi = wild_multipliers(self.ds.n, rng, self.multiplier)
        y_star = self.fitted0 + self.resid0 * xi

        if self.reselect:
            boot = self.ds.with_response(y_star)
            specs = self.grid[select_basis(boot, self.grid).selected]
            null_projector = SeriesProjector(class_design(boot, self.null, specs))
            alt_projector = SeriesProjector(class_design(boot, self.alt, specs))
        else:
            null_projector, alt_projector = self.null_projector, self.alt_projector

        r0 = null_projector.annihilate(y_star)
        r1 = alt_projector.annihilate(y_star)
        return rss_stat(float(r0 @ r0), float(r1 @ r1))


def run_replicates(plan: BootstrapPlan, indices: Sequence[int]) -> List[Tuple[int, Optional[float], Optional[str]]]:
    """Compute a chunk of replicates; failures are returned, not raised"""
    children = np.random.SeedSequence(plan.seed).spawn(plan.B)
    outcomes = []
    for b in indices:
        try:
            outcomes.append((b, plan.replicate(b, children[b]), None))
        except PLVCError as e:
            outcomes.append((b, None, f"{e.__class__.__name__}: {e.message}"))
    return outcomes


class SpecificationTestService:
    """Runs wild bootstrap specification tests"""

    def __init__(self, workers: int = 1):
        self.workers = workers

    def wild_bootstrap_test(
        self,
        ds: Dataset,
        null: ModelClass,
        alt: ModelClass,
        B: int = 999,
        seed: Optional[int] = None,
        specs: Optional[Sequence[BasisSpec]] = None,
        multiplier: str = "mammen",
        reselect: bool = False,
        grid: Optional[List[Tuple[BasisSpec, ...]]] = None,
    ) -> TestResult:
        """
        Test a null model class against a nesting alternative

        Args:
            ds: Dataset
            null: Null model class
            alt: Alternative model class (must strictly nest the null)
            B: Bootstrap replicates (>= 99)
            seed: Master seed; generated and logged when absent
            specs: Basis specs; selected by CV on the original data when absent
            multiplier: "mammen" or "rademacher"
            reselect: Re-run CV on every bootstrap sample
            grid: Candidate spec sets for CV

        Returns:
            TestResult with p-value (1 + #{stat* >= stat}) / (B_eff + 1)
        """
        if not null.nested_in(alt):
            raise ConfigError(
                f"Null class '{null.kind}' is not strictly nested in '{alt.kind}'",
                details={"null": null.kind, "alt": alt.kind},
            )
        if B < MIN_REPLICATES:
            raise ConfigError(f"B={B} below the minimum of {MIN_REPLICATES}", details={"B": B})
        if seed is None:
            seed = secrets.randbits(63)
            logger.info(f"Generated bootstrap seed {seed}")

        if grid is None and (specs is None or reselect):
            grid = spline_grid(ds)
        if specs is None:
            specs = grid[select_basis(ds, grid).selected]

        plan = BootstrapPlan(ds, null, alt, specs, seed, B, multiplier, reselect, grid)
        r0 = plan.resid0
        r1 = plan.alt_projector.annihilate(ds.y)
        rss0, rss = float(r0 @ r0), float(r1 @ r1)
        if rss0 < rss - NESTING_RTOL * max(rss0, 1.0):
            logger.warning(f"Nesting violated: RSS_0={rss0:.6g} < RSS={rss:.6g}")
        statistic = rss_stat(rss0, rss)

        outcomes = self._run(plan)
        stats = np.array([s for _, s, _ in outcomes if s is not None])
        dropped = [(b, msg) for b, s, msg in outcomes if s is None]
        if dropped:
            logger.warning(f"Dropped {len(dropped)} of {B} bootstrap replicates; first: {dropped[0][1]}")
        if len(dropped) > MAX_DROPPED_SHARE * B:
            raise BootstrapError(
                f"{len(dropped)} of {B} bootstrap replicates failed",
                details={"dropped": len(dropped), "B": B},
            )

        p_value = (1.0 + float(np.sum(stats >= statistic))) / (stats.size + 1.0)
        logger.info(f"Wild bootstrap test {null.kind} vs {alt.kind}: stat={statistic:.6g}, p={p_value:.4g}")

        return TestResult(
            statistic=statistic,
            bootstrap_stats=stats,
            p_value=p_value,
            B=B,
            dropped=len(dropped),
            seed=seed,
            rss0=rss0,
            rss=rss,
            null=null,
            alt=alt,
            multiplier=multiplier,
            specs=[spec.describe() for spec in specs],
        )

    def _run(self, plan: BootstrapPlan):
        indices = list(range(plan.B))
        if self.workers <= 1:
            return run_replicates(plan, indices)
        chunks = [indices[i::self.workers] for i in range(self.workers)]
        with ProcessPoolExecutor(max_workers=self.workers) as executor:
            parts = list(executor.map(run_replicates, [plan] * len(chunks), chunks))
        return sorted((o for part in parts for o in part), key=lambda o: o[0])


# Global service instance
_specification_test_service: Optional[SpecificationTestService] = None


def get_specification_test_service(workers: Optional[int] = None) -> SpecificationTestService:
    """Get global specification test service instance"""
    global _specification_test_service
    if _specification_test_service is None:
        from ..utils.config import get_config
        _specification_test_service = SpecificationTestService(workers=get_config().THREADS)
    if workers is not None:
        _specification_test_service.workers = workers
    return _specification_test_service


def wild_bootstrap_test(
    ds: Dataset,
    null: ModelClass,
    alt: ModelClass,
    B: int = 999,
    seed: Optional[int] = None,
    **kwargs,
) -> TestResult:
    """Module-level entry point; see SpecificationTestService.wild_bootstrap_test"""
    return get_specification_test_service().wild_bootstrap_test(ds, null, alt, B=B, seed=seed, **kwargs)
