"""
Monte Carlo replication studies

Each replication draws a sample from its own RNG stream spawned from the
master seed, fits every requested method and records gamma-hat and the
average squared error of each coefficient curve at the sample z.
"""
import secrets
import time
from concurrent.futures import ProcessPoolExecutor
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy import stats

from ..basis.splines import bspline_spec, power_spec
from ..design.regressors import shared_specs
from ..estimation.kernel import bandwidth_grid, bandwidth_scores, profile_gamma, select_bandwidth
from ..estimation.series import beta_curves, efficiency_gap, fit, fit_two_step_weighted
from ..models.data import Dataset
from ..models.results import KernelSpec
from ..models.simulation import (
    DgpKind, DgpSpec, RepRecord, SelectionPolicy, SimMethod, SimReport, SweepPoint, SweepReport, Truth,
)
from ..selection.cv import loo_scores, select_basis, spline_grid
from ..utils.errors import PLVCError
from ..utils.logger import setup_logger
from .dgp import TRUE_GAMMA, generate

logger = setup_logger(__name__)

MAX_FAILED_SHARE = 0.02
COVERAGE_LEVEL = 0.95


def mse_gamma(estimates, truth) -> np.ndarray:
    """
    Mean squared deviation of gamma-hat, per component

    Args:
        estimates: reps x q (or length-reps) estimates
        truth: True gamma (scalar or length q)
    """
    estimates = np.asarray(estimates, dtype=float)
    if estimates.size == 0:
        raise ValueError("no estimates")
    if estimates.ndim == 1:
        estimates = estimates[:, None]
    return np.mean((estimates - np.atleast_1d(np.asarray(truth, dtype=float))) ** 2, axis=0)


def average_squared_error(curve: np.ndarray, truth: np.ndarray) -> float:
    """(1/n) sum_i (beta-hat(z_i) - beta(z_i))^2"""
    diff = np.asarray(curve, dtype=float) - np.asarray(truth, dtype=float)
    return float(np.mean(diff ** 2))


def mase_beta(curves: Sequence[np.ndarray], truths: Sequence[np.ndarray]) -> float:
    """
    Mean over replications of the average squared error of one curve

    Args:
        curves: Per-replication estimates at that replication's z_i
        truths: Per-replication true values at the same points
    """
    if len(curves) == 0 or len(curves) != len(truths):
        raise ValueError("curves and truths must be nonempty and of equal length")
    return float(np.mean([average_squared_error(c, t) for c, t in zip(curves, truths)]))


class ReplicationPlan:
    """Inputs shared by every replication of a study"""

    def __init__(self, spec: DgpSpec, methods: Sequence[SimMethod], policy: SelectionPolicy, seed: int, reps: int):
        self.spec = spec
        self.methods = list(methods)
        self.policy = policy
        self.seed = seed
        self.reps = reps

    def spline_specs(self, ds: Dataset):
        policy = self.policy
        if policy.fixed_k is not None:
            specs = shared_specs(bspline_spec(ds.z, policy.fixed_k, degree=policy.spline_degree), ds.d)
            return specs, [policy.fixed_k] * ds.d
        grid = spline_grid(ds, ks=policy.spline_ks, degrees=(policy.spline_degree,))
        report = select_basis(ds, grid)
        return grid[report.selected], list(report.selected_candidate.per_block_k)

    def kernel_spec(self, ds: Dataset) -> KernelSpec:
        policy = self.policy
        if policy.fixed_bandwidth is not None:
            return KernelSpec(kernel=policy.kernel, bandwidth=policy.fixed_bandwidth, local_order=policy.local_order)
        template = KernelSpec(kernel=policy.kernel, bandwidth=1.0, local_order=policy.local_order)
        grid = list(policy.bandwidths) or bandwidth_grid()
        report = select_bandwidth(ds, grid, template)
        return KernelSpec(kernel=policy.kernel, bandwidth=report.selected_candidate.bandwidth, local_order=policy.local_order)


def _coverage(gamma_hat: np.ndarray, se: np.ndarray, truth: Truth) -> List[bool]:
    if truth.gamma_varies:
        return []
    crit = stats.norm.ppf(0.5 + COVERAGE_LEVEL / 2.0)
    return [bool(abs(g - t) <= crit * s) for g, t, s in zip(gamma_hat, truth.gamma, se)]


def _ase(curves: np.ndarray, truth: Truth) -> List[float]:
    return [average_squared_error(curves[:, l], truth.beta_at_sample[:, l]) for l in range(curves.shape[1])]


def run_method(plan: ReplicationPlan, method: SimMethod, ds: Dataset, truth: Truth, rep: int, cache: Dict) -> RepRecord:
    """Fit one method on one sample"""
    if method in (SimMethod.SPLINE, SimMethod.SPLINE_WEIGHTED):
        if "spline" not in cache:
            cache["spline"] = plan.spline_specs(ds)
        specs, per_block = cache["spline"]
        if method == SimMethod.SPLINE:
            result = fit(ds, specs, strict=False)
        else:
            result = fit_two_step_weighted(ds, specs, power_spec(plan.policy.variance_degree))
        se = result.standard_errors()
        return RepRecord(
            rep=rep,
            method=method,
            gamma_hat=result.gamma_hat.tolist(),
            std_errors=se.tolist(),
            ase_beta=_ase(beta_curves(result, ds.z, strict=False), truth),
            selected_k=sum(per_block),
            selected_k_per_block=per_block,
            covered=_coverage(result.gamma_hat, se, truth),
            efficiency_gap=efficiency_gap(result) if result.q else None,
        )

    ks = plan.kernel_spec(ds)
    result = profile_gamma(ds, ks)
    se = result.standard_errors()
    return RepRecord(
        rep=rep,
        method=method,
        gamma_hat=result.gamma_hat.tolist(),
        std_errors=se.tolist(),
        ase_beta=_ase(result.beta_at_sample, truth),
        selected_h=ks.bandwidth,
        covered=_coverage(result.gamma_hat, se, truth),
    )


def run_replications(plan: ReplicationPlan, indices: Sequence[int]) -> List[RepRecord]:
    """Run a chunk of replications; a failed fit is recorded, not raised"""
    children = np.random.SeedSequence(plan.seed).spawn(plan.reps)
    records = []
    for rep in indices:
        rng = np.random.default_rng(children[rep])
        ds, truth = generate(plan.spec, rng)
        cache: Dict = {}
        for method in plan.methods:
            try:
                records.append(run_method(plan, method, ds, truth, rep, cache))
            except PLVCError as e:
                logger.warning(f"Replication {rep} {method.value} failed: {e.message}")
                records.append(RepRecord(rep=rep, method=method, failure=f"{e.__class__.__name__}: {e.message}"))
    return records


def _selection_summary(values: List[float]) -> Dict[str, float]:
    if not values:
        return {}
    array = np.asarray(values, dtype=float)
    uniq, counts = np.unique(array, return_counts=True)
    return {
        "mean": float(array.mean()),
        "median": float(np.median(array)),
        "mode": float(uniq[np.argmax(counts)]),
        "min": float(array.min()),
        "max": float(array.max()),
    }


def aggregate(
    spec: DgpSpec,
    methods: Sequence[SimMethod],
    records: List[RepRecord],
    requested: int,
    truth_gamma: np.ndarray,
    seed: int,
    wall_clock: float,
) -> SimReport:
    """Reduce per-replication records into a SimReport"""
    records = sorted(records, key=lambda r: (r.rep, list(methods).index(r.method)))
    failed = sorted({r.rep for r in records if not r.ok})
    kept = [r for r in records if r.rep not in failed]
    reps = len({r.rep for r in kept})

    mse, mase, selection, coverage, gaps, variance = {}, {}, {}, {}, {}, {}
    for method in methods:
        mine = [r for r in kept if r.method == method]
        key = method.value
        if not mine:
            continue
        gammas = np.array([r.gamma_hat for r in mine])
        if gammas.size:
            mse[key] = mse_gamma(gammas, truth_gamma).tolist()
            variance[key] = np.var(gammas, axis=0).tolist()
        mase[key] = np.mean([r.ase_beta for r in mine], axis=0).tolist()
        if method == SimMethod.KERNEL:
            selection[key] = _selection_summary([r.selected_h for r in mine])
        else:
            selection[key] = _selection_summary([r.selected_k for r in mine])
            per_block = _selection_summary(
                [float(np.mean(r.selected_k_per_block)) for r in mine if r.selected_k_per_block]
            )
            selection[key].update({f"per_block_{name}": value for name, value in per_block.items()})
        if mine[0].covered:
            coverage[key] = np.mean([r.covered for r in mine], axis=0).tolist()
        gap_values = [r.efficiency_gap for r in mine if r.efficiency_gap is not None]
        if gap_values:
            gaps[key] = float(np.median(gap_values))

    valid = len(failed) <= MAX_FAILED_SHARE * requested
    if not valid:
        logger.error(f"{len(failed)} of {requested} replications failed; report flagged invalid")

    return SimReport(
        dgp=spec.which,
        n=spec.n,
        methods=list(methods),
        requested_reps=requested,
        reps=reps,
        failed_reps=failed,
        valid=valid,
        mse_gamma=mse,
        mase_beta=mase,
        selection=selection,
        coverage=coverage,
        efficiency_gap_median=gaps,
        gamma_variance=variance,
        wall_clock=wall_clock,
        seed=seed,
        records=records,
    )


class SweepPlan(ReplicationPlan):
    """Replications evaluated at every value of a fixed smoothing grid"""

    def __init__(self, spec: DgpSpec, method: SimMethod, values: Sequence[float], policy: SelectionPolicy, seed: int, reps: int):
        super().__init__(spec, [method], policy, seed, reps)
        self.method = method
        self.values = list(values)


def sweep_replications(plan: SweepPlan, indices: Sequence[int]) -> List[tuple]:
    """(rep, value index, gamma-hat, ASE per block, cv score, rss) or a failure marker"""
    children = np.random.SeedSequence(plan.seed).spawn(plan.reps)
    outcomes = []
    for rep in indices:
        ds, truth = generate(plan.spec, np.random.default_rng(children[rep]))
        for j, value in enumerate(plan.values):
            try:
                if plan.method == SimMethod.KERNEL:
                    ks = KernelSpec(kernel=plan.policy.kernel, bandwidth=value, local_order=plan.policy.local_order)
                    result = profile_gamma(ds, ks)
                    curves = result.beta_at_sample
                    cv_score, rss = bandwidth_scores(ds, ks)
                else:
                    specs = shared_specs(bspline_spec(ds.z, int(value), degree=plan.policy.spline_degree), ds.d)
                    result = fit(ds, specs, strict=False)
                    curves = beta_curves(result, ds.z, strict=False)
                    cv_score, rss = loo_scores(ds, specs)
                outcomes.append((rep, j, result.gamma_hat.tolist(), _ase(curves, truth), cv_score, rss))
            except PLVCError as e:
                logger.debug(f"Sweep replication {rep} value {value} failed: {e.message}")
                outcomes.append((rep, j, None, None, None, None))
    return outcomes


class SimulationService:
    """Runs replication studies and fixed-grid sweeps"""

    def __init__(self, workers: int = 1):
        self.workers = workers

    def _map(self, worker, plan, reps: int) -> list:
        indices = list(range(reps))
        if self.workers <= 1 or reps < 2:
            return worker(plan, indices)
        chunks = [indices[i::self.workers] for i in range(min(self.workers, reps))]
        with ProcessPoolExecutor(max_workers=len(chunks)) as executor:
            parts = list(executor.map(worker, [plan] * len(chunks), chunks))
        return [item for part in parts for item in part]

    def run_sim(
        self,
        spec: DgpSpec,
        methods: Sequence[SimMethod] = (SimMethod.SPLINE, SimMethod.KERNEL),
        reps: int = 100,
        policy: Optional[SelectionPolicy] = None,
    ) -> SimReport:
        """
        Replication study of one design

        Args:
            spec: Design, sample size and master seed
            methods: Estimators to compare
            reps: Number of replications (>= 1)
            policy: Smoothing selection settings

        Returns:
            SimReport; replications with any failed fit are excluded from the metrics
        """
        if reps < 1:
            raise ValueError("reps must be at least 1")
        methods = [SimMethod(m) for m in methods]
        policy = policy or SelectionPolicy()
        seed = spec.seed if spec.seed is not None else secrets.randbits(63)
        if spec.seed is None:
            logger.info(f"Generated simulation seed {seed}")

        logger.info(f"Simulating {spec.which.value} n={spec.n}: {reps} reps, methods {[m.value for m in methods]}")
        started = time.perf_counter()
        plan = ReplicationPlan(spec, methods, policy, seed, reps)
        records = self._map(run_replications, plan, reps)

        report = aggregate(spec, methods, records, reps, np.array(TRUE_GAMMA[spec.which]), seed, time.perf_counter() - started)
        logger.info(f"Finished {report.reps}/{reps} replications in {report.wall_clock:.1f}s")
        return report

    def rate_diagnostic(
        self,
        which: DgpKind,
        ns: Sequence[int] = (100, 200, 400),
        reps: int = 200,
        fixed_k: int = 8,
        seed: Optional[int] = None,
    ) -> Dict[int, List[float]]:
        """
        Median in-sample ASE of every coefficient curve at a fixed basis, per n

        The spline dimension is held at ``fixed_k`` so the bias stays put and
        the medians fall with n at the series rate.
        """
        seed = seed if seed is not None else secrets.randbits(63)
        policy = SelectionPolicy(fixed_k=fixed_k)
        children = np.random.SeedSequence(seed).spawn(len(ns))
        medians = {}
        for n, child in zip(ns, children):
            spec = DgpSpec(which=which, n=n, seed=int(child.generate_state(1)[0]))
            report = self.run_sim(spec, [SimMethod.SPLINE], reps=reps, policy=policy)
            ase = np.array([r.ase_beta for r in report.records if r.ok])
            medians[int(n)] = np.median(ase, axis=0).tolist()
        logger.info(f"Rate diagnostic {which.value} k={fixed_k}: {medians}")
        return medians

    def run_sweep(
        self,
        spec: DgpSpec,
        method: SimMethod,
        values: Sequence[float],
        reps: int = 100,
        policy: Optional[SelectionPolicy] = None,
    ) -> SweepReport:
        """
        MSE, MASE, mean CV score and mean RSS at every fixed k or h

        Args:
            spec: Design, sample size and master seed
            method: SPLINE (values are per-block k) or KERNEL (values are h)
            values: Fixed smoothing grid
            reps: Replications per grid value
        """
        method = SimMethod(method)
        if method == SimMethod.SPLINE_WEIGHTED:
            raise ValueError("sweeps support the spline and kernel methods")
        policy = policy or SelectionPolicy()
        if method == SimMethod.SPLINE and any(int(v) < policy.spline_degree + 1 for v in values):
            raise ValueError(f"per-block k must be at least {policy.spline_degree + 1}")
        seed = spec.seed if spec.seed is not None else secrets.randbits(63)
        plan = SweepPlan(spec, method, values, policy, seed, reps)
        outcomes = sorted(self._map(sweep_replications, plan, reps), key=lambda o: (o[0], o[1]))

        points, failures = [], {}
        for j, value in enumerate(plan.values):
            ok = [o for o in outcomes if o[1] == j and o[2] is not None]
            failures[str(value)] = sum(1 for o in outcomes if o[1] == j and o[2] is None)
            if not ok:
                continue
            points.append(SweepPoint(
                method=method,
                value=float(value),
                reps=len(ok),
                mse_gamma=mse_gamma([o[2] for o in ok], TRUE_GAMMA[spec.which]).tolist(),
                mase_beta=np.mean([o[3] for o in ok], axis=0).tolist(),
                mean_cv_score=float(np.mean([o[4] for o in ok])),
                mean_rss=float(np.mean([o[5] for o in ok])),
            ))
        logger.info(f"Sweep {method.value} over {len(plan.values)} values: {len(points)} evaluable")
        return SweepReport(dgp=spec.which, n=spec.n, seed=seed, points=points, failures=failures)


# Global service instance
_simulation_service: Optional[SimulationService] = None


def get_simulation_service(workers: Optional[int] = None) -> SimulationService:
    """Get global simulation service instance"""
    global _simulation_service
    if _simulation_service is None:
        from ..utils.config import get_config
        _simulation_service = SimulationService(workers=get_config().THREADS)
    if workers is not None:
        _simulation_service.workers = workers
    return _simulation_service


def run_sim(spec: DgpSpec, methods: Sequence[SimMethod] = (SimMethod.SPLINE, SimMethod.KERNEL), reps: int = 100,
            policy: Optional[SelectionPolicy] = None) -> SimReport:
    """Module-level entry point; see SimulationService.run_sim"""
    return get_simulation_service().run_sim(spec, methods=methods, reps=reps, policy=policy)


def run_sweep(spec: DgpSpec, method: SimMethod, values: Sequence[float], reps: int = 100,
              policy: Optional[SelectionPolicy] = None) -> SweepReport:
    """Module-level entry point; see SimulationService.run_sweep"""
    return get_simulation_service().run_sweep(spec, method, values, reps=reps, policy=policy)
