"""
Subcommand implementations

Each command takes a validated RunConfig, writes its outputs under
``config.out`` and returns the written paths.
"""
import secrets
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd

from ..basis.splines import bspline_spec, clamp_counter, power_spec
from ..design.dataset import read_dataset
from ..design.regressors import shared_specs
from ..estimation.kernel import bandwidth_grid, kernel_beta_curve, profile_gamma, select_bandwidth
from ..estimation.series import (
    beta_curves, estimate_variance_function, fit, fit_weighted, gamma_summary,
)
from ..models.basis import BasisSpec
from ..models.config import RunConfig
from ..models.data import Dataset
from ..models.results import CvReport, KernelSpec, ModelClass
from ..models.simulation import DgpSpec, SelectionPolicy, SimMethod
from ..selection.cv import cv_curve, power_grid, select_basis, spline_grid
from ..services.bootstrap_service import MIN_REPLICATES, get_specification_test_service
from ..services.simulation_service import get_simulation_service
from ..utils.config import get_config
from ..utils.errors import ConfigError, ReportInvalidError
from ..utils.logger import setup_logger
from .io import provenance, write_csv, write_json

logger = setup_logger(__name__)


def _workers(config: RunConfig) -> int:
    return config.threads or get_config().THREADS


def resolve_seed(config: RunConfig) -> int:
    """Config seed, or a fresh one that is logged and recorded"""
    if config.seed is not None:
        return config.seed
    seed = secrets.randbits(63)
    logger.info(f"Generated seed {seed}")
    return seed


def _out_dir(config: RunConfig) -> Path:
    return Path(config.out)


def load_data(config: RunConfig) -> Dataset:
    if not config.data:
        raise ConfigError("No dataset given (use --data or the config 'data' key)")
    roles = config.columns
    return read_dataset(config.data, roles.response, roles.linear, roles.varying, roles.index)


def candidate_grid(config: RunConfig, ds: Dataset) -> List[Tuple[BasisSpec, ...]]:
    """Selection grid described by the basis section"""
    basis = config.basis
    if basis.family == "power":
        return power_grid(ds, basis.power_degrees)
    return spline_grid(ds, ks=basis.ks, degrees=basis.cv_degrees, per_block=basis.per_block,
                       lo=basis.knot_lo, hi=basis.knot_hi)


def fixed_specs(config: RunConfig, ds: Dataset) -> Optional[Tuple[BasisSpec, ...]]:
    """Specs pinned by the config, or None when CV should choose"""
    basis = config.basis
    if basis.family == "bspline" and basis.fixed_k is not None:
        return shared_specs(bspline_spec(ds.z, basis.fixed_k, degree=basis.degree, lo=basis.knot_lo, hi=basis.knot_hi), ds.d)
    if basis.family == "power" and basis.fixed_power_degree is not None:
        return shared_specs(power_spec(basis.fixed_power_degree), ds.d)
    return None


def resolve_specs(config: RunConfig, ds: Dataset) -> Tuple[Tuple[BasisSpec, ...], Optional[CvReport]]:
    specs = fixed_specs(config, ds)
    if specs is not None:
        return specs, None
    grid = candidate_grid(config, ds)
    report = select_basis(ds, grid, workers=_workers(config), strict=config.strict)
    return tuple(grid[report.selected]), report


def bandwidths(config: RunConfig) -> List[float]:
    kernel = config.kernel
    if kernel.bandwidths:
        return list(kernel.bandwidths)
    return bandwidth_grid(kernel.h_lo, kernel.h_hi, kernel.num)


def resolve_kernel(config: RunConfig, ds: Dataset) -> Tuple[KernelSpec, Optional[CvReport]]:
    kernel = config.kernel
    if kernel.bandwidth is not None:
        return KernelSpec(kernel=kernel.kernel, bandwidth=kernel.bandwidth, local_order=kernel.local_order), None
    template = KernelSpec(kernel=kernel.kernel, bandwidth=1.0, local_order=kernel.local_order)
    report = select_bandwidth(ds, bandwidths(config), template, workers=_workers(config))
    h = report.selected_candidate.bandwidth
    return KernelSpec(kernel=kernel.kernel, bandwidth=h, local_order=kernel.local_order), report


def _selection_record(report: Optional[CvReport]) -> Optional[dict]:
    if report is None:
        return None
    return {
        "selected": report.selected_candidate.label,
        "cv_score": report.best_score,
        "ties": [report.candidates[i].label for i in report.ties],
        "non_evaluable": len(report.failures),
    }


def _curve_frame(ds: Dataset, z_grid: np.ndarray, curves: np.ndarray, gamma: np.ndarray, with_sum: bool) -> pd.DataFrame:
    frame = pd.DataFrame({ds.index_label: z_grid})
    for l, label in enumerate(ds.varying_labels):
        frame[f"beta_{label}"] = curves[:, l]
    if with_sum:
        frame["sum_curve"] = curves[:, 1:].sum(axis=1) + float(np.sum(gamma))
    return frame


def cmd_fit(config: RunConfig) -> List[Path]:
    """
    Fit the model and write fit.json and beta_curves.csv

    fit.json carries gamma-hat with standard errors sqrt(Sigma_jj / n) and
    t-statistics, R^2, RSS and the smoothing choice; beta_curves.csv carries
    every coefficient curve on an evenly spaced grid over the range of z.
    """
    ds = load_data(config)
    out = _out_dir(config)
    z_grid = np.linspace(float(ds.z.min()), float(ds.z.max()), config.grid_points)
    record = {"provenance": provenance(config, "fit", resolve_seed(config)), "method": config.method, "n": ds.n}
    clamp_counter.reset()

    if config.method == "kernel":
        ks, report = resolve_kernel(config, ds)
        result = profile_gamma(ds, ks)
        residuals = ds.y - ds.w @ result.gamma_hat - np.sum(ds.x * result.beta_at_sample, axis=1)
        rss = float(residuals @ residuals)
        tss = float(np.sum((ds.y - ds.y.mean()) ** 2))
        se, t = result.standard_errors(), result.t_statistics()
        record.update({
            "gamma": [
                {"name": name, "estimate": float(g), "std_error": float(s), "t_stat": float(tv)}
                for name, g, s, tv in zip(ds.linear_labels, result.gamma_hat, se, t)
            ],
            "r_squared": 1.0 - rss / tss if tss > 0 else 1.0,
            "rss": rss,
            "kernel": ks.model_dump(),
            "fallback_points": len(result.fallback_points),
        })
        curves = kernel_beta_curve(result, z_grid)
        gamma = result.gamma_hat
    else:
        specs, report = resolve_specs(config, ds)
        result = fit(ds, specs, dof_correction=config.dof_correction, strict=config.strict)
        if config.method == "spline_weighted":
            vm = estimate_variance_function(result, power_spec(config.basis.variance_degree))
            result = fit_weighted(ds, specs, vm, dof_correction=config.dof_correction, strict=config.strict)
            record["variance_clamp"] = [vm.floor, vm.cap]
        record.update({
            "gamma": gamma_summary(result),
            "r_squared": result.r_squared,
            "rss": result.rss,
            "sigma2": result.sigma2_hat,
            "rank": result.rank,
            "basis": result.selected_basis(),
        })
        curves = beta_curves(result, z_grid, strict=False)
        gamma = result.gamma_hat

    record["selection"] = _selection_record(report)
    record["clamped_points"] = clamp_counter.count
    with_sum = config.report_sum_curve and ds.d > 1
    frame = _curve_frame(ds, z_grid, curves, gamma, with_sum)
    logger.info(f"Fitted {config.method} on n={ds.n}")
    return [write_json(record, out / "fit.json"), write_csv(frame, out / "beta_curves.csv")]


def cmd_cv(config: RunConfig) -> List[Path]:
    """Write the full CV curve of the configured grid to cv_curve.csv"""
    ds = load_data(config)
    if config.method == "kernel":
        kernel = config.kernel
        template = KernelSpec(kernel=kernel.kernel, bandwidth=1.0, local_order=kernel.local_order)
        frame = cv_curve(ds, bandwidths(config), kernel_template=template, workers=_workers(config))
    else:
        frame = cv_curve(ds, candidate_grid(config, ds), workers=_workers(config))
    return [write_csv(frame, _out_dir(config) / "cv_curve.csv")]


def check_test_config(config: RunConfig) -> Tuple[ModelClass, ModelClass]:
    """Nesting and replicate count are checked before any data is read"""
    null, alt = ModelClass(kind=config.test.null), ModelClass(kind=config.test.alt)
    if not null.nested_in(alt):
        raise ConfigError(
            f"Null class '{null.kind}' must be strictly nested in alternative '{alt.kind}'",
            details={"null": null.kind, "alt": alt.kind},
        )
    if config.test.B < MIN_REPLICATES:
        raise ConfigError(f"B={config.test.B} below the minimum of {MIN_REPLICATES}", details={"B": config.test.B})
    return null, alt


def cmd_test(config: RunConfig) -> List[Path]:
    """Run the wild bootstrap specification test and write test.json"""
    null, alt = check_test_config(config)
    ds = load_data(config)
    seed = resolve_seed(config)

    specs = fixed_specs(config, ds)
    grid = candidate_grid(config, ds) if specs is None or config.test.reselect else None
    service = get_specification_test_service(workers=_workers(config))
    result = service.wild_bootstrap_test(
        ds, null, alt,
        B=config.test.B,
        seed=seed,
        specs=specs,
        multiplier=config.test.multiplier,
        reselect=config.test.reselect,
        grid=grid,
    )
    record = {"provenance": provenance(config, "test", seed), **result.model_dump(mode="python")}
    return [write_json(record, _out_dir(config) / "test.json")]


def selection_policy(config: RunConfig) -> SelectionPolicy:
    return SelectionPolicy(
        spline_ks=tuple(config.basis.ks),
        spline_degree=config.basis.degree,
        fixed_k=config.basis.fixed_k,
        bandwidths=tuple(bandwidths(config)),
        fixed_bandwidth=config.kernel.bandwidth,
        kernel=config.kernel.kernel,
        local_order=config.kernel.local_order,
        variance_degree=config.basis.variance_degree,
    )


def cmd_simulate(config: RunConfig) -> List[Path]:
    """
    Run the configured Monte Carlo studies

    Writes sim.json (one report per design and sample size) and tables.csv
    with rows (dgp, method, n, metric, value); sweep.csv when a sweep is set.
    """
    sim = config.simulate
    seed = resolve_seed(config)
    policy = selection_policy(config)
    service = get_simulation_service(workers=_workers(config))
    out = _out_dir(config)

    studies = [(dgp, n) for dgp in sim.dgps for n in sim.ns]
    children = np.random.SeedSequence(seed).spawn(len(studies))
    reports, rows, sweep_rows = [], [], []
    for (dgp, n), child in zip(studies, children):
        study_seed = int(child.generate_state(1)[0])
        spec = DgpSpec(which=dgp, n=n, seed=study_seed, noise_sd=sim.noise_sd)
        report = service.run_sim(spec, methods=sim.methods, reps=sim.reps, policy=policy)
        reports.append(report)
        rows.extend(report.table_rows())
        if sim.sweep is not None and sim.sweep.values:
            sweep = service.run_sweep(spec, SimMethod(sim.sweep.method), sim.sweep.values, reps=sim.sweep.reps, policy=policy)
            sweep_rows.extend({"dgp": dgp.value, "n": n, **row} for row in sweep.frame_rows())

    exclude = None if sim.include_records else {"records"}
    record = {
        "provenance": provenance(config, "simulate", seed),
        "seed": seed,
        "studies": [report.model_dump(mode="json", exclude=exclude) for report in reports],
    }
    written = [
        write_json(record, out / "sim.json"),
        write_csv(pd.DataFrame(rows, columns=["dgp", "method", "n", "metric", "value"]), out / "tables.csv"),
    ]
    if sweep_rows:
        written.append(write_csv(pd.DataFrame(sweep_rows), out / "sweep.csv"))

    invalid = [f"{r.dgp.value} n={r.n}" for r in reports if not r.valid]
    if invalid:
        raise ReportInvalidError(
            f"Too many failed replications in {', '.join(invalid)}",
            details={"studies": invalid},
        )
    return written


def cmd_basis_dump(config: RunConfig) -> List[Path]:
    """
    Write raw basis values on a grid to basis.csv

    Uses the pinned basis when the config fixes one, otherwise the basis CV
    selects on the dataset. The grid spans the knot range.
    """
    basis = config.basis
    if config.data:
        ds = load_data(config)
        spec = resolve_specs(config, ds)[0][0]
        lo = basis.knot_lo if basis.knot_lo is not None else float(ds.z.min())
        hi = basis.knot_hi if basis.knot_hi is not None else float(ds.z.max())
    else:
        if basis.knot_lo is None or basis.knot_hi is None:
            raise ConfigError("basis-dump without data needs basis.knot_lo and basis.knot_hi")
        lo, hi = basis.knot_lo, basis.knot_hi
        if basis.family == "bspline" and basis.fixed_k is not None:
            spec = bspline_spec([lo, hi], basis.fixed_k, degree=basis.degree)
        elif basis.family == "power" and basis.fixed_power_degree is not None:
            spec = power_spec(basis.fixed_power_degree)
        else:
            raise ConfigError("basis-dump without data needs basis.fixed_k or basis.fixed_power_degree")

    if spec.knots is not None:
        lo, hi = spec.knots.lo, spec.knots.hi
    z_grid = np.linspace(lo, hi, config.grid_points)
    values = spec.evaluate(z_grid, strict=False)
    frame = pd.DataFrame(values, columns=[f"b{j}" for j in range(spec.dimension)])
    frame.insert(0, "z", z_grid)
    return [write_csv(frame, _out_dir(config) / "basis.csv")]


COMMANDS = {
    "fit": cmd_fit,
    "cv": cmd_cv,
    "test": cmd_test,
    "simulate": cmd_simulate,
    "basis-dump": cmd_basis_dump,
}
