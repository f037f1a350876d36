"""
Series estimator tests
"""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import linalg

from plvc.basis.splines import bspline_spec, power_spec
from plvc.design.dataset import make_dataset
from plvc.design.regressors import build_design, shared_specs
from plvc.estimation.projection import SeriesProjector, joint_least_squares, project
from plvc.estimation.series import (
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
from plvc.models.results import VarianceModel
from plvc.utils.errors import CollinearityError


def random_instance(seed: int, n: int = 200, q: int = 2, k: int = 8):
    rng = np.random.default_rng(seed)
    z = rng.uniform(0.0, 1.0, n)
    w = rng.normal(size=(n, q))
    x = rng.normal(size=n)
    y = w @ np.arange(1.0, q + 1.0) + np.sin(3 * z) + x * z + rng.normal(scale=0.3, size=n)
    ds = make_dataset(y, w, x, z)
    return ds, shared_specs(bspline_spec(z, k), ds.d)


@pytest.mark.unit
class TestProjection:
    @settings(max_examples=20, deadline=None)
    @given(seed=st.integers(0, 2 ** 32 - 1))
    def test_idempotent(self, seed):
        rng = np.random.default_rng(seed)
        p = rng.normal(size=(40, 7))
        a = rng.normal(size=(40, 3))
        ma, rank = project(p, a)
        again, _ = project(p, ma)
        assert rank == 7
        np.testing.assert_allclose(again, ma, atol=1e-10)

    def test_redundant_columns_dropped(self, rng):
        base = rng.normal(size=(30, 3))
        p = np.hstack([base, base[:, [1]]])
        projector = SeriesProjector(p)
        assert projector.rank == 3
        assert len(projector.dropped_columns) == 1
        coef = projector.solve(rng.normal(size=30))
        assert np.count_nonzero(coef) == 3

    def test_leverage_sums_to_rank(self, rng):
        projector = SeriesProjector(rng.normal(size=(25, 4)))
        assert projector.leverage().sum() == pytest.approx(4.0)

    def test_empty_design(self):
        projector = SeriesProjector(np.zeros((5, 0)))
        np.testing.assert_array_equal(projector.project(np.ones(5)), 0.0)


@pytest.mark.unit
class TestFit:
    def test_noiseless_recovers_gamma(self, noiseless_dataset):
        ds = noiseless_dataset
        result = fit(ds, shared_specs(bspline_spec(ds.z, 6), ds.d))
        assert result.gamma_hat[0] == pytest.approx(0.5, abs=1e-8)
        assert result.r_squared == pytest.approx(1.0, abs=1e-10)
        grid = np.linspace(ds.z.min(), ds.z.max(), 11)
        np.testing.assert_allclose(beta_at(result, 0, grid), 1.0 + grid ** 2, atol=1e-7)
        np.testing.assert_allclose(beta_at(result, 1, grid), 2.0 - grid, atol=1e-7)

    @settings(max_examples=100, deadline=None)
    @given(seed=st.integers(0, 2 ** 32 - 1), k=st.integers(4, 12))
    def test_partitioned_matches_joint_least_squares(self, seed, k):
        ds, specs = random_instance(seed, k=k)
        result = fit(ds, specs)
        p = build_design(ds, specs).p
        gamma, alpha = joint_least_squares(ds.y, ds.w, p)
        np.testing.assert_allclose(result.gamma_hat, gamma, rtol=1e-10, atol=1e-10)
        np.testing.assert_allclose(result.alpha_hat, alpha, rtol=1e-10, atol=1e-10)
        np.testing.assert_allclose(result.fitted, ds.w @ gamma + p @ alpha, rtol=1e-10, atol=1e-10)

    def test_rank_deficient_design(self, rng):
        n = 80
        z = rng.uniform(size=n)
        x = rng.normal(size=n)
        w = rng.normal(size=n)
        y = 0.3 * w + x * z + rng.normal(scale=0.1, size=n)
        # the same varying regressor twice
        ds = make_dataset(y, w, np.column_stack([x, x]), z)
        specs = shared_specs(bspline_spec(z, 5), ds.d)
        result = fit(ds, specs)
        assert result.rank < result.total_dimension
        p = build_design(ds, specs).p
        coef, _, _, _ = linalg.lstsq(np.hstack([ds.w, p]), ds.y)
        np.testing.assert_allclose(result.fitted, np.hstack([ds.w, p]) @ coef, atol=1e-8)

    def test_linear_column_in_varying_space(self, rng):
        n = 60
        z = rng.uniform(size=n)
        x = rng.normal(size=n)
        ds = make_dataset(rng.normal(size=n), np.column_stack([rng.normal(size=n), x]), x, z,
                          linear_labels=["w_ok", "w_dup"])
        with pytest.raises(CollinearityError) as exc:
            fit(ds, shared_specs(bspline_spec(z, 5), ds.d))
        assert exc.value.details["columns"] == ["w_dup"]

    def test_degrees_of_freedom(self, dgp1_sample):
        ds, _ = dgp1_sample
        specs = shared_specs(bspline_spec(ds.z, 7), ds.d)
        corrected = fit(ds, specs)
        plain = fit(ds, specs, dof_correction=False)
        assert corrected.sigma2_hat == pytest.approx(corrected.rss / (ds.n - ds.q - corrected.rank))
        assert plain.sigma2_hat == pytest.approx(plain.rss / ds.n)

    def test_standard_errors_and_t(self, dgp1_sample):
        ds, _ = dgp1_sample
        result = fit(ds, shared_specs(bspline_spec(ds.z, 7), ds.d))
        se = result.standard_errors()
        np.testing.assert_allclose(se, np.sqrt(np.diag(result.sigma_hat) / ds.n))
        np.testing.assert_allclose(result.t_statistics(), result.gamma_hat / se)
        summary = gamma_summary(result)
        assert summary[0]["name"] == "w"
        assert summary[0]["t_stat"] == pytest.approx(summary[0]["estimate"] / summary[0]["std_error"])

    def test_sandwich_and_homoskedastic_forms(self, dgp1_sample):
        ds, _ = dgp1_sample
        result = fit(ds, shared_specs(bspline_spec(ds.z, 7), ds.d))
        phi_inv = np.linalg.inv(result.phi_hat)
        np.testing.assert_allclose(result.sigma_hat, phi_inv @ result.omega_hat @ phi_inv, rtol=1e-10)
        np.testing.assert_allclose(gamma_covariance(result), result.sigma_hat, rtol=1e-12)
        np.testing.assert_allclose(homoskedastic_covariance(result), result.sigma2_hat * phi_inv, rtol=1e-12)
        assert efficiency_gap(result) >= 0.0

    def test_gamma_close_to_truth(self, dgp1_sample):
        ds, truth = dgp1_sample
        result = fit(ds, shared_specs(bspline_spec(ds.z, 10), ds.d))
        assert abs(result.gamma_hat[0] - truth.gamma[0]) < 5 * result.standard_errors()[0]

    def test_beta_curves_shape_and_bad_index(self, dgp1_sample):
        ds, _ = dgp1_sample
        result = fit(ds, shared_specs(bspline_spec(ds.z, 6), ds.d))
        assert beta_curves(result, np.linspace(0.1, 1.9, 9)).shape == (9, 2)
        with pytest.raises(IndexError):
            beta_at(result, 2, 0.5)

    def test_intercept_only_without_linear_block(self, rng):
        n = 50
        z = rng.uniform(size=n)
        ds = make_dataset(np.sin(z), None, None, z)
        result = fit(ds, (bspline_spec(z, 8),))
        assert result.q == 0
        assert result.rss < 1e-6


@pytest.mark.unit
class TestWeighted:
    def test_constant_variance_leaves_gamma_unchanged(self, dgp1_sample):
        ds, _ = dgp1_sample
        specs = shared_specs(bspline_spec(ds.z, 7), ds.d)
        vm = VarianceModel(spec=power_spec(0), coefficients=[4.0], floor=1e-8, cap=10.0)
        weighted = fit_weighted(ds, specs, vm)
        plain = fit(ds, specs)
        np.testing.assert_allclose(weighted.gamma_hat, plain.gamma_hat, rtol=1e-10)
        np.testing.assert_allclose(weighted.weights, 2.0)

    def test_variance_function_is_clamped(self, dgp1_sample):
        ds, _ = dgp1_sample
        result = fit(ds, shared_specs(bspline_spec(ds.z, 7), ds.d))
        vm = estimate_variance_function(result, power_spec(2))
        squared = result.residuals ** 2
        assert vm.floor == pytest.approx(max(np.quantile(squared, 0.05), 1e-8))
        assert vm.cap >= vm.floor
        values = vm(np.linspace(-5.0, 5.0, 50))
        assert np.all(values >= vm.floor) and np.all(values <= vm.cap)

    def test_variance_model_bounds_validated(self):
        with pytest.raises(ValueError):
            VarianceModel(spec=power_spec(0), coefficients=[1.0], floor=2.0, cap=1.0)

    def test_two_step(self, dgp1_sample):
        ds, truth = dgp1_sample
        result = fit_two_step_weighted(ds, shared_specs(bspline_spec(ds.z, 7), ds.d), power_spec(2))
        assert result.weights is not None
        assert abs(result.gamma_hat[0] - truth.gamma[0]) < 0.3


def _with_response(ds, y, w=None):
    return make_dataset(y, ds.w if w is None else w, ds.x[:, 1:], ds.z)


@pytest.mark.unit
class TestInvariances:
    def test_response_scale_equivariance(self):
        ds, specs = random_instance(11)
        base = fit(ds, specs)
        scaled = fit(_with_response(ds, 3.0 * ds.y), specs)
        np.testing.assert_allclose(scaled.gamma_hat, 3.0 * base.gamma_hat, rtol=1e-10)
        grid = np.linspace(0.05, 0.95, 7)
        np.testing.assert_allclose(beta_curves(scaled, grid), 3.0 * beta_curves(base, grid), rtol=1e-9, atol=1e-10)

    def test_linear_block_scale(self):
        ds, specs = random_instance(12)
        base = fit(ds, specs)
        scaled = fit(_with_response(ds, ds.y, w=2.0 * ds.w), specs)
        np.testing.assert_allclose(scaled.gamma_hat, base.gamma_hat / 2.0, rtol=1e-10)
        grid = np.linspace(0.05, 0.95, 7)
        np.testing.assert_allclose(beta_curves(scaled, grid), beta_curves(base, grid), rtol=1e-9, atol=1e-10)

    def test_gamma_unchanged_by_series_shift(self, rng):
        ds, specs = random_instance(13)
        p = build_design(ds, specs).p
        delta = rng.normal(size=p.shape[1])
        base = fit(ds, specs)
        shifted = fit(_with_response(ds, ds.y + p @ delta), specs)
        np.testing.assert_allclose(shifted.gamma_hat, base.gamma_hat, rtol=1e-10, atol=1e-10)
        np.testing.assert_allclose(shifted.alpha_hat, base.alpha_hat + delta, rtol=1e-9, atol=1e-9)

    def test_residuals_orthogonal_to_regressors(self):
        ds, specs = random_instance(14, q=3)
        result = fit(ds, specs)
        p = build_design(ds, specs).p
        scale = np.linalg.norm(result.residuals)
        np.testing.assert_allclose(ds.w.T @ result.residuals, 0.0, atol=1e-10 * scale * np.linalg.norm(ds.w))
        np.testing.assert_allclose(p.T @ result.residuals, 0.0, atol=1e-10 * scale * np.linalg.norm(p))
