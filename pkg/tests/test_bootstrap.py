"""
Wild bootstrap specification test
"""
import numpy as np
import pytest

from plvc.basis.splines import bspline_spec
from plvc.design.dataset import make_dataset
from plvc.design.regressors import shared_specs
from plvc.models.results import ModelClass
from plvc.services.bootstrap_service import (
    MAMMEN_HIGH,
    MAMMEN_LOW,
    BootstrapPlan,
    SpecificationTestService,
    fit_model_class,
    rss_stat,
    wild_multipliers,
)
from plvc.utils.errors import BootstrapError, ConfigError, DegenerateFitError

PARAMETRIC = ModelClass(kind="parametric_linear")
PLVC = ModelClass(kind="plvc")
FULL_VC = ModelClass(kind="full_vc")


@pytest.fixture
def small_sample(dgp1_sample):
    ds, _ = dgp1_sample
    return ds, shared_specs(bspline_spec(ds.z, 5), ds.d)


@pytest.mark.unit
class TestStatistic:
    def test_examples(self):
        assert rss_stat(12.0, 10.0) == pytest.approx(0.2)
        assert rss_stat(10.0, 10.0) == 0.0

    def test_zero_rss(self):
        with pytest.raises(DegenerateFitError) as exc_info:
            rss_stat(1.0, 0.0)
        assert exc_info.value.details["rss"] == 0.0


@pytest.mark.unit
class TestMultipliers:
    def test_mammen_moments(self):
        xi = wild_multipliers(1_000_000, np.random.default_rng(7))
        assert abs(np.mean(xi)) < 0.005
        assert abs(np.mean(xi ** 2) - 1.0) < 0.005
        assert abs(np.mean(xi ** 3) - 1.0) < 0.01

    def test_two_points(self):
        xi = wild_multipliers(1000, np.random.default_rng(3))
        np.testing.assert_allclose(sorted(set(xi)), [MAMMEN_LOW, MAMMEN_HIGH])

    def test_deterministic(self):
        a = wild_multipliers(50, np.random.default_rng(11))
        b = wild_multipliers(50, np.random.default_rng(11))
        np.testing.assert_array_equal(a, b)

    def test_rademacher(self):
        xi = wild_multipliers(1000, np.random.default_rng(5), kind="rademacher")
        assert set(xi) == {-1.0, 1.0}

    def test_unknown_law(self):
        with pytest.raises(ValueError):
            wild_multipliers(10, np.random.default_rng(0), kind="normal")


@pytest.mark.unit
class TestModelClasses:
    def test_nesting(self):
        assert PARAMETRIC.nested_in(PLVC)
        assert PLVC.nested_in(FULL_VC)
        assert not FULL_VC.nested_in(PLVC)
        assert not PLVC.nested_in(PLVC)

    def test_rss_ordering(self, small_sample):
        ds, specs = small_sample
        rss = [fit_model_class(ds, cls, specs)[2] for cls in (PARAMETRIC, PLVC, FULL_VC)]
        assert rss[0] >= rss[1] * (1 - 1e-10)
        assert rss[1] >= rss[2] * (1 - 1e-10)

    def test_fitted_plus_residuals(self, small_sample):
        ds, specs = small_sample
        fitted, residuals, rss = fit_model_class(ds, PLVC, specs)
        np.testing.assert_allclose(fitted + residuals, ds.y)
        assert rss == pytest.approx(float(residuals @ residuals))


@pytest.mark.unit
class TestConfiguration:
    def test_not_nested(self, small_sample):
        ds, specs = small_sample
        service = SpecificationTestService()
        with pytest.raises(ConfigError):
            service.wild_bootstrap_test(ds, PLVC, PLVC, B=99, seed=1, specs=specs)
        with pytest.raises(ConfigError):
            service.wild_bootstrap_test(ds, FULL_VC, PLVC, B=99, seed=1, specs=specs)

    def test_too_few_replicates(self, small_sample):
        ds, specs = small_sample
        with pytest.raises(ConfigError) as exc_info:
            SpecificationTestService().wild_bootstrap_test(ds, PLVC, FULL_VC, B=50, seed=1, specs=specs)
        assert exc_info.value.details["B"] == 50


@pytest.mark.integration
class TestWildBootstrap:
    def test_p_value(self, small_sample):
        ds, specs = small_sample
        result = SpecificationTestService().wild_bootstrap_test(ds, PLVC, FULL_VC, B=99, seed=42, specs=specs)
        stats = result.bootstrap_stats
        assert stats.size == 99
        assert result.dropped == 0
        assert result.statistic >= 0
        expected = (1 + np.sum(stats >= result.statistic)) / (stats.size + 1)
        assert result.p_value == pytest.approx(expected)
        assert 0 < result.p_value <= 1
        assert result.seed == 42

    def test_deterministic(self, small_sample):
        ds, specs = small_sample
        service = SpecificationTestService()
        first = service.wild_bootstrap_test(ds, PLVC, FULL_VC, B=99, seed=9, specs=specs)
        second = service.wild_bootstrap_test(ds, PLVC, FULL_VC, B=99, seed=9, specs=specs)
        np.testing.assert_array_equal(first.bootstrap_stats, second.bootstrap_stats)
        assert first.p_value == second.p_value

    def test_workers_do_not_change_result(self, small_sample):
        ds, specs = small_sample
        serial = SpecificationTestService(workers=1).wild_bootstrap_test(ds, PLVC, FULL_VC, B=99, seed=5, specs=specs)
        pooled = SpecificationTestService(workers=2).wild_bootstrap_test(ds, PLVC, FULL_VC, B=99, seed=5, specs=specs)
        np.testing.assert_array_equal(serial.bootstrap_stats, pooled.bootstrap_stats)
        assert serial.p_value == pooled.p_value

    def test_parametric_null_rejected_for_varying_curve(self, rng):
        n = 150
        z = rng.uniform(0.0, 2.0, n)
        w = rng.uniform(0.0, 2.0, n)
        x = rng.uniform(0.0, 2.0, n)
        y = 0.5 * w + 3.0 * x * z ** 2 + 0.1 * rng.standard_normal(n)
        ds = make_dataset(y, w, x, z)
        specs = shared_specs(bspline_spec(z, 5), ds.d)
        result = SpecificationTestService().wild_bootstrap_test(ds, PARAMETRIC, PLVC, B=99, seed=3, specs=specs)
        assert result.p_value == pytest.approx(0.01)

    def test_specs_selected_when_absent(self, dgp1_sample):
        ds, _ = dgp1_sample
        result = SpecificationTestService().wild_bootstrap_test(ds, PLVC, FULL_VC, B=99, seed=2)
        assert len(result.specs) == ds.d


def _failing_every(period):
    original = BootstrapPlan.replicate

    def replicate(self, b, seed_sequence):
        if b % period == 0:
            raise DegenerateFitError("RSS is zero", details={"b": b})
        return original(self, b, seed_sequence)
    return replicate


@pytest.mark.integration
class TestDroppedReplicates:
    def test_few_failures_are_dropped(self, small_sample, monkeypatch):
        ds, specs = small_sample
        monkeypatch.setattr(BootstrapPlan, "replicate", _failing_every(50))
        result = SpecificationTestService().wild_bootstrap_test(ds, PLVC, FULL_VC, B=99, seed=4, specs=specs)
        assert result.dropped == 2
        assert result.bootstrap_stats.size == 97
        expected = (1 + np.sum(result.bootstrap_stats >= result.statistic)) / 98
        assert result.p_value == pytest.approx(expected)

    def test_too_many_failures_raise(self, small_sample, monkeypatch):
        ds, specs = small_sample
        monkeypatch.setattr(BootstrapPlan, "replicate", _failing_every(10))
        with pytest.raises(BootstrapError) as exc_info:
            SpecificationTestService().wild_bootstrap_test(ds, PLVC, FULL_VC, B=99, seed=4, specs=specs)
        assert exc_info.value.details == {"dropped": 10, "B": 99}
