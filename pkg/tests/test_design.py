"""
Dataset validation and design assembly tests
"""
import numpy as np
import pandas as pd
import pytest

from plvc.basis.splines import bspline_spec, power_spec
from plvc.design.dataset import INTERCEPT_LABEL, make_dataset, read_dataset, validate_dataset
from plvc.design.regressors import block_offsets, build_design, build_regressor, shared_specs
from plvc.utils.errors import IngestionError

from .conftest import dataset_frame


@pytest.mark.unit
class TestMakeDataset:
    def test_intercept_prepended(self, rng):
        n = 30
        ds = make_dataset(rng.normal(size=n), rng.normal(size=(n, 2)), rng.normal(size=n), rng.uniform(size=n))
        assert ds.n == n and ds.q == 2 and ds.d == 2
        np.testing.assert_array_equal(ds.x[:, 0], 1.0)
        assert ds.varying_labels == [INTERCEPT_LABEL, "x1"]
        assert ds.linear_labels == ["w1", "w2"]

    def test_no_linear_block(self, rng):
        ds = make_dataset(rng.normal(size=15), None, None, rng.uniform(size=15))
        assert ds.q == 0
        assert ds.d == 1

    def test_arrays_are_read_only(self, dgp1_sample):
        ds, _ = dgp1_sample
        with pytest.raises(ValueError):
            ds.y[0] = 1.0

    def test_rejects_non_finite(self, rng):
        y = rng.normal(size=12)
        y[3] = np.nan
        with pytest.raises(ValueError):
            make_dataset(y, None, None, rng.uniform(size=12))

    def test_with_response_keeps_regressors(self, dgp1_sample):
        ds, _ = dgp1_sample
        other = ds.with_response(np.zeros(ds.n))
        np.testing.assert_array_equal(other.w, ds.w)
        np.testing.assert_array_equal(other.y, 0.0)


@pytest.mark.unit
class TestValidateDataset:
    def _frame(self, n=20):
        rng = np.random.default_rng(3)
        return pd.DataFrame({
            "y": rng.normal(size=n),
            "w": rng.normal(size=n),
            "x": rng.normal(size=n),
            "z": rng.uniform(size=n),
        })

    def test_roles(self):
        ds = validate_dataset(self._frame(), "y", ["w"], ["x"], "z")
        assert ds.linear_labels == ["w"]
        assert ds.varying_labels == [INTERCEPT_LABEL, "x"]
        assert ds.index_label == "z"

    def test_missing_column(self):
        with pytest.raises(IngestionError) as exc:
            validate_dataset(self._frame(), "y", ["v"], ["x"], "z")
        assert exc.value.details["column"] == "v"

    def test_non_numeric_cell_reports_row(self):
        frame = self._frame()
        frame["x"] = frame["x"].astype(object)
        frame.loc[7, "x"] = "abc"
        with pytest.raises(IngestionError) as exc:
            validate_dataset(frame, "y", ["w"], ["x"], "z")
        assert exc.value.details == {"column": "x", "row": 7}

    def test_missing_value_reports_row(self):
        frame = self._frame()
        frame.loc[4, "w"] = np.nan
        with pytest.raises(IngestionError) as exc:
            validate_dataset(frame, "y", ["w"], ["x"], "z")
        assert exc.value.details["row"] == 4

    def test_too_few_rows(self):
        with pytest.raises(IngestionError):
            validate_dataset(self._frame(5), "y", ["w"], ["x"], "z")

    def test_read_csv(self, dgp1_sample, write_dataset):
        ds, _ = dgp1_sample
        path = write_dataset(ds)
        loaded = read_dataset(path, "y", ["w"], ["x"], "z")
        np.testing.assert_array_equal(loaded.y, ds.y)
        np.testing.assert_array_equal(loaded.x, ds.x)
        np.testing.assert_array_equal(loaded.w, ds.w)
        np.testing.assert_array_equal(loaded.z, ds.z)

    def test_unreadable_file(self, tmp_path):
        with pytest.raises(IngestionError):
            read_dataset(tmp_path / "missing.csv", "y")


@pytest.mark.unit
class TestDesign:
    def test_rows_match_single_regressor(self, dgp1_sample):
        ds, _ = dgp1_sample
        specs = (bspline_spec(ds.z, 6), power_spec(2))
        design = build_design(ds, specs)
        assert design.total_dimension == 9
        for i in (0, 17, ds.n - 1):
            np.testing.assert_allclose(design.p[i], build_regressor(ds.x[i], ds.z[i], specs))

    def test_block_layout(self, dgp1_sample):
        ds, _ = dgp1_sample
        specs = (bspline_spec(ds.z, 5), bspline_spec(ds.z, 7))
        design = build_design(ds, specs)
        assert design.block_offsets == (0, 5, 12)
        assert block_offsets(specs) == (0, 5, 12)
        # intercept block rows sum to one, slope block rows sum to x
        np.testing.assert_allclose(design.block(0).sum(axis=1), 1.0, atol=1e-12)
        np.testing.assert_allclose(design.block(1).sum(axis=1), ds.x[:, 1], atol=1e-12)

    def test_spec_count_must_match(self, dgp1_sample):
        ds, _ = dgp1_sample
        with pytest.raises(ValueError):
            build_design(ds, (bspline_spec(ds.z, 5),))

    def test_shared_specs(self, dgp1_sample):
        ds, _ = dgp1_sample
        spec = bspline_spec(ds.z, 5)
        assert shared_specs(spec, 3) == (spec, spec, spec)

    def test_frame_helper_round_trip(self, dgp1_sample):
        ds, _ = dgp1_sample
        frame = dataset_frame(ds)
        assert list(frame.columns) == ["y", "z", "w", "x"]
