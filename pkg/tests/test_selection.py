"""
Cross-validation tests
"""
import numpy as np
import pytest

from plvc.basis.splines import bspline_spec, power_spec
from plvc.design.dataset import make_dataset
from plvc.design.regressors import shared_specs
from plvc.models.results import CvCandidate
from plvc.selection.cv import (
    assemble_report,
    cv_curve,
    literal_loo_score,
    loo_cv_score,
    loo_scores,
    power_grid,
    report_frame,
    select_basis,
    spline_grid,
)
from plvc.utils.errors import SaturationError, SelectionError


@pytest.mark.unit
class TestLeaveOneOut:
    @pytest.mark.parametrize("seed", range(50))
    def test_shortcut_matches_refits(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(30, 61))
        z = rng.uniform(0.0, 2.0, n)
        w = rng.normal(size=n)
        x = rng.normal(size=n)
        y = 0.5 * w + np.cos(z) + x * z + rng.normal(scale=0.4, size=n)
        ds = make_dataset(y, w, x, z)
        specs = shared_specs(bspline_spec(z, int(rng.integers(4, 8))), ds.d)
        assert loo_cv_score(ds, specs) == pytest.approx(literal_loo_score(ds, specs), rel=1e-8)

    def test_in_sample_rss_below_score(self, dgp1_sample):
        ds, _ = dgp1_sample
        score, rss = loo_scores(ds, shared_specs(bspline_spec(ds.z, 8), ds.d))
        assert 0.0 < rss < score

    def test_saturated_candidate(self):
        z = np.linspace(-1.0, 1.0, 10)
        ds = make_dataset(np.cos(3 * z), None, None, z)
        with pytest.raises(SaturationError):
            loo_scores(ds, (power_spec(9),))

    def test_rss_non_increasing_on_nested_splines(self, dgp1_sample):
        ds, _ = dgp1_sample
        # 0, 1, 3 and 7 interior knots: each knot set contains the previous one
        rss = [loo_scores(ds, shared_specs(bspline_spec(ds.z, k), ds.d))[1] for k in (4, 5, 7, 11)]
        for coarse, fine in zip(rss, rss[1:]):
            assert fine <= coarse * (1.0 + 1e-10)

    def test_rss_non_increasing_on_power_degrees(self, dgp1_sample):
        ds, _ = dgp1_sample
        rss = [loo_scores(ds, shared_specs(power_spec(m), ds.d))[1] for m in range(1, 6)]
        for coarse, fine in zip(rss, rss[1:]):
            assert fine <= coarse * (1.0 + 1e-10)


@pytest.mark.unit
class TestReport:
    def _candidates(self, total_ks):
        return [CvCandidate(label=f"k{k}", per_block_k=(k,), total_k=k, degree=3) for k in total_ks]

    def test_tie_goes_to_smallest_total_k(self):
        report = assemble_report(
            self._candidates([8, 6, 4]),
            [(1.0, 0.5), (1.0, 0.4), (2.0, 0.1)],
            {},
            tie_key=lambda c: c.total_k,
        )
        assert report.ties == [0, 1]
        assert report.selected == 1

    def test_non_evaluable_excluded(self):
        report = assemble_report(
            self._candidates([4, 5]),
            [None, (3.0, 1.0)],
            {0: "SaturationError: leverage"},
            tie_key=lambda c: c.total_k,
        )
        assert report.selected == 1
        assert report.evaluable == [False, True]
        assert np.isnan(report.scores[0])

    def test_nothing_evaluable(self):
        with pytest.raises(SelectionError):
            assemble_report(self._candidates([4]), [None], {0: "x"}, tie_key=lambda c: c.total_k)


@pytest.mark.unit
class TestSelectBasis:
    def test_grid_shapes(self, dgp1_sample):
        ds, _ = dgp1_sample
        assert len(spline_grid(ds)) == 13
        assert len(spline_grid(ds, ks=[4, 5], per_block=True)) == 4
        assert len(spline_grid(ds, degrees=(2, 3))) == 26
        assert len(power_grid(ds, degrees=range(1, 4))) == 3

    def test_selects_minimum(self, dgp1_sample):
        ds, _ = dgp1_sample
        grid = spline_grid(ds, ks=range(4, 12))
        report = select_basis(ds, grid)
        finite = [s for s, ok in zip(report.scores, report.evaluable) if ok]
        assert report.best_score == min(finite)
        assert report.selected_candidate.total_k == 2 * report.selected_candidate.per_block_k[0]

    def test_threads_do_not_change_result(self, dgp1_sample):
        ds, _ = dgp1_sample
        grid = spline_grid(ds, ks=range(4, 10))
        assert select_basis(ds, grid, workers=3) == select_basis(ds, grid, workers=1)

    def test_empty_grid(self, dgp1_sample):
        ds, _ = dgp1_sample
        with pytest.raises(SelectionError):
            select_basis(ds, [])

    def test_cv_curve_rows(self, dgp1_sample):
        ds, _ = dgp1_sample
        grid = spline_grid(ds, ks=range(4, 9))
        frame = cv_curve(ds, grid)
        assert len(frame) == 5
        assert {"candidate", "cv_score", "in_sample_rss", "total_k", "per_block_k"} <= set(frame.columns)
        assert frame["selected"].sum() == 1

    def test_report_frame_marks_non_evaluable(self):
        z = np.linspace(-1.0, 1.0, 10)
        ds = make_dataset(np.cos(3 * z) + 0.1 * np.sin(17 * z), None, None, z)
        report = select_basis(ds, [(power_spec(2),), (power_spec(9),)])
        frame = report_frame(report)
        assert frame["evaluable"].tolist() == [True, False]
        assert report.selected == 0
