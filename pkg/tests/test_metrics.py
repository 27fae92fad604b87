"""Endpoint error, trajectory error, sampling fit, and the report format."""

import math

import numpy as np
import pytest
from scipy import stats

from flowtraj import FormatError, InvalidInputError
from flowtraj.flow import FlowField
from flowtraj.metrics import (
    MetricReport,
    endpoint_error,
    sampling_fit,
    trajectory_error,
)
from flowtraj.rng import make_rng
from flowtraj.sampler import CandidateGrid, SamplingPlan
from flowtraj.tracker import Trajectory, TrajectorySet


def field(u, v):
    return FlowField(np.asarray(u, dtype=np.float64), np.asarray(v, dtype=np.float64))


class TestEndpointError:
    def test_identical_fields(self):
        f = field(np.random.default_rng(0).normal(size=(5, 7)), np.zeros((5, 7)))
        mean, peak = endpoint_error(f, f)
        assert mean == 0.0
        assert peak == 0.0

    def test_uniform_offset_is_its_norm(self):
        a = field(np.zeros((4, 6)), np.zeros((4, 6)))
        b = field(np.full((4, 6), 0.3), np.full((4, 6), 0.4))
        mean, peak = endpoint_error(a, b)
        assert mean == pytest.approx(0.5, abs=1e-12)
        assert peak == pytest.approx(0.5, abs=1e-12)

    def test_matches_per_pixel_norms(self):
        rng = np.random.default_rng(1)
        a = field(rng.normal(size=(6, 8)), rng.normal(size=(6, 8)))
        b = field(rng.normal(size=(6, 8)), rng.normal(size=(6, 8)))
        expected = [
            math.hypot(a.u[y, x] - b.u[y, x], a.v[y, x] - b.v[y, x])
            for y in range(6)
            for x in range(8)
        ]
        mean, peak = endpoint_error(a, b)
        assert mean == pytest.approx(sum(expected) / len(expected), abs=1e-12)
        assert peak == pytest.approx(max(expected), abs=1e-12)

    def test_mask_restricts_the_region(self):
        a = field(np.zeros((4, 4)), np.zeros((4, 4)))
        u = np.zeros((4, 4))
        u[0, 0] = 10.0
        u[2, 2] = 1.0
        b = field(u, np.zeros((4, 4)))
        mask = np.zeros((4, 4), dtype=bool)
        mask[2, 2] = True
        mean, peak = endpoint_error(a, b, mask=mask)
        assert mean == 1.0
        assert peak == 1.0

    def test_dimension_mismatch(self):
        with pytest.raises(InvalidInputError):
            endpoint_error(
                field(np.zeros((4, 4)), np.zeros((4, 4))),
                field(np.zeros((4, 5)), np.zeros((4, 5))),
            )

    def test_empty_mask(self):
        f = field(np.zeros((4, 4)), np.zeros((4, 4)))
        with pytest.raises(InvalidInputError):
            endpoint_error(f, f, mask=np.zeros((4, 4), dtype=bool))

    def test_wrong_mask_shape(self):
        f = field(np.zeros((4, 4)), np.zeros((4, 4)))
        with pytest.raises(InvalidInputError):
            endpoint_error(f, f, mask=np.ones((3, 4), dtype=bool))


class TestTrajectoryError:
    def test_hand_built_positions(self):
        observed = TrajectorySet(
            16,
            16,
            2,
            (
                Trajectory(0, ((1.0, 1.0), (2.0, 1.0))),
                Trajectory(1, ((5.0, 5.0), (5.0, 6.0))),
            ),
        )
        oracle = [
            [(1.0, 1.0), (2.0, 2.0)],  # distances 0, 1
            [(5.0, 5.0), (8.0, 10.0)],  # distances 0, 5
        ]
        assert trajectory_error(observed, oracle) == pytest.approx(1.5, abs=1e-12)

    def test_perfect_match_is_zero(self):
        observed = TrajectorySet(
            16, 16, 3, (Trajectory(0, ((1.0, 2.0), (2.0, 3.0), (3.0, 4.0))),)
        )
        oracle = [[(1.0, 2.0), (2.0, 3.0), (3.0, 4.0)]]
        assert trajectory_error(observed, oracle) == 0.0

    def test_oracle_count_mismatch(self):
        observed = TrajectorySet(16, 16, 2, (Trajectory(0, ((1.0, 1.0), (2.0, 1.0))),))
        with pytest.raises(InvalidInputError):
            trajectory_error(observed, [])

    def test_oracle_length_mismatch(self):
        observed = TrajectorySet(16, 16, 2, (Trajectory(0, ((1.0, 1.0), (2.0, 1.0))),))
        with pytest.raises(InvalidInputError):
            trajectory_error(observed, [[(1.0, 1.0)]])


class TestSamplingFit:
    def build(self, probabilities):
        positions = tuple((4 * i, 0) for i in range(len(probabilities)))
        grid = CandidateGrid(4, 0, 0, positions)
        plan = SamplingPlan(tuple(probabilities), n_max=len(probabilities))
        return grid, plan

    def test_statistic_matches_direct_chi_square(self):
        grid, plan = self.build((0.5, 0.3, 0.2))
        trials = 20000
        stat = sampling_fit(grid, plan, trials, make_rng(11, "eval"))
        # Re-run with the same stream to recover the counts and compare
        # against scipy's chisquare on those counts.
        rng = make_rng(11, "eval")
        counts = np.zeros(3, dtype=np.int64)
        weights = np.asarray(plan.probabilities)
        for _ in range(trials):
            u = rng.random()
            counts[int(np.searchsorted(np.cumsum(weights), u, side="right"))] += 1
        expected = trials * weights
        scipy_stat = stats.chisquare(counts, expected).statistic
        assert stat == pytest.approx(scipy_stat, rel=1e-9)

    def test_fit_is_typically_small(self):
        grid, plan = self.build((0.25, 0.25, 0.25, 0.25))
        stat = sampling_fit(grid, plan, 50000, make_rng(3, "eval"))
        assert stat < stats.chi2.ppf(0.999, df=3)

    def test_requires_enough_trials(self):
        grid, plan = self.build((0.5, 0.5))
        with pytest.raises(InvalidInputError):
            sampling_fit(grid, plan, 999, make_rng(0, "eval"))

    def test_probability_alignment_enforced(self):
        grid, _ = self.build((0.5, 0.5))
        plan = SamplingPlan((0.5, 0.3, 0.2), n_max=3)
        with pytest.raises(InvalidInputError):
            sampling_fit(grid, plan, 1000, make_rng(0, "eval"))


class TestMetricReport:
    def test_json_roundtrip(self):
        report = MetricReport(
            mean_epe=0.25,
            max_epe=1.5,
            per_step_trajectory_error=0.75,
            chi_square_stat=12.5,
            sample_count=100000,
        )
        assert MetricReport.from_json(report.to_json()) == report

    def test_defaults_are_zero(self):
        report = MetricReport()
        assert report.mean_epe == 0.0
        assert report.sample_count == 0

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"mean_epe": -0.1},
            {"max_epe": float("nan")},
            {"chi_square_stat": float("inf")},
            {"sample_count": -1},
        ],
    )
    def test_invalid_values(self, kwargs):
        with pytest.raises(InvalidInputError):
            MetricReport(**kwargs)

    def test_malformed_json(self):
        with pytest.raises(FormatError):
            MetricReport.from_json("{not json")
        with pytest.raises(FormatError):
            MetricReport.from_json('{"unexpected_field": 1}')
