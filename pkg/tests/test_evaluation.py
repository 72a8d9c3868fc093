"""Benefit, FAR, and Benefit-FAR curve tests."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ddimstream.errors import ConfigError
from ddimstream.evaluation import (
    BenefitFarCurve,
    EvalConfig,
    aggregate_aucs,
    benefit,
    benefit_far_auc,
    default_threshold_grid,
    far,
    mean_benefit,
)


class TestBenefit:
    def test_alarm_at_sign_time(self):
        assert benefit(10, 10, 10) == 1.0

    def test_alarm_at_window_end(self):
        assert benefit(20, 10, 10) == 0.0

    def test_linear_midpoint(self):
        assert benefit(15, 10, 10) == 0.5

    def test_alarm_before_sign_time(self):
        assert benefit(9, 10, 10) == 0.0

    def test_no_alarm(self):
        assert benefit(None, 10, 10) == 0.0

    @given(delay=st.integers(0, 9))
    def test_nonincreasing_in_delay(self, delay):
        assert benefit(10 + delay, 10, 10) >= benefit(10 + delay + 1, 10, 10)


class TestFar:
    def test_all_inside(self):
        assert far([10, 12, 15], [(10, 29)]) == 0.0

    def test_half_outside(self):
        assert far([5, 12, 15, 35], [(10, 29)]) == 0.5

    def test_no_alarms_convention(self):
        assert far([], [(10, 29)]) == 0.0

    def test_interval_bounds_inclusive(self):
        assert far([10, 29], [(10, 29)]) == 0.0
        assert far([9, 30], [(10, 29)]) == 1.0


class TestMeanBenefit:
    def test_single_change(self):
        cfg = EvalConfig(sign_times=[10], transitions=[(10, 29)], U=10)
        assert mean_benefit([12], cfg) == pytest.approx(0.8)

    def test_first_alarm_is_used(self):
        cfg = EvalConfig(sign_times=[10], transitions=[(10, 29)], U=10)
        assert mean_benefit([11, 12, 19], cfg) == pytest.approx(0.9)

    def test_average_over_change_points(self):
        cfg = EvalConfig(sign_times=[10, 50], transitions=[(10, 29), (50, 59)], U=10)
        # first change hit immediately (1.0), second missed (0.0)
        assert mean_benefit([10], cfg) == pytest.approx(0.5)
        # alarms per segment: 12 -> 0.8, 55 -> 0.5
        assert mean_benefit([12, 55], cfg) == pytest.approx(0.65)

    def test_alarm_before_next_change_does_not_leak(self):
        cfg = EvalConfig(sign_times=[10, 50], transitions=[(10, 29), (50, 59)], U=10)
        # an alarm at 49 belongs to the first change's segment and is too late
        assert mean_benefit([49], cfg) == pytest.approx(0.0)


class TestBenefitFarAuc:
    def _config(self):
        return EvalConfig(sign_times=[10], transitions=[(10, 29)], U=10)

    def test_ideal_detector(self):
        # score spikes exactly at t*: every threshold below the spike alarms
        # at t* only -> benefit 1, FAR 0 across the sweep -> AUC 1
        times = np.arange(40)
        scores = np.zeros(40)
        scores[10] = 5.0
        curve = benefit_far_auc(times, scores, self._config())
        assert curve.auc == pytest.approx(1.0)

    def test_never_alarming_detector(self):
        times = np.arange(40)
        scores = np.zeros(40)
        curve = benefit_far_auc(times, scores, self._config(), grid=np.array([1.0, 2.0]))
        assert curve.auc == pytest.approx(0.0)

    def test_auc_in_unit_interval(self):
        rng = np.random.default_rng(0)
        for _ in range(10):
            scores = rng.random(40)
            curve = benefit_far_auc(np.arange(40), scores, self._config())
            assert 0.0 <= curve.auc <= 1.0 + 1e-12

    def test_duplicate_thresholds_are_harmless(self):
        rng = np.random.default_rng(1)
        scores = rng.random(40)
        g1 = np.array([0.2, 0.5, 0.8])
        g2 = np.array([0.2, 0.2, 0.5, 0.5, 0.8])
        a = benefit_far_auc(np.arange(40), scores, self._config(), grid=g1)
        b = benefit_far_auc(np.arange(40), scores, self._config(), grid=g2)
        assert a.auc == pytest.approx(b.auc)
        assert a.points == b.points

    def test_curve_is_deterministic(self):
        rng = np.random.default_rng(2)
        scores = rng.random(40)
        a = benefit_far_auc(np.arange(40), scores, self._config())
        b = benefit_far_auc(np.arange(40), scores, self._config())
        assert a.points == b.points and a.auc == b.auc

    def test_nan_scores_never_alarm(self):
        times = np.arange(40)
        scores = np.full(40, np.nan)
        scores[10] = 1.0
        curve = benefit_far_auc(times, scores, self._config(), grid=np.array([0.5]))
        assert curve.auc == pytest.approx(1.0)

    def test_empty_grid_rejected(self):
        with pytest.raises(ConfigError):
            benefit_far_auc(np.arange(4), np.zeros(4), self._config(), grid=np.array([]))

    def test_quantile_grid_covers_scores(self):
        scores = np.array([0.0, 1.0, 2.0, np.nan])
        grid = default_threshold_grid(scores, 5)
        assert grid[0] == 0.0 and grid[-1] == 2.0 and len(grid) == 5


class TestAggregate:
    def test_mean_and_std(self):
        c1 = {"th": BenefitFarCurve(points=[], auc=0.8)}
        c2 = {"th": BenefitFarCurve(points=[], auc=0.6)}
        agg = aggregate_aucs([c1, c2])
        assert agg["th"][0] == pytest.approx(0.7)
        assert agg["th"][1] == pytest.approx(0.1)


class TestEvalConfig:
    def test_validation(self):
        with pytest.raises(ConfigError):
            EvalConfig(sign_times=[], transitions=[])
        with pytest.raises(ConfigError):
            EvalConfig(sign_times=[5], transitions=[], U=0)
        with pytest.raises(ConfigError):
            EvalConfig(sign_times=[5], transitions=[], grid_size=0)

    def test_sign_times_sorted(self):
        cfg = EvalConfig(sign_times=[50, 10], transitions=[])
        assert cfg.sign_times == [10, 50]
