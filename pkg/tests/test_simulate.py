import math

import numpy as np
import pytest

from rigid_planner import (
    PlannerConfig,
    PlannerMode,
    RssModel,
    ScenarioConfig,
    Vec2,
    run_episode,
    run_monte_carlo,
    timing_profile,
)
from rigid_planner.measurement import rss_mean


def small_cfg(mode=PlannerMode.RSV, **kw):
    defaults = dict(horizon=6, runs=2, base_seed=3)
    defaults.update(kw)
    return ScenarioConfig(planner=PlannerConfig(mode=mode), **defaults)


class TestRunEpisode:
    def test_single_epoch_kinematics(self):
        cfg = small_cfg(horizon=1)
        trace = run_episode(cfg, 1)
        assert len(trace.epochs) == 1
        assert len(trace.measurements) == 2
        for i, start in enumerate(cfg.uav_starts):
            moved = Vec2(*trace.uav_positions[0, i])
            assert moved.distance_to(start) == pytest.approx(5.0, rel=1e-12)

    def test_pre_estimate_epoch_is_nan(self):
        trace = run_episode(small_cfg(horizon=3), 1)
        assert math.isnan(trace.error_m[0])
        assert np.all(np.isfinite(trace.error_m[1:]))

    def test_deterministic(self):
        cfg = small_cfg(horizon=5)
        t1 = run_episode(cfg, 2)
        t2 = run_episode(cfg, 2)
        np.testing.assert_array_equal(t1.uav_positions, t2.uav_positions)
        np.testing.assert_array_equal(t1.error_m, t2.error_m)
        np.testing.assert_array_equal(t1.objective, t2.objective)
        assert [m.rss_dbm for m in t1.measurements] == [m.rss_dbm for m in t2.measurements]

    def test_noiseless_episode_converges(self):
        cfg = ScenarioConfig(model=RssModel(sigma_db=0.0),
                             planner=PlannerConfig(mode=PlannerMode.RSV),
                             horizon=60, runs=1, base_seed=5)
        trace = run_episode(cfg, 1)
        assert trace.error_m[-1] <= 1.0

    def test_common_random_numbers_across_modes(self):
        cfg_a = small_cfg(mode=PlannerMode.FULL, horizon=5)
        cfg_b = small_cfg(mode=PlannerMode.RSV, horizon=5)
        ta = run_episode(cfg_a, 4)
        tb = run_episode(cfg_b, 4)
        noise_a = [m.rss_dbm - rss_mean(cfg_a.model, m.position, cfg_a.target_true)
                   for m in ta.measurements]
        noise_b = [m.rss_dbm - rss_mean(cfg_b.model, m.position, cfg_b.target_true)
                   for m in tb.measurements]
        np.testing.assert_array_equal(noise_a, noise_b)

    def test_pruned_count_capped(self):
        cfg = ScenarioConfig(planner=PlannerConfig(mode=PlannerMode.RSV, prune_capacity=6),
                             horizon=8, runs=1, base_seed=3)
        trace = run_episode(cfg, 1)
        assert trace.pruned_count[-1] == 6
        cfg_full = ScenarioConfig(planner=PlannerConfig(mode=PlannerMode.FULL),
                                  horizon=8, runs=1, base_seed=3)
        trace_full = run_episode(cfg_full, 1)
        assert trace_full.pruned_count[-1] == 16


class TestRunMonteCarlo:
    def test_single_run_rates_binary(self):
        rep = run_monte_carlo(small_cfg(runs=1, horizon=4))
        assert set(np.unique(rep.success_rate)) <= {0.0, 1.0}

    def test_nan_counted_as_failure_excluded_from_rmse(self):
        rep = run_monte_carlo(small_cfg(runs=2, horizon=3))
        assert rep.success_rate[0] == 0.0
        assert math.isnan(rep.rmse_m[0])
        assert np.all(np.isfinite(rep.rmse_m[1:]))

    def test_deterministic_metrics(self):
        cfg = small_cfg(runs=3, horizon=4)
        r1 = run_monte_carlo(cfg)
        r2 = run_monte_carlo(cfg)
        np.testing.assert_array_equal(r1.success_rate, r2.success_rate)
        np.testing.assert_array_equal(r1.rmse_m, r2.rmse_m)

    def test_keep_traces(self):
        rep = run_monte_carlo(small_cfg(runs=2, horizon=3), keep_traces=True)
        assert rep.traces is not None and len(rep.traces) == 2
        assert rep.traces[0].run_index == 1


class TestTimingProfile:
    def test_rows_and_horizon_capping(self):
        cfg = small_cfg(runs=2, horizon=50)
        rows = timing_profile(cfg, [4, 8], modes=[PlannerMode.RSV, PlannerMode.RS])
        assert len(rows) == 4
        assert [(r.mode, r.measurement_count) for r in rows] == [
            ("rsv", 4), ("rsv", 8), ("rs", 4), ("rs", 8)]
        assert all(np.isfinite(r.mean_planning_time_s) for r in rows)

    def test_counts_must_ascend(self):
        with pytest.raises(ValueError):
            timing_profile(small_cfg(), [8, 4])

    def test_count_beyond_horizon_is_nan(self):
        cfg = small_cfg(runs=1, horizon=3)
        rows = timing_profile(cfg, [4, 40], modes=[PlannerMode.RSV])
        assert math.isnan(rows[-1].mean_planning_time_s)
