"""Deterministic episodes and Monte Carlo batches.

One episode: per epoch every UAV takes an RSS sample at its current
position, the target estimate is refreshed, waypoints are selected under
the configured backend, and the UAVs advance one step.  Batches aggregate
success rate, RMSE, and mean planning time per epoch across runs.

Noise streams are common random numbers: run r consumes the same RSS
noise sequence under every planner mode, so backend comparisons are not
confounded by different noise draws.
"""

from __future__ import annotations

import math
import multiprocessing
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .measurement import RssMeasurement, RssModel, RunningEstimator, sample_rss
from .planner import (
    PlannerConfig,
    PlannerMode,
    PlannerState,
    PrunedHistory,
    UavState,
    planning_target,
    prune,
    select_waypoints,
)
from .rigidity import Vec2

_NOISE_STREAM = 11
_PLANNER_STREAM = 13


@dataclass(frozen=True)
class ScenarioConfig:
    """Simulation protocol constants; defaults reproduce the reference
    scenario (static target at the origin, two UAVs from a shared base,
    5 dB shadowing, 250 runs)."""

    target_true: Vec2 = Vec2(0.0, 0.0)
    uav_starts: tuple[Vec2, ...] = (Vec2(-125.0, -125.0), Vec2(-125.0, -122.5))
    model: RssModel = RssModel()
    planner: PlannerConfig = PlannerConfig()
    horizon: int = 60
    runs: int = 250
    success_radius_m: float = 50.0
    base_seed: int = 1

    def __post_init__(self) -> None:
        if self.runs < 1:
            raise ValueError("runs must be at least 1")
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1")
        if self.success_radius_m <= 0:
            raise ValueError("success radius must be positive")
        if not self.uav_starts:
            raise ValueError("need at least one UAV start")


@dataclass
class EpisodeTrace:
    """Per-epoch record of one episode.

    ``uav_positions[e]`` holds end-of-epoch positions (after the move);
    measurement positions live in ``measurements``.  ``error_m`` is NaN
    for epochs before the estimator is determined.
    """

    mode: str
    run_index: int
    epochs: np.ndarray
    uav_positions: np.ndarray
    estimates: np.ndarray
    error_m: np.ndarray
    objective: np.ndarray
    planning_time_s: np.ndarray
    pruned_count: np.ndarray
    flagged: np.ndarray
    measurements: list[RssMeasurement]


@dataclass
class MetricsReport:
    """Per-epoch aggregates across a Monte Carlo batch."""

    mode: str
    runs: int
    epochs: np.ndarray
    success_rate: np.ndarray
    rmse_m: np.ndarray
    mean_planning_time_s: np.ndarray
    traces: Optional[list[EpisodeTrace]] = None


class TimingRow(NamedTuple):
    mode: str
    measurement_count: int
    mean_planning_time_s: float


def run_episode(cfg: ScenarioConfig, run_index: int) -> EpisodeTrace:
    """One deterministic episode; identical inputs give identical traces.

    UAVs fly straight (initial heading +x) until at least three
    measurements exist, then plan every epoch.  Wall time is measured
    around the waypoint selection call only.
    """
    noise_rng = np.random.default_rng([cfg.base_seed, run_index, _NOISE_STREAM])
    seed_gen = np.random.default_rng([cfg.base_seed, run_index, _PLANNER_STREAM])
    uavs = tuple(UavState(i, p, None) for i, p in enumerate(cfg.uav_starts))
    n_uav = len(uavs)
    rsv = cfg.planner.mode is PlannerMode.RSV
    retained = PrunedHistory(capacity=cfg.planner.prune_capacity)
    estimator = RunningEstimator(cfg.model)
    all_measurements: list[RssMeasurement] = []
    estimate: Optional[Vec2] = None

    h = cfg.horizon
    trace = EpisodeTrace(
        mode=cfg.planner.mode.value,
        run_index=run_index,
        epochs=np.arange(1, h + 1),
        uav_positions=np.zeros((h, n_uav, 2)),
        estimates=np.full((h, 2), np.nan),
        error_m=np.full(h, np.nan),
        objective=np.full(h, np.nan),
        planning_time_s=np.zeros(h),
        pruned_count=np.zeros(h, dtype=int),
        flagged=np.zeros(h, dtype=bool),
        measurements=[],
    )

    for epoch in range(1, h + 1):
        e = epoch - 1
        for uav in uavs:
            m = sample_rss(cfg.model, uav.position, cfg.target_true, noise_rng,
                           uav_id=uav.uav_id, epoch=float(epoch))
            all_measurements.append(m)
            trace.measurements.append(m)
            estimator.add(m)
            if rsv:
                anchor = planning_target(retained.measurements(), uavs, estimate)
                retained = prune(retained, m, anchor, seed_gen)

        if len(all_measurements) >= 3:
            estimate, _converged = estimator.estimate()
            trace.estimates[e] = (estimate.x, estimate.y)
            trace.error_m[e] = estimate.distance_to(cfg.target_true)

        if len(all_measurements) >= 3:
            history = tuple(retained.measurements()) if rsv else tuple(all_measurements)
            state = PlannerState(uavs=uavs, history=history, target_estimate=estimate,
                                 epoch=float(epoch), seed_gen=seed_gen)
            t0 = time.perf_counter()
            waypoints, flagged = select_waypoints(state, cfg.planner)
            trace.planning_time_s[e] = time.perf_counter() - t0
            trace.flagged[e] = flagged
            trace.objective[e] = waypoints[-1].objective
            uavs = tuple(UavState(w.uav_id, w.position, w.heading_deg) for w in waypoints)
        else:
            moved = []
            for uav in uavs:
                heading = uav.heading_deg if uav.heading_deg is not None else 0.0
                step = cfg.planner.speed_mps * cfg.planner.epoch_dt_s
                a = math.radians(heading)
                moved.append(UavState(uav.uav_id,
                                      Vec2(uav.position.x + step * math.cos(a),
                                           uav.position.y + step * math.sin(a)),
                                      uav.heading_deg))
            uavs = tuple(moved)

        for i, uav in enumerate(uavs):
            trace.uav_positions[e, i] = (uav.position.x, uav.position.y)
        trace.pruned_count[e] = len(retained) if rsv else len(all_measurements)
    return trace


def _episode_worker(args: tuple[ScenarioConfig, int]) -> EpisodeTrace:
    cfg, run_index = args
    return run_episode(cfg, run_index)


_WORKER_LIMITS = None


def _limit_worker_threads() -> None:
    """Pin BLAS to one thread inside pool workers; episodes are the unit
    of parallelism."""
    global _WORKER_LIMITS
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:
        return
    _WORKER_LIMITS = threadpool_limits(limits=1)


def resolve_workers(n_tasks: int) -> int:
    """Worker count: RIGID_PLANNER_THREADS caps it, 0 or unset means one
    worker per CPU."""
    raw = os.environ.get("RIGID_PLANNER_THREADS", "0")
    try:
        w = int(raw)
    except ValueError:
        w = 0
    if w <= 0:
        w = os.cpu_count() or 1
    return max(1, min(w, n_tasks))


def _run_batch(cfg: ScenarioConfig, run_indices: Sequence[int]) -> list[EpisodeTrace]:
    workers = resolve_workers(len(run_indices))
    if workers == 1:
        return [run_episode(cfg, r) for r in run_indices]
    # Fork keeps the loaded interpreter (no __main__ re-import) and the
    # initializer pins each worker's BLAS to one thread.
    ctx = multiprocessing.get_context("fork")
    with ProcessPoolExecutor(max_workers=workers, mp_context=ctx,
                             initializer=_limit_worker_threads) as pool:
        return list(pool.map(_episode_worker, [(cfg, r) for r in run_indices]))


def _aggregate(cfg: ScenarioConfig, traces: list[EpisodeTrace],
               keep_traces: bool) -> MetricsReport:
    errors = np.stack([t.error_m for t in traces])
    times = np.stack([t.planning_time_s for t in traces])
    with np.errstate(invalid="ignore"):
        success = np.mean(errors <= cfg.success_radius_m, axis=0)
    sq = np.square(errors)
    finite = np.isfinite(sq)
    counts = finite.sum(axis=0)
    sums = np.where(finite, sq, 0.0).sum(axis=0)
    rmse = np.full(errors.shape[1], np.nan)
    nonzero = counts > 0
    rmse[nonzero] = np.sqrt(sums[nonzero] / counts[nonzero])
    return MetricsReport(
        mode=cfg.planner.mode.value,
        runs=len(traces),
        epochs=np.arange(1, errors.shape[1] + 1),
        success_rate=success,
        rmse_m=rmse,
        mean_planning_time_s=times.mean(axis=0),
        traces=traces if keep_traces else None,
    )


def run_monte_carlo(cfg: ScenarioConfig, keep_traces: bool = False) -> MetricsReport:
    """Run episodes 1..runs and aggregate per-epoch metrics.

    Success rate counts runs with position error within the success
    radius (undetermined epochs count as failures); RMSE excludes NaN
    errors.  Episodes are independent and run in parallel when more than
    one worker is available.
    """
    traces = _run_batch(cfg, range(1, cfg.runs + 1))
    return _aggregate(cfg, traces, keep_traces)


def timing_profile(cfg: ScenarioConfig, measurement_counts: Sequence[int],
                   modes: Optional[Sequence[PlannerMode | str]] = None) -> list[TimingRow]:
    """Mean per-epoch planning time at each accumulated measurement count.

    A requested count c maps to the first epoch whose accumulated count
    reaches c.  Episodes stop at the epoch covering the largest requested
    count (never beyond cfg.horizon), since later epochs contribute to no
    requested bin.
    """
    counts = list(measurement_counts)
    if counts != sorted(counts) or not counts:
        raise ValueError("measurement counts must be ascending and non-empty")
    n_uav = len(cfg.uav_starts)
    mode_list = [cfg.planner.mode] if modes is None else [PlannerMode(m) for m in modes]
    horizon = min(cfg.horizon, math.ceil(counts[-1] / n_uav))
    rows: list[TimingRow] = []
    for mode in mode_list:
        mode_cfg = replace(cfg, planner=replace(cfg.planner, mode=mode), horizon=horizon)
        traces = _run_batch(mode_cfg, range(1, cfg.runs + 1))
        times = np.stack([t.planning_time_s for t in traces])
        for c in counts:
            epoch = math.ceil(c / n_uav)
            mean = float(times[:, epoch - 1].mean()) if epoch <= horizon else math.nan
            rows.append(TimingRow(mode.value, c, mean))
    return rows
