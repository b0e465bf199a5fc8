"""Waypoint selection by brute-force heading search over the rigidity
objective, with capacity-bounded pruning of the measurement history.

Each UAV's next heading is the argmax of the rigidity value over
candidate headings within the turn limit; the SVD backend is chosen by
the planner mode.  Pruning keeps only the K measurements whose removal
would cost the objective the most.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence, Union

import numpy as np

from .measurement import RssMeasurement
from .rigidity import (
    FullSvd,
    Framework,
    RandomizedSvd,
    SmoothSvd,
    UavVertex,
    UnderdeterminedFrameworkError,
    Vec2,
    build_framework,
    matrix_entries,
    rigidity_value,
    scaffold_edges,
    value_from_entries,
)
from .svd import randomized_svd, randomized_singular_values, smooth_sv_rows


class PlannerMode(str, enum.Enum):
    """Backend selection: exact SVD per candidate, randomized SVD per
    candidate, randomized anchor plus first-order updates, or the same
    with vertex pruning."""

    FULL = "full"
    R = "r"
    RS = "rs"
    RSV = "rsv"


@dataclass(frozen=True)
class PlannerConfig:
    mode: PlannerMode = PlannerMode.FULL
    speed_mps: float = 5.0
    epoch_dt_s: float = 1.0
    max_turn_deg: float = 20.0
    angle_step_deg: float = 1.0
    prune_capacity: int = 40
    seed: int = 0

    def __post_init__(self) -> None:
        if self.speed_mps <= 0:
            raise ValueError("speed must be positive")
        if self.angle_step_deg <= 0:
            raise ValueError("angle step must be positive")
        if self.max_turn_deg < 0:
            raise ValueError("max turn must be nonnegative")
        if self.max_turn_deg > 0 and self.angle_step_deg > self.max_turn_deg:
            raise ValueError("angle step exceeds the turn limit")
        if self.prune_capacity < 3:
            raise ValueError("prune capacity below 3")


@dataclass(frozen=True)
class UavState:
    uav_id: int
    position: Vec2
    heading_deg: Optional[float] = None


class Waypoint(NamedTuple):
    uav_id: int
    position: Vec2
    heading_deg: float
    objective: float = math.nan


@dataclass(frozen=True)
class PrunedHistory:
    """Measurements retained for planning, highest priority first."""

    entries: tuple[tuple[RssMeasurement, float], ...] = ()
    capacity: int = 40

    def __len__(self) -> int:
        return len(self.entries)

    def measurements(self) -> list[RssMeasurement]:
        """Retained measurements in acquisition (epoch, uav_id) order."""
        return sorted((m for m, _ in self.entries), key=lambda m: (m.epoch, m.uav_id))

    def priorities(self) -> list[float]:
        return [p for _, p in self.entries]


@dataclass
class PlannerState:
    """Inputs to one epoch of waypoint selection."""

    uavs: tuple[UavState, ...]
    history: tuple[RssMeasurement, ...]
    target_estimate: Optional[Vec2]
    epoch: float
    seed_gen: np.random.Generator = field(default_factory=lambda: np.random.default_rng(0))


def candidate_headings(prev_heading_deg: Optional[float], config: PlannerConfig) -> np.ndarray:
    """Admissible headings in degrees, normalized to [0, 360).

    Within the turn limit of the previous heading; a full-circle sweep
    when no previous heading exists (the first planned epoch).
    """
    step = config.angle_step_deg
    if prev_heading_deg is None:
        return np.arange(0.0, 360.0, step)
    offsets = np.arange(-config.max_turn_deg, config.max_turn_deg + step / 2, step)
    return (prev_heading_deg + offsets) % 360.0


def planning_target(history: Sequence[RssMeasurement], uavs: Sequence[UavState],
                    estimate: Optional[Vec2]) -> Vec2:
    """Target anchor for framework construction.

    The current position estimate when one exists; before any estimate,
    the centroid of the UAV vertices offset by 1 m in +x (an arbitrary
    but documented placeholder so planning has an anchor)."""
    if estimate is not None:
        return estimate
    if history:
        xs = [m.position.x for m in history]
        ys = [m.position.y for m in history]
    else:
        xs = [u.position.x for u in uavs]
        ys = [u.position.y for u in uavs]
    return Vec2(sum(xs) / len(xs) + 1.0, sum(ys) / len(ys))


def _displaced(position: Vec2, heading_deg: float, config: PlannerConfig) -> Vec2:
    r = config.speed_mps * config.epoch_dt_s
    a = math.radians(heading_deg)
    return Vec2(position.x + r * math.cos(a), position.y + r * math.sin(a))


def _chain_order(measurements: Sequence[RssMeasurement]) -> list[UavVertex]:
    ordered = sorted(measurements, key=lambda m: (m.epoch, m.uav_id))
    return [UavVertex(m.position, m.epoch, m.uav_id) for m in ordered]


def _angular_delta(a: float, b: Optional[float]) -> float:
    if b is None:
        return 0.0
    d = abs(a - b) % 360.0
    return min(d, 360.0 - d)


def evaluate_candidate(history: Union[Sequence[RssMeasurement], PrunedHistory],
                       uav_states: Sequence[UavState], moving_uav_id: int,
                       heading_deg: float, target_estimate: Optional[Vec2],
                       config: PlannerConfig, anchor=None, anchor_matrix=None,
                       svd_seed: int = 0,
                       committed: Sequence[UavVertex] = ()) -> float:
    """Objective for one hypothetical heading of one UAV.

    Builds the framework from the retained history, any already-committed
    hypothetical positions of earlier UAVs, and the moving UAV displaced
    one epoch along ``heading_deg``; returns the rigidity value under the
    mode's backend, or -inf when the framework is underdetermined.
    """
    measurements = history.measurements() if isinstance(history, PrunedHistory) else list(history)
    moving = next(u for u in uav_states if u.uav_id == moving_uav_id)
    vertices = _chain_order(measurements)
    vertices.extend(committed)
    hypothetical = UavVertex(_displaced(moving.position, heading_deg, config),
                             epoch=max((v.epoch for v in vertices), default=0.0) + config.epoch_dt_s,
                             uav_id=moving_uav_id)
    vertices.append(hypothetical)
    target = planning_target(measurements, uav_states, target_estimate)
    framework = build_framework(vertices, target)
    if config.mode is PlannerMode.FULL:
        backend = FullSvd()
    elif config.mode is PlannerMode.R:
        backend = RandomizedSvd(svd_seed)
    else:
        if anchor is None or anchor_matrix is None:
            raise ValueError(f"mode {config.mode.value} needs an anchor decomposition")
        backend = SmoothSvd(anchor, anchor_matrix, fallback_seed=svd_seed)
    try:
        return rigidity_value(framework, backend)
    except UnderdeterminedFrameworkError:
        return -math.inf


def _sweep_objectives(points: np.ndarray, edges: np.ndarray, moving_index: int,
                      candidates: np.ndarray, base_position: Vec2, index: int,
                      config: PlannerConfig, anchor_heading: Optional[float],
                      seed_gen: np.random.Generator) -> np.ndarray:
    """Objectives for all candidate headings of one UAV.

    ``points`` must already hold every vertex except that row
    ``moving_index`` is overwritten per candidate.  For the smooth modes
    one randomized anchor is computed at ``anchor_heading`` and each
    candidate is a first-order update over the rows incident to the
    moving vertex, falling back to a randomized evaluation when the
    anchor's singular-value gap is too small.
    """
    objectives = np.full(len(candidates), -np.inf)
    smooth_mode = config.mode in (PlannerMode.RS, PlannerMode.RSV)

    def place(heading: float) -> None:
        p = _displaced(base_position, heading, config)
        points[moving_index, 0] = p.x
        points[moving_index, 1] = p.y

    if not smooth_mode:
        for c, heading in enumerate(candidates):
            place(float(heading))
            entries = matrix_entries(points, edges)
            try:
                if config.mode is PlannerMode.FULL:
                    objectives[c] = value_from_entries(entries, index, FullSvd())
                else:
                    seed = int(seed_gen.integers(2 ** 63))
                    values, _ = randomized_singular_values(entries, index, seed)
                    objectives[c] = values[index - 1]
            except UnderdeterminedFrameworkError:
                objectives[c] = -np.inf
        return objectives

    alpha0 = anchor_heading if anchor_heading is not None else float(candidates[0])
    place(alpha0)
    anchor_entries = matrix_entries(points, edges)
    if index > min(anchor_entries.shape):
        return objectives
    anchor = randomized_svd(anchor_entries, index, int(seed_gen.integers(2 ** 63)))
    touched = np.where((edges == moving_index).any(axis=1))[0]
    touched_edges = edges[touched]
    base_rows = anchor_entries[touched]
    for c, heading in enumerate(candidates):
        place(float(heading))
        new_rows = matrix_entries(points, touched_edges)
        estimate = smooth_sv_rows(anchor, touched, base_rows, new_rows, index)
        if estimate.unreliable:
            entries = matrix_entries(points, edges)
            seed = int(seed_gen.integers(2 ** 63))
            values, _ = randomized_singular_values(entries, index, seed)
            objectives[c] = values[index - 1]
        else:
            objectives[c] = max(estimate.value, 0.0)
    return objectives


def select_waypoints(state: PlannerState, config: PlannerConfig) -> tuple[list[Waypoint], bool]:
    """Next waypoint for every UAV, in uav_id order.

    UAVs are planned sequentially; each later UAV's framework includes
    the hypothetical positions already chosen for earlier UAVs.  Ties go
    to the heading closest to the previous one, then to the smaller
    heading.  When every candidate is invalid the UAV keeps its previous
    heading (straight flight) and the epoch is flagged.
    """
    target = planning_target(state.history, state.uavs, state.target_estimate)
    base_vertices = _chain_order(state.history)
    next_epoch = max((v.epoch for v in base_vertices), default=state.epoch) + config.epoch_dt_s
    committed: list[UavVertex] = []
    waypoints: list[Waypoint] = []
    flagged = False
    for uav in sorted(state.uavs, key=lambda u: u.uav_id):
        vertices = base_vertices + committed
        u_count = len(vertices) + 1
        points = np.empty((u_count + 1, 2))
        for i, v in enumerate(vertices):
            points[i] = (v.position.x, v.position.y)
        points[u_count] = (target.x, target.y)
        edge_list = scaffold_edges(u_count) + [(i, u_count) for i in range(u_count)]
        edges = np.asarray(edge_list, dtype=int)
        index = 2 * (u_count + 1) - 3
        candidates = candidate_headings(uav.heading_deg, config)
        objectives = _sweep_objectives(points, edges, u_count - 1, candidates,
                                       uav.position, index, config,
                                       uav.heading_deg, state.seed_gen)
        if not np.any(np.isfinite(objectives)):
            flagged = True
            heading = uav.heading_deg if uav.heading_deg is not None else 0.0
            best_objective = math.nan
        else:
            best_key = None
            heading = 0.0
            best_objective = -math.inf
            for h, obj in zip(candidates, objectives):
                key = (-obj, _angular_delta(float(h), uav.heading_deg), float(h))
                if best_key is None or key < best_key:
                    best_key = key
                    heading = float(h)
                    best_objective = float(obj)
        position = _displaced(uav.position, heading, config)
        waypoints.append(Waypoint(uav.uav_id, position, heading, best_objective))
        committed.append(UavVertex(position, next_epoch, uav.uav_id))
    return waypoints, flagged


def prune(history: PrunedHistory, new_measurement: RssMeasurement,
          target_anchor: Vec2, seed_gen: np.random.Generator) -> PrunedHistory:
    """Insert a measurement, then evict the lowest-priority element if the
    capacity is exceeded.

    Priority of an element is the leave-one-out drop in rigidity value:
    objective of the full framework minus the objective with that
    element's vertex (and incident bars) removed, both computed with the
    randomized backend.  The newest measurement always enters before any
    eviction happens.
    """
    measurements = [m for m, _ in history.entries] + [new_measurement]
    ordered = sorted(measurements, key=lambda m: (m.epoch, m.uav_id))

    def objective(ms: Sequence[RssMeasurement]) -> float:
        framework = build_framework(_chain_order(ms), target_anchor)
        seed = int(seed_gen.integers(2 ** 63))
        try:
            return rigidity_value(framework, RandomizedSvd(seed))
        except UnderdeterminedFrameworkError:
            return 0.0

    full_value = objective(ordered)
    scored: list[tuple[RssMeasurement, float]] = []
    for i, m in enumerate(ordered):
        if len(ordered) == 1:
            scored.append((m, math.inf))
            continue
        reduced = ordered[:i] + ordered[i + 1:]
        scored.append((m, full_value - objective(reduced)))
    scored.sort(key=lambda e: (-e[1], e[0].epoch, e[0].uav_id))
    if len(scored) > history.capacity:
        scored = scored[:history.capacity]
    return PrunedHistory(entries=tuple(scored), capacity=history.capacity)
