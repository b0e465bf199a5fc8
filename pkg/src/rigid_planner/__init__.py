"""UAV waypoint planning for RF target localization.

Waypoints maximize a rigidity-matrix singular value; three cost-reduction
backends (randomized SVD, first-order singular-value updates, vertex
pruning) are benchmarked against the exact-SVD baseline by the simulation
harness.
"""

from .measurement import (
    RssMeasurement,
    RssModel,
    RunningEstimator,
    estimate_target,
    rss_mean,
    sample_rss,
)
from .planner import (
    PlannerConfig,
    PlannerMode,
    PlannerState,
    PrunedHistory,
    UavState,
    Waypoint,
    candidate_headings,
    evaluate_candidate,
    prune,
    select_waypoints,
)
from .rigidity import (
    Framework,
    RigidityMatrix,
    UavVertex,
    UnderdeterminedFrameworkError,
    Vec2,
    build_framework,
    build_rigidity_matrix,
    rigidity_index,
    rigidity_value,
)
from .simulate import (
    EpisodeTrace,
    MetricsReport,
    ScenarioConfig,
    TimingRow,
    run_episode,
    run_monte_carlo,
    timing_profile,
)
from .svd import (
    FullSvd,
    RandomizedSvd,
    SmoothSvd,
    SvdResult,
    full_svd,
    randomized_svd,
    smooth_sv,
)

__version__ = "0.1.0"

__all__ = [
    "EpisodeTrace",
    "Framework",
    "FullSvd",
    "MetricsReport",
    "PlannerConfig",
    "PlannerMode",
    "PlannerState",
    "PrunedHistory",
    "RandomizedSvd",
    "RigidityMatrix",
    "RssMeasurement",
    "RssModel",
    "RunningEstimator",
    "ScenarioConfig",
    "SmoothSvd",
    "SvdResult",
    "TimingRow",
    "UavState",
    "UavVertex",
    "UnderdeterminedFrameworkError",
    "Vec2",
    "Waypoint",
    "build_framework",
    "build_rigidity_matrix",
    "candidate_headings",
    "estimate_target",
    "evaluate_candidate",
    "full_svd",
    "prune",
    "randomized_svd",
    "rigidity_index",
    "rigidity_value",
    "rss_mean",
    "run_episode",
    "run_monte_carlo",
    "sample_rss",
    "select_waypoints",
    "smooth_sv",
    "timing_profile",
]
