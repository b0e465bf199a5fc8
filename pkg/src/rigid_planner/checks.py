"""Fast self-checks over the numerical core.

Backs the ``validate`` CLI command: rank law of the framework builder,
randomized-SVD fidelity, first-order update accuracy, and estimator
sanity, each reported as a pass/fail row.  The RIGID_PLANNER_FAULT
environment variable injects known defects for negative-control testing.
"""

from __future__ import annotations

import os
from typing import Callable, NamedTuple

import numpy as np

from .measurement import RssModel, RssMeasurement, estimate_target
from .planner import PlannerConfig, candidate_headings
from .rigidity import UavVertex, Vec2, build_framework, build_rigidity_matrix, rigidity_index
from .svd import full_svd, randomized_singular_values, smooth_sv

FAULT_ENV = "RIGID_PLANNER_FAULT"
FAULT_INDEX_OFF_BY_ONE = "sigma-index-off-by-one"


class CheckResult(NamedTuple):
    name: str
    passed: bool
    detail: str


def _index_offset() -> int:
    return 1 if os.environ.get(FAULT_ENV) == FAULT_INDEX_OFF_BY_ONE else 0


def _random_history(rng: np.random.Generator, n_uav: int) -> list[UavVertex]:
    pts = rng.uniform(-60.0, 60.0, size=(n_uav, 2))
    return [UavVertex(Vec2(float(x), float(y)), epoch=float(i + 1), uav_id=0)
            for i, (x, y) in enumerate(pts)]


def check_rank_law(samples: int, rng: np.random.Generator) -> CheckResult:
    """Generic frameworks have rank 2|V| - 3: the singular value at the
    rigidity index is positive and the next one vanishes."""
    offset = _index_offset()
    for _ in range(samples):
        n_uav = int(rng.integers(2, 25))
        fw = build_framework(_random_history(rng, n_uav),
                             Vec2(float(rng.uniform(-60, 60)), float(rng.uniform(-60, 60))))
        r = build_rigidity_matrix(fw)
        idx = rigidity_index(fw) + offset
        s = np.linalg.svd(r.entries, compute_uv=False)
        if idx > min(r.m, r.n):
            return CheckResult("rank-law", False, f"index {idx} out of range for {r.m}x{r.n}")
        if s[idx - 1] <= 1e-9 * s[0]:
            return CheckResult("rank-law", False,
                               f"sigma at index {idx} vanished ({s[idx - 1]:.3e})")
        if idx < len(s) and s[idx] > 1e-9 * s[0]:
            return CheckResult("rank-law", False,
                               f"sigma beyond the index is {s[idx]:.3e}, expected ~0")
    return CheckResult("rank-law", True, f"{samples} random frameworks")


def check_randomized_fidelity(samples: int, rng: np.random.Generator) -> CheckResult:
    """Randomized singular value at the rigidity index matches the exact
    one to 1e-6 relative."""
    offset = _index_offset()
    worst = 0.0
    for _ in range(samples):
        n_uav = int(rng.integers(2, 30))
        fw = build_framework(_random_history(rng, n_uav),
                             Vec2(float(rng.uniform(-60, 60)), float(rng.uniform(-60, 60))))
        r = build_rigidity_matrix(fw)
        idx = rigidity_index(fw) + offset
        if idx > min(r.m, r.n):
            return CheckResult("randomized-fidelity", False, f"index {idx} out of range")
        exact = full_svd(r.entries, idx).S[idx - 1]
        approx, _ = randomized_singular_values(r.entries, idx, int(rng.integers(2 ** 63)))
        rel = abs(approx[idx - 1] - exact) / max(exact, 1e-300)
        worst = max(worst, rel)
        if rel > 1e-6:
            return CheckResult("randomized-fidelity", False, f"relative error {rel:.3e}")
    return CheckResult("randomized-fidelity", True,
                       f"{samples} matrices, worst relative error {worst:.2e}")


def check_smooth_exactness() -> CheckResult:
    """A perturbation along a singular direction of a diagonal matrix is
    tracked exactly."""
    r0 = np.diag([2.0, 1.0])
    anchor = full_svd(r0, 2)
    r1 = np.diag([2.0 + 1e-3, 1.0])
    est = smooth_sv(anchor, r0, r1, 1)
    err = abs(est.value - (2.0 + 1e-3))
    return CheckResult("smooth-exactness", err <= 1e-12, f"error {err:.2e}")


def check_smooth_taylor(samples: int, rng: np.random.Generator) -> CheckResult:
    """Halving the perturbation shrinks the update error about fourfold."""
    ratios = []
    for _ in range(samples):
        r0 = rng.standard_normal((6, 8))
        anchor = full_svd(r0, 6)
        direction = rng.standard_normal((6, 8))
        direction /= np.linalg.norm(direction)
        delta = 1e-2 * np.linalg.norm(r0, 2)
        j = 3
        errs = []
        for scale in (delta, delta / 2):
            r1 = r0 + scale * direction
            exact = full_svd(r1, j).S[j - 1]
            est = smooth_sv(anchor, r0, r1, j)
            errs.append(abs(est.value - exact))
        if errs[1] > 0:
            ratios.append(errs[0] / errs[1])
    mean = float(np.mean(ratios))
    return CheckResult("smooth-taylor-order", 3.0 <= mean <= 5.0,
                       f"mean error ratio {mean:.2f} over {len(ratios)} pairs")


def check_estimator_noiseless() -> CheckResult:
    """Noise-free measurements from non-collinear points recover the
    target to a millimeter."""
    model = RssModel(sigma_db=0.0)
    target = Vec2(3.0, -7.0)
    positions = [Vec2(-40.0, -10.0), Vec2(25.0, -55.0), Vec2(10.0, 42.0), Vec2(-20.0, 30.0)]
    measurements = []
    from .measurement import rss_mean
    for i, p in enumerate(positions):
        measurements.append(RssMeasurement(uav_id=0, position=p, epoch=float(i + 1),
                                           rss_dbm=rss_mean(model, p, target)))
    estimate, converged = estimate_target(measurements, model)
    err = estimate.distance_to(target)
    return CheckResult("estimator-noiseless", converged and err <= 1e-3, f"error {err:.2e} m")


def check_heading_counts() -> CheckResult:
    """Turn-limited sweep has 41 candidates; the unconstrained first sweep
    has 360."""
    cfg = PlannerConfig()
    limited = candidate_headings(90.0, cfg)
    full_circle = candidate_headings(None, cfg)
    ok = len(limited) == 41 and len(full_circle) == 360
    return CheckResult("heading-counts", ok, f"{len(limited)} limited, {len(full_circle)} full")


def run_validation(quick: bool = False, seed: int = 20240) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    n_rank = 20 if quick else 60
    n_fid = 15 if quick else 50
    n_taylor = 25 if quick else 100
    return [
        check_rank_law(n_rank, rng),
        check_randomized_fidelity(n_fid, rng),
        check_smooth_exactness(),
        check_smooth_taylor(n_taylor, rng),
        check_estimator_noiseless(),
        check_heading_counts(),
    ]
