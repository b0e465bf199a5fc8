"""Synthetic RSS measurements and target position estimation.

RSS follows a log-distance path-loss law with log-normal shadowing:
mean received power P0 - 10 * beta * log10(s / s0) plus zero-mean Gaussian
noise in dB.  The estimator is nonlinear least squares on the dB
residuals, which is the maximum-likelihood estimate under that model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .rigidity import Vec2

# Model evaluations clamp range below this to dodge the log singularity.
MIN_RANGE_M = 0.1

GRID_CELL_M = 5.0
GRID_MARGIN_M = 300.0
GN_STEP_TOL_M = 1e-4
GN_MAX_ITERS = 50


@dataclass(frozen=True)
class RssModel:
    """Path-loss parameters: reference power (dBm at ``ref_distance_m``),
    path-loss exponent, shadowing standard deviation in dB."""

    p0_dbm: float = 3.0
    ref_distance_m: float = 1.0
    path_loss_exponent: float = 2.0
    sigma_db: float = 5.0

    def __post_init__(self) -> None:
        if self.ref_distance_m <= 0:
            raise ValueError("reference distance must be positive")
        if self.path_loss_exponent <= 0:
            raise ValueError("path-loss exponent must be positive")
        if self.sigma_db < 0:
            raise ValueError("shadowing sigma must be nonnegative")


@dataclass(frozen=True)
class RssMeasurement:
    uav_id: int
    position: Vec2
    epoch: float
    rss_dbm: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.rss_dbm):
            raise ValueError("non-finite rss")
        if self.epoch < 0:
            raise ValueError("negative epoch")


def rss_mean(model: RssModel, uav_pos: Vec2, target: Vec2) -> float:
    """Mean received power in dBm at the given geometry."""
    s = uav_pos.distance_to(target)
    if s == 0.0:
        raise ValueError("singular range: measurement point coincides with target")
    return model.p0_dbm - 10.0 * model.path_loss_exponent * math.log10(s / model.ref_distance_m)


def sample_rss(model: RssModel, uav_pos: Vec2, target: Vec2,
               rng: np.random.Generator, uav_id: int = 0, epoch: float = 0.0) -> RssMeasurement:
    """One noisy measurement; deterministic for a given generator state."""
    noise = float(rng.normal(0.0, model.sigma_db))
    return RssMeasurement(uav_id=uav_id, position=uav_pos, epoch=epoch,
                          rss_dbm=rss_mean(model, uav_pos, target) + noise)


def _model_means(points: np.ndarray, rx: np.ndarray, ry: np.ndarray,
                 model: RssModel) -> np.ndarray:
    """Mean RSS for every (candidate, measurement) pair.

    rx, ry broadcast against each other; result has shape
    broadcast(rx, ry).shape + (len(points),).
    """
    dx = rx[..., None] - points[:, 0]
    dy = ry[..., None] - points[:, 1]
    s = np.maximum(np.hypot(dx, dy), MIN_RANGE_M)
    return model.p0_dbm - 10.0 * model.path_loss_exponent * np.log10(s / model.ref_distance_m)


def negative_log_likelihood(points: np.ndarray, rss: np.ndarray,
                            candidate: np.ndarray, model: RssModel) -> float:
    """Sum of squared dB residuals at a candidate target position."""
    mu = _model_means(points, np.asarray(candidate[0]), np.asarray(candidate[1]), model)
    return float(np.sum((rss - mu) ** 2))


def _gauss_newton(points: np.ndarray, rss: np.ndarray, start: np.ndarray,
                  model: RssModel) -> tuple[np.ndarray, bool]:
    """Refine a candidate position; returns (position, step_converged)."""
    coef = 10.0 * model.path_loss_exponent / math.log(10.0)
    r = start.astype(float).copy()
    for _ in range(GN_MAX_ITERS):
        d = r - points
        s2 = np.maximum(np.einsum("ij,ij->i", d, d), MIN_RANGE_M ** 2)
        mu = model.p0_dbm - 5.0 * model.path_loss_exponent * np.log10(s2 / model.ref_distance_m ** 2)
        e = rss - mu
        jac = coef * d / s2[:, None]
        jtj = jac.T @ jac
        jte = jac.T @ e
        try:
            step = np.linalg.solve(jtj + 1e-12 * np.eye(2), -jte)
        except np.linalg.LinAlgError:
            return r, False
        if not np.all(np.isfinite(step)):
            return r, False
        r = r + step
        if float(np.hypot(step[0], step[1])) < GN_STEP_TOL_M:
            return r, True
    return r, False


def _grid_axes(points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    xs = np.arange(points[:, 0].min() - GRID_MARGIN_M,
                   points[:, 0].max() + GRID_MARGIN_M + GRID_CELL_M, GRID_CELL_M)
    ys = np.arange(points[:, 1].min() - GRID_MARGIN_M,
                   points[:, 1].max() + GRID_MARGIN_M + GRID_CELL_M, GRID_CELL_M)
    return xs, ys


def _grid_nll(points: np.ndarray, rss: np.ndarray, xs: np.ndarray, ys: np.ndarray,
              model: RssModel) -> np.ndarray:
    """NLL surface over the grid, accumulated measurement by measurement to
    bound the temporary arrays."""
    gx = xs[None, :]
    gy = ys[:, None]
    nll = np.zeros((ys.size, xs.size))
    for p, z in zip(points, rss):
        s = np.maximum(np.hypot(gx - p[0], gy - p[1]), MIN_RANGE_M)
        mu = model.p0_dbm - 10.0 * model.path_loss_exponent * np.log10(s / model.ref_distance_m)
        nll += (z - mu) ** 2
    return nll


def _refine_from_grid(points: np.ndarray, rss: np.ndarray, xs: np.ndarray,
                      ys: np.ndarray, nll: np.ndarray,
                      model: RssModel) -> tuple[Vec2, bool]:
    iy, ix = np.unravel_index(int(np.argmin(nll)), nll.shape)
    best_cell = np.array([xs[ix], ys[iy]])
    grid_nll = float(nll[iy, ix])
    refined, stepped = _gauss_newton(points, rss, best_cell, model)
    if stepped and negative_log_likelihood(points, rss, refined, model) <= grid_nll:
        return Vec2(float(refined[0]), float(refined[1])), True
    return Vec2(float(best_cell[0]), float(best_cell[1])), False


def estimate_target(measurements: Sequence[RssMeasurement],
                    model: RssModel) -> tuple[Vec2, bool]:
    """Maximum-likelihood target position from accumulated measurements.

    Coarse grid search over the measurement bounding box inflated by
    300 m at 5 m cells, then Gauss-Newton refinement from the best cell
    until the step drops below 1e-4 m or 50 iterations.  Returns the grid
    minimum with converged=False when refinement diverges.
    """
    if len(measurements) < 3:
        raise ValueError("underdetermined: need at least 3 measurements")
    points = np.array([[m.position.x, m.position.y] for m in measurements])
    rss = np.array([m.rss_dbm for m in measurements])
    xs, ys = _grid_axes(points)
    nll = _grid_nll(points, rss, xs, ys, model)
    return _refine_from_grid(points, rss, xs, ys, nll, model)


class RunningEstimator:
    """Incremental variant of ``estimate_target`` for long episodes.

    The grid NLL is a sum over measurements, so new measurements are
    accumulated onto a fixed grid instead of rebuilding the surface each
    epoch.  Grid bounds are anchored at the first batch's bounding box
    (inflated by the same 300 m margin); the refinement stage always uses
    the full measurement list, so the grid only seeds Gauss-Newton.
    """

    def __init__(self, model: RssModel) -> None:
        self.model = model
        self._xs: Optional[np.ndarray] = None
        self._ys: Optional[np.ndarray] = None
        self._nll: Optional[np.ndarray] = None
        self._points: list[list[float]] = []
        self._rss: list[float] = []

    def add(self, measurement: RssMeasurement) -> None:
        p = [measurement.position.x, measurement.position.y]
        self._points.append(p)
        self._rss.append(measurement.rss_dbm)
        if self._xs is None:
            self._xs, self._ys = _grid_axes(np.array(self._points))
            self._nll = _grid_nll(np.array(self._points), np.array(self._rss),
                                  self._xs, self._ys, self.model)
        else:
            self._nll += _grid_nll(np.array([p]), np.array([self._rss[-1]]),
                                   self._xs, self._ys, self.model)

    def estimate(self) -> tuple[Vec2, bool]:
        if len(self._points) < 3:
            raise ValueError("underdetermined: need at least 3 measurements")
        assert self._nll is not None and self._xs is not None and self._ys is not None
        points = np.array(self._points)
        rss = np.array(self._rss)
        return _refine_from_grid(points, rss, self._xs, self._ys, self._nll, self.model)
