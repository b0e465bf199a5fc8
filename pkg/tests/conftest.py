import numpy as np
import pytest

from rigid_planner import RssMeasurement, Vec2
from rigid_planner.rigidity import UavVertex


def random_history(rng: np.random.Generator, n_uav: int, span: float = 60.0):
    """Generic UAV vertex history: positions uniform in a box."""
    pts = rng.uniform(-span, span, size=(n_uav, 2))
    return [UavVertex(Vec2(float(x), float(y)), epoch=float(i + 1), uav_id=0)
            for i, (x, y) in enumerate(pts)]


def random_target(rng: np.random.Generator, span: float = 60.0) -> Vec2:
    return Vec2(float(rng.uniform(-span, span)), float(rng.uniform(-span, span)))


def measurements_at(positions, rss=-40.0, uav_id=0):
    """Measurements with fixed rss at given (x, y) positions, epochs 1..n."""
    return [RssMeasurement(uav_id=uav_id, position=Vec2(float(x), float(y)),
                           epoch=float(i + 1), rss_dbm=rss)
            for i, (x, y) in enumerate(positions)]


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
