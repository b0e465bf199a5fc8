"""Framework graph over UAV measurement points and the target, and its
rigidity matrix.

The planning objective is the singular value of the rigidity matrix at the
rigidity index 2|V| - 3: the smallest singular value that is nonzero for a
generically rigid framework in the plane.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .svd import (
    FullSvd,
    RandomizedSvd,
    SmoothSvd,
    SvdBackend,
    full_svd,
    randomized_singular_values,
    smooth_sv,
)

DIMENSION = 2


class UnderdeterminedFrameworkError(ValueError):
    """The rigidity index exceeds min(m, n); more measurements are needed."""


@dataclass(frozen=True)
class Vec2:
    x: float
    y: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite coordinates ({self.x}, {self.y})")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y], dtype=float)

    def distance_to(self, other: "Vec2") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


class UavVertex(NamedTuple):
    position: Vec2
    epoch: float
    uav_id: int


@dataclass(frozen=True)
class Framework:
    """Bar framework: UAV measurement vertices plus one target vertex.

    Vertices are indexed 0..u-1 in ``uav_vertices`` order; the target is
    vertex u.  Edges are undirected index pairs (i < j).
    """

    uav_vertices: tuple[UavVertex, ...]
    target_vertex: Vec2
    edges: tuple[tuple[int, int], ...]
    dimension: int = DIMENSION

    @property
    def vertex_count(self) -> int:
        return len(self.uav_vertices) + 1

    def positions(self) -> np.ndarray:
        """(|V|, 2) coordinate array, target last."""
        pts = np.empty((self.vertex_count, 2))
        for i, v in enumerate(self.uav_vertices):
            pts[i, 0] = v.position.x
            pts[i, 1] = v.position.y
        pts[-1, 0] = self.target_vertex.x
        pts[-1, 1] = self.target_vertex.y
        return pts


@dataclass(frozen=True)
class RigidityMatrix:
    """Dense rigidity matrix with one row per edge.

    Row r for edge (i, j) carries (p_i - p_j) in vertex i's column block
    and the negation in vertex j's block; everything else is zero.
    ``row_edge_map[r]`` is the index into the framework's edge list.
    """

    entries: np.ndarray
    row_edge_map: tuple[int, ...]

    @property
    def m(self) -> int:
        return self.entries.shape[0]

    @property
    def n(self) -> int:
        return self.entries.shape[1]


def scaffold_edges(n_uav: int) -> list[tuple[int, int]]:
    """Edges tying the UAV vertices into a single rigid body.

    The relative geometry of past measurement points is known exactly, so
    a minimally rigid scaffold is enough: each vertex after the first is
    barred to its predecessor and to the vertex at half its index.  The
    halved-index bars keep the graph diameter logarithmic (a plain chain
    grows floppy as the history lengthens), the edge count stays linear,
    and the generic rank 2|V| - 3 is preserved.  Edges are only appended
    as vertices append, so growing a history never removes rows.
    """
    edges: list[tuple[int, int]] = []
    for i in range(1, n_uav):
        edges.append((i - 1, i))
        if i >= 2:
            far = i // 2
            if far == i - 1:
                far = i - 2
            edges.append((far, i))
    return edges


def build_framework(uav_history: Sequence[UavVertex], target_estimate: Vec2) -> Framework:
    """Assemble the framework for a measurement history and target anchor.

    Every UAV vertex gets one ranging bar to the target; the UAV vertices
    themselves are rigidly scaffolded to each other (their mutual
    distances carry no target information but pin down the body).
    """
    if len(uav_history) == 0:
        raise ValueError("empty framework")
    u = len(uav_history)
    edges = scaffold_edges(u)
    edges.extend((i, u) for i in range(u))
    return Framework(
        uav_vertices=tuple(uav_history),
        target_vertex=target_estimate,
        edges=tuple(edges),
    )


def matrix_entries(points: np.ndarray, edges: np.ndarray) -> np.ndarray:
    """Rigidity matrix entries for coordinate array ``points`` (V, 2) and
    integer edge array ``edges`` (m, 2); rows follow the edge order given.
    """
    n_vertices = points.shape[0]
    m = edges.shape[0]
    out = np.zeros((m, 2 * n_vertices))
    if m == 0:
        return out
    i = edges[:, 0]
    j = edges[:, 1]
    d = points[i] - points[j]
    rows = np.arange(m)
    out[rows, 2 * i] = d[:, 0]
    out[rows, 2 * i + 1] = d[:, 1]
    out[rows, 2 * j] = -d[:, 0]
    out[rows, 2 * j + 1] = -d[:, 1]
    return out


def build_rigidity_matrix(framework: Framework) -> RigidityMatrix:
    """Dense rigidity matrix with rows ordered by sorted vertex pair.

    An edge between coincident points yields a zero row; that signals
    degenerate geometry, not an error.
    """
    order = sorted(range(len(framework.edges)),
                   key=lambda e: (min(framework.edges[e]), max(framework.edges[e])))
    edges = np.array([framework.edges[e] for e in order], dtype=int).reshape(-1, 2)
    entries = matrix_entries(framework.positions(), edges)
    return RigidityMatrix(entries=entries, row_edge_map=tuple(order))


def rigidity_index(framework: Framework) -> int:
    """1-based position of the objective singular value: d|V| - d(d+1)/2,
    which is 2|V| - 3 in the plane."""
    v = framework.vertex_count
    if v < 2:
        raise ValueError("need at least two vertices")
    d = framework.dimension
    return d * v - d * (d + 1) // 2


def value_from_entries(entries: np.ndarray, index: int, backend: SvdBackend) -> float:
    """Singular value at 1-based ``index`` computed by the chosen backend."""
    m, n = entries.shape
    if index > min(m, n):
        raise UnderdeterminedFrameworkError(
            f"underdetermined framework: index {index} exceeds min(m, n) = {min(m, n)}")
    if isinstance(backend, FullSvd):
        return float(full_svd(entries, index).S[index - 1])
    if isinstance(backend, RandomizedSvd):
        values, _ = randomized_singular_values(entries, index, backend.seed)
        return float(values[index - 1])
    if isinstance(backend, SmoothSvd):
        estimate = smooth_sv(backend.anchor, backend.anchor_matrix, entries, index)
        if estimate.unreliable and backend.fallback_seed is not None:
            values, _ = randomized_singular_values(entries, index, backend.fallback_seed)
            return float(values[index - 1])
        return max(estimate.value, 0.0)
    raise TypeError(f"unknown backend {backend!r}")


def rigidity_value(framework: Framework, backend: SvdBackend) -> float:
    """Objective value: the singular value at the rigidity index.

    Raises UnderdeterminedFrameworkError when the framework has too few
    edges for the index to exist; the caller must gather more
    measurements.
    """
    index = rigidity_index(framework)
    return value_from_entries(build_rigidity_matrix(framework).entries, index, backend)
