"""Two-stage circle refinement.

Stage one moves the center to the crossing of the perpendicular bisectors of
two sampled chords.  Stage two refits the circle by algebraic least squares
over edge points near the circumference whose gradients point radially.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateChordError, InvalidParameterError
from .preprocess import EdgePoint, EdgeSegment
from .sampling import EPSILON_DEN, Circle, Cluster


@dataclass(frozen=True)
class RefineParams:
    """delta_d: half-width of the inlier band (px); align_min: minimum
    ``|cos|`` between a point's gradient and the radial direction."""

    delta_d: float = 2.0
    align_min: float = 0.9

    def __post_init__(self):
        if not self.delta_d > 0:
            raise InvalidParameterError(f"delta_d must be positive, got {self.delta_d}")
        if not 0 < self.align_min < 1:
            raise InvalidParameterError(f"align_min must lie in (0, 1), got {self.align_min}")


def chord_center(A1, A2, B1, B2) -> tuple[float, float]:
    """Intersection of the perpendicular bisectors of chords A1A2 and B1B2.

    Raises
    ------
    DegenerateChordError
        If the bisectors are parallel (or a chord has zero length).
    """
    ox, oy = float(A1[0]), float(A1[1])
    pts = [(float(p[0]) - ox, float(p[1]) - oy) for p in (A1, A2, B1, B2)]
    (x1, y1), (x2, y2), (x3, y3), (x4, y4) = pts
    # Bisector of P-Q: (Q - P) . X = (|Q|^2 - |P|^2) / 2
    u1, v1 = x2 - x1, y2 - y1
    u2, v2 = x4 - x3, y4 - y3
    c1 = 0.5 * (x2 * x2 + y2 * y2 - x1 * x1 - y1 * y1)
    c2 = 0.5 * (x4 * x4 + y4 * y4 - x3 * x3 - y3 * y3)
    det = u1 * v2 - v1 * u2
    if abs(det) < EPSILON_DEN:
        raise DegenerateChordError("chord bisectors are parallel")
    a = (c1 * v2 - v1 * c2) / det
    b = (u1 * c2 - c1 * u2) / det
    return a + ox, b + oy


def inlier_mask(segment: EdgeSegment, c: Circle, params: RefineParams = RefineParams()) -> np.ndarray:
    """Boolean mask over ``segment`` of active, in-band, radially aligned points."""
    dx = segment.xy[:, 0] - c.a
    dy = segment.xy[:, 1] - c.b
    dist = np.hypot(dx, dy)
    ok = segment.active & (dist >= 1e-9)
    safe = np.where(ok, dist, 1.0)
    align = np.abs(segment.g[:, 0] * dx + segment.g[:, 1] * dy) / safe
    return ok & (np.abs(dist - c.r) <= params.delta_d) & (align >= params.align_min)


def select_inliers(segment: EdgeSegment, c: Circle, params: RefineParams = RefineParams()) -> list[EdgePoint]:
    """Active points within ``delta_d`` of the circumference whose gradients
    pass the alignment check.  A point sitting on the center is excluded."""
    return [segment.point(i) for i in np.flatnonzero(inlier_mask(segment, c, params))]


def _as_xy(points) -> np.ndarray:
    if isinstance(points, np.ndarray):
        return np.asarray(points, dtype=np.float64).reshape(-1, 2)
    return np.array([(p[0], p[1]) for p in points], dtype=np.float64).reshape(-1, 2)


def algebraic_coefficients(c: Circle) -> tuple[float, float, float]:
    """``(D, E, F)`` with ``x^2 + y^2 + D x + E y + F = 0`` describing ``c``."""
    return -2.0 * c.a, -2.0 * c.b, c.a * c.a + c.b * c.b - c.r * c.r


def algebraic_residual(points, D: float, E: float, F: float) -> float:
    xy = _as_xy(points)
    x, y = xy[:, 0], xy[:, 1]
    return float(np.sum((x * x + y * y + D * x + E * y + F) ** 2))


def least_squares_refine(inliers, seed: Circle) -> tuple[Circle, bool]:
    """Kasa fit: minimize sum((x^2 + y^2 + D x + E y + F)^2) over the inliers.

    Returns ``(circle, degraded)``.  With fewer than three points, or a
    singular (collinear) system, ``seed`` comes back unchanged and
    ``degraded`` is True.
    """
    xy = _as_xy(inliers)
    if len(xy) < 3:
        return seed, True
    m = xy.mean(axis=0)
    x = xy[:, 0] - m[0]
    y = xy[:, 1] - m[1]
    A = np.column_stack([x, y, np.ones_like(x)])
    rhs = -(x * x + y * y)
    sol, _, rank, sv = np.linalg.lstsq(A, rhs, rcond=None)
    if rank < 3 or sv[-1] <= 1e-9 * sv[0]:
        return seed, True
    D, E, F = sol
    a = -0.5 * D
    b = -0.5 * E
    r2 = a * a + b * b - F
    if not r2 > 0:
        return seed, True
    return Circle(a + m[0], b + m[1], math.sqrt(r2)), False


def chord_stage(cluster: Cluster, rng: np.random.Generator, attempts: int = 5) -> Circle | None:
    """Stage one: bisector crossing of two member chords drawn without replacement.

    Returns ``None`` when every attempt hits a degenerate chord pair.
    """
    members = cluster.members
    if len(members) < 2:
        return None
    for _ in range(attempts):
        i, j = rng.choice(len(members), size=2, replace=False)
        m1, m2 = members[i], members[j]
        try:
            a, b = chord_center(m1.A, m1.B, m2.A, m2.B)
        except DegenerateChordError:
            continue
        pts = (m1.A, m1.B, m2.A, m2.B)
        r = sum(math.hypot(p.x - a, p.y - b) for p in pts) / 4.0
        return Circle(a, b, r)
    return None


def refine_candidate(
    cluster: Cluster,
    segment: EdgeSegment,
    params: RefineParams,
    rng: np.random.Generator,
    attempts: int = 5,
    rounds: int = 3,
) -> Circle:
    """Full two-stage refinement of a cluster against its edge segment.

    A stage-one center that leaves the cluster's search range is discarded in
    favour of the cluster mean.  Stage two is repeated (re-selecting inliers
    around the latest fit) until the circle moves less than 1e-6 px or
    ``rounds`` fits have run.
    """
    mean = cluster.circle
    seed = chord_stage(cluster, rng, attempts)
    if seed is None or math.dist(seed, mean) > cluster.search_range:
        seed = mean
    current = seed
    for _ in range(rounds):
        mask = inlier_mask(segment, current, params)
        fitted, degraded = least_squares_refine(segment.xy[mask], current)
        if degraded:
            break
        moved = math.dist(fitted, current)
        current = fitted
        if moved < 1e-6:
            break
    return current
