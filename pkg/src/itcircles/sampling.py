"""Isosceles-triangle pair sampling, baseline samplers and parameter clustering.

The scalar functions are the reference implementations used by the detector;
the ``*_batch`` variants apply the same arithmetic to arrays of samples and are
used by the voting harness in :mod:`itcircles.evaluation`.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import CollinearError, InvalidParameterError, NoIntersectionError
from .preprocess import EdgePoint

#: Guard for collinearity / parallelism tests (squared-pixel units).
EPSILON_DEN = 1e-12


class Circle(NamedTuple):
    a: float
    b: float
    r: float


@dataclass(frozen=True)
class SamplingParams:
    """Tolerances for pair and point sampling.

    delta_k : largest allowed difference of the two base-angle cosines.
    delta_p : pairs with ``|g(A) . g(B)| >= delta_p`` are rejected as parallel.
    t_r     : fourth-point distance tolerance of the four-point baseline (px).
    d_min   : minimum separation between sampled points (px).
    d0      : initial search range of a new cluster (px, in x/y/r space).
    d_cap   : optional upper bound on a cluster's search range; ``None`` = uncapped.
    """

    delta_k: float = 0.1
    delta_p: float = 0.92
    t_r: float = 1.5
    d_min: float = 3.0
    d0: float = 5.0
    d_cap: float | None = None

    def __post_init__(self):
        if not self.delta_k >= 0:
            raise InvalidParameterError(f"delta_k must be >= 0, got {self.delta_k}")
        if not 0 < self.delta_p < 1:
            raise InvalidParameterError(f"delta_p must lie in (0, 1), got {self.delta_p}")
        if not self.t_r > 0:
            raise InvalidParameterError(f"t_r must be positive, got {self.t_r}")
        if not self.d_min >= 0:
            raise InvalidParameterError(f"d_min must be >= 0, got {self.d_min}")
        if not self.d0 > 0:
            raise InvalidParameterError(f"d0 must be positive, got {self.d0}")
        if self.d_cap is not None and not self.d_cap >= self.d0:
            raise InvalidParameterError("d_cap must be >= d0")


# --------------------------------------------------------------------------
# Three- and four-point baselines


def fit_circle_3pt(p1, p2, p3) -> Circle:
    """Circle through three points.

    Evaluated relative to ``p1`` so large coordinates keep their precision.

    Raises
    ------
    CollinearError
        If the points are collinear (denominator below ``EPSILON_DEN``).
    """
    x1, y1 = float(p1[0]), float(p1[1])
    u2, v2 = float(p2[0]) - x1, float(p2[1]) - y1
    u3, v3 = float(p3[0]) - x1, float(p3[1]) - y1
    den = 4.0 * (u2 * v3 - u3 * v2)
    if abs(den) < EPSILON_DEN:
        raise CollinearError("points are collinear")
    s2 = u2 * u2 + v2 * v2
    s3 = u3 * u3 + v3 * v3
    a = (s2 * 2.0 * v3 - s3 * 2.0 * v2) / den
    b = (2.0 * u2 * s3 - 2.0 * u3 * s2) / den
    return Circle(a + x1, b + y1, math.hypot(a, b))


def check_4th_point(c: Circle, p4, t_r: float) -> bool:
    """True when ``p4`` lies within ``t_r`` of the circumference."""
    d = abs(math.hypot(float(p4[0]) - c.a, float(p4[1]) - c.b) - c.r)
    return d <= t_r


def fit_circle_3pt_batch(p1: np.ndarray, p2: np.ndarray, p3: np.ndarray):
    """Vectorized :func:`fit_circle_3pt`; returns ``(a, b, r, ok)`` arrays."""
    p1 = np.asarray(p1, dtype=np.float64)
    u2, v2 = (np.asarray(p2, dtype=np.float64) - p1).T
    u3, v3 = (np.asarray(p3, dtype=np.float64) - p1).T
    den = 4.0 * (u2 * v3 - u3 * v2)
    ok = np.abs(den) >= EPSILON_DEN
    safe = np.where(ok, den, 1.0)
    s2 = u2 * u2 + v2 * v2
    s3 = u3 * u3 + v3 * v3
    a = (s2 * 2.0 * v3 - s3 * 2.0 * v2) / safe
    b = (2.0 * u2 * s3 - 2.0 * u3 * s2) / safe
    return a + p1[:, 0], b + p1[:, 1], np.hypot(a, b), ok


# --------------------------------------------------------------------------
# Isosceles-triangle criteria


class ItsVerdict(enum.IntEnum):
    ACCEPT = 0
    TOO_CLOSE = 1
    NOT_ISOSCELES = 2
    PARALLEL = 3

    @property
    def label(self) -> str:
        return self.name.lower().replace("_", "-")


def its_check(A: EdgePoint, B: EdgePoint, params: SamplingParams = SamplingParams()) -> ItsVerdict:
    """Decide whether edge points ``A`` and ``B`` form an isosceles triangle
    with the circle center.

    The base-angle test runs first; the parallel-gradient test is evaluated
    only for pairs that pass it.  Pairs whose gradients are (anti)parallel are
    rejected, which also excludes near-diametral pairs.
    """
    dx = float(B.x - A.x)
    dy = float(B.y - A.y)
    dist = math.hypot(dx, dy)
    if dist < params.d_min or dist == 0.0:
        return ItsVerdict.TOO_CLOSE
    cos1 = (A.gx * dx + A.gy * dy) / dist
    cos2 = -(B.gx * dx + B.gy * dy) / dist
    if abs(cos1 - cos2) > params.delta_k:
        return ItsVerdict.NOT_ISOSCELES
    if abs(A.gx * B.gx + A.gy * B.gy) >= params.delta_p:
        return ItsVerdict.PARALLEL
    return ItsVerdict.ACCEPT


def its_estimate(A: EdgePoint, B: EdgePoint) -> tuple[tuple[float, float], float]:
    """Center where the two gradient lines cross, and the mean distance to it.

    Full lines are intersected, so both dark-on-bright and bright-on-dark
    circles work.

    Raises
    ------
    NoIntersectionError
        If the gradient directions are parallel.
    """
    cross = A.gx * B.gy - A.gy * B.gx
    if abs(cross) < EPSILON_DEN:
        raise NoIntersectionError("gradient lines are parallel")
    ex = float(B.x - A.x)
    ey = float(B.y - A.y)
    t = (ex * B.gy - ey * B.gx) / cross
    cx = A.x + t * A.gx
    cy = A.y + t * A.gy
    radius = 0.5 * (math.hypot(A.x - cx, A.y - cy) + math.hypot(B.x - cx, B.y - cy))
    return (cx, cy), radius


def its_check_batch(a_xy, a_g, b_xy, b_g, params: SamplingParams = SamplingParams()) -> np.ndarray:
    """Vectorized :func:`its_check`; returns an array of :class:`ItsVerdict` codes."""
    d = np.asarray(b_xy, dtype=np.float64) - np.asarray(a_xy, dtype=np.float64)
    a_g = np.asarray(a_g, dtype=np.float64)
    b_g = np.asarray(b_g, dtype=np.float64)
    dist = np.hypot(d[:, 0], d[:, 1])
    close = (dist < params.d_min) | (dist == 0.0)
    safe = np.where(close, 1.0, dist)
    cos1 = np.einsum("ij,ij->i", a_g, d) / safe
    cos2 = -np.einsum("ij,ij->i", b_g, d) / safe
    iso = np.abs(cos1 - cos2) <= params.delta_k
    par = np.abs(np.einsum("ij,ij->i", a_g, b_g)) >= params.delta_p
    out = np.full(len(d), int(ItsVerdict.ACCEPT), dtype=np.int8)
    out[par] = ItsVerdict.PARALLEL
    out[~iso] = ItsVerdict.NOT_ISOSCELES
    out[close] = ItsVerdict.TOO_CLOSE
    return out


def its_estimate_batch(a_xy, a_g, b_xy, b_g):
    """Vectorized :func:`its_estimate`; returns ``(cx, cy, r, ok)`` arrays."""
    a_xy = np.asarray(a_xy, dtype=np.float64)
    b_xy = np.asarray(b_xy, dtype=np.float64)
    a_g = np.asarray(a_g, dtype=np.float64)
    b_g = np.asarray(b_g, dtype=np.float64)
    cross = a_g[:, 0] * b_g[:, 1] - a_g[:, 1] * b_g[:, 0]
    ok = np.abs(cross) >= EPSILON_DEN
    e = b_xy - a_xy
    t = (e[:, 0] * b_g[:, 1] - e[:, 1] * b_g[:, 0]) / np.where(ok, cross, 1.0)
    cx = a_xy[:, 0] + t * a_g[:, 0]
    cy = a_xy[:, 1] + t * a_g[:, 1]
    r = 0.5 * (np.hypot(a_xy[:, 0] - cx, a_xy[:, 1] - cy) + np.hypot(b_xy[:, 0] - cx, b_xy[:, 1] - cy))
    return cx, cy, r, ok


# --------------------------------------------------------------------------
# Parameter-space clustering


class ItPair(NamedTuple):
    """An accepted sample: a chord ``A``-``B`` and the circle it suggests."""

    A: EdgePoint
    B: EdgePoint
    center: tuple[float, float]
    radius: float


@dataclass
class Cluster:
    """Running-mean circle hypothesis with a growing search range."""

    x: float
    y: float
    r: float
    search_range: float
    members: list = field(default_factory=list)

    @property
    def n(self) -> int:
        return len(self.members)

    @property
    def circle(self) -> Circle:
        return Circle(self.x, self.y, self.r)

    def distance(self, pair: ItPair) -> float:
        return math.sqrt((pair.center[0] - self.x) ** 2 + (pair.center[1] - self.y) ** 2 + (pair.radius - self.r) ** 2)

    def absorb(self, pair: ItPair, d_cap: float | None = None) -> None:
        n = self.n
        x = (n * self.x + pair.center[0]) / (n + 1)
        y = (n * self.y + pair.center[1]) / (n + 1)
        r = (n * self.r + pair.radius) / (n + 1)
        grown = self.search_range + math.sqrt((x - self.x) ** 2 + (y - self.y) ** 2 + (r - self.r) ** 2)
        self.search_range = grown if d_cap is None else max(self.search_range, min(grown, d_cap))
        self.x, self.y, self.r = x, y, r
        self.members.append(pair)


def _nearest_containing(distances: np.ndarray, ranges: np.ndarray) -> int | None:
    inside = distances <= ranges
    if not inside.any():
        return None
    return int(np.argmin(np.where(inside, distances, np.inf)))


def cluster_insert(clusters: list, pair: ItPair, d0: float = 5.0, d_cap: float | None = None) -> Cluster:
    """Add ``pair`` to the closest cluster whose search range contains it, or
    start a new cluster with range ``d0``.

    ``clusters`` is modified in place; the cluster that received the pair is
    returned.
    """
    if clusters:
        dist = np.array([c.distance(pair) for c in clusters])
        ranges = np.array([c.search_range for c in clusters])
        j = _nearest_containing(dist, ranges)
        if j is not None:
            clusters[j].absorb(pair, d_cap)
            return clusters[j]
    c = Cluster(pair.center[0], pair.center[1], pair.radius, d0, [pair])
    clusters.append(c)
    return c


class ClusterStore:
    """List of clusters with a vectorized nearest-cluster lookup.

    Behaves exactly like repeated :func:`cluster_insert` calls on a list.
    """

    def __init__(self, d0: float = 5.0, d_cap: float | None = None):
        self.d0 = d0
        self.d_cap = d_cap
        self.clusters: list[Cluster] = []
        self._params = np.empty((16, 4))
        self.created = 0

    def __len__(self) -> int:
        return len(self.clusters)

    def __iter__(self):
        return iter(self.clusters)

    def insert(self, pair: ItPair) -> Cluster:
        k = len(self.clusters)
        if k:
            p = self._params[:k]
            dist = np.sqrt((p[:, 0] - pair.center[0]) ** 2 + (p[:, 1] - pair.center[1]) ** 2 + (p[:, 2] - pair.radius) ** 2)
            j = _nearest_containing(dist, p[:, 3])
            if j is not None:
                c = self.clusters[j]
                c.absorb(pair, self.d_cap)
                self._params[j] = (c.x, c.y, c.r, c.search_range)
                return c
        if k == len(self._params):
            self._params = np.concatenate([self._params, np.empty_like(self._params)])
        c = Cluster(pair.center[0], pair.center[1], pair.radius, self.d0, [pair])
        self.clusters.append(c)
        self._params[k] = (c.x, c.y, c.r, c.search_range)
        self.created += 1
        return c

    def remove(self, cluster: Cluster) -> None:
        j = next(i for i, c in enumerate(self.clusters) if c is cluster)
        del self.clusters[j]
        self._params[j : len(self.clusters)] = self._params[j + 1 : len(self.clusters) + 1]

    def clear(self) -> None:
        self.clusters.clear()
