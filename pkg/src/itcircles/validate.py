"""Sector-based completeness check for circle candidates."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError
from .preprocess import EdgeSegment
from .refine import RefineParams, inlier_mask
from .sampling import Circle

MIN_RUN = 3

#: Pixels in an 8-connected digital circle per unit radius (4 * sqrt(2)).
PIXELS_PER_RADIUS = 4.0 * math.sqrt(2.0)


@dataclass(frozen=True)
class SectorVote:
    n_sectors: int
    valid: np.ndarray
    votes: int
    #: Indices into the segment of the points lying in counted runs.
    contributors: np.ndarray

    @property
    def completeness(self) -> float:
        return self.votes / self.n_sectors


def run_votes(valid) -> tuple[int, np.ndarray]:
    """Votes from circular runs of valid sectors.

    A maximal run of at least three consecutive valid sectors (wrapping
    around) contributes its length; shorter runs contribute nothing.  Returns
    the vote count and a per-sector mask of the counted sectors.
    """
    valid = np.asarray(valid, dtype=bool)
    n = len(valid)
    counted = np.zeros(n, dtype=bool)
    if valid.all():
        counted[:] = True
        return n, counted
    if not valid.any():
        return 0, counted
    start = int(np.flatnonzero(~valid)[0])
    order = np.roll(np.arange(n), -start)
    run: list[int] = []
    for s in list(order) + [start]:
        if valid[s]:
            run.append(int(s))
            continue
        if len(run) >= MIN_RUN:
            counted[run] = True
        run = []
    return int(counted.sum()), counted


def sector_index(segment: EdgeSegment, c: Circle, n_sectors: int) -> np.ndarray:
    angle = np.arctan2(segment.xy[:, 1] - c.b, segment.xy[:, 0] - c.a) % (2 * math.pi)
    idx = np.floor(angle * n_sectors / (2 * math.pi)).astype(np.int64)
    return np.minimum(idx, n_sectors - 1)


def sector_vote(
    c: Circle,
    segment: EdgeSegment,
    n_sectors: int = 16,
    params: RefineParams = RefineParams(),
) -> SectorVote:
    """Split the circle into ``n_sectors`` equal sectors and vote.

    Sector ``s`` spans angles ``[2 pi s / n, 2 pi (s + 1) / n)`` and is valid
    when it holds at least one active point inside the ``delta_d`` band whose
    gradient passes the alignment check.
    """
    if n_sectors < 6:
        raise InvalidParameterError(f"n_sectors must be >= 6, got {n_sectors}")
    mask = inlier_mask(segment, c, params)
    idx = sector_index(segment, c, n_sectors)
    valid = np.zeros(n_sectors, dtype=bool)
    valid[idx[mask]] = True
    votes, counted = run_votes(valid)
    contributors = np.flatnonzero(mask & counted[idx])
    return SectorVote(n_sectors, valid, votes, contributors)


def default_min_votes(n_sectors: int, ratio: float = 0.5) -> int:
    return math.ceil(ratio * n_sectors - 1e-9)


def validate_circle(v: SectorVote, min_votes: int | None = None) -> bool:
    """Accept when ``votes >= min_votes`` (default: half the sectors, rounded up)."""
    if min_votes is None:
        min_votes = default_min_votes(v.n_sectors)
    return v.votes >= min_votes


def expected_pixels(r: float) -> float:
    """Approximate pixel count of a complete one-pixel-wide digital circle."""
    return PIXELS_PER_RADIUS * r


def pixel_complete(v: SectorVote, r: float, ratio: float = 0.5) -> bool:
    """True when the counted support covers at least ``ratio`` of the pixels
    a complete circle of radius ``r`` would have.  ``ratio = 0`` disables it."""
    return len(v.contributors) >= ratio * expected_pixels(r)
