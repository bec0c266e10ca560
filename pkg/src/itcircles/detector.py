"""Multi-circle detection pipeline.

gradient -> Canny edges -> 8-connected segments -> per-segment randomized
sampling with parameter clustering -> two-stage refinement -> sector
validation.  Runs are deterministic for a given image and configuration.
"""

from __future__ import annotations

import dataclasses
import math
import time
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .errors import CollinearError, InvalidParameterError
from .preprocess import (
    DEFAULT_CANNY_HIGH,
    DEFAULT_CANNY_LOW,
    DEFAULT_KSIZE,
    DEFAULT_MIN_SIZE,
    DEFAULT_SIGMA,
    EdgeSegment,
    as_gray_image,
    canny_mask,
    dog_gradient,
    gaussian_kernel1d,
    segments_from_mask,
)
from .refine import RefineParams, refine_candidate
from .sampling import (
    Circle,
    ClusterStore,
    ItPair,
    ItsVerdict,
    SamplingParams,
    check_4th_point,
    fit_circle_3pt,
    its_check,
    its_estimate,
)
from .validate import default_min_votes, pixel_complete, sector_vote, validate_circle

SAMPLERS = ("its", "four-point", "three-point")

STAGES = ("gradient_edges", "sampling", "refinement", "validation", "other")

REJECTION_REASONS = ("too-close", "not-isosceles", "parallel", "collinear", "fourth-point", "radius-range")


@dataclass(frozen=True)
class DetectorConfig:
    sigma: float = DEFAULT_SIGMA
    ksize: int = DEFAULT_KSIZE
    canny_low: float = DEFAULT_CANNY_LOW
    canny_high: float = DEFAULT_CANNY_HIGH
    min_size: int = DEFAULT_MIN_SIZE
    sampling: SamplingParams = field(default_factory=SamplingParams)
    refine: RefineParams = field(default_factory=RefineParams)
    n_sectors: int = 16
    min_votes_ratio: float = 0.5
    #: Minimum counted support as a fraction of a complete circle's pixels.
    min_pixel_ratio: float = 0.5
    r_min: float = 5.0
    cluster_min_members: int = 6
    iteration_budget_factor: float = 1.0
    rng_seed: int = 0
    sampler: str = "its"

    def __post_init__(self):
        gaussian_kernel1d(self.sigma, self.ksize)
        if not 0.0 < self.canny_low < self.canny_high <= 1.0:
            raise InvalidParameterError("need 0 < canny_low < canny_high <= 1")
        if self.min_size < 2:
            raise InvalidParameterError("min_size must be >= 2")
        if self.n_sectors < 6:
            raise InvalidParameterError("n_sectors must be >= 6")
        if not 0.0 < self.min_votes_ratio <= 1.0:
            raise InvalidParameterError("min_votes_ratio must lie in (0, 1]")
        if not 0.0 <= self.min_pixel_ratio <= 1.0:
            raise InvalidParameterError("min_pixel_ratio must lie in [0, 1]")
        if not self.r_min > 0:
            raise InvalidParameterError("r_min must be positive")
        if self.cluster_min_members < 2:
            raise InvalidParameterError("cluster_min_members must be >= 2")
        if not self.iteration_budget_factor > 0:
            raise InvalidParameterError("iteration_budget_factor must be positive")
        if self.rng_seed < 0:
            raise InvalidParameterError("rng_seed must be >= 0")
        if self.sampler not in SAMPLERS:
            raise InvalidParameterError(f"sampler must be one of {SAMPLERS}")

    @property
    def min_votes(self) -> int:
        return default_min_votes(self.n_sectors, self.min_votes_ratio)

    def flat(self) -> dict:
        """All settings as one flat ``name -> value`` mapping."""
        out = {}
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if dataclasses.is_dataclass(value):
                out.update(dataclasses.asdict(value))
            else:
                out[f.name] = value
        return out

    @classmethod
    def from_flat(cls, values: dict) -> "DetectorConfig":
        """Inverse of :meth:`flat`; unknown keys raise ``InvalidParameterError``."""
        sampling_keys = {f.name for f in dataclasses.fields(SamplingParams)}
        refine_keys = {f.name for f in dataclasses.fields(RefineParams)}
        top_keys = {f.name for f in dataclasses.fields(cls)} - {"sampling", "refine"}
        unknown = set(values) - sampling_keys - refine_keys - top_keys
        if unknown:
            raise InvalidParameterError(f"unknown config fields: {sorted(unknown)}")
        return cls(
            sampling=SamplingParams(**{k: v for k, v in values.items() if k in sampling_keys}),
            refine=RefineParams(**{k: v for k, v in values.items() if k in refine_keys}),
            **{k: v for k, v in values.items() if k in top_keys},
        )


def flat_field_types() -> dict:
    """``name -> type`` for every flat config field, in :meth:`DetectorConfig.flat` order."""
    hints = {}
    for f in dataclasses.fields(DetectorConfig):
        if f.name == "sampling":
            hints.update({g.name: g.type for g in dataclasses.fields(SamplingParams)})
        elif f.name == "refine":
            hints.update({g.name: g.type for g in dataclasses.fields(RefineParams)})
        else:
            hints[f.name] = f.type
    return hints


@dataclass(frozen=True)
class Detection:
    circle: Circle
    votes: int
    n_sectors: int
    completeness: float
    support: int
    segment_id: int


@dataclass
class Stats:
    """Counters for one detection run.  All counts are exact; ``timings``
    holds wall-clock seconds per stage and is the only non-deterministic part."""

    edge_pixels: int = 0
    segments: int = 0
    budget: int = 0
    iterations: int = 0
    samples_accepted: int = 0
    rejected: Counter = field(default_factory=Counter)
    clusters_created: int = 0
    candidates_refined: int = 0
    candidates_validated: int = 0
    candidates_rejected: int = 0
    duplicates_suppressed: int = 0
    timings: dict = field(default_factory=lambda: dict.fromkeys(STAGES, 0.0))

    def counts(self) -> dict:
        out = {
            k: v
            for k, v in dataclasses.asdict(self).items()
            if k not in ("rejected", "timings")
        }
        for reason in REJECTION_REASONS:
            out[f"rejected_{reason.replace('-', '_')}"] = self.rejected[reason]
        return out


class _Uniforms:
    """Block-buffered uniform draws from a numpy generator."""

    def __init__(self, rng: np.random.Generator, block: int = 4096):
        self.rng = rng
        self.block = block
        self._buf = rng.random(block).tolist()
        self._pos = 0

    def index(self, n: int) -> int:
        if self._pos == self.block:
            self._buf = self.rng.random(self.block).tolist()
            self._pos = 0
        u = self._buf[self._pos]
        self._pos += 1
        return min(int(u * n), n - 1)

    def distinct(self, n: int, k: int) -> list[int]:
        out: list[int] = []
        while len(out) < k:
            i = self.index(n)
            if i not in out:
                out.append(i)
        return out


def _separated(points, d_min: float) -> bool:
    for i in range(len(points)):
        for j in range(i + 1, len(points)):
            if math.hypot(points[i].x - points[j].x, points[i].y - points[j].y) < d_min:
                return False
    return True


def _draw_sample(sampler: str, seg: EdgeSegment, active: np.ndarray, draws: _Uniforms, params: SamplingParams):
    """One sampling iteration.  Returns an :class:`ItPair` or a rejection label."""
    if sampler == "its":
        i, j = draws.distinct(len(active), 2)
        A, B = seg.point(active[i]), seg.point(active[j])
        verdict = its_check(A, B, params)
        if verdict is not ItsVerdict.ACCEPT:
            return verdict.label
        center, radius = its_estimate(A, B)
        return ItPair(A, B, center, radius)
    k = 4 if sampler == "four-point" else 3
    pts = [seg.point(active[i]) for i in draws.distinct(len(active), k)]
    if not _separated(pts, params.d_min):
        return "too-close"
    try:
        c = fit_circle_3pt(pts[0], pts[1], pts[2])
    except CollinearError:
        return "collinear"
    if k == 4 and not check_4th_point(c, pts[3], params.t_r):
        return "fourth-point"
    return ItPair(pts[0], pts[1], (c.a, c.b), c.r)


def _allocate(budget: int, sizes: list[int]) -> list[int]:
    total = sum(sizes)
    if total == 0:
        return [0] * len(sizes)
    return [budget * n // total for n in sizes]


def _process_segment(seg_id, seg, share, cfg, r_max, stats, out):
    params = cfg.sampling
    rng = np.random.default_rng(np.random.SeedSequence([cfg.rng_seed, seg_id]))
    draws = _Uniforms(rng)
    store = ClusterStore(params.d0, params.d_cap)
    need = max(cfg.min_size, 4 if cfg.sampler == "four-point" else 3)
    active = np.flatnonzero(seg.active)
    t_refine = t_validate = 0.0
    for _ in range(share):
        if len(active) < need:
            break
        stats.iterations += 1
        sample = _draw_sample(cfg.sampler, seg, active, draws, params)
        if isinstance(sample, str):
            stats.rejected[sample] += 1
            continue
        if not (cfg.r_min <= sample.radius <= r_max):
            stats.rejected["radius-range"] += 1
            continue
        stats.samples_accepted += 1
        cluster = store.insert(sample)
        if cluster.n < cfg.cluster_min_members:
            continue
        stats.candidates_refined += 1
        t0 = time.perf_counter()
        circle = refine_candidate(cluster, seg, cfg.refine, rng)
        t1 = time.perf_counter()
        vote = sector_vote(circle, seg, cfg.n_sectors, cfg.refine)
        ok = (
            cfg.r_min <= circle.r <= r_max
            and validate_circle(vote, cfg.min_votes)
            and pixel_complete(vote, circle.r, cfg.min_pixel_ratio)
        )
        t_validate += time.perf_counter() - t1
        t_refine += t1 - t0
        if not ok:
            stats.candidates_rejected += 1
            store.remove(cluster)
            continue
        stats.candidates_validated += 1
        out.append(
            Detection(circle, vote.votes, vote.n_sectors, vote.completeness, len(vote.contributors), seg_id)
        )
        seg.active[vote.contributors] = False
        stats.clusters_created += store.created
        store = ClusterStore(params.d0, params.d_cap)
        active = np.flatnonzero(seg.active)
    stats.clusters_created += store.created
    return t_refine, t_validate


def _canonical(detections: list[Detection]) -> list[Detection]:
    return sorted(detections, key=lambda d: (-d.support, d.circle.a, d.circle.b, d.circle.r))


def _suppress_duplicates(detections: list[Detection], tol: float = 3.0) -> list[Detection]:
    kept: list[Detection] = []
    for d in _canonical(detections):
        c = d.circle
        if any(math.hypot(c.a - k.circle.a, c.b - k.circle.b) < tol and abs(c.r - k.circle.r) < tol for k in kept):
            continue
        kept.append(d)
    return kept


def detect_with_stats(img, cfg: DetectorConfig = DetectorConfig()) -> tuple[list[Detection], Stats]:
    """Detect circles and report how the iteration budget was spent."""
    t_start = time.perf_counter()
    img = as_gray_image(img)
    stats = Stats()
    grad = dog_gradient(img, cfg.sigma, cfg.ksize)
    edges = canny_mask(grad, cfg.canny_low, cfg.canny_high)
    segments = segments_from_mask(edges, grad, cfg.min_size)
    t_edges = time.perf_counter()

    stats.edge_pixels = int(np.count_nonzero(edges))
    stats.segments = len(segments)
    stats.budget = int(math.floor(cfg.iteration_budget_factor * stats.edge_pixels))
    shares = _allocate(stats.budget, [len(s) for s in segments])
    r_max = float(max(img.shape))

    found: list[Detection] = []
    t_refine = t_validate = 0.0
    for seg_id, (seg, share) in enumerate(zip(segments, shares)):
        tr, tv = _process_segment(seg_id, seg, share, cfg, r_max, stats, found)
        t_refine += tr
        t_validate += tv
    t_sampled = time.perf_counter()

    detections = _suppress_duplicates(found)
    stats.duplicates_suppressed = len(found) - len(detections)
    t_end = time.perf_counter()

    sampling = (t_sampled - t_edges) - t_refine - t_validate
    stats.timings = {
        "gradient_edges": t_edges - t_start,
        "sampling": max(sampling, 0.0),
        "refinement": t_refine,
        "validation": t_validate,
        "other": t_end - t_sampled,
    }
    return detections, stats


def detect(img, cfg: DetectorConfig = DetectorConfig()) -> list[Detection]:
    """Detect circles in a grayscale image; see :func:`detect_with_stats`."""
    return detect_with_stats(img, cfg)[0]
