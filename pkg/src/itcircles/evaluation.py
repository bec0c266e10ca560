"""Evaluation harness: noise, center-voting accumulators, PSNR and a brute
force circle Hough transform used as an independent reference."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import InvalidParameterError, UndefinedReferenceError
from .preprocess import as_gray_image, canny_edges, sobel_edges, sobel_magnitude
from .sampling import (
    Circle,
    ItsVerdict,
    SamplingParams,
    fit_circle_3pt_batch,
    its_check_batch,
    its_estimate_batch,
)
from .scenes import single_circle_spec, synth_scene

#: Accumulator smoothing applied identically to every strategy.
SIGMA_ACC = 1.0
#: Sobel threshold as a fraction of the image's maximum Sobel magnitude.
SOBEL_RATIO = 0.2
SWEEP_ITERATIONS = 500


def add_gaussian_noise(img, variance: float, seed: int | None = None) -> np.ndarray:
    """Additive zero-mean Gaussian noise of the given variance, clamped to [0, 1]."""
    if not variance >= 0:
        raise InvalidParameterError(f"variance must be >= 0, got {variance}")
    img = as_gray_image(img)
    if variance == 0:
        return img.copy()
    rng = np.random.default_rng(seed)
    return np.clip(img + rng.normal(0.0, math.sqrt(variance), img.shape), 0.0, 1.0)


# --------------------------------------------------------------------------
# Sampling strategies and voting


@dataclass(frozen=True)
class Strategy:
    kind: str
    delta_k: float = 0.1
    delta_p: float = 0.92

    KINDS = ("three-point", "four-point", "its")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise InvalidParameterError(f"unknown strategy {self.kind!r}; expected one of {self.KINDS}")

    @property
    def n_points(self) -> int:
        return {"three-point": 3, "four-point": 4, "its": 2}[self.kind]

    @property
    def name(self) -> str:
        return f"its:{self.delta_k:g}" if self.kind == "its" else self.kind

    @classmethod
    def parse(cls, text: str) -> "Strategy":
        """``three-point``, ``four-point``, ``its`` or ``its:<delta_k>``."""
        kind, _, arg = text.strip().partition(":")
        if arg:
            if kind != "its":
                raise InvalidParameterError(f"only the its strategy takes a parameter: {text!r}")
            try:
                return cls(kind, delta_k=float(arg))
            except ValueError as exc:
                raise InvalidParameterError(f"bad delta_k in {text!r}") from exc
        return cls(kind)


@dataclass
class Accumulator2D:
    """Center-vote grid of the image's size (``votes[y, x]``)."""

    votes: np.ndarray
    #: Number of samples that passed the strategy's test and landed in the grid.
    accepted: int = 0

    @property
    def width(self) -> int:
        return self.votes.shape[1]

    @property
    def height(self) -> int:
        return self.votes.shape[0]


def _distinct_draws(rng: np.random.Generator, n: int, k: int, iterations: int) -> np.ndarray:
    idx = rng.integers(0, n, size=(iterations, k))
    while True:
        s = np.sort(idx, axis=1)
        dup = np.any(s[:, 1:] == s[:, :-1], axis=1)
        if not dup.any():
            return idx
        idx[dup] = rng.integers(0, n, size=(int(dup.sum()), k))


def _min_separation_ok(pts: list[np.ndarray], d_min: float) -> np.ndarray:
    ok = np.ones(len(pts[0]), dtype=bool)
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            d = pts[i] - pts[j]
            ok &= np.hypot(d[:, 0], d[:, 1]) >= d_min
    return ok


def vote_accumulator(
    edges,
    strategy: Strategy,
    iterations: int,
    seed: int | None,
    shape: tuple[int, int],
    smooth_sigma: float | None = None,
    t_r: float = 1.5,
    d_min: float = 3.0,
) -> Accumulator2D:
    """Vote estimated circle centers from randomly sampled edge points.

    Each iteration draws the strategy's points uniformly without replacement
    and, if the sample passes (non-collinear; fourth point within ``t_r``; or
    the isosceles-triangle criteria), adds one vote at the rounded center.
    ``shape`` is the ``(height, width)`` of the image.
    """
    if iterations <= 0:
        raise InvalidParameterError("iterations must be positive")
    votes = np.zeros(shape, dtype=np.float64)
    pts = list(edges)
    k = strategy.n_points
    if len(pts) < k:
        return Accumulator2D(votes, 0)
    xy = np.array([(p.x, p.y) for p in pts], dtype=np.float64)
    g = np.array([(p.gx, p.gy) for p in pts], dtype=np.float64)
    rng = np.random.default_rng(seed)
    idx = _distinct_draws(rng, len(pts), k, iterations)
    sample = [xy[idx[:, i]] for i in range(k)]
    ok = _min_separation_ok(sample, d_min)
    if strategy.kind == "its":
        params = SamplingParams(delta_k=strategy.delta_k, delta_p=strategy.delta_p, d_min=d_min)
        verdict = its_check_batch(sample[0], g[idx[:, 0]], sample[1], g[idx[:, 1]], params)
        cx, cy, _, fit_ok = its_estimate_batch(sample[0], g[idx[:, 0]], sample[1], g[idx[:, 1]])
        ok &= (verdict == ItsVerdict.ACCEPT) & fit_ok
    else:
        cx, cy, r, fit_ok = fit_circle_3pt_batch(sample[0], sample[1], sample[2])
        ok &= fit_ok
        if strategy.kind == "four-point":
            d4 = np.abs(np.hypot(sample[3][:, 0] - cx, sample[3][:, 1] - cy) - r)
            ok &= d4 <= t_r
    with np.errstate(invalid="ignore"):
        ix = np.rint(np.where(ok, cx, -1.0))
        iy = np.rint(np.where(ok, cy, -1.0))
    h, w = shape
    inside = ok & (ix >= 0) & (ix < w) & (iy >= 0) & (iy < h)
    np.add.at(votes, (iy[inside].astype(np.int64), ix[inside].astype(np.int64)), 1.0)
    accepted = int(np.count_nonzero(inside))
    if smooth_sigma:
        votes = ndimage.gaussian_filter(votes, smooth_sigma, mode="constant")
    return Accumulator2D(votes, accepted)


def psnr(reference, test) -> float:
    """``10 log10(sum(r^2) / sum((r - t)^2))`` in dB; ``inf`` when identical.

    Accepts :class:`Accumulator2D` objects or plain arrays.
    """
    r = np.asarray(getattr(reference, "votes", reference), dtype=np.float64)
    t = np.asarray(getattr(test, "votes", test), dtype=np.float64)
    if r.shape != t.shape:
        raise InvalidParameterError(f"shape mismatch: {r.shape} vs {t.shape}")
    signal = float(np.sum(r * r))
    if signal == 0.0:
        raise UndefinedReferenceError("reference accumulator is all zeros")
    err = float(np.sum((r - t) ** 2))
    if err == 0.0:
        return math.inf
    return 10.0 * math.log10(signal / err)


def sweep_edges(img: np.ndarray, ratio: float = SOBEL_RATIO):
    peak = float(sobel_magnitude(img).max())
    if peak <= 0:
        return []
    return sobel_edges(img, ratio * peak)


@dataclass(frozen=True)
class SweepRow:
    strategy: str
    radius: float
    variance: float
    trials: int
    psnr: float
    #: PSNR(its) - PSNR(four-point) for this radius and variance, if both ran.
    delta_psnr: float | None


def _seed(*parts: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(p) for p in parts])


def mean_accumulators(
    radius: float,
    variance: float,
    strategies: list[Strategy],
    trials: int,
    seed: int,
    size: int = 256,
    iterations: int = SWEEP_ITERATIONS,
    smooth_sigma: float = SIGMA_ACC,
    radius_key: int = 0,
    variance_key: int = 0,
) -> dict[str, np.ndarray]:
    """Trial-averaged vote grids for one (radius, variance) cell.

    Every trial draws fresh noise, extracts one Sobel edge map shared by all
    strategies, and gives each strategy the same sampling seed it gets at
    every other variance, so variance 0 reproduces the reference exactly.
    """
    img, _ = synth_scene(single_circle_spec(radius, size, size))
    out = {s.name: np.zeros((size, size)) for s in strategies}
    for t in range(trials):
        noise_seed = _seed(seed, 1, radius_key, variance_key, t)
        noisy = add_gaussian_noise(img, variance, noise_seed)
        edges = sweep_edges(noisy)
        for si, s in enumerate(strategies):
            sample_seed = _seed(seed, 2, radius_key, si, t)
            acc = vote_accumulator(edges, s, iterations, sample_seed, (size, size), smooth_sigma)
            out[s.name] += acc.votes
    return {k: v / trials for k, v in out.items()}


def psnr_sweep(
    radius_list,
    variance_list,
    strategies,
    trials: int,
    seed: int = 0,
    size: int = 256,
    iterations: int = SWEEP_ITERATIONS,
    smooth_sigma: float = SIGMA_ACC,
    keep_grids: dict | None = None,
) -> list[SweepRow]:
    """PSNR of noisy against noiseless center-vote distributions.

    For each radius the noiseless reference is the trial average of the
    strategy's accumulator on the clean image; each variance is compared
    against it.  Pass a dict as ``keep_grids`` to collect the averaged grids
    keyed by ``(strategy, radius, variance)``.
    """
    if trials < 1:
        raise InvalidParameterError("trials must be >= 1")
    strategies = [s if isinstance(s, Strategy) else Strategy.parse(s) for s in strategies]
    if not strategies or not len(radius_list) or not len(variance_list):
        raise InvalidParameterError("radius, variance and strategy lists must be non-empty")
    names = [s.name for s in strategies]
    if len(set(names)) != len(names):
        raise InvalidParameterError("duplicate strategies")
    its_name = next((s.name for s in strategies if s.kind == "its"), None)
    rows: list[SweepRow] = []
    for ri, radius in enumerate(radius_list):
        ref = mean_accumulators(radius, 0.0, strategies, trials, seed, size, iterations, smooth_sigma, ri, 0)
        for vi, variance in enumerate(variance_list):
            test = mean_accumulators(
                radius, variance, strategies, trials, seed, size, iterations, smooth_sigma, ri, vi + 1
            )
            values = {}
            for name in names:
                try:
                    values[name] = psnr(ref[name], test[name])
                except UndefinedReferenceError:
                    values[name] = math.nan
                if keep_grids is not None:
                    keep_grids[(name, radius, variance)] = test[name]
            delta = None
            if its_name is not None and "four-point" in values:
                delta = values[its_name] - values["four-point"]
            rows.extend(SweepRow(n, float(radius), float(variance), trials, values[n], delta) for n in names)
    return rows


# --------------------------------------------------------------------------
# Circle Hough transform reference


def _ring_offsets(r: float, cell: float) -> np.ndarray:
    n = max(int(math.ceil(2 * math.pi * r / cell * 4)), 16)
    t = np.linspace(0.0, 2 * math.pi, n, endpoint=False)
    off = np.column_stack([np.rint(r * np.cos(t) / cell), np.rint(r * np.sin(t) / cell)]).astype(np.int64)
    return np.unique(off, axis=0)


def cht_detect(
    img,
    r_range: tuple[float, float],
    r_step: float = 1.0,
    cell_size: float = 1.0,
    threshold_ratio: float = 0.5,
    nms_cells: int = 3,
    min_score: float = 0.25,
) -> list[Circle]:
    """Brute-force circle Hough transform over Canny edge points.

    Every edge point votes once for each center cell at distance ``r`` for
    every radius in ``r_range``.  Scores are normalized by the ring size, so
    a complete circle scores about 1.  Peaks above ``threshold_ratio`` times
    the best score (and above ``min_score``) that are maxima within
    ``nms_cells`` cells survive; each is refined by a score-weighted centroid
    of its 3x3x3 neighbourhood.
    """
    img = as_gray_image(img)
    r_lo, r_hi = r_range
    if not (0 < r_lo <= r_hi) or r_step <= 0 or cell_size <= 0:
        raise InvalidParameterError("need 0 < r_lo <= r_hi and positive steps")
    h, w = img.shape
    edges = canny_edges(img)
    if not edges:
        return []
    exy = np.array([(p.x, p.y) for p in edges], dtype=np.float64)
    ecell = np.rint(exy / cell_size).astype(np.int64)
    nx = int(math.ceil(w / cell_size)) + 1
    ny = int(math.ceil(h / cell_size)) + 1
    radii = np.arange(r_lo, r_hi + 1e-9, r_step)
    acc = np.zeros((len(radii), ny, nx))
    for k, r in enumerate(radii):
        off = _ring_offsets(r, cell_size)
        cx = (ecell[:, None, 0] - off[None, :, 0]).ravel()
        cy = (ecell[:, None, 1] - off[None, :, 1]).ravel()
        keep = (cx >= 0) & (cx < nx) & (cy >= 0) & (cy < ny)
        acc[k] = np.bincount(cy[keep] * nx + cx[keep], minlength=nx * ny).reshape(ny, nx) / len(off)
    best = acc.max()
    if best <= 0:
        return []
    size = 2 * nms_cells + 1
    peaks = (acc == ndimage.maximum_filter(acc, size=size, mode="constant")) & (
        acc >= max(threshold_ratio * best, min_score)
    )
    found = []
    for k, iy, ix in zip(*np.nonzero(peaks)):
        k0, k1 = max(k - 1, 0), min(k + 2, len(radii))
        y0, y1 = max(iy - 1, 0), min(iy + 2, ny)
        x0, x1 = max(ix - 1, 0), min(ix + 2, nx)
        win = acc[k0:k1, y0:y1, x0:x1]
        kk, yy, xx = np.meshgrid(radii[k0:k1], np.arange(y0, y1), np.arange(x0, x1), indexing="ij")
        wsum = win.sum()
        found.append(
            (
                float(acc[k, iy, ix]),
                Circle(
                    float((xx * win).sum() / wsum * cell_size),
                    float((yy * win).sum() / wsum * cell_size),
                    float((kk * win).sum() / wsum),
                ),
            )
        )
    found.sort(key=lambda t: -t[0])
    return [c for _, c in found]
