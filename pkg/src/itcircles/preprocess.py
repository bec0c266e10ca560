"""Gradient estimation, edge extraction and 8-connected edge segments.

Images are plain 2-D ``float64`` arrays indexed ``img[y, x]`` with intensities
in [0, 1].  Pixel ``(x, y)`` has its center at coordinate ``(x, y)``; gradients
are expressed in the same (x right, y down) frame and point toward increasing
intensity.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import ndimage

from .errors import InvalidParameterError

#: Pre-normalization gradient magnitude below which a pixel has no usable direction.
EPSILON_MAG = 1e-4

DEFAULT_SIGMA = 1.28
DEFAULT_KSIZE = 5
DEFAULT_CANNY_LOW = 0.1
DEFAULT_CANNY_HIGH = 0.3
DEFAULT_MIN_SIZE = 8

_EIGHT = np.ones((3, 3), dtype=bool)


def as_gray_image(data) -> np.ndarray:
    """Validate ``data`` as a grayscale image and return it as ``float64``.

    Raises
    ------
    InvalidParameterError
        If the array is not 2-D, is empty, or holds values outside [0, 1].
    """
    img = np.asarray(data, dtype=np.float64)
    if img.ndim != 2 or img.size == 0:
        raise InvalidParameterError(f"expected a non-empty 2-D image, got shape {img.shape}")
    if not np.all(np.isfinite(img)) or img.min() < 0.0 or img.max() > 1.0:
        raise InvalidParameterError("image intensities must be finite and lie in [0, 1]")
    return img


def _check_kernel(sigma: float, ksize: int) -> None:
    if int(ksize) != ksize or ksize < 3 or ksize % 2 == 0:
        raise InvalidParameterError(f"ksize must be an odd integer >= 3, got {ksize}")
    if not sigma > 0:
        raise InvalidParameterError(f"sigma must be positive, got {sigma}")


def gaussian_kernel1d(sigma: float, ksize: int) -> np.ndarray:
    """Sampled Gaussian of width ``ksize``, normalized to unit sum."""
    _check_kernel(sigma, ksize)
    half = int(ksize) // 2
    k = np.arange(-half, half + 1, dtype=np.float64)
    g = np.exp(-0.5 * (k / sigma) ** 2)
    return g / g.sum()


def gaussian_derivative_kernel1d(sigma: float, ksize: int) -> np.ndarray:
    """Sampled first derivative of a Gaussian, for use with correlation.

    Scaled so that a unit ramp ``f(x) = x`` yields a response of exactly 1,
    i.e. the output is a slope in intensity per pixel.
    """
    _check_kernel(sigma, ksize)
    half = int(ksize) // 2
    k = np.arange(-half, half + 1, dtype=np.float64)
    g = np.exp(-0.5 * (k / sigma) ** 2)
    w = k * g
    return w / np.sum(k * w)


def gaussian_smooth(img: np.ndarray, sigma: float = 1.0, ksize: int = DEFAULT_KSIZE) -> np.ndarray:
    """Separable Gaussian blur with replicate-edge padding, clamped to [0, 1]."""
    g = gaussian_kernel1d(sigma, ksize)
    img = as_gray_image(img)
    out = ndimage.correlate1d(img, g, axis=1, mode="nearest")
    out = ndimage.correlate1d(out, g, axis=0, mode="nearest")
    return np.clip(out, 0.0, 1.0)


@dataclass(frozen=True)
class GradientField:
    """Per-pixel unit gradient directions.

    ``gx`` and ``gy`` are unit-normalized wherever ``valid`` is set and zero
    elsewhere.  ``magnitude`` keeps the pre-normalization slope so edge
    detectors can threshold on it.
    """

    gx: np.ndarray
    gy: np.ndarray
    valid: np.ndarray
    magnitude: np.ndarray

    @property
    def width(self) -> int:
        return self.gx.shape[1]

    @property
    def height(self) -> int:
        return self.gx.shape[0]


def dog_gradient(img: np.ndarray, sigma: float = DEFAULT_SIGMA, ksize: int = DEFAULT_KSIZE) -> GradientField:
    """Derivative-of-Gaussian gradient of ``img``, normalized to unit vectors.

    Pixels whose raw magnitude is below :data:`EPSILON_MAG` are marked invalid.
    """
    g = gaussian_kernel1d(sigma, ksize)
    d = gaussian_derivative_kernel1d(sigma, ksize)
    img = as_gray_image(img)
    gx = ndimage.correlate1d(ndimage.correlate1d(img, d, axis=1, mode="nearest"), g, axis=0, mode="nearest")
    gy = ndimage.correlate1d(ndimage.correlate1d(img, g, axis=1, mode="nearest"), d, axis=0, mode="nearest")
    mag = np.hypot(gx, gy)
    valid = mag >= EPSILON_MAG
    safe = np.where(valid, mag, 1.0)
    ux = np.where(valid, gx / safe, 0.0)
    uy = np.where(valid, gy / safe, 0.0)
    return GradientField(ux, uy, valid, mag)


class EdgePoint(NamedTuple):
    """Edge pixel with the unit gradient sampled at it."""

    x: int
    y: int
    gx: float
    gy: float

    @property
    def g(self) -> tuple[float, float]:
        return (self.gx, self.gy)


def _points_from_mask(mask: np.ndarray, grad: GradientField) -> list[EdgePoint]:
    ys, xs = np.nonzero(mask & grad.valid)
    gx = grad.gx[ys, xs]
    gy = grad.gy[ys, xs]
    return [EdgePoint(int(x), int(y), float(a), float(b)) for x, y, a, b in zip(xs, ys, gx, gy)]


def sobel_edges(
    img: np.ndarray,
    threshold: float,
    sigma: float = DEFAULT_SIGMA,
    ksize: int = DEFAULT_KSIZE,
) -> list[EdgePoint]:
    """Pixels whose Sobel magnitude is at least ``threshold``.

    The Sobel response is scaled by 1/8 so the threshold is a slope in
    intensity per pixel.  Attached gradients come from :func:`dog_gradient`.
    """
    if not threshold > 0:
        raise InvalidParameterError(f"threshold must be positive, got {threshold}")
    img = as_gray_image(img)
    mag = sobel_magnitude(img)
    grad = dog_gradient(img, sigma, ksize)
    return _points_from_mask(mag >= threshold, grad)


def sobel_magnitude(img: np.ndarray) -> np.ndarray:
    sx = ndimage.sobel(img, axis=1, mode="nearest") / 8.0
    sy = ndimage.sobel(img, axis=0, mode="nearest") / 8.0
    return np.hypot(sx, sy)


def _non_max_suppression(grad: GradientField) -> np.ndarray:
    mag = grad.magnitude
    h, w = mag.shape
    padded = np.pad(mag, 1, mode="edge")

    def shifted(dy: int, dx: int) -> np.ndarray:
        return padded[1 + dy : 1 + dy + h, 1 + dx : 1 + dx + w]

    # Quantize the gradient direction to 0/45/90/135 degrees (y axis down).
    angle = np.rad2deg(np.arctan2(grad.gy, grad.gx)) % 180.0
    sector = (((angle + 22.5) // 45.0).astype(int)) % 4
    keep = np.zeros_like(mag, dtype=bool)
    for s, (dy, dx) in enumerate(((0, 1), (1, 1), (1, 0), (1, -1))):
        fwd = shifted(dy, dx)
        back = shifted(-dy, -dx)
        # Strict on one side only so plateaus keep a single pixel.
        local = (mag > back) & (mag >= fwd)
        keep |= (sector == s) & local
    return keep & grad.valid


def canny_mask(grad: GradientField, low: float = DEFAULT_CANNY_LOW, high: float = DEFAULT_CANNY_HIGH) -> np.ndarray:
    """Canny edge mask from a precomputed gradient field.

    ``low`` and ``high`` are fractions of the maximum gradient magnitude.
    """
    if not (0.0 < low < high <= 1.0):
        raise InvalidParameterError(f"need 0 < low < high <= 1, got low={low}, high={high}")
    thin = _non_max_suppression(grad)
    if not thin.any():
        return thin
    peak = grad.magnitude[thin].max()
    weak = thin & (grad.magnitude >= low * peak)
    strong = thin & (grad.magnitude >= high * peak)
    labels, n = ndimage.label(weak, structure=_EIGHT)
    if n == 0:
        return weak
    has_strong = np.zeros(n + 1, dtype=bool)
    has_strong[labels[strong]] = True
    has_strong[0] = False
    return has_strong[labels]


def canny_edges(
    img: np.ndarray,
    low: float = DEFAULT_CANNY_LOW,
    high: float = DEFAULT_CANNY_HIGH,
    sigma: float = DEFAULT_SIGMA,
    ksize: int = DEFAULT_KSIZE,
) -> list[EdgePoint]:
    """Canny edges (DoG gradient, non-maximum suppression, hysteresis)."""
    if not (0.0 < low < high <= 1.0):
        raise InvalidParameterError(f"need 0 < low < high <= 1, got low={low}, high={high}")
    grad = dog_gradient(img, sigma, ksize)
    return _points_from_mask(canny_mask(grad, low, high), grad)


@dataclass
class EdgeSegment:
    """An 8-connected chain of edge pixels.

    ``xy`` holds integer ``(x, y)`` rows, ``g`` the matching unit gradients.
    ``active`` is cleared for points consumed by an accepted circle.
    """

    xy: np.ndarray
    g: np.ndarray
    active: np.ndarray = field(default=None)

    def __post_init__(self):
        self.xy = np.asarray(self.xy, dtype=np.int64).reshape(-1, 2)
        self.g = np.asarray(self.g, dtype=np.float64).reshape(-1, 2)
        if self.active is None:
            self.active = np.ones(len(self.xy), dtype=bool)

    @classmethod
    def from_points(cls, points) -> "EdgeSegment":
        pts = list(points)
        xy = np.array([(p.x, p.y) for p in pts], dtype=np.int64).reshape(-1, 2)
        g = np.array([(p.gx, p.gy) for p in pts], dtype=np.float64).reshape(-1, 2)
        return cls(xy, g)

    def __len__(self) -> int:
        return len(self.xy)

    def point(self, i: int) -> EdgePoint:
        return EdgePoint(int(self.xy[i, 0]), int(self.xy[i, 1]), float(self.g[i, 0]), float(self.g[i, 1]))

    @property
    def points(self) -> list[EdgePoint]:
        return [self.point(i) for i in range(len(self))]

    @property
    def n_active(self) -> int:
        return int(np.count_nonzero(self.active))


def connected_components(points, min_size: int = DEFAULT_MIN_SIZE) -> list[EdgeSegment]:
    """Group edge points into maximal 8-connected segments.

    Segments with fewer than ``min_size`` points are dropped.  Segments are
    ordered by their first pixel in row-major scan order, and points within a
    segment keep row-major order.
    """
    pts = list(points)
    if not pts:
        return []
    xy = np.array([(p.x, p.y) for p in pts], dtype=np.int64)
    g = np.array([(p.gx, p.gy) for p in pts], dtype=np.float64)
    lo = xy.min(axis=0)
    span = xy.max(axis=0) - lo + 1
    grid = np.zeros((span[1], span[0]), dtype=bool)
    local = xy - lo
    grid[local[:, 1], local[:, 0]] = True
    if np.count_nonzero(grid) != len(pts):
        raise InvalidParameterError("edge points must have unique coordinates")
    labels, n = ndimage.label(grid, structure=_EIGHT)
    lab = labels[local[:, 1], local[:, 0]]
    # Label numbers follow raster order of each component's first pixel.
    order = np.lexsort((xy[:, 0], xy[:, 1], lab))
    counts = np.bincount(lab, minlength=n + 1)[1:]
    segments = []
    for idx in np.split(order, np.cumsum(counts)[:-1]):
        if len(idx) >= min_size:
            segments.append(EdgeSegment(xy[idx], g[idx]))
    return segments


def segments_from_mask(mask: np.ndarray, grad: GradientField, min_size: int = DEFAULT_MIN_SIZE) -> list[EdgeSegment]:
    """Same result as ``connected_components`` on the points of an edge mask."""
    mask = mask & grad.valid
    labels, n = ndimage.label(mask, structure=_EIGHT)
    ys, xs = np.nonzero(labels)
    lab = labels[ys, xs]
    # np.nonzero is already row-major; a stable sort on the label keeps it.
    order = np.argsort(lab, kind="stable")
    counts = np.bincount(lab, minlength=n + 1)[1:]
    segments = []
    for idx in np.split(order, np.cumsum(counts)[:-1]) if n else []:
        if len(idx) >= min_size:
            sx, sy = xs[idx], ys[idx]
            xy = np.column_stack([sx, sy])
            g = np.column_stack([grad.gx[sy, sx], grad.gy[sy, sx]])
            segments.append(EdgeSegment(xy, g))
    return segments
