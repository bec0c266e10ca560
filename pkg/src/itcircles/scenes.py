"""Synthetic test scenes: antialiased shapes on a flat background."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict

import numpy as np

from .errors import InvalidSpecError
from .sampling import Circle

SUPERSAMPLE = 4


@dataclass(frozen=True)
class CircleShape:
    center: tuple[float, float]
    radius: float
    intensity: float = 1.0
    antialias: bool = True
    #: ``None`` paints a filled disk, otherwise a ring of this width.
    thickness: float | None = None
    kind = "circle"

    def bbox(self):
        (cx, cy), r = self.center, self.radius
        return cx - r, cy - r, cx + r, cy + r

    def inside(self, x, y):
        d = np.hypot(x - self.center[0], y - self.center[1])
        if self.thickness is None:
            return d <= self.radius
        return np.abs(d - self.radius) <= 0.5 * self.thickness


@dataclass(frozen=True)
class EllipseShape:
    center: tuple[float, float]
    axes: tuple[float, float]
    angle: float = 0.0
    intensity: float = 1.0
    antialias: bool = True
    kind = "ellipse"

    def bbox(self):
        (cx, cy), (a, b) = self.center, self.axes
        t = math.radians(self.angle)
        hx = math.hypot(a * math.cos(t), b * math.sin(t))
        hy = math.hypot(a * math.sin(t), b * math.cos(t))
        return cx - hx, cy - hy, cx + hx, cy + hy

    def inside(self, x, y):
        t = math.radians(self.angle)
        dx, dy = x - self.center[0], y - self.center[1]
        u = dx * math.cos(t) + dy * math.sin(t)
        v = -dx * math.sin(t) + dy * math.cos(t)
        return (u / self.axes[0]) ** 2 + (v / self.axes[1]) ** 2 <= 1.0


def _polygon_inside(vertices, x, y):
    # Convex polygon, either winding.
    shape = np.broadcast(x, y).shape
    inside_pos = np.ones(shape, dtype=bool)
    inside_neg = np.ones(shape, dtype=bool)
    n = len(vertices)
    for i in range(n):
        (x0, y0), (x1, y1) = vertices[i], vertices[(i + 1) % n]
        cross = (x1 - x0) * (y - y0) - (y1 - y0) * (x - x0)
        inside_pos &= cross >= 0
        inside_neg &= cross <= 0
    return inside_pos | inside_neg


@dataclass(frozen=True)
class RectangleShape:
    center: tuple[float, float]
    size: tuple[float, float]
    angle: float = 0.0
    intensity: float = 1.0
    antialias: bool = True
    kind = "rectangle"

    def vertices(self):
        t = math.radians(self.angle)
        c, s = math.cos(t), math.sin(t)
        hw, hh = 0.5 * self.size[0], 0.5 * self.size[1]
        return [
            (self.center[0] + c * u - s * v, self.center[1] + s * u + c * v)
            for u, v in ((-hw, -hh), (hw, -hh), (hw, hh), (-hw, hh))
        ]

    def bbox(self):
        xs, ys = zip(*self.vertices())
        return min(xs), min(ys), max(xs), max(ys)

    def inside(self, x, y):
        return _polygon_inside(self.vertices(), x, y)


@dataclass(frozen=True)
class TriangleShape:
    vertices: tuple[tuple[float, float], ...]
    intensity: float = 1.0
    antialias: bool = True
    kind = "triangle"

    def bbox(self):
        xs, ys = zip(*self.vertices)
        return min(xs), min(ys), max(xs), max(ys)

    def inside(self, x, y):
        return _polygon_inside(self.vertices, x, y)


@dataclass(frozen=True)
class LineShape:
    p0: tuple[float, float]
    p1: tuple[float, float]
    width: float = 2.0
    intensity: float = 1.0
    antialias: bool = True
    kind = "line"

    def bbox(self):
        h = 0.5 * self.width
        return (
            min(self.p0[0], self.p1[0]) - h,
            min(self.p0[1], self.p1[1]) - h,
            max(self.p0[0], self.p1[0]) + h,
            max(self.p0[1], self.p1[1]) + h,
        )

    def inside(self, x, y):
        (x0, y0), (x1, y1) = self.p0, self.p1
        dx, dy = x1 - x0, y1 - y0
        length2 = dx * dx + dy * dy
        t = np.clip(((x - x0) * dx + (y - y0) * dy) / length2, 0.0, 1.0) if length2 else 0.0
        return np.hypot(x - (x0 + t * dx), y - (y0 + t * dy)) <= 0.5 * self.width


SHAPES = {cls.kind: cls for cls in (CircleShape, EllipseShape, RectangleShape, TriangleShape, LineShape)}


@dataclass(frozen=True)
class SceneSpec:
    width: int
    height: int
    shapes: tuple = field(default_factory=tuple)
    background: float = 0.0

    def to_dict(self) -> dict:
        return {
            "width": self.width,
            "height": self.height,
            "background": self.background,
            "shapes": [{"kind": s.kind, **asdict(s)} for s in self.shapes],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SceneSpec":
        try:
            shapes = []
            for item in data.get("shapes", []):
                item = dict(item)
                shape_cls = SHAPES[item.pop("kind")]
                for key, value in item.items():
                    if isinstance(value, list):
                        item[key] = tuple(tuple(v) if isinstance(v, list) else v for v in value)
                shapes.append(shape_cls(**item))
            return cls(int(data["width"]), int(data["height"]), tuple(shapes), float(data.get("background", 0.0)))
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidSpecError(f"malformed scene spec: {exc!r}") from exc


def _check_spec(spec: SceneSpec) -> None:
    if spec.width < 1 or spec.height < 1:
        raise InvalidSpecError("scene must be at least 1x1")
    if not 0.0 <= spec.background <= 1.0:
        raise InvalidSpecError("background intensity must lie in [0, 1]")
    for s in spec.shapes:
        if not 0.0 <= s.intensity <= 1.0:
            raise InvalidSpecError(f"{s.kind} intensity must lie in [0, 1]")
        x0, y0, x1, y1 = s.bbox()
        if x0 < -0.5 or y0 < -0.5 or x1 > spec.width - 0.5 or y1 > spec.height - 0.5:
            raise InvalidSpecError(f"{s.kind} at {s.bbox()} leaves the {spec.width}x{spec.height} image")


def _coverage(shape, x0: int, y0: int, x1: int, y1: int) -> np.ndarray:
    if shape.antialias:
        k = SUPERSAMPLE
        off = (np.arange(k) + 0.5) / k - 0.5
        xs = (np.arange(x0, x1)[:, None] + off[None, :]).ravel()
        ys = (np.arange(y0, y1)[:, None] + off[None, :]).ravel()
        hit = shape.inside(xs[None, :], ys[:, None])
        return hit.reshape(y1 - y0, k, x1 - x0, k).mean(axis=(1, 3))
    xs = np.arange(x0, x1, dtype=np.float64)
    ys = np.arange(y0, y1, dtype=np.float64)
    return shape.inside(xs[None, :], ys[:, None]).astype(np.float64)


def synth_scene(spec: SceneSpec) -> tuple[np.ndarray, list[Circle]]:
    """Rasterize ``spec``; returns the image and the exact circle parameters.

    Shapes are painted in order over the background.  Antialiased shapes use
    4x4 supersampling per pixel.
    """
    _check_spec(spec)
    img = np.full((spec.height, spec.width), spec.background, dtype=np.float64)
    truth = []
    for s in spec.shapes:
        bx0, by0, bx1, by1 = s.bbox()
        x0 = max(int(math.floor(bx0 + 0.5)) - 1, 0)
        y0 = max(int(math.floor(by0 + 0.5)) - 1, 0)
        x1 = min(int(math.ceil(bx1 + 0.5)) + 1, spec.width)
        y1 = min(int(math.ceil(by1 + 0.5)) + 1, spec.height)
        cov = _coverage(s, x0, y0, x1, y1)
        patch = img[y0:y1, x0:x1]
        img[y0:y1, x0:x1] = patch * (1.0 - cov) + s.intensity * cov
        if isinstance(s, CircleShape):
            truth.append(Circle(float(s.center[0]), float(s.center[1]), float(s.radius)))
    return np.clip(img, 0.0, 1.0), truth


def distractor_scene_spec(width: int = 256, height: int = 256) -> SceneSpec:
    """One circle at (30, 60) with radius 20 among non-circular shapes."""
    shapes = (
        CircleShape((30.0, 60.0), 20.0),
        EllipseShape((160.0, 50.0), (45.0, 12.0), angle=12.0),
        RectangleShape((75.0, 165.0), (70.0, 24.0)),
        TriangleShape(((140.0, 140.0), (225.0, 150.0), (160.0, 160.0))),
        LineShape((40.0, 225.0), (100.0, 225.0), width=3.0),
        LineShape((40.0, 240.0), (100.0, 240.0), width=3.0),
        LineShape((170.0, 210.0), (220.0, 233.0), width=3.0),
    )
    return SceneSpec(width, height, shapes, background=0.0)


def distractor_centroids() -> dict:
    """Centroids of the non-circular shapes in :func:`distractor_scene_spec`."""
    out = {}
    for i, shape in enumerate(distractor_scene_spec().shapes):
        if isinstance(shape, CircleShape):
            continue
        if isinstance(shape, TriangleShape):
            xs, ys = zip(*shape.vertices)
            c = (sum(xs) / 3.0, sum(ys) / 3.0)
        elif isinstance(shape, LineShape):
            c = (0.5 * (shape.p0[0] + shape.p1[0]), 0.5 * (shape.p0[1] + shape.p1[1]))
        else:
            c = tuple(shape.center)
        out[f"{shape.kind}{i}"] = c
    return out


def noise_scene_spec(width: int = 256, height: int = 256) -> SceneSpec:
    """Five circles of different size and contrast on a mid-gray background,
    used for the noise-robustness sweep."""
    shapes = (
        CircleShape((60.0, 62.0), 40.0, intensity=0.9),
        CircleShape((185.0, 60.0), 28.0, intensity=0.8),
        CircleShape((62.0, 190.0), 24.0, intensity=0.85),
        CircleShape((180.0, 182.0), 46.0, intensity=0.95),
        CircleShape((125.0, 125.0), 12.0, intensity=0.8),
    )
    return SceneSpec(width, height, shapes, background=0.3)


def single_circle_spec(radius: float, width: int = 256, height: int = 256, intensity: float = 1.0) -> SceneSpec:
    return SceneSpec(width, height, (CircleShape((width / 2, height / 2), radius, intensity),), background=0.0)


def random_circles_spec(
    rng: np.random.Generator,
    n_circles: int,
    r_range: tuple[float, float] = (10.0, 60.0),
    width: int = 256,
    height: int = 256,
    gap: float = 6.0,
    max_tries: int = 1000,
) -> SceneSpec:
    """Non-overlapping random circles with subpixel centers and radii."""
    placed: list[CircleShape] = []
    for _ in range(max_tries):
        if len(placed) == n_circles:
            break
        r = rng.uniform(*r_range)
        margin = r + 3.0
        if 2 * margin >= min(width, height):
            continue
        cx = rng.uniform(margin, width - 1 - margin)
        cy = rng.uniform(margin, height - 1 - margin)
        if all(math.hypot(cx - c.center[0], cy - c.center[1]) > r + c.radius + gap for c in placed):
            placed.append(CircleShape((float(cx), float(cy)), float(r)))
    return SceneSpec(width, height, tuple(placed), background=0.0)
