"""Synthetic shapes with known geometry, for oracles and demo datasets.

Shapes live in a canonical frame centred on the origin. :func:`render`
maps every pixel centre back through the inverse similarity transform and
tests it against the canonical shape, so a rendering is a pure function of
the spec. The returned :class:`GroundTruth` carries the exact transformed
contour and whatever closed-form measure values the shape admits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidConfig, ShapeOutOfCanvas
from .geometry import Contour, parameterize
from .image import RasterImage, write_image

PARTS = ("U", "M", "L")


# -- shapes -------------------------------------------------------------------

def _densify(vertices, per_edge=16):
    """Split each polygon edge evenly; the curve is unchanged."""
    v = np.asarray(vertices, dtype=np.float64)
    w = np.roll(v, -1, axis=0)
    t = (np.arange(per_edge) / per_edge)[None, :, None]
    return (v[:, None, :] * (1 - t) + w[:, None, :] * t).reshape(-1, 2)


@dataclass(frozen=True)
class Disk:
    radius: float

    convex = True

    def contains(self, u, v):
        return u * u + v * v <= self.radius ** 2

    def outline(self, n=4096):
        a = 2 * np.pi * np.arange(n) / n
        return np.column_stack([self.radius * np.cos(a), self.radius * np.sin(a)])

    @property
    def extent(self):
        return self.radius


@dataclass(frozen=True)
class Ellipse:
    a: float
    b: float

    convex = True

    def contains(self, u, v):
        return (u / self.a) ** 2 + (v / self.b) ** 2 <= 1.0

    def outline(self, n=8192):
        t = 2 * np.pi * np.arange(n) / n
        return np.column_stack([self.a * np.cos(t), self.b * np.sin(t)])

    @property
    def extent(self):
        return max(self.a, self.b)


@dataclass(frozen=True)
class Rectangle:
    width: float
    height: float

    convex = True

    def contains(self, u, v):
        return (np.abs(u) <= self.width / 2) & (np.abs(v) <= self.height / 2)

    def outline(self, n=None):
        w, h = self.width / 2, self.height / 2
        # start mid right edge so the start point matches the other shapes
        return _densify([[w, 0.0], [w, h], [-w, h], [-w, -h], [w, -h]])

    @property
    def extent(self):
        return math.hypot(self.width, self.height) / 2


@dataclass(frozen=True)
class Star:
    """Star polygon; ``outer`` is one tip radius or a tuple, one per tip."""

    points: int
    inner: float
    outer: float | tuple

    convex = False

    def tip_radii(self):
        if np.ndim(self.outer) == 0:
            return np.full(self.points, float(self.outer))
        radii = np.asarray(self.outer, dtype=np.float64)
        if len(radii) != self.points:
            raise InvalidConfig(f"{self.points}-point star needs {self.points} tip radii")
        return radii

    def vertices(self):
        k = np.arange(2 * self.points)
        rad = np.full(2 * self.points, float(self.inner))
        rad[0::2] = self.tip_radii()
        ang = np.pi * k / self.points
        return np.column_stack([rad * np.cos(ang), rad * np.sin(ang)])

    def contains(self, u, v):
        vert = self.vertices()
        sector = np.pi / self.points
        ang = np.mod(np.arctan2(v, u), 2 * np.pi)
        k = np.minimum((ang // sector).astype(np.int64), 2 * self.points - 1)
        p = vert[k]
        q = vert[(k + 1) % len(vert)]
        # origin and point on the same side of edge p->q (origin is inside)
        cross = (q[..., 0] - p[..., 0]) * (v - p[..., 1]) - (q[..., 1] - p[..., 1]) * (u - p[..., 0])
        return cross >= 0

    def outline(self, n=None):
        return _densify(self.vertices())

    @property
    def extent(self):
        return float(self.tip_radii().max())


# -- intensity fields ---------------------------------------------------------

@dataclass(frozen=True)
class Constant:
    value: float

    def __call__(self, u, v):
        return np.full(np.shape(u), float(self.value))


@dataclass(frozen=True)
class LinearRamp:
    """Linear in the canonical frame: ``lo`` at ``-span`` to ``hi`` at ``+span``."""

    angle: float = 0.0
    lo: float = 0.3
    hi: float = 0.9
    span: float = 100.0

    def __call__(self, u, v):
        d = u * math.cos(self.angle) + v * math.sin(self.angle)
        t = np.clip((d + self.span) / (2 * self.span), 0.0, 1.0)
        return self.lo + (self.hi - self.lo) * t


@dataclass(frozen=True)
class RadialGradient:
    centre: float = 0.9
    edge: float = 0.4
    span: float = 100.0

    def __call__(self, u, v):
        t = np.clip(np.hypot(u, v) / self.span, 0.0, 1.0)
        return self.centre + (self.edge - self.centre) * t


# -- rendering ----------------------------------------------------------------

@dataclass(frozen=True)
class SyntheticSpec:
    shape: object
    intensity: object = Constant(0.8)
    scale: float = 1.0
    rotation: float = 0.0  # degrees
    translation: tuple = (0.0, 0.0)
    canvas: tuple = (256, 256)  # (width, height)
    background: float = 0.0

    def __post_init__(self):
        if self.scale <= 0:
            raise InvalidConfig(f"scale must be positive, got {self.scale}")

    @property
    def centre(self):
        w, h = self.canvas
        return ((w - 1) / 2 + self.translation[0], (h - 1) / 2 + self.translation[1])

    @property
    def matrix(self):
        c, s = math.cos(math.radians(self.rotation)), math.sin(math.radians(self.rotation))
        return self.scale * np.array([[c, -s], [s, c]])

    def to_canonical(self, x, y):
        cx, cy = self.centre
        c, s = math.cos(math.radians(self.rotation)), math.sin(math.radians(self.rotation))
        dx, dy = x - cx, y - cy
        return (c * dx + s * dy) / self.scale, (-s * dx + c * dy) / self.scale

    def to_image(self, pts):
        return np.asarray(pts, dtype=np.float64) @ self.matrix.T + np.asarray(self.centre)


@dataclass(frozen=True)
class GroundTruth:
    spec: SyntheticSpec
    gray_levels: np.ndarray = field(repr=False)

    def contour(self, nc: int = 512) -> Contour:
        """Exact boundary in image coordinates, unit-perimeter parameterised."""
        return parameterize(self.spec.to_image(self.spec.shape.outline()), nc)

    def eta_half(self):
        """Chord length inside the shape at r = 1/2 (disks only)."""
        if isinstance(self.spec.shape, Disk):
            return 2 * self.spec.shape.radius * self.spec.scale
        return None

    def h_half(self):
        if isinstance(self.spec.shape, Disk):
            return 2 * self.spec.shape.radius * self.spec.scale / math.pi
        return None

    def mu(self):
        """Masked mean for a constant intensity, as quantised to 8 bits."""
        if isinstance(self.spec.intensity, Constant):
            return round(self.spec.intensity.value * 255) / 255
        return None

    def sigma(self):
        if isinstance(self.spec.intensity, Constant):
            return 0.0
        return None


def render(spec: SyntheticSpec) -> tuple[RasterImage, GroundTruth]:
    """Rasterise ``spec`` (pixel centre inside the closed shape -> foreground).

    Returns a single-channel 8-bit raster and the ground-truth handle.
    """
    w, h = spec.canvas
    r = spec.shape.extent * spec.scale
    cx, cy = spec.centre
    margin = 2
    if cx - r < margin or cy - r < margin or cx + r > w - 1 - margin or cy + r > h - 1 - margin:
        raise ShapeOutOfCanvas(f"shape of extent {r:.1f} does not fit {w}x{h} at ({cx}, {cy})")
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    u, v = spec.to_canonical(xs, ys)
    inside = spec.shape.contains(u, v)
    g = np.where(inside, spec.intensity(u, v), spec.background)
    levels = np.clip(np.rint(g * 255), 0, 255).astype(np.uint8)
    return RasterImage(levels), GroundTruth(spec, levels)


# -- mini dataset ---------------------------------------------------------------

def _class_shapes(n_classes, rng):
    """Per class, one canonical shape per part, spread over a parameter grid."""
    families = []
    aspects = np.linspace(1.0, 2.2, max(n_classes, 2))
    order = rng.permutation(n_classes)
    for k in range(n_classes):
        a = aspects[order[k]]
        fam = k % 3
        parts = []
        for j in range(3):
            size = 44.0 - 4.0 * j
            if fam == 0:
                parts.append(Ellipse(size, size / a))
            elif fam == 1:
                parts.append(Rectangle(1.6 * size, 1.6 * size / a))
            else:
                parts.append(Star(5 + j, size * (0.45 + 0.15 * (a - 1)), size))
        families.append(parts)
    return families


def make_mini_dataset(n_classes: int, seed: int, out, canvas=(128, 128)) -> list[Path]:
    """Write a conforming dataset tree of synthetic leaves.

    Classes get evenly spaced intensity levels and shape parameters
    (shuffled by ``seed``), so any two classes differ by a fixed margin;
    the two samples of a class differ only by a random rotation, a small
    scale and translation jitter.
    Returns the written paths in sorted order.
    """
    if n_classes < 2:
        raise InvalidConfig("need at least 2 classes")
    rng = np.random.default_rng(seed)
    levels = np.linspace(0.35, 0.95, n_classes)[rng.permutation(n_classes)]
    shapes = _class_shapes(n_classes, rng)
    out = Path(out)
    written = []
    for k in range(n_classes):
        cid = f"c{k + 1:03d}"
        (out / cid).mkdir(parents=True, exist_ok=True)
        for sample in (1, 2):
            for j, part in enumerate(PARTS):
                level = float(levels[k]) - 0.05 * j
                intensity = RadialGradient(centre=min(1.0, level + 0.05), edge=level - 0.1,
                                           span=shapes[k][j].extent)
                spec = SyntheticSpec(
                    shape=shapes[k][j],
                    intensity=intensity,
                    scale=float(1.0 + rng.uniform(-0.04, 0.04)),
                    rotation=float(rng.uniform(0.0, 360.0)),
                    translation=(float(rng.integers(-3, 4)), float(rng.integers(-3, 4))),
                    canvas=canvas,
                )
                img, _ = render(spec)
                path = out / cid / f"{part}_{sample}.png"
                write_image(img, path)
                written.append(path)
    return sorted(written)
