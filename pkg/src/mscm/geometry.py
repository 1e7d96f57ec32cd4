"""Arc-length contours and chords.

A :class:`Contour` holds ``Nc`` points equally spaced along the closed
boundary; sample ``i`` sits at parameter ``t = i / Nc`` of the unit-length
perimeter, and all index arithmetic wraps modulo ``Nc``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import gaussian_filter1d

from .errors import DegenerateChord, InvalidConfig, OutOfRange, TooFewPoints

DEFAULT_NC = 512
# Gaussian width of the boundary smoothing, as a fraction of the perimeter.
DEFAULT_SMOOTH = 1 / 128


def is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Contour:
    points: np.ndarray
    perimeter_len: float

    @property
    def nc(self) -> int:
        return len(self.points)

    def steps(self, r: float) -> int:
        """Number of contour samples spanned by arc fraction ``r``."""
        n = r * self.nc
        k = int(round(n))
        if abs(n - k) > 1e-9 or k < 1:
            raise InvalidConfig(f"r={r!r} does not map to a whole number of samples at Nc={self.nc}")
        return k

    def shifted(self, k: int) -> "Contour":
        """Same curve, start moved ``k`` samples forward."""
        return Contour(np.roll(self.points, -k, axis=0), self.perimeter_len)

    def transformed(self, matrix, offset=(0.0, 0.0)) -> "Contour":
        m = np.asarray(matrix, dtype=np.float64)
        pts = self.points @ m.T + np.asarray(offset, dtype=np.float64)
        scale = float(np.sqrt(abs(np.linalg.det(m))))
        return Contour(pts, self.perimeter_len * scale)


@dataclass(frozen=True)
class Chord:
    start: np.ndarray
    end: np.ndarray
    l: float
    cos: float
    sin: float

    @property
    def degenerate(self) -> bool:
        return self.l == 0.0


def parameterize(boundary, nc: int = DEFAULT_NC) -> Contour:
    """Resample a closed polyline at ``nc`` equal arc-length steps.

    The first sample is the first boundary point; samples in between are
    linear interpolations along the polyline, closing edge included.
    """
    pts = np.asarray(boundary, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 8:
        raise TooFewPoints(f"need at least 8 boundary points, got {len(pts)}")
    if nc < 64 or not is_power_of_two(nc):
        raise InvalidConfig(f"Nc must be a power of two >= 64, got {nc}")
    closed = np.vstack([pts, pts[:1]])
    seg = np.hypot(np.diff(closed[:, 0]), np.diff(closed[:, 1]))
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    perimeter = float(cum[-1])
    if perimeter <= 0:
        raise TooFewPoints("boundary has zero length")
    target = np.arange(nc) * (perimeter / nc)
    x = np.interp(target, cum, closed[:, 0])
    y = np.interp(target, cum, closed[:, 1])
    return Contour(np.column_stack([x, y]), perimeter)


def smooth_closed(boundary, frac: float = DEFAULT_SMOOTH, spacing: float = 0.5) -> np.ndarray:
    """Low-pass a closed pixel chain before it is parameterised.

    The chain is first resampled at about ``spacing`` pixels, then convolved
    (wrapping round) with a Gaussian of width ``frac * perimeter``. Tying the
    width to the perimeter keeps the operation scale-covariant, while the
    staircase of a digitised edge, whose size is fixed in pixels, is
    flattened. ``frac = 0`` returns the chain unchanged as floats.
    """
    pts = np.asarray(boundary, dtype=np.float64)
    if frac < 0:
        raise InvalidConfig(f"smoothing fraction must be >= 0, got {frac}")
    if frac == 0:
        return pts.copy()
    perimeter = parameterize(pts, 64).perimeter_len
    n = max(64, 1 << int(np.ceil(np.log2(perimeter / spacing))))
    dense = parameterize(pts, n).points
    return gaussian_filter1d(dense, frac * n, axis=0, mode="wrap")


def chord_arrays(points: np.ndarray, n: int):
    """Vectorised chords from every sample ``i`` to ``i + n``.

    Returns ``(start, end, l, cos, sin)``; degenerate chords carry
    ``l == 0`` and a zero direction.
    """
    start = points
    end = np.roll(points, -n, axis=0)
    delta = end - start
    l = np.hypot(delta[:, 0], delta[:, 1])
    safe = np.where(l > 0, l, 1.0)
    cos = np.where(l > 0, delta[:, 0] / safe, 0.0)
    sin = np.where(l > 0, delta[:, 1] / safe, 0.0)
    return start, end, l, cos, sin


def chord_at(c: Contour, i: int, r: float) -> Chord:
    n = c.steps(r)
    if not 0 < r <= 0.5:
        raise InvalidConfig(f"r must lie in (0, 1/2], got {r!r}")
    a = c.points[i % c.nc]
    b = c.points[(i + n) % c.nc]
    dx, dy = b[0] - a[0], b[1] - a[1]
    l = float(np.hypot(dx, dy))
    if l == 0.0:
        return Chord(a.copy(), b.copy(), 0.0, 0.0, 0.0)
    return Chord(a.copy(), b.copy(), l, float(dx / l), float(dy / l))


def chord_point(ch: Chord, tau: float) -> np.ndarray:
    if not 0.0 <= tau <= ch.l:
        raise OutOfRange(f"tau={tau!r} outside [0, {ch.l}]")
    if tau == ch.l:
        return ch.end.copy()
    return np.array([ch.start[0] + tau * ch.cos, ch.start[1] + tau * ch.sin])


def det3(p, q, s) -> float:
    """Determinant of the rows ``(x, y, 1)`` for three points."""
    # Row-reduced against the first row; identical value, less cancellation.
    return (q[0] - p[0]) * (s[1] - p[1]) - (s[0] - p[0]) * (q[1] - p[1])


def perp_distance(c: Contour, i: int, r: float, s: float) -> float:
    """Distance from ``z(t + s)`` to the line through the chord ``L_{t,r}``."""
    n = c.steps(r)
    m = c.steps(s)
    if not 0 < m < n:
        raise OutOfRange(f"need 0 < s < r, got s={s!r}, r={r!r}")
    ch = chord_at(c, i, r)
    if ch.degenerate:
        raise DegenerateChord(f"zero-length chord at i={i}, r={r}")
    q = c.points[(i + m) % c.nc]
    return abs(det3(ch.start, q, ch.end)) / ch.l


def deviation_sums(points: np.ndarray, idx: np.ndarray, n: int):
    """Sum of arc-to-chord distances over the interior samples of each arc.

    ``idx`` are start indices; for each, the samples ``idx + 1 .. idx + n - 1``
    are measured against the chord to ``idx + n``. Returns ``(sums, l)``;
    sums are zero where the chord is degenerate. Accumulation runs over the
    arc offset in a fixed order, so a single index and a batch agree
    bit-for-bit.
    """
    nc = len(points)
    idx = np.asarray(idx)
    p = points[idx % nc]
    e = points[(idx + n) % nc]
    ex, ey = e[:, 0] - p[:, 0], e[:, 1] - p[:, 1]
    l = np.hypot(ex, ey)
    acc = np.zeros(len(idx))
    for j in range(1, n):
        q = points[(idx + j) % nc]
        acc = acc + np.abs((q[:, 0] - p[:, 0]) * ey - ex * (q[:, 1] - p[:, 1]))
    safe = np.where(l > 0, l, 1.0)
    return np.where(l > 0, acc / safe, 0.0), l
