"""Chord integrals: in-region length, arc deviation, masked intensity moments.

All four measures of a chord come from one composite-midpoint sampling of
the chord: ``M = max(2, ceil(l))`` points at ``tau = (m + 1/2) l / M``.
The mask is read through :func:`sample_mask`, intensity bilinearly from
:attr:`LeafImage.gray_ext`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import Chord, Contour, chord_arrays, chord_at, deviation_sums
from .image import LeafImage

# Chords sampled together; bounds the (chunk, M) working arrays.
_CHUNK = 64


@dataclass(frozen=True)
class ChordMeasures:
    eta: float
    h: float
    mu: float
    sigma: float


def quad_count(l: float) -> int:
    return max(2, math.ceil(l))


def sample_mask(mask: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Region membership: inside when any corner of the enclosing pixel cell is.

    Contour points sit on boundary pixel centres, i.e. exactly on the edge of
    the digital region; this rule keeps a chord between two boundary points
    of a digitised convex shape entirely inside, where a nearest-pixel read
    flickers along every staircase edge.
    """
    h, w = mask.shape
    x0 = np.floor(x).astype(np.int64)
    y0 = np.floor(y).astype(np.int64)
    out = np.zeros(x.shape, dtype=bool)
    for dx in (0, 1):
        for dy in (0, 1):
            xi, yi = x0 + dx, y0 + dy
            ok = (xi >= 0) & (xi < w) & (yi >= 0) & (yi < h)
            out[ok] |= mask[yi[ok], xi[ok]]
    return out


def sample_bilinear(field: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    h, w = field.shape
    x = np.clip(x, 0.0, w - 1.0)
    y = np.clip(y, 0.0, h - 1.0)
    x0 = np.floor(x).astype(np.int64)
    y0 = np.floor(y).astype(np.int64)
    fx = x - x0
    fy = y - y0
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    g00, g10 = field[y0, x0], field[y0, x1]
    g01, g11 = field[y1, x0], field[y1, x1]
    # lerp form keeps a constant field exact
    top = g00 + fx * (g10 - g00)
    bottom = g01 + fx * (g11 - g01)
    return top + fy * (bottom - top)


def _chord_moments(leaf: LeafImage, start, cos, sin, l, counts):
    """eta, mu, sigma for a batch of chords sharing one padded sample grid."""
    mmax = int(counts.max())
    m = np.arange(mmax) + 0.5
    step = l / counts
    tau = m[None, :] * step[:, None]
    x = start[:, 0:1] + tau * cos[:, None]
    y = start[:, 1:2] + tau * sin[:, None]
    valid = np.arange(mmax)[None, :] < counts[:, None]
    f = sample_mask(leaf.mask, x, y) & valid
    g = sample_bilinear(leaf.gray_ext, x, y)

    hits = f.sum(axis=1)
    eta = hits * step
    has = hits > 0
    first = np.argmax(f, axis=1)
    ref = np.where(has, g[np.arange(len(l)), first], 0.0)
    wf = f.astype(np.float64)
    denom = np.where(has, hits, 1)
    # shifted sums, sequential order (cumsum) so padding never changes a row
    mu = ref + np.cumsum(wf * (g - ref[:, None]), axis=1)[:, -1] / denom
    var = np.cumsum(wf * (g - mu[:, None]) ** 2, axis=1)[:, -1] / denom
    mu = np.where(has, mu, 0.0)
    sigma = np.where(has, np.sqrt(var), 0.0)
    return eta, mu, sigma


def chord_moments(leaf: LeafImage, start, cos, sin, l, counts=None):
    """Vectorised ``(eta, mu, sigma)`` for many chords.

    Degenerate chords (``l == 0``) get zeros for all three.
    """
    start = np.asarray(start, dtype=np.float64).reshape(-1, 2)
    l = np.asarray(l, dtype=np.float64).reshape(-1)
    cos = np.asarray(cos, dtype=np.float64).reshape(-1)
    sin = np.asarray(sin, dtype=np.float64).reshape(-1)
    if counts is None:
        counts = np.maximum(2, np.ceil(l)).astype(np.int64)
    counts = np.asarray(counts, dtype=np.int64).reshape(-1)
    eta = np.zeros(len(l))
    mu = np.zeros(len(l))
    sigma = np.zeros(len(l))
    for lo in range(0, len(l), _CHUNK):
        sl = slice(lo, lo + _CHUNK)
        e, u, s = _chord_moments(leaf, start[sl], cos[sl], sin[sl], l[sl], counts[sl])
        eta[sl], mu[sl], sigma[sl] = e, u, s
    dead = l == 0
    eta[dead] = mu[dead] = sigma[dead] = 0.0
    return eta, mu, sigma


def _single(leaf, ch: Chord, M):
    if ch.degenerate:
        return 0.0, 0.0, 0.0
    counts = None if M is None else [M]
    e, u, s = chord_moments(leaf, ch.start, [ch.cos], [ch.sin], [ch.l], counts)
    return float(e[0]), float(u[0]), float(s[0])


def eta(leaf: LeafImage, ch: Chord, M: int | None = None) -> float:
    """Length of the chord inside the region (midpoint rule, ``M`` samples)."""
    if M is not None and M < 2:
        raise ValueError("M must be >= 2")
    return _single(leaf, ch, M)[0]


def mu_sigma(leaf: LeafImage, ch: Chord, M: int | None = None) -> tuple[float, float]:
    """Masked mean and standard deviation of intensity along the chord.

    Both are 0 when no sample lands inside the region.
    """
    if M is not None and M < 2:
        raise ValueError("M must be >= 2")
    _, u, s = _single(leaf, ch, M)
    return u, s


def h_measure(c: Contour, i: int, r: float) -> float:
    """Mean deviation of the ``r``-arc from its chord, 0 for a degenerate chord.

    The arc integral is the trapezoid rule on the contour grid; the two
    end samples have zero distance, so the sum runs over the ``n - 1``
    interior samples and is divided by ``n = r * Nc``.
    """
    n = c.steps(r)
    sums, _ = deviation_sums(c.points, np.array([i]), n)
    return float(sums[0] / n)


def measure_all(leaf: LeafImage, c: Contour, i: int, r: float,
                M: int | None = None) -> ChordMeasures:
    ch = chord_at(c, i, r)
    if ch.degenerate:
        return ChordMeasures(0.0, 0.0, 0.0, 0.0)
    e, u, s = _single(leaf, ch, M)
    return ChordMeasures(e, h_measure(c, i, r), u, s)


def measure_scale(leaf: LeafImage, c: Contour, r: float):
    """All four measures for every start index at arc fraction ``r``.

    Returns four length-``Nc`` arrays ``(eta, h, mu, sigma)``.
    """
    n = c.steps(r)
    start, _, l, cos, sin = chord_arrays(c.points, n)
    eta_, mu_, sigma_ = chord_moments(leaf, start, cos, sin, l)
    sums, _ = deviation_sums(c.points, np.arange(c.nc), n)
    return eta_, sums / n, mu_, sigma_
