"""Raster input, segmentation and boundary extraction.

Coordinates follow the image convention used throughout the package: a
point is ``(x, y)`` with ``x`` the column and ``y`` the row, and pixel
``(x, y)`` has its centre at those integer coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image
from scipy import ndimage
from skimage.filters import threshold_otsu

from .errors import (DegenerateRegion, EmptyForeground, InvalidImage,
                     UnsupportedChannels)

LUMA = (0.299, 0.587, 0.114)
MIN_MARGIN = 2
MIN_BOUNDARY = 8

# Moore neighbourhood, clockwise on screen (y grows downward), starting west.
_OFFSETS = ((-1, 0), (-1, -1), (0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1))
_DIR = {off: i for i, off in enumerate(_OFFSETS)}


@dataclass(frozen=True)
class RasterImage:
    """Row-major 8-bit samples with shape ``(height, width, channels)``."""

    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.ndim == 2:
            data = data[:, :, None]
        if data.ndim != 3:
            raise InvalidImage(f"expected 2-D or 3-D sample array, got {data.ndim}-D")
        if data.shape[0] < 8 or data.shape[1] < 8:
            raise InvalidImage(f"image too small: {data.shape[1]}x{data.shape[0]}")
        object.__setattr__(self, "data", data)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]


@dataclass(frozen=True)
class LeafImage:
    """Gray field in [0, 1] and the binary region mask, same shape.

    ``gray_ext`` is the gray field with every exterior pixel replaced by
    its nearest interior value. Intensity sampling reads from it so that
    bilinear interpolation next to the boundary never mixes in background.
    """

    gray: np.ndarray
    mask: np.ndarray
    gray_ext: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        gray = np.asarray(self.gray, dtype=np.float64)
        mask = np.asarray(self.mask, dtype=bool)
        if gray.shape != mask.shape or gray.ndim != 2:
            raise InvalidImage(f"gray {gray.shape} and mask {mask.shape} must be equal 2-D shapes")
        object.__setattr__(self, "gray", gray)
        object.__setattr__(self, "mask", mask)
        if mask.any() and not mask.all():
            idx = ndimage.distance_transform_edt(~mask, return_distances=False,
                                                 return_indices=True)
            ext = gray[idx[0], idx[1]]
        else:
            ext = gray.copy()
        object.__setattr__(self, "gray_ext", ext)


def read_image(path) -> RasterImage:
    """Load PNG / PGM / PPM into a 1- or 3-channel raster."""
    with Image.open(path) as im:
        if im.mode == "L":
            arr = np.asarray(im, dtype=np.uint8)
        elif im.mode == "RGB":
            arr = np.asarray(im, dtype=np.uint8)
        elif im.mode in ("1", "LA", "I", "I;16", "F"):
            arr = np.asarray(im.convert("L"), dtype=np.uint8)
        else:
            arr = np.asarray(im.convert("RGB"), dtype=np.uint8)
    return RasterImage(arr)


def write_image(img: RasterImage, path) -> None:
    data = img.data[:, :, 0] if img.channels == 1 else img.data
    Image.fromarray(np.ascontiguousarray(data, dtype=np.uint8)).save(path)


def write_mask_pgm(mask: np.ndarray, path) -> None:
    """Binary mask as 8-bit PGM, 0 outside and 255 inside."""
    arr = np.where(np.asarray(mask, dtype=bool), 255, 0).astype(np.uint8)
    Image.fromarray(arr).save(Path(path), format="PPM")


def to_gray(img: RasterImage) -> np.ndarray:
    if img.channels == 1:
        return img.data[:, :, 0].astype(np.float64) / 255.0
    if img.channels == 3:
        rgb = img.data.astype(np.float64)
        return (LUMA[0] * rgb[:, :, 0] + LUMA[1] * rgb[:, :, 1]
                + LUMA[2] * rgb[:, :, 2]) / 255.0
    raise UnsupportedChannels(f"unsupported channel count {img.channels}")


def _margin_pad(mask: np.ndarray) -> int:
    rows = np.flatnonzero(mask.any(axis=1))
    cols = np.flatnonzero(mask.any(axis=0))
    margin = min(rows[0], cols[0], mask.shape[0] - 1 - rows[-1], mask.shape[1] - 1 - cols[-1])
    return max(0, MIN_MARGIN - int(margin))


def segment(gray: np.ndarray) -> np.ndarray:
    """Otsu threshold, keep the largest 4-connected component, fill holes.

    Polarity is picked so that the image border is mostly background,
    which handles both bright-on-dark renders and dark leaves on a white
    scanner bed. The result is zero-padded on every side when needed so
    the foreground keeps a 2 px margin; the pad is uniform, so
    ``(mask.shape[0] - gray.shape[0]) // 2`` recovers it.
    """
    gray = np.asarray(gray, dtype=np.float64)
    if gray.size == 0 or gray.max() == gray.min():
        raise EmptyForeground("constant image has no foreground")
    t = threshold_otsu(gray)
    fg = gray > t
    border = np.concatenate([fg[0], fg[-1], fg[1:-1, 0], fg[1:-1, -1]])
    if border.mean() > 0.5:
        fg = ~fg
    labels, n = ndimage.label(fg)
    if n == 0:
        raise EmptyForeground("no foreground pixel survives thresholding")
    sizes = np.bincount(labels.ravel())
    sizes[0] = 0
    mask = labels == int(np.argmax(sizes))
    mask = ndimage.binary_fill_holes(mask)
    pad = _margin_pad(mask)
    if pad:
        mask = np.pad(mask, pad, constant_values=False)
    return mask


def leaf_from_gray(gray: np.ndarray) -> LeafImage:
    """Segment ``gray`` and pad it to match the mask."""
    gray = np.asarray(gray, dtype=np.float64)
    mask = segment(gray)
    pad = (mask.shape[0] - gray.shape[0]) // 2
    if pad:
        gray = np.pad(gray, pad, mode="edge")
    return LeafImage(gray, mask)


def load_leaf(path) -> LeafImage:
    return leaf_from_gray(to_gray(read_image(path)))


def _moore_step(mask, p, b):
    x, y = p
    for k in range(1, 9):
        d = (b + k) % 8
        dx, dy = _OFFSETS[d]
        qx, qy = x + dx, y + dy
        if 0 <= qy < mask.shape[0] and 0 <= qx < mask.shape[1] and mask[qy, qx]:
            px, py = _OFFSETS[(d - 1) % 8]
            back = (x + px - qx, y + py - qy)
            return (qx, qy), _DIR[back]
    return None, b


def _drop_spikes(chain: list) -> list:
    # A one-pixel-wide spur is walked out and back: ... a b a ... -> ... a ...
    changed = True
    while changed and len(chain) > 2:
        changed = False
        out = []
        for p in chain:
            if len(out) >= 2 and out[-2] == p:
                out.pop()
                changed = True
            else:
                out.append(p)
        while len(out) > 2 and out[-1] == out[1]:
            out = out[1:-1]
            changed = True
        while len(out) > 2 and out[-2] == out[0]:
            del out[-2:]
            changed = True
        chain = out
    return chain


def signed_area(points: np.ndarray) -> float:
    x, y = points[:, 0], points[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def trace_boundary(mask: np.ndarray) -> np.ndarray:
    """Moore-neighbour tracing of the outer boundary.

    Stops with Jacob's criterion: when the start pixel is re-entered and the
    next step repeats the very first one. Returns an ``(n, 2)`` integer
    array of ``(x, y)`` pixel centres with positive signed area. The
    closing edge back to the first point is implicit.
    """
    mask = np.asarray(mask, dtype=bool)
    ys, xs = np.nonzero(mask)
    if len(ys) == 0:
        raise DegenerateRegion("empty mask")
    start = (int(xs[0]), int(ys[0]))
    chain = [start]
    p, b = start, 0
    first = None
    limit = 8 * int(mask.sum()) + 16
    for _ in range(limit):
        q, nb = _moore_step(mask, p, b)
        if q is None:
            break
        if first is None:
            first = (q, nb)
        elif p == start and (q, nb) == first:
            break
        chain.append(q)
        p, b = q, nb
    if len(chain) > 1 and chain[-1] == chain[0]:
        chain.pop()
    chain = _drop_spikes(chain)
    if len(chain) < MIN_BOUNDARY:
        raise DegenerateRegion(f"boundary has {len(chain)} points, need {MIN_BOUNDARY}")
    pts = np.array(chain, dtype=np.int64)
    if signed_area(pts.astype(np.float64)) < 0:
        pts = np.concatenate([pts[:1], pts[:0:-1]])
    return pts
