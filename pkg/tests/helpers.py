"""Shared oracles and fixtures-as-functions for the test suite."""

from __future__ import annotations

import numpy as np
from skimage.draw import line as raster_line

from mscm.descriptor import scales
from mscm.geometry import Contour
from mscm.image import leaf_from_gray, to_gray
from mscm.measures import measure_scale
from mscm.testkit import Star, render

# Two long neighbouring tips: half-perimeter chords cross the notch between them.
LEAF_STAR = Star(5, 30.0, (110.0, 110.0, 45.0, 45.0, 45.0))
REGULAR_STAR = Star(5, 40.0, 100.0)


def rendered(spec):
    """``(leaf, gt, pad)`` for a synthetic spec."""
    img, gt = render(spec)
    leaf = leaf_from_gray(to_gray(img))
    return leaf, gt, (leaf.mask.shape[0] - img.height) // 2


def gt_contour(gt, pad, nc=512) -> Contour:
    c = gt.contour(nc)
    return Contour(c.points + pad, c.perimeter_len)


def exact_signatures(spec, K=7, nc=512):
    """Per-scale ``(eta, h, mu, sigma)`` on the exact contour of a re-rasterised spec."""
    leaf, gt, pad = rendered(spec)
    c = gt_contour(gt, pad, nc)
    return [measure_scale(leaf, c, r) for r in scales(K)]


def signature_errors(base, other, a=1.0) -> np.ndarray:
    """``(4, K)`` worst per-(t, r) deviation from the covariance law.

    eta and h must scale by ``a``, mu and sigma stay put. Each deviation is
    taken relative to the largest magnitude of the predicted signature at
    that scale, so near-zero samples do not blow up the ratio.
    """
    powers = (1, 1, 0, 0)
    err = np.zeros((4, len(base)))
    for k, (b, o) in enumerate(zip(base, other)):
        for m, p in enumerate(powers):
            want = b[m] * a ** p
            ref = np.abs(want).max()
            dev = np.abs(o[m] - want).max()
            err[m, k] = dev / ref if ref > 0 else dev
    return err


def rel_l1(x, y) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    return float(np.abs(x - y).sum() / np.abs(x).sum())


def pixel_walk(leaf, start, end):
    """Brute-force chord measures from the pixels a line algorithm visits."""
    x0, y0 = (int(round(v)) for v in start)
    x1, y1 = (int(round(v)) for v in end)
    rr, cc = raster_line(y0, x0, y1, x1)
    inside = leaf.mask[rr, cc]
    l = float(np.hypot(end[0] - start[0], end[1] - start[1]))
    eta = inside.mean() * l
    if not inside.any():
        return eta, 0.0, 0.0
    g = leaf.gray[rr[inside], cc[inside]]
    return eta, float(g.mean()), float(g.std())
