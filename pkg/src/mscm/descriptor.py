"""Multiscale signatures and the Fourier-magnitude descriptor.

Pipeline for one leaf::

    slide -> max_normalize -> fourier_compact (per signature) -> / NormStats

The unnormalised magnitudes (``raw`` arrays of shape ``(4, K, C)``) are
kept separate from the final :class:`Descriptor` because the normalising
statistics come from the model set only and are known after every model
leaf has been processed.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, InvalidConfig, ScaleTooFine, ZeroStatistic
from .geometry import DEFAULT_NC, DEFAULT_SMOOTH, Contour, parameterize, smooth_closed
from .image import LeafImage, trace_boundary
from .measures import measure_scale

MEASURES = ("eta", "h", "mu", "sigma")
DEFAULT_K = 7
DEFAULT_C = 7


def scales(K: int) -> list[float]:
    """Dyadic arc fractions ``1/2, 1/4, ..., 2**-K``."""
    return [2.0 ** -k for k in range(1, K + 1)]


@dataclass(frozen=True)
class SignatureSet:
    """Four ``(K, Nc)`` arrays, row ``k - 1`` holding scale ``r = 2**-k``."""

    eta: np.ndarray
    h: np.ndarray
    mu: np.ndarray
    sigma: np.ndarray
    flags: tuple = field(default=())

    @property
    def K(self) -> int:
        return self.eta.shape[0]

    @property
    def nc(self) -> int:
        return self.eta.shape[1]

    def stack(self) -> np.ndarray:
        return np.stack([self.eta, self.h, self.mu, self.sigma])

    def __len__(self):
        return 4 * self.K


@dataclass(frozen=True)
class NormStats:
    eta_dot: float
    h_dot: float
    mu_dot: float
    sigma_dot: float
    n_images: int = 0

    def as_array(self) -> np.ndarray:
        return np.array([self.eta_dot, self.h_dot, self.mu_dot, self.sigma_dot])

    def to_json(self) -> str:
        return json.dumps({"eta_dot": repr(self.eta_dot), "h_dot": repr(self.h_dot),
                           "mu_dot": repr(self.mu_dot), "sigma_dot": repr(self.sigma_dot),
                           "n_images": self.n_images}, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "NormStats":
        d = json.loads(text)
        return cls(float(d["eta_dot"]), float(d["h_dot"]), float(d["mu_dot"]),
                   float(d["sigma_dot"]), int(d.get("n_images", 0)))


@dataclass(frozen=True)
class Descriptor:
    """Flat vector of ``4 * C * K`` entries, ordered measure, scale, frequency."""

    C: int
    K: int
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64).reshape(-1)
        if len(values) != 4 * self.C * self.K:
            raise DimensionMismatch(f"expected {4 * self.C * self.K} values, got {len(values)}")
        object.__setattr__(self, "values", values)

    def __len__(self):
        return len(self.values)

    def block(self, measure: str) -> np.ndarray:
        """``(K, C)`` view of one measure."""
        i = MEASURES.index(measure)
        return self.values.reshape(4, self.K, self.C)[i]


def leaf_contour(leaf: LeafImage, nc: int = DEFAULT_NC,
                 smooth: float = DEFAULT_SMOOTH) -> Contour:
    """Traced, smoothed and arc-length resampled outer boundary of ``leaf``."""
    return parameterize(smooth_closed(trace_boundary(leaf.mask), smooth), nc)


def check_config(nc: int, K: int, C: int) -> None:
    if K < 1:
        raise InvalidConfig(f"K must be >= 1, got {K}")
    if 2 ** K > nc:
        raise ScaleTooFine(f"2**K = {2 ** K} exceeds Nc = {nc}")
    if not 1 <= C <= nc // 2:
        raise InvalidConfig(f"C must lie in [1, Nc/2], got {C}")


def slide(leaf: LeafImage, c: Contour, K: int) -> SignatureSet:
    """Sweep the chord round the contour at every scale ``r = 2**-k``."""
    if K < 1:
        raise InvalidConfig(f"K must be >= 1, got {K}")
    if 2 ** K > c.nc:
        raise ScaleTooFine(f"2**K = {2 ** K} exceeds Nc = {c.nc}")
    rows = [measure_scale(leaf, c, r) for r in scales(K)]
    return SignatureSet(*(np.array([row[m] for row in rows]) for m in range(4)))


def max_normalize(sig: SignatureSet) -> SignatureSet:
    """Divide every eta and h signature by its own maximum.

    A signature that is zero everywhere stays zero and is listed in
    ``flags`` as e.g. ``"h[k=3]"``; intensity signatures pass through.
    """
    flags = list(sig.flags)
    out = {}
    for name in ("eta", "h"):
        arr = getattr(sig, name).copy()
        peak = arr.max(axis=1)
        for k in range(arr.shape[0]):
            if peak[k] > 0:
                arr[k] /= peak[k]
            else:
                flags.append(f"{name}[k={k + 1}]")
        out[name] = arr
    return SignatureSet(out["eta"], out["h"], sig.mu.copy(), sig.sigma.copy(), tuple(flags))


def fourier_compact(signature, C: int) -> np.ndarray:
    """Magnitudes of the first ``C`` DFT coefficients, scaled by ``1/Nc``.

    The scaling makes the zero-frequency term the signature mean, the
    discrete counterpart of integrating over the unit parameter interval.
    Works along the last axis, so a ``(..., Nc)`` stack is fine.
    """
    x = np.asarray(signature, dtype=np.float64)
    nc = x.shape[-1]
    if not 1 <= C <= nc // 2:
        raise InvalidConfig(f"C must lie in [1, Nc/2], got {C}")
    return np.abs(np.fft.fft(x, axis=-1)[..., :C]) / nc


def raw_descriptor(leaf: LeafImage, c: Contour, K: int = DEFAULT_K,
                   C: int = DEFAULT_C) -> np.ndarray:
    """Unnormalised magnitudes, shape ``(4, K, C)``."""
    check_config(c.nc, K, C)
    sig = max_normalize(slide(leaf, c, K))
    return fourier_compact(sig.stack(), C)


def train_stats(raws) -> NormStats:
    """Average zero-frequency magnitude per measure over images and scales.

    ``raws`` is an ``(N, 4, K, C)`` stack of raw descriptors, or just their
    zero-frequency slices as ``(N, 4, K)``.
    """
    arr = np.asarray(raws, dtype=np.float64)
    if arr.ndim == 4:
        arr = arr[..., 0]
    if arr.ndim != 3 or arr.shape[1] != 4 or arr.shape[0] < 1:
        raise DimensionMismatch(f"expected (N, 4, K[, C]) raw magnitudes, got {arr.shape}")
    n, _, k = arr.shape
    # per-measure sum over N*K terms, then one division, as in the definition
    means = arr.transpose(1, 0, 2).reshape(4, n * k).sum(axis=1) / (n * k)
    zero = [MEASURES[i] for i in range(4) if not means[i] > 0]
    if zero:
        raise ZeroStatistic(f"zero normalising statistic for {', '.join(zero)}")
    return NormStats(*(float(v) for v in means), n_images=n)


def finalize(raw: np.ndarray, stats: NormStats) -> Descriptor:
    raw = np.asarray(raw, dtype=np.float64)
    _, K, C = raw.shape
    dots = stats.as_array()
    if not np.all(dots > 0):
        raise ZeroStatistic("normalising statistics must be positive")
    return Descriptor(C, K, (raw / dots[:, None, None]).reshape(-1))


def build(leaf: LeafImage, c: Contour, K: int, C: int, stats: NormStats) -> Descriptor:
    return finalize(raw_descriptor(leaf, c, K, C), stats)


# -- persistence --------------------------------------------------------------

def store_header(C: int, K: int) -> list[str]:
    return ["id", "part", "C", "K"] + [f"v{i}" for i in range(4 * C * K)]


def format_store(rows) -> str:
    """CSV text for ``(id, part, Descriptor)`` rows; values to 17 significant digits."""
    rows = list(rows)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if rows:
        C, K = rows[0][2].C, rows[0][2].K
    else:
        C, K = DEFAULT_C, DEFAULT_K
    w.writerow(store_header(C, K))
    for ident, part, d in rows:
        if (d.C, d.K) != (C, K):
            raise DimensionMismatch("all descriptors in a store must share C and K")
        w.writerow([ident, part, d.C, d.K] + [format(float(v), ".17g") for v in d.values])
    return buf.getvalue()


def write_store(path, rows) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(format_store(rows))
    tmp.replace(path)


def read_store(path) -> list[tuple[str, str, Descriptor]]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[:4] != ["id", "part", "C", "K"]:
            raise InvalidConfig(f"{path}: not a descriptor store")
        rows = []
        for rec in reader:
            C, K = int(rec[2]), int(rec[3])
            rows.append((rec[0], rec[1], Descriptor(C, K, np.array([float(v) for v in rec[4:]]))))
    return rows
