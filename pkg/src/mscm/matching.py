"""Weighted L1 dissimilarity, nearest-neighbour matching and the two-way protocol.

The protocol: every cultivar contributes two joint samples. Sample 1 of
every cultivar forms the model set and sample 2 the test set; each test
sample is matched against all models, then the roles are swapped. A test
is correct when its nearest model belongs to the same cultivar, so ``n``
cultivars give ``2n`` tests.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .descriptor import Descriptor
from .errors import (DimensionMismatch, EmptyModelSet, InvalidConfig, MissingPart,
                     NotEnoughClasses, UnpairedCultivar)

PARTS = ("U", "M", "L")
DEFAULT_W = 0.29


@dataclass(frozen=True)
class JointDescriptor:
    """Upper, middle and lower descriptors of one leaf sample."""

    cultivar_id: str
    sample_id: int
    upper: Descriptor
    middle: Descriptor
    lower: Descriptor

    def __post_init__(self):
        for name in ("upper", "middle", "lower"):
            if getattr(self, name) is None:
                raise MissingPart(f"{self.cultivar_id}/{self.sample_id}: no {name} descriptor")
        dims = {(d.C, d.K) for d in self.parts}
        if len(dims) != 1:
            raise DimensionMismatch(f"{self.cultivar_id}/{self.sample_id}: parts differ in (C, K)")

    @property
    def parts(self) -> tuple:
        return (self.upper, self.middle, self.lower)

    def part(self, name: str) -> Descriptor:
        return self.parts[PARTS.index(name)]


def _check_w(W: float) -> float:
    W = float(W)
    if not 0.0 <= W <= 1.0:
        raise InvalidConfig(f"W must lie in [0, 1], got {W}")
    return W


def _split_l1(a: np.ndarray, b: np.ndarray, half: int):
    # shape block (eta, h) then appearance block (mu, sigma), each summed alone
    d = np.abs(a - b)
    return d[..., :half].sum(axis=-1), d[..., half:].sum(axis=-1)


def _compatible(A: Descriptor, B: Descriptor):
    if (A.C, A.K) != (B.C, B.K) or len(A) != len(B):
        raise DimensionMismatch(f"descriptor sizes differ: C={A.C},K={A.K} vs C={B.C},K={B.K}")


def part_dissimilarity(A: Descriptor, B: Descriptor, W: float = DEFAULT_W) -> float:
    """``W * (|d eta| + |d h|) + (1 - W) * (|d mu| + |d sigma|)``, summed over scales and frequencies."""
    _compatible(A, B)
    W = _check_w(W)
    s, t = _split_l1(A.values, B.values, len(A) // 2)
    return float(W * s + (1.0 - W) * t)


def joint_dissimilarity(A: JointDescriptor, B: JointDescriptor, W: float = DEFAULT_W) -> float:
    """Sum of the three part dissimilarities."""
    total = 0.0
    for a, b in zip(A.parts, B.parts):
        total += part_dissimilarity(a, b, W)
    return total


def nn_classify(query: JointDescriptor, models, W: float = DEFAULT_W, dissimilarity=None) -> str:
    """Cultivar of the closest model; ties go to the lowest model index."""
    models = list(models)
    if not models:
        raise EmptyModelSet("no models to match against")
    dis = dissimilarity or (lambda a, b: joint_dissimilarity(a, b, W))
    d = np.array([dis(query, m) for m in models], dtype=np.float64)
    return models[int(np.argmin(d))].cultivar_id


# -- protocol -----------------------------------------------------------------

@dataclass
class EvalReport:
    accuracy: float
    n_correct: int
    n_tests: int
    per_part: dict
    confusion: np.ndarray = field(repr=False)
    cultivars: list = field(repr=False)
    W: float = DEFAULT_W
    part_W: float = DEFAULT_W
    flags: list = field(default_factory=list)

    def summary(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "n_correct": self.n_correct,
            "n_tests": self.n_tests,
            "per_part": dict(self.per_part),
            "W": self.W,
            "part_W": self.part_W,
            "n_cultivars": len(self.cultivars),
            "flags": list(self.flags),
        }

    def to_json(self) -> str:
        return json.dumps(self.summary(), indent=2, sort_keys=True) + "\n"

    def confusion_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["second\\first"] + list(self.cultivars))
        for cid, row in zip(self.cultivars, self.confusion):
            w.writerow([cid] + [format(float(v), ".17g") for v in row])
        return buf.getvalue()


def pair_samples(samples):
    """``(cultivars, firsts, seconds)`` sorted by cultivar id."""
    by_cultivar: dict = {}
    for s in samples:
        by_cultivar.setdefault(s.cultivar_id, {})
        if s.sample_id in by_cultivar[s.cultivar_id]:
            raise UnpairedCultivar(f"{s.cultivar_id}: sample {s.sample_id} given twice")
        by_cultivar[s.cultivar_id][s.sample_id] = s
    cultivars = sorted(by_cultivar)
    for cid in cultivars:
        if sorted(by_cultivar[cid]) != [1, 2]:
            raise UnpairedCultivar(f"{cid}: need samples 1 and 2, got {sorted(by_cultivar[cid])}")
    if not cultivars:
        raise EmptyModelSet("no samples to evaluate")
    firsts = [by_cultivar[c][1] for c in cultivars]
    seconds = [by_cultivar[c][2] for c in cultivars]
    return cultivars, firsts, seconds


class _Terms:
    """Shape and appearance L1 terms between the second and first samples.

    ``shape[p, i, j]`` compares part ``p`` of second sample ``i`` with first
    sample ``j``; the matrices are symmetric in meaning, so the swapped
    round just reads them transposed.
    """

    def __init__(self, firsts, seconds):
        first = np.stack([[d.values for d in s.parts] for s in firsts])    # (n, 3, D)
        second = np.stack([[d.values for d in s.parts] for s in seconds])
        half = first.shape[-1] // 2
        # (3, n, n): part, second index, first index
        s, a = _split_l1(second.transpose(1, 0, 2)[:, :, None, :],
                         first.transpose(1, 0, 2)[:, None, :, :], half)
        self.shape = s
        self.app = a

    def part(self, p: int, W: float) -> np.ndarray:
        return W * self.shape[p] + (1.0 - W) * self.app[p]

    def joint(self, W: float) -> np.ndarray:
        total = self.part(0, W)
        for p in (1, 2):
            total = total + self.part(p, W)
        return total


def _two_way_correct(D: np.ndarray) -> int:
    """Correct matches over both rounds for an ``(n, n)`` second-by-first matrix."""
    idx = np.arange(D.shape[0])
    # argmin returns the first minimum: lowest model index wins ties
    return int(np.sum(np.argmin(D, axis=1) == idx) + np.sum(np.argmin(D, axis=0) == idx))


def _minmax(D: np.ndarray):
    lo, hi = float(D.min()), float(D.max())
    if hi > lo:
        return (D - lo) / (hi - lo), []
    return np.zeros_like(D), ["confusion matrix is constant"]


def evaluate(samples, W: float = DEFAULT_W, part_W: float | None = None,
             dissimilarity=None) -> EvalReport:
    """Run the two-way protocol.

    ``part_W`` is the weight for the single-part accuracies and defaults to
    ``W``. ``dissimilarity(a, b)`` replaces the joint weighted L1 when
    given; per-part accuracies are then not computed.
    """
    W = _check_w(W)
    part_W = W if part_W is None else _check_w(part_W)
    cultivars, firsts, seconds = pair_samples(samples)
    n = len(cultivars)
    if dissimilarity is None:
        terms = _Terms(firsts, seconds)
        D = terms.joint(W)
        per_part = {name: _two_way_correct(terms.part(p, part_W)) / (2 * n)
                    for p, name in enumerate(PARTS)}
        n_correct = _two_way_correct(D)
    else:
        n_correct = 0
        # round 1: second samples query the first; round 2 swapped
        for queries, models in ((seconds, firsts), (firsts, seconds)):
            for q in queries:
                if nn_classify(q, models, W, dissimilarity) == q.cultivar_id:
                    n_correct += 1
        D = np.array([[dissimilarity(s, f) for f in firsts] for s in seconds], dtype=np.float64)
        per_part = {}
    confusion, flags = _minmax(D)
    return EvalReport(n_correct / (2 * n), n_correct, 2 * n, per_part, confusion,
                      cultivars, W, part_W, flags)


def sweep_w(samples, steps: int = 101) -> list[tuple[float, float]]:
    """Joint accuracy at ``W = i / (steps - 1)``, ``i = 0 .. steps - 1``."""
    if steps < 2:
        raise InvalidConfig(f"steps must be >= 2, got {steps}")
    cultivars, firsts, seconds = pair_samples(samples)
    terms = _Terms(firsts, seconds)
    n = len(cultivars)
    rows = []
    for i in range(steps):
        W = i / (steps - 1)
        rows.append((W, _two_way_correct(terms.joint(W)) / (2 * n)))
    return rows


def scaling_study(samples, start: int, stop: int, step: int = 10,
                  W: float = DEFAULT_W) -> list[tuple[int, float]]:
    """Accuracy on the first ``n`` cultivars (sorted by id), ``n = start, start + step, ..., stop``."""
    if step < 1 or start < 1 or start > stop:
        raise InvalidConfig(f"bad grid start={start} stop={stop} step={step}")
    samples = list(samples)
    cultivars, _, _ = pair_samples(samples)
    if stop > len(cultivars):
        raise NotEnoughClasses(f"asked for {stop} cultivars, only {len(cultivars)} available")
    rows = []
    for n in range(start, stop + 1, step):
        keep = set(cultivars[:n])
        rows.append((n, evaluate([s for s in samples if s.cultivar_id in keep], W).accuracy))
    return rows


# -- export -------------------------------------------------------------------

def confusion_image(confusion: np.ndarray) -> np.ndarray:
    """8-bit rendering: 0 maps to black, 1 to white."""
    return np.rint(np.clip(confusion, 0.0, 1.0) * 255).astype(np.uint8)


def write_report(report: EvalReport, out_dir, pgm: bool = True) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = [out / "report.json", out / "confusion.csv"]
    paths[0].write_text(report.to_json())
    paths[1].write_text(report.confusion_csv())
    if pgm:
        paths.append(out / "confusion.pgm")
        Image.fromarray(confusion_image(report.confusion)).save(paths[-1], format="PPM")
    return paths


def rows_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for a, b in rows:
        w.writerow([repr(a) if isinstance(a, float) else a, repr(float(b))])
    return buf.getvalue()
