"""Dataset layout, batch extraction and joint assembly.

Layout: ``<root>/<cultivar_id>/<part>_<sample_index>.png`` with part one
of ``U``, ``M``, ``L`` and sample index 1 or 2. Sample 1 records are the
model set; the normalising statistics come from them alone.
"""

from __future__ import annotations

import csv
import hashlib
import io
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .descriptor import (DEFAULT_C, DEFAULT_K, NormStats, check_config, finalize,
                         format_store, leaf_contour, raw_descriptor, train_stats)
from .errors import EmptyModelSet, InputError, MissingPart, NoRecordsFound
from .geometry import DEFAULT_NC, DEFAULT_SMOOTH
from .image import load_leaf, write_mask_pgm
from .matching import PARTS, JointDescriptor

_NAME = re.compile(r"^([UML])_([12])\.png$")
# Bump when the extraction pipeline changes so stale cache entries are ignored.
_CACHE_VERSION = 1


@dataclass(frozen=True)
class LeafRecord:
    cultivar_id: str
    sample_index: int
    part: str
    image_path: Path

    @property
    def key(self):
        return (self.cultivar_id, self.sample_index, PARTS.index(self.part))

    @property
    def label(self) -> str:
        return f"{self.cultivar_id}/{self.sample_index}/{self.part}"


@dataclass
class Manifest:
    records: list
    unmatched: list = field(default_factory=list)

    @property
    def cultivars(self) -> list[str]:
        return sorted({r.cultivar_id for r in self.records})

    @property
    def n_cultivars(self) -> int:
        return len(self.cultivars)

    def check_strict(self) -> None:
        """Every cultivar must have both samples of all three parts."""
        have = {(r.cultivar_id, r.sample_index, r.part) for r in self.records}
        for cid in self.cultivars:
            for s in (1, 2):
                for p in PARTS:
                    if (cid, s, p) not in have:
                        raise MissingPart(f"{cid}/{s}/{p}: image missing")

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["cultivar_id", "sample_index", "part", "path"])
        for r in self.records:
            w.writerow([r.cultivar_id, r.sample_index, r.part, r.image_path.as_posix()])
        return buf.getvalue()


def scan_directory(root, strict: bool = False) -> Manifest:
    root = Path(root)
    if not root.is_dir():
        raise NoRecordsFound(f"{root}: not a directory")
    records, unmatched = [], []
    for sub in sorted(p for p in root.iterdir() if p.is_dir()):
        for f in sorted(sub.iterdir()):
            m = _NAME.match(f.name)
            if m and f.is_file():
                records.append(LeafRecord(sub.name, int(m.group(2)), m.group(1), f))
            else:
                unmatched.append(f)
    unmatched += sorted(p for p in root.iterdir() if p.is_file())
    if not records:
        raise NoRecordsFound(f"{root}: no <cultivar>/<part>_<sample>.png files")
    records.sort(key=lambda r: r.key)
    manifest = Manifest(records, unmatched)
    if strict:
        manifest.check_strict()
    return manifest


# -- extraction ---------------------------------------------------------------

def _raw_for(path: Path, nc: int, K: int, C: int, mask_dir=None, label="") -> np.ndarray:
    leaf = load_leaf(path)
    if mask_dir is not None:
        write_mask_pgm(leaf.mask, Path(mask_dir) / (label.replace("/", "_") + ".pgm"))
    return raw_descriptor(leaf, leaf_contour(leaf, nc, DEFAULT_SMOOTH), K, C)


def _job(args):
    path, nc, K, C, cache_dir, mask_dir, label = args
    try:
        cache_file = None
        if cache_dir is not None:
            digest = hashlib.sha256(Path(path).read_bytes()).hexdigest()
            cache_file = Path(cache_dir) / f"{digest}-nc{nc}-K{K}-C{C}-v{_CACHE_VERSION}.npy"
            if cache_file.exists() and mask_dir is None:
                return np.load(cache_file), None
        raw = _raw_for(Path(path), nc, K, C, mask_dir, label)
        if cache_file is not None:
            tmp = cache_file.with_name(cache_file.name + ".tmp.npy")
            np.save(tmp, raw)
            tmp.replace(cache_file)
        return raw, None
    except InputError as exc:
        return None, f"{type(exc).__name__}: {exc}"


@dataclass
class ExtractResult:
    rows: list          # (id, part, Descriptor), id = "<cultivar>/<sample>"
    stats: NormStats
    skipped: list       # (label, reason)

    def skip_report(self) -> str:
        return "".join(f"{label}\t{reason}\n" for label, reason in self.skipped)


def extract_all(manifest: Manifest, nc: int = DEFAULT_NC, K: int = DEFAULT_K,
                C: int = DEFAULT_C, cache_dir=None, workers: int = 1,
                mask_dir=None) -> ExtractResult:
    """Descriptors for every record, normalised with model-set statistics.

    Records whose image cannot be segmented or traced are skipped and
    listed with the reason. Output order follows the manifest, so results
    do not depend on ``workers``.
    """
    check_config(nc, K, C)
    for d in (cache_dir, mask_dir):
        if d is not None:
            Path(d).mkdir(parents=True, exist_ok=True)
    jobs = [(str(r.image_path), nc, K, C, cache_dir, mask_dir, r.label) for r in manifest.records]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_job, jobs))
    else:
        results = [_job(j) for j in jobs]

    raws, skipped = {}, []
    for rec, (raw, err) in zip(manifest.records, results):
        if err is None:
            raws[rec.key] = (rec, raw)
        else:
            skipped.append((rec.label, err))
    model = [raw for rec, raw in raws.values() if rec.sample_index == 1]
    if not model:
        raise EmptyModelSet("no sample-1 record could be extracted")
    stats = train_stats(np.stack(model))
    rows = [(f"{rec.cultivar_id}/{rec.sample_index}", rec.part, finalize(raw, stats))
            for rec, raw in raws.values()]
    return ExtractResult(rows, stats, skipped)


def write_outputs(result: ExtractResult, manifest: Manifest, out_dir) -> dict:
    """Store, statistics, manifest and skip report, each replaced atomically."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = {
        "store": (out / "descriptors.csv", format_store(result.rows)),
        "stats": (out / "stats.json", result.stats.to_json()),
        "manifest": (out / "manifest.csv", manifest.to_csv()),
        "skipped": (out / "skipped.txt", result.skip_report()),
    }
    for path, text in files.values():
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_text(text)
        tmp.replace(path)
    return {k: v[0] for k, v in files.items()}


def assemble_joints(rows) -> list[JointDescriptor]:
    """One joint per ``<cultivar>/<sample>`` id, sorted by cultivar then sample."""
    groups: dict = {}
    for ident, part, d in rows:
        if part not in PARTS:
            raise MissingPart(f"{ident}: unknown part {part!r}")
        groups.setdefault(ident, {})[part] = d
    joints = []
    for ident in groups:
        cid, _, s = ident.rpartition("/")
        missing = [p for p in PARTS if p not in groups[ident]]
        if missing or not cid:
            raise MissingPart(f"{ident}: missing part {', '.join(missing) or '?'}")
        g = groups[ident]
        joints.append(JointDescriptor(cid, int(s), g["U"], g["M"], g["L"]))
    joints.sort(key=lambda j: (j.cultivar_id, j.sample_id))
    return joints
