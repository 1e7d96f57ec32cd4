"""Command-line front end.

Every command prints one ``key=value`` summary line on stdout; diagnostics
go to stderr. Exit codes: 0 ok, 2 input error, 3 protocol error, 4 numeric
or internal error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import dataset, matching, testkit
from .descriptor import DEFAULT_C, DEFAULT_K, check_config, read_store
from .errors import InvalidConfig, MSCMError
from .geometry import DEFAULT_NC


def _summary(**kv) -> None:
    parts = []
    for k, v in kv.items():
        if isinstance(v, float):
            v = f"{v:.4f}"
        parts.append(f"{k}={v}")
    print(" ".join(parts))


def _weight(text: str) -> float:
    w = float(text)
    if not 0.0 <= w <= 1.0:
        raise argparse.ArgumentTypeError(f"W must lie in [0, 1], got {w}")
    return w


def _load_joints(store):
    return dataset.assemble_joints(read_store(store))


def cmd_extract(args) -> int:
    check_config(args.nc, args.scales, args.coeffs)
    manifest = dataset.scan_directory(args.root, strict=args.strict)
    for f in manifest.unmatched:
        print(f"warning: ignoring {f}", file=sys.stderr)
    result = dataset.extract_all(manifest, args.nc, args.scales, args.coeffs,
                                 cache_dir=args.cache, workers=args.workers,
                                 mask_dir=args.masks)
    for label, reason in result.skipped:
        print(f"skipped {label}: {reason}", file=sys.stderr)
    paths = dataset.write_outputs(result, manifest, args.out)
    _summary(records=len(manifest.records), descriptors=len(result.rows),
             skipped=len(result.skipped), cultivars=manifest.n_cultivars,
             store=paths["store"])
    return 0


def cmd_evaluate(args) -> int:
    report = matching.evaluate(_load_joints(args.store), args.weight, args.part_weight)
    matching.write_report(report, args.out)
    for flag in report.flags:
        print(f"note: {flag}", file=sys.stderr)
    _summary(accuracy=report.accuracy, U=report.per_part["U"], M=report.per_part["M"],
             L=report.per_part["L"], n_correct=report.n_correct, n_tests=report.n_tests,
             W=repr(report.W))
    return 0


def _write_rows(path, header, rows) -> None:
    text = matching.rows_csv(header, rows)
    if path is None:
        sys.stderr.write(text)
        return
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    tmp.replace(path)


def cmd_sweep(args) -> int:
    rows = matching.sweep_w(_load_joints(args.store), args.steps)
    _write_rows(args.out, ["W", "accuracy"], rows)
    best = max(rows, key=lambda r: r[1])
    _summary(rows=len(rows), best_W=repr(best[0]), best_accuracy=best[1])
    return 0


def cmd_scaling(args) -> int:
    rows = matching.scaling_study(_load_joints(args.store), args.start, args.stop,
                                  args.step, args.weight)
    _write_rows(args.out, ["n_classes", "accuracy"], rows)
    _summary(rows=len(rows), last_n=rows[-1][0], last_accuracy=rows[-1][1])
    return 0


def cmd_synth(args) -> int:
    if args.classes < 2:
        raise InvalidConfig("--classes must be at least 2")
    written = testkit.make_mini_dataset(args.classes, args.seed, args.out)
    _summary(images=len(written), classes=args.classes, seed=args.seed, out=args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mscm", description="Multiscale sliding chord leaf descriptors.")
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("extract", help="descriptors for a dataset tree")
    e.add_argument("root", type=Path)
    e.add_argument("--out", type=Path, required=True)
    e.add_argument("--nc", type=int, default=DEFAULT_NC)
    e.add_argument("--scales", type=int, default=DEFAULT_K, metavar="K")
    e.add_argument("--coeffs", type=int, default=DEFAULT_C, metavar="C")
    e.add_argument("--strict", action="store_true", help="require 2 samples x 3 parts per cultivar")
    e.add_argument("--cache", type=Path, default=None, help="raw descriptor cache directory")
    e.add_argument("--workers", type=int, default=1)
    e.add_argument("--masks", type=Path, default=None, help="write segmentation masks as PGM here")
    e.set_defaults(func=cmd_extract)

    v = sub.add_parser("evaluate", help="two-way 1NN protocol on a descriptor store")
    v.add_argument("store", type=Path)
    v.add_argument("--out", type=Path, required=True)
    v.add_argument("--weight", type=_weight, default=matching.DEFAULT_W, metavar="W")
    v.add_argument("--part-weight", type=_weight, default=None, metavar="W",
                   help="weight for per-part accuracies (default: --weight)")
    v.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("sweep", help="accuracy over a uniform W grid")
    s.add_argument("store", type=Path)
    s.add_argument("--steps", type=int, default=101)
    s.add_argument("--out", type=Path, default=None, help="CSV path (default: stderr)")
    s.set_defaults(func=cmd_sweep)

    c = sub.add_parser("scaling", help="accuracy against number of cultivars")
    c.add_argument("store", type=Path)
    c.add_argument("--start", type=int, required=True)
    c.add_argument("--stop", type=int, required=True)
    c.add_argument("--step", type=int, default=10)
    c.add_argument("--weight", type=_weight, default=matching.DEFAULT_W, metavar="W")
    c.add_argument("--out", type=Path, default=None, help="CSV path (default: stderr)")
    c.set_defaults(func=cmd_scaling)

    y = sub.add_parser("synth", help="write a synthetic dataset tree")
    y.add_argument("--classes", type=int, default=10)
    y.add_argument("--seed", type=int, default=7)
    y.add_argument("--out", type=Path, required=True)
    y.set_defaults(func=cmd_synth)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except MSCMError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - last resort
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
