"""Command-line front end.

``polyslice extract`` runs one JSON request against a datacube bundle,
``polyslice validate`` checks a bundle, and ``polyslice bench`` times a suite
of synthetic extractions and writes a CSV report.

Exit codes: 0 success (an empty result included), 1 invalid input, 2 I/O
failure. Nothing is written to ``--output`` unless the command succeeds.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from pathlib import Path

from . import datacube
from .axes import ORDERED, AxisSpec
from .datacube import DatacubeSchema, synthesize
from .engine import attach_values, extract
from .errors import PolysliceError
from .geometry import DEFAULT_EPS
from .shapes import Box, DecomposeSettings, Polygon, Union, decompose, make_disk, make_path, parse_request, shape_from_json

EXIT_OK, EXIT_INVALID, EXIT_IO = 0, 1, 2
INFINITY = "∞"

BENCH_COLUMNS = (
    "family",
    "dimension",
    "points_found",
    "total_slices",
    "slice_bound",
    "slicing_time",
    "total_time",
    "bytes_polytope",
    "bytes_bbox",
    "bytes_whole",
    "reduction_factor_bbox",
    "reduction_factor_whole",
)
BENCH_FAMILIES = ("box", "disk", "polygon", "union_boxes", "path")


def _number(x):
    # json renders floats via repr, the shortest string that round-trips
    if isinstance(x, float) and not math.isfinite(x):
        if math.isnan(x):
            return "NaN"
        return INFINITY if x > 0 else "-" + INFINITY
    return x


def stats_record(stats, timings=False):
    """Ordered mapping of the statistics block of a result document."""
    rec = {
        "m": stats.m,
        "n_per_axis": dict(stats.n_per_axis),
        "slices_by_dim": {str(d): n for d, n in stats.slices_by_dim.items()},
        "total_slices": stats.total_slices,
        "slice_bound": stats.slice_bound,
        "points_found": stats.points_found,
        "bytes_polytope": stats.bytes_polytope,
        "bytes_bbox": stats.bytes_bbox,
        "bytes_whole": stats.bytes_whole,
        "reduction_factor_bbox": _number(stats.reduction_factor_bbox),
        "reduction_factor_whole": _number(stats.reduction_factor_whole),
    }
    if timings:
        rec["slicing_time"] = stats.slicing_time
        rec["total_time"] = stats.total_time
    return rec


def result_document(tree, stats, timings=False):
    points = [{"path": path, "value": _number(value)} for path, value in tree.points()]
    return {"points": points, "stats": stats_record(stats, timings)}


def render_json(tree, stats, timings=False):
    """The result document as JSON text with one point per line."""
    doc = result_document(tree, stats, timings)
    dump = lambda obj: json.dumps(obj, ensure_ascii=False)
    points = ",\n".join("  " + dump(p) for p in doc["points"])
    body = f"[\n{points}\n ]" if points else "[]"
    stats_text = json.dumps(doc["stats"], indent=1, ensure_ascii=False).replace("\n", "\n ")
    return f'{{\n "points": {body},\n "stats": {stats_text}\n}}\n'


def _cell(v):
    if isinstance(v, float):
        return str(_number(v)) if not math.isfinite(v) else repr(v)
    return str(v)


def render_csv(tree, schema):
    """One row per point: axis columns in natural order, then ``value``."""
    columns = [a.name for a in schema.axes]
    for key in schema.leaf_keys():
        for a in schema.leaf_axes(key):
            if a.name not in columns:
                columns.append(a.name)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([*columns, "value"])
    for path, value in tree.points():
        w.writerow([_cell(path[c]) if c in path else "" for c in columns] + [_cell(value)])
    return buf.getvalue()


def summary_text(stats):
    rf = stats_record(stats)
    dims = ", ".join(f"{d}D: {n}" for d, n in stats.slices_by_dim.items()) or "none"
    return (
        f"points found: {stats.points_found}\n"
        f"slices: {stats.total_slices} ({dims}); bound {stats.slice_bound}\n"
        f"bytes: polytope {stats.bytes_polytope}, bounding box {stats.bytes_bbox}, whole cube {stats.bytes_whole}\n"
        f"reduction factor: vs bounding box {rf['reduction_factor_bbox']}, vs whole cube {rf['reduction_factor_whole']}\n"
        f"time: slicing {stats.slicing_time:.6f} s, total {stats.total_time:.6f} s\n"
    )


def _write_atomic(path, text):
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent if str(path.parent) else ".", prefix=".polyslice-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _report(exc, stream):
    print(f"polyslice: error: {exc}", file=stream)


def run_extract(datacube_path, request_path, output_path, fmt="json", eps=DEFAULT_EPS, stats=False, stderr=None):
    """Run one request end to end; returns the process exit status."""
    stderr = stderr or sys.stderr
    try:
        if fmt not in ("json", "csv"):
            raise PolysliceError(f"--format: expected 'json' or 'csv', got {fmt!r}")
        if not eps > 0:
            raise PolysliceError(f"--eps: must be positive, got {eps!r}")
        schema, storage = datacube.load(datacube_path)
        text = Path(request_path).read_text(encoding="utf-8")
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise PolysliceError(f"request: malformed JSON: {exc}") from None
        pieces = decompose(parse_request(doc))
        tree, st = extract(schema, pieces, eps)
        attach_values(tree, storage, schema)
        out = render_json(tree, st, timings=stats) if fmt == "json" else render_csv(tree, schema)
        _write_atomic(output_path, out)
    except (PolysliceError, ValueError) as exc:
        _report(exc, stderr)
        return EXIT_INVALID
    except OSError as exc:
        _report(exc, stderr)
        return EXIT_IO
    stderr.write(summary_text(st))
    return EXIT_OK


def run_validate(datacube_path, stdout=None, stderr=None):
    stdout, stderr = stdout or sys.stdout, stderr or sys.stderr
    try:
        schema, storage = datacube.load(datacube_path)
    except (PolysliceError, ValueError) as exc:
        _report(exc, stderr)
        return EXIT_INVALID
    except OSError as exc:
        _report(exc, stderr)
        return EXIT_IO
    for a in schema.axes:
        print(f"{a.name}: {a.kind}, {len(a)} indices", file=stdout)
    for (aname, idx), sub in schema.branches.items():
        names = ", ".join(a.name for a in sub.axes)
        print(f"  {aname}={idx}: {names}", file=stdout)
    print(f"values: {schema.total_values} x {storage.bytes_per_value} bytes", file=stdout)
    return EXIT_OK


# -- benchmark suite ----------------------------------------------------------


def bench_schema(grid):
    """Regular cube with axes x0, x1, ... holding indices 0..n-1."""
    return DatacubeSchema(tuple(
        AxisSpec(f"x{k}", ORDERED, tuple(range(int(n)))) for k, n in enumerate(grid)
    ))


def _bench_value(*coords):
    return sum((k + 1) * c for k, c in enumerate(coords))


def _require(run, name, where):
    if name not in run:
        raise PolysliceError(f"{where}: missing field {name!r}")
    return run[name]


def bench_shape(run, where="run"):
    """Shape described by one bench run entry."""
    family = _require(run, "family", where)
    grid = _require(run, "grid", where)
    if not isinstance(grid, list) or not grid or not all(isinstance(n, int) and n > 0 for n in grid):
        raise PolysliceError(f"{where}.grid: must be a non-empty list of positive integers")
    axes = tuple(f"x{k}" for k in range(len(grid)))
    if family == "box":
        return Box(axes, _require(run, "lower", where), _require(run, "upper", where))
    if family == "disk":
        if len(axes) != 2:
            raise PolysliceError(f"{where}: disk runs need a 2-axis grid")
        return make_disk(axes, _require(run, "center", where), _require(run, "radius", where),
                         run.get("segments", DecomposeSettings().disk_segments))
    if family == "polygon":
        if len(axes) != 2:
            raise PolysliceError(f"{where}: polygon runs need a 2-axis grid")
        return Polygon(axes, tuple(map(tuple, _require(run, "points", where))))
    if family == "union_boxes":
        boxes = _require(run, "boxes", where)
        return Union(tuple(Box(axes, lo, hi) for lo, hi in boxes))
    if family == "path":
        base = shape_from_json(_require(run, "base", where), f"{where}.base")
        return make_path(base, _require(run, "waypoints", where), axes)
    raise PolysliceError(f"{where}.family: expected one of {', '.join(BENCH_FAMILIES)}, got {family!r}")


def run_bench(config):
    """Rows of bench results for a suite configuration mapping.

    Each run is repeated ``repeat`` times (suite-wide, overridable per run)
    and the fastest timings are kept; counts do not vary between repeats.
    """
    runs = config.get("runs") if isinstance(config, dict) else None
    if not isinstance(runs, list):
        raise PolysliceError("config: must be an object with a 'runs' list")
    repeat = config.get("repeat", 1)
    eps = config.get("eps", DEFAULT_EPS)
    rows = []
    for k, run in enumerate(runs):
        where = f"runs[{k}]"
        if not isinstance(run, dict):
            raise PolysliceError(f"{where}: must be an object")
        shape = bench_shape(run, where)
        schema = bench_schema(run["grid"])
        storage = synthesize(schema, _bench_value)
        pieces = decompose(shape)
        best = None
        for _ in range(int(run.get("repeat", repeat))):
            tree, st = extract(schema, pieces, eps)
            attach_values(tree, storage, schema)
            if best is None:
                best = st
            else:
                best.slicing_time = min(best.slicing_time, st.slicing_time)
                best.total_time = min(best.total_time, st.total_time)
        rows.append({
            "family": run["family"],
            "dimension": len(run["grid"]),
            "points_found": best.points_found,
            "total_slices": best.total_slices,
            "slice_bound": best.slice_bound,
            "slicing_time": best.slicing_time,
            "total_time": best.total_time,
            "bytes_polytope": best.bytes_polytope,
            "bytes_bbox": best.bytes_bbox,
            "bytes_whole": best.bytes_whole,
            "reduction_factor_bbox": best.reduction_factor_bbox,
            "reduction_factor_whole": best.reduction_factor_whole,
        })
    return rows


def render_bench(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(BENCH_COLUMNS)
    for row in rows:
        w.writerow([_cell(row[c]) for c in BENCH_COLUMNS])
    return buf.getvalue()


def run_bench_command(config_path, output_path, stderr=None):
    stderr = stderr or sys.stderr
    try:
        text = Path(config_path).read_text(encoding="utf-8")
        try:
            config = json.loads(text)
        except json.JSONDecodeError as exc:
            raise PolysliceError(f"config: malformed JSON: {exc}") from None
        rows = run_bench(config)
        _write_atomic(output_path, render_bench(rows))
    except (PolysliceError, ValueError) as exc:
        _report(exc, stderr)
        return EXIT_INVALID
    except OSError as exc:
        _report(exc, stderr)
        return EXIT_IO
    print(f"{len(rows)} runs written to {output_path}", file=stderr)
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    # usage mistakes are invalid input, not I/O failures
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def build_parser():
    parser = _Parser(prog="polyslice", description="Extract polytope-shaped data from datacubes.")
    sub = parser.add_subparsers(dest="command", required=True)

    ex = sub.add_parser("extract", help="run one JSON request against a datacube bundle")
    ex.add_argument("--datacube", required=True, help="bundle directory (or its datacube.json)")
    ex.add_argument("--request", required=True, help="JSON request document")
    ex.add_argument("--output", required=True, help="result file to write")
    ex.add_argument("--format", choices=("json", "csv"), default="json")
    ex.add_argument("--eps", type=float, default=DEFAULT_EPS, help="relative geometric tolerance")
    ex.add_argument("--stats", action="store_true", help="include timings in the JSON stats block")

    be = sub.add_parser("bench", help="run a benchmark suite and write a CSV report")
    be.add_argument("--config", required=True)
    be.add_argument("--output", required=True)

    va = sub.add_parser("validate", help="check a datacube bundle")
    va.add_argument("--datacube", required=True)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "extract":
        return run_extract(args.datacube, args.request, args.output, args.format, args.eps, args.stats)
    if args.command == "bench":
        return run_bench_command(args.config, args.output)
    return run_validate(args.datacube)


if __name__ == "__main__":
    sys.exit(main())
