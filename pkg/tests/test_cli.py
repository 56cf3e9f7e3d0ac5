import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from helpers import branching_cube, grid_schema
from polyslice.cli import BENCH_COLUMNS, main, run_bench, run_extract
from polyslice.datacube import baseline_bytes, save, synthesize


@pytest.fixture
def cube(tmp_path):
    schema = grid_schema([(0, 1, 2), (0, 1, 2)], ["lat", "lon"])
    save(tmp_path / "cube", schema, synthesize(schema, lambda i, j: 10 * i + j))
    return tmp_path / "cube"


def write_request(path, shapes):
    path.write_text(json.dumps({"request": shapes}), encoding="utf-8")
    return path


TRIANGLE = [{"type": "polygon", "axes": ["lat", "lon"], "points": [[0, 0], [2, 0], [0, 2]]}]


def test_extract_triangle_json(cube, tmp_path, capsys):
    req = write_request(tmp_path / "r.json", TRIANGLE)
    out = tmp_path / "out.json"
    assert main(["extract", "--datacube", str(cube), "--request", str(req), "--output", str(out)]) == 0
    doc = json.loads(out.read_text(encoding="utf-8"))
    assert [(p["path"]["lat"], p["path"]["lon"]) for p in doc["points"]] == [
        (0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (2, 0)
    ]
    assert [p["value"] for p in doc["points"]] == [0, 1, 2, 10, 11, 20]
    stats = doc["stats"]
    assert stats["points_found"] == 6
    assert "slicing_time" not in stats
    assert "points found: 6" in capsys.readouterr().err


def test_stats_arithmetic_recomputable(cube, tmp_path):
    req = write_request(tmp_path / "r.json", TRIANGLE)
    out = tmp_path / "out.json"
    assert run_extract(cube, req, out, stats=True) == 0
    s = json.loads(out.read_text(encoding="utf-8"))["stats"]
    assert s["bytes_polytope"] == 8 * s["points_found"]
    assert s["reduction_factor_bbox"] == s["bytes_bbox"] / s["bytes_polytope"]
    assert s["reduction_factor_whole"] == s["bytes_whole"] / s["bytes_polytope"]
    assert s["total_slices"] == sum(s["slices_by_dim"].values())
    schema = grid_schema([(0, 1, 2), (0, 1, 2)], ["lat", "lon"])
    assert s["bytes_whole"] == baseline_bytes(schema, {})[0]
    assert s["slicing_time"] >= 0 and s["total_time"] >= s["slicing_time"]


def test_json_and_csv_hold_the_same_points(cube, tmp_path):
    req = write_request(tmp_path / "r.json", TRIANGLE)
    assert run_extract(cube, req, tmp_path / "o.json") == 0
    assert run_extract(cube, req, tmp_path / "o.csv", fmt="csv") == 0
    doc = json.loads((tmp_path / "o.json").read_text(encoding="utf-8"))
    from_json = sorted((p["path"]["lat"], p["path"]["lon"], p["value"]) for p in doc["points"])
    rows = list(csv.DictReader(io.StringIO((tmp_path / "o.csv").read_text(encoding="utf-8"))))
    assert list(rows[0]) == ["lat", "lon", "value"]
    from_csv = sorted((int(r["lat"]), int(r["lon"]), float(r["value"])) for r in rows)
    assert from_json == from_csv


def test_empty_result_reports_infinity(cube, tmp_path):
    req = write_request(tmp_path / "r.json", [{"type": "box", "axes": ["lat", "lon"], "lower": [0.2, 0.2], "upper": [0.7, 0.7]}])
    out = tmp_path / "o.json"
    assert run_extract(cube, req, out) == 0
    doc = json.loads(out.read_text(encoding="utf-8"))
    assert doc["points"] == []
    assert doc["stats"]["reduction_factor_bbox"] == "∞"


def test_malformed_request_exits_1_without_output(cube, tmp_path, capsys):
    req = tmp_path / "r.json"
    req.write_text("{not json", encoding="utf-8")
    out = tmp_path / "o.json"
    assert run_extract(cube, req, out) == 1
    assert not out.exists()
    assert "malformed" in capsys.readouterr().err


def test_missing_axis_exits_1_naming_it(cube, tmp_path, capsys):
    req = write_request(tmp_path / "r.json", [{"type": "box", "axes": ["lat", "foo"], "lower": [0, 0], "upper": [1, 1]}])
    out = tmp_path / "o.json"
    assert run_extract(cube, req, out) == 1
    assert not out.exists()
    assert "foo" in capsys.readouterr().err


def test_bad_field_is_named(cube, tmp_path, capsys):
    req = write_request(tmp_path / "r.json", [{"type": "box", "axes": ["lat", "lon"], "lower": [0, 0]}])
    assert run_extract(cube, req, tmp_path / "o.json") == 1
    assert "upper" in capsys.readouterr().err


def test_io_errors_exit_2(cube, tmp_path):
    req = write_request(tmp_path / "r.json", TRIANGLE)
    assert run_extract(tmp_path / "nowhere", req, tmp_path / "o.json") == 2
    assert run_extract(cube, tmp_path / "missing.json", tmp_path / "o.json") == 2
    assert run_extract(cube, req, tmp_path / "no" / "dir" / "o.json") == 2


def test_usage_error_exits_1():
    with pytest.raises(SystemExit) as exc:
        main(["extract", "--datacube", "x"])
    assert exc.value.code == 1


def test_extract_is_byte_identical(cube, tmp_path):
    req = write_request(tmp_path / "r.json", TRIANGLE)
    for fmt in ("json", "csv"):
        a, b = tmp_path / f"a.{fmt}", tmp_path / f"b.{fmt}"
        assert run_extract(cube, req, a, fmt=fmt) == 0
        assert run_extract(cube, req, b, fmt=fmt) == 0
        assert a.read_bytes() == b.read_bytes()


def test_branching_cube_csv_columns(tmp_path):
    schema = branching_cube()
    save(tmp_path / "b", schema, synthesize(schema, lambda *c: sum(c)))
    req = write_request(
        tmp_path / "r.json",
        [
            {"type": "select", "axis": "ax1", "values": ["val2"]},
            {"type": "select", "axis": "ax2", "values": ["val5", "val3"]},
            {"type": "box", "axes": ["u", "v"], "lower": [0, 0], "upper": [1, 0]},
            {"type": "span", "axis": "w", "lower": 1, "upper": 2},
        ],
    )
    assert run_extract(tmp_path / "b", req, tmp_path / "o.csv", fmt="csv") == 0
    rows = list(csv.reader(io.StringIO((tmp_path / "o.csv").read_text(encoding="utf-8"))))
    assert rows[0] == ["ax1", "ax2", "w", "x", "y", "z", "u", "v", "value"]
    assert [r[:3] for r in rows[1:3]] == [["val2", "val5", ""], ["val2", "val5", ""]]
    assert len(rows) == 1 + 2 + 2


def test_validate(cube, tmp_path, capsys):
    assert main(["validate", "--datacube", str(cube)]) == 0
    assert "values: 9" in capsys.readouterr().out
    (tmp_path / "v.bin").write_bytes(np.zeros(3).tobytes())
    (tmp_path / "datacube.json").write_text(
        json.dumps({"axes": [{"name": "x", "kind": "ordered", "indices": [0, 1]}], "values": "v.bin"}), encoding="utf-8"
    )
    assert main(["validate", "--datacube", str(tmp_path)]) == 1
    assert main(["validate", "--datacube", str(tmp_path / "nope")]) == 2


def test_run_bench_rows():
    config = {
        "runs": [
            {"family": "box", "grid": [6, 6, 6], "lower": [0.5, 0.5, 0.5], "upper": [2.5, 2.5, 2.5]},
            {"family": "disk", "grid": [40, 40], "center": [20, 20], "radius": [10, 10]},
            {"family": "polygon", "grid": [10, 10], "points": [[0, 0], [8, 0], [8, 3], [3, 3], [3, 8], [0, 8]]},
            {"family": "union_boxes", "grid": [10, 10], "boxes": [[[1, 1], [4, 4]], [[4, 1], [7, 4]], [[1, 4], [4, 7]], [[4, 4], [7, 7]]]},
            {"family": "box", "grid": [10, 10], "lower": [1, 1], "upper": [7, 7]},
            {"family": "path", "grid": [8, 8, 8], "base": {"type": "box", "axes": ["x0", "x1"], "lower": [0, 0], "upper": [1, 1]},
             "waypoints": [[0, 0, 0], [5, 5, 7]]},
        ]
    }
    rows = run_bench(config)
    assert [r["family"] for r in rows] == ["box", "disk", "polygon", "union_boxes", "box", "path"]
    assert rows[0]["points_found"] == 8 and rows[0]["total_slices"] == rows[0]["slice_bound"]
    assert rows[2]["points_found"] == 9 * 4 + 4 * 5
    assert rows[3]["points_found"] == rows[4]["points_found"]
    assert rows[3]["total_slices"] > rows[4]["total_slices"]
    assert all(r["dimension"] == 3 for r in (rows[0], rows[5]))


def test_bench_command_writes_csv(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"repeat": 2, "runs": [{"family": "disk", "grid": [30, 30], "center": [15, 15], "radius": 8}]}))
    out = tmp_path / "r.csv"
    assert main(["bench", "--config", str(cfg), "--output", str(out)]) == 0
    rows = list(csv.DictReader(io.StringIO(out.read_text(encoding="utf-8"))))
    assert tuple(rows[0]) == BENCH_COLUMNS
    assert rows[0]["family"] == "disk" and int(rows[0]["points_found"]) > 150


def test_bench_config_validation(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"runs": [{"family": "cone", "grid": [3]}]}))
    assert main(["bench", "--config", str(cfg), "--output", str(tmp_path / "r.csv")]) == 1
    assert not (tmp_path / "r.csv").exists()


def test_console_entry_point(cube, tmp_path):
    req = write_request(tmp_path / "r.json", TRIANGLE)
    proc = subprocess.run(
        [sys.executable, "-m", "polyslice.cli", "extract", "--datacube", str(cube), "--request", str(req),
         "--output", str(tmp_path / "o.csv"), "--format", "csv"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "o.csv").read_text().count("\n") == 7
