"""Save a branching datacube as a bundle and query it through the CLI.

The cube has two categorical layers. Depending on the ``ax2`` label, the
data below it has one, three or two ordered axes. A single request that
selects every ``ax2`` label is cut separately against each branch.

Run:  python demos/bundle_and_cli.py
"""
import json
import subprocess
import sys
import tempfile
from pathlib import Path

from polyslice import CATEGORICAL, ORDERED, AxisSpec, DatacubeSchema, next_axes, save, synthesize

ten = tuple(range(10))
schema = DatacubeSchema(
    (
        AxisSpec("ax1", CATEGORICAL, ("val1", "val2")),
        AxisSpec("ax2", CATEGORICAL, ("val3", "val4", "val5")),
    ),
    {
        ("ax2", "val3"): DatacubeSchema((AxisSpec("w", ORDERED, (0, 1, 2)),)),
        ("ax2", "val4"): DatacubeSchema(tuple(AxisSpec(a, ORDERED, ten) for a in "xyz")),
        ("ax2", "val5"): DatacubeSchema((AxisSpec("u", ORDERED, (0, 1)), AxisSpec("v", ORDERED, (0, 1)))),
    },
)
print("axes after ax2=val4:", [a.name for a in next_axes(schema, [("ax1", "val1"), ("ax2", "val4")])])

request = {"request": [
    {"type": "select", "axis": "ax1", "values": ["val1"]},
    {"type": "select", "axis": "ax2", "values": ["val3", "val4", "val5"]},
    {"type": "span", "axis": "w", "lower": 1, "upper": 2},
    {"type": "box", "axes": ["x", "y", "z"], "lower": [0, 0, 0], "upper": [1, 1, 1]},
    {"type": "point", "axes": ["u", "v"], "coords": [1, 0]},
]}

with tempfile.TemporaryDirectory() as tmp:
    tmp = Path(tmp)
    # every value is the sum of its leaf coordinates
    save(tmp / "cube", schema, synthesize(schema, lambda *c: sum(c) + 0.0))
    (tmp / "request.json").write_text(json.dumps(request), encoding="utf-8")

    def polyslice(*args):
        res = subprocess.run([sys.executable, "-m", "polyslice.cli", *args], capture_output=True, text=True)
        print(f"$ polyslice {' '.join(args[:1])} ... -> exit {res.returncode}")
        for stream in (res.stdout, res.stderr):
            if stream.strip():
                print("  " + stream.strip().replace("\n", "\n  "))
        return res.returncode

    polyslice("validate", "--datacube", str(tmp / "cube"))
    polyslice("extract", "--datacube", str(tmp / "cube"), "--request", str(tmp / "request.json"),
              "--output", str(tmp / "out.csv"), "--format", "csv")
    print((tmp / "out.csv").read_text(encoding="utf-8"))

    # an unknown axis is rejected as invalid input (exit 1); a missing bundle is an I/O failure (exit 2)
    bad = {"request": [{"type": "span", "axis": "nope", "lower": 0, "upper": 1}]}
    (tmp / "bad.json").write_text(json.dumps(bad), encoding="utf-8")
    polyslice("extract", "--datacube", str(tmp / "cube"), "--request", str(tmp / "bad.json"), "--output", str(tmp / "x.json"))
    polyslice("extract", "--datacube", str(tmp / "missing"), "--request", str(tmp / "request.json"), "--output", str(tmp / "x.json"))
