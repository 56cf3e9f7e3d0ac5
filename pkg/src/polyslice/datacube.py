"""Datacube schema, value storage and the on-disk bundle format.

A bundle is a directory holding ``datacube.json`` plus one raw little-endian
float64 file per leaf schema::

    {
      "axes": [{"name": "lat", "kind": "ordered", "indices": [0, 1]}, ...],
      "branches": {"<axis>/<index>": {"axes": [...], "values": "b.bin"}},
      "values": "values.bin"
    }

Only the last root axis may branch. Each branch index then replaces every
following axis with its own sub-schema, so the datacube becomes an
irregular tree rather than a rectangular array. The leaf array for a branch
covers the root axes before the branch axis followed by the sub-schema axes.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .axes import CATEGORICAL, AxisSpec, positions_in, select_categorical
from .errors import DatacubeFormatError, InvalidPathError
from .geometry import Extent

BYTES_PER_VALUE = 8
MANIFEST = "datacube.json"


@dataclass(frozen=True)
class DatacubeSchema:
    """Axes in natural order plus optional branching at the last root axis.

    ``branches`` maps ``(axis_name, index)`` to the sub-schema replacing all
    subsequent axes when that index is chosen.
    """

    axes: tuple
    branches: dict = field(default_factory=dict)
    branch_axis: str | None = field(init=False, compare=False, repr=False)
    _subs: tuple = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        axes = tuple(self.axes)
        object.__setattr__(self, "axes", axes)
        if not axes:
            raise DatacubeFormatError("a datacube needs at least one axis")
        names = [a.name for a in axes]
        if len(set(names)) != len(names):
            raise DatacubeFormatError(f"duplicate axis names {names}")
        object.__setattr__(self, "branch_axis", None)
        object.__setattr__(self, "_subs", ())
        if not self.branches:
            object.__setattr__(self, "branches", {})
            return

        branch_names = {key[0] for key in self.branches}
        if len(branch_names) != 1:
            raise DatacubeFormatError(f"branches must all hang off one axis, got {sorted(branch_names)}")
        (bname,) = branch_names
        if bname != axes[-1].name:
            raise DatacubeFormatError(
                f"branch axis {bname!r} must be the last root axis ({axes[-1].name!r})"
            )
        bax = axes[-1]
        subs = [None] * len(bax)
        canonical = {}
        for (name, raw), sub in self.branches.items():
            try:
                pos = bax.position(raw)
            except KeyError:
                raise DatacubeFormatError(f"branch {name}/{raw}: no such index on axis {name!r}") from None
            if subs[pos] is not None:
                raise DatacubeFormatError(f"branch {name}/{raw} declared twice")
            if not isinstance(sub, DatacubeSchema):
                raise DatacubeFormatError(f"branch {name}/{raw}: expected a DatacubeSchema")
            if sub.branches:
                raise DatacubeFormatError(f"branch {name}/{raw}: nested branching is not supported")
            clash = set(names) & {a.name for a in sub.axes}
            if clash:
                raise DatacubeFormatError(f"branch {name}/{raw}: axis names {sorted(clash)} repeat root axes")
            subs[pos] = sub
            canonical[(name, bax.indices[pos])] = sub
        missing = [bax.indices[i] for i, s in enumerate(subs) if s is None]
        if missing:
            raise DatacubeFormatError(f"axis {bname!r}: indices {missing} have no branch sub-schema")
        object.__setattr__(self, "branches", canonical)
        object.__setattr__(self, "branch_axis", bname)
        object.__setattr__(self, "_subs", tuple(subs))

    def sub_schema(self, pos):
        """Sub-schema chosen by position ``pos`` on the branch axis."""
        return self._subs[pos]

    def leaf_keys(self):
        if self.branch_axis is None:
            return [None]
        return [(self.branch_axis, i) for i in self.axes[-1].indices]

    def leaf_axes(self, key):
        """Axes spanned by the value array of one leaf (branch axis excluded)."""
        if key is None:
            return self.axes
        pos = self.axes[-1].position(key[1])
        return self.axes[:-1] + self._subs[pos].axes

    def leaf_shape(self, key):
        return tuple(len(a) for a in self.leaf_axes(key))

    @property
    def total_values(self):
        return sum(math.prod(self.leaf_shape(k)) for k in self.leaf_keys())

    def axis_names(self):
        """Every axis name reachable in any branch."""
        names = [a.name for a in self.axes]
        for sub in self._subs:
            names.extend(a.name for a in sub.axes if a.name not in names)
        return names

    def find_axis(self, name):
        for a in self.axes:
            if a.name == name:
                return a
        for sub in self._subs:
            for a in sub.axes:
                if a.name == name:
                    return a
        raise KeyError(name)


@dataclass(frozen=True)
class DatacubeStorage:
    """Flat row-major float64 arrays, one per leaf schema (key None when unbranched)."""

    values: dict
    bytes_per_value: int = BYTES_PER_VALUE


def check_storage(schema, storage):
    expected = set(schema.leaf_keys())
    if set(storage.values) != expected:
        raise DatacubeFormatError(f"storage leaves {sorted(map(str, storage.values))} do not match schema")
    for key in schema.leaf_keys():
        n = math.prod(schema.leaf_shape(key))
        got = np.asarray(storage.values[key]).size
        if got != n:
            where = "root" if key is None else f"branch {key[0]}/{key[1]}"
            raise DatacubeFormatError(f"{where}: grid has {n} points but {got} values were given")


def synthesize(schema, fn):
    """Storage whose value at each grid point is ``fn(*coords)``.

    Ordered axes pass their numeric index, categorical axes their position;
    ``fn`` receives broadcastable arrays.
    """
    values = {}
    for key in schema.leaf_keys():
        grids = []
        for a in schema.leaf_axes(key):
            grids.append(np.arange(len(a), dtype=float) if a.kind == CATEGORICAL else a.numeric)
        mesh = np.meshgrid(*grids, indexing="ij", sparse=True)
        out = np.broadcast_to(fn(*mesh), schema.leaf_shape(key))
        values[key] = np.ascontiguousarray(out, dtype="<f8").ravel()
    return DatacubeStorage(values)


def _resolve(schema, path):
    """Walk ``path`` through the schema.

    Returns (leaf key, positions on the leaf array's axes, remaining axes).
    """
    axes = schema.axes
    key = None
    positions = []
    i = 0
    for item in path:
        try:
            name, raw = item
        except (TypeError, ValueError):
            raise InvalidPathError(f"path entries must be (axis, index) pairs, got {item!r}") from None
        if i >= len(axes):
            raise InvalidPathError(f"path continues past the last axis with {name!r}")
        ax = axes[i]
        if ax.name != name:
            raise InvalidPathError(f"expected axis {ax.name!r} next in the path, got {name!r}")
        try:
            pos = ax.position(raw)
        except KeyError:
            raise InvalidPathError(f"axis {name!r} has no index {raw!r}") from None
        if key is None and schema.branch_axis == name:
            key = (name, ax.indices[pos])
            axes = schema.sub_schema(pos).axes
            i = 0
        else:
            positions.append(pos)
            i += 1
    return key, positions, axes[i:]


def next_axes(schema, path):
    """Axes still to be fixed after ``path``, following any branch it takes."""
    return list(_resolve(schema, path)[2])


def _as_pairs(path):
    return list(path.items()) if isinstance(path, dict) else list(path)


def get_value(storage, schema, path):
    key, positions, rest = _resolve(schema, _as_pairs(path))
    if rest:
        raise InvalidPathError(f"incomplete path: axes {[a.name for a in rest]} unassigned")
    offset = int(np.ravel_multi_index(tuple(positions), schema.leaf_shape(key)))
    return float(storage.values[key][offset])


def selected_positions(ax, constraint):
    """Positions picked by an Extent (ordered), label list (categorical) or None (all)."""
    if constraint is None:
        return list(range(len(ax)))
    if ax.kind == CATEGORICAL:
        return [ax.position(v) for v in select_categorical(ax, constraint)]
    if not isinstance(constraint, Extent):
        constraint = Extent(*constraint)
    return positions_in(ax, constraint)


def bounding_box_values(schema, extents):
    """Number of grid values inside the orthogonal box given by ``extents``."""
    count = 1
    for ax in schema.axes:
        if ax.name == schema.branch_axis:
            inner = 0
            for pos in selected_positions(ax, extents.get(ax.name)):
                sub = schema.sub_schema(pos)
                inner += math.prod(len(selected_positions(a, extents.get(a.name))) for a in sub.axes)
            return count * inner
        count *= len(selected_positions(ax, extents.get(ax.name)))
    return count


def baseline_bytes(schema, extents, bytes_per_value=BYTES_PER_VALUE):
    """(whole-cube bytes, bounding-box bytes) for a request's per-axis extents.

    ``extents`` maps axis names to an Extent (ordered axes) or a list of
    labels (categorical axes); axes left out count in full.
    """
    whole = schema.total_values * bytes_per_value
    return whole, bounding_box_values(schema, extents) * bytes_per_value


# -- bundle I/O ---------------------------------------------------------------


def _axis_from_json(obj, where):
    if not isinstance(obj, dict):
        raise DatacubeFormatError(f"{where}: axis entry must be an object")
    for key in ("name", "kind", "indices"):
        if key not in obj:
            raise DatacubeFormatError(f"{where}: axis is missing field {key!r}")
    name = obj["name"]
    if not isinstance(name, str) or not name or "/" in name:
        raise DatacubeFormatError(f"{where}: invalid axis name {name!r}")
    if not isinstance(obj["indices"], list):
        raise DatacubeFormatError(f"{where}: axis {name!r} field 'indices' must be a list")
    try:
        return AxisSpec(name, obj["kind"], tuple(obj["indices"]), obj.get("period"))
    except (ValueError, TypeError) as exc:
        raise DatacubeFormatError(f"{where}: axis {name!r}: {exc}") from None


def _axes_from_json(obj, where):
    axes = obj.get("axes")
    if not isinstance(axes, list) or not axes:
        raise DatacubeFormatError(f"{where}: field 'axes' must be a non-empty list")
    return tuple(_axis_from_json(a, f"{where}.axes[{i}]") for i, a in enumerate(axes))


def _read_values(root, rel, where):
    if not isinstance(rel, str):
        raise DatacubeFormatError(f"{where}: field 'values' must name a file")
    return np.fromfile(root / rel, dtype="<f8")


def load(path):
    """Read a datacube bundle directory (or its ``datacube.json``)."""
    path = Path(path)
    manifest = path / MANIFEST if path.is_dir() else path
    root = manifest.parent
    text = manifest.read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DatacubeFormatError(f"{manifest}: malformed JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise DatacubeFormatError(f"{manifest}: top level must be an object")

    axes = _axes_from_json(doc, "datacube")
    raw_branches = doc.get("branches") or {}
    if not isinstance(raw_branches, dict):
        raise DatacubeFormatError("datacube: field 'branches' must be an object")
    branches, files = {}, {}
    for bkey, sub in raw_branches.items():
        where = f"datacube.branches[{bkey!r}]"
        if "/" not in bkey:
            raise DatacubeFormatError(f"{where}: key must look like '<axis>/<index>'")
        if not isinstance(sub, dict):
            raise DatacubeFormatError(f"{where}: must be an object")
        aname, raw = bkey.split("/", 1)
        if sub.get("branches"):
            raise DatacubeFormatError(f"{where}: nested branching is not supported")
        branches[(aname, raw)] = DatacubeSchema(_axes_from_json(sub, where))
        files[(aname, raw)] = (sub.get("values"), where)

    schema = DatacubeSchema(axes, branches)
    bpv = doc.get("bytes_per_value", BYTES_PER_VALUE)
    if not isinstance(bpv, int) or bpv <= 0:
        raise DatacubeFormatError("datacube: field 'bytes_per_value' must be a positive integer")
    values = {}
    if schema.branch_axis is None:
        values[None] = _read_values(root, doc.get("values"), "datacube")
    else:
        if doc.get("values") is not None:
            raise DatacubeFormatError("datacube: branched cubes keep values per branch, not at the root")
        bax = schema.axes[-1]
        for (aname, raw), (rel, where) in files.items():
            values[(aname, bax.indices[bax.position(raw)])] = _read_values(root, rel, where)
    storage = DatacubeStorage(values, bpv)
    check_storage(schema, storage)
    return schema, storage


def _axis_to_json(a):
    out = {"name": a.name, "kind": a.kind, "indices": list(a.indices)}
    if a.period is not None:
        out["period"] = list(a.period)
    return out


def save(path, schema, storage):
    """Write a bundle directory that :func:`load` reads back bit-exactly."""
    check_storage(schema, storage)
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    doc = {"axes": [_axis_to_json(a) for a in schema.axes]}
    if storage.bytes_per_value != BYTES_PER_VALUE:
        doc["bytes_per_value"] = storage.bytes_per_value
    if schema.branch_axis is None:
        doc["values"] = "values.bin"
        np.asarray(storage.values[None], dtype="<f8").tofile(root / "values.bin")
    else:
        doc["branches"] = {}
        bax = schema.axes[-1]
        for pos, key in enumerate(schema.leaf_keys()):
            fname = f"values_{bax.name}_{pos}.bin"
            sub = schema.sub_schema(pos)
            doc["branches"][f"{key[0]}/{key[1]}"] = {
                "axes": [_axis_to_json(a) for a in sub.axes],
                "values": fname,
            }
            np.asarray(storage.values[key], dtype="<f8").tofile(root / fname)
    (root / MANIFEST).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    return root
