"""Index-tree extraction by successive slicing.

The tree is grown one datacube axis at a time, following the schema's
natural axis order. At every layer each live (node, polytope) pair looks up
the axis indices inside the polytope's extent, adds them as children, and
slices the polytope at each of them so the child carries a polytope with one
axis fewer. One-axis polytopes are resolved by index lookup alone, and
categorical axes only check that the selected labels exist.
"""
from __future__ import annotations

import gc
import math
import time
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .axes import CATEGORICAL, select_categorical
from .datacube import BYTES_PER_VALUE, baseline_bytes
from .errors import RequestError
from .geometry import DEFAULT_EPS, Extent, _trusted, dedup_vertices, extents, slice_planar_many, slice_polytope
from .shapes import ConvexPiece, decompose


class Node:
    """One index on one axis; ``children`` is keyed by axis position."""

    __slots__ = ("axis", "index", "pos", "children", "value")

    def __init__(self, axis, index, pos):
        self.axis = axis
        self.index = index
        self.pos = pos
        self.children = None
        self.value = None

    def add_child(self, axis, index, pos):
        if self.children is None:
            self.children = {}
        node = self.children.get(pos)
        if node is None:
            node = self.children[pos] = Node(axis, index, pos)
        return node

    def copy(self):
        out = Node(self.axis, self.index, self.pos)
        out.value = self.value
        if self.children is not None:
            out.children = {k: c.copy() for k, c in self.children.items()}
        return out

    def __repr__(self):
        return f"Node({self.axis}={self.index!r}, {len(self.children or ())} children)"


class IndexTree:
    """Root-to-leaf paths are complete axis assignments of extracted points."""

    def __init__(self, schema, root=None):
        self.schema = schema
        self.root = root if root is not None else Node(None, None, None)

    def iter_leaves(self):
        """Depth-first leaf paths (tuples of nodes), children in stored order."""
        if not self.root.children:
            return
        path = []
        stack = [iter(self.root.children.values())]
        while stack:
            child = next(stack[-1], None)
            if child is None:
                stack.pop()
                if path:
                    path.pop()
                continue
            if child.children:
                path.append(child)
                stack.append(iter(child.children.values()))
            else:
                yield (*path, child)

    def leaf_paths(self):
        return [tuple((n.axis, n.index) for n in p) for p in self.iter_leaves()]

    def leaf_set(self):
        return set(self.leaf_paths())

    def __len__(self):
        return sum(1 for _ in self.iter_leaves())

    def copy(self):
        return IndexTree(self.schema, self.root.copy())

    def points(self):
        """(path mapping, value) per leaf, in depth-first order."""
        return [({n.axis: n.index for n in p}, p[-1].value) for p in self.iter_leaves()]


@dataclass
class ExtractionStats:
    m: int = 0
    n_per_axis: dict = field(default_factory=dict)
    slices_by_dim: dict = field(default_factory=dict)
    points_found: int = 0
    bytes_polytope: int = 0
    bytes_bbox: int = 0
    bytes_whole: int = 0
    slicing_time: float = 0.0
    total_time: float = 0.0

    @property
    def total_slices(self):
        return sum(self.slices_by_dim.values())

    @property
    def slice_bound(self):
        return slice_bound(list(self.n_per_axis.values()))

    @property
    def reduction_factor_bbox(self):
        return self.bytes_bbox / self.bytes_polytope if self.bytes_polytope else math.inf

    @property
    def reduction_factor_whole(self):
        return self.bytes_whole / self.bytes_polytope if self.bytes_polytope else math.inf


def slice_bound(n_per_axis):
    """Worst-case slice count: sum over i of n_1 * ... * n_i."""
    total, prod = 0, 1
    for n in n_per_axis:
        prod *= n
        total += prod
    return total


class _Item:
    """A live constraint: what is left of one piece under one tree node."""

    __slots__ = ("polytope", "selections")

    def __init__(self, polytope, selections):
        self.polytope = polytope
        self.selections = selections

    def done_key(self):
        return tuple((k, v) for k, v in self.selections.items())


def _add_item(bucket, item):
    # finished items with equal selections are interchangeable
    if item.polytope is None:
        key = item.done_key()
        for other in bucket:
            if other.polytope is None and other.done_key() == key:
                return
    bucket.append(item)


def _group_pieces(schema, pieces):
    names = set(schema.axis_names())
    groups = {}
    for piece in pieces:
        axes = piece.axes
        if not axes:
            raise RequestError("a request piece constrains no axes")
        for a in axes:
            if a not in names:
                raise RequestError(f"unknown axis {a!r}: the datacube has axes {sorted(names)}")
            ax = schema.find_axis(a)
            if piece.polytope is not None and a in piece.polytope.axes and ax.kind == CATEGORICAL:
                raise RequestError(f"axis {a!r} is categorical; use a 'select' shape, not a range")
            if a in piece.selections and piece.selections[a] is not None and ax.kind != CATEGORICAL:
                raise RequestError(f"axis {a!r} is ordered; use a span or point, not a selection")
        groups.setdefault(frozenset(axes), []).append(piece)
    owner = {}
    for g, key in enumerate(groups):
        for a in key:
            if a in owner:
                raise RequestError(f"axis {a!r} is constrained by more than one shape")
            owner[a] = g
    leaf_sets = [{a.name for a in schema.leaf_axes(k)} | ({schema.branch_axis} if k else set())
                 for k in schema.leaf_keys()]
    for key in groups:
        for path_axes in leaf_sets:
            if key & path_axes and not key <= path_axes:
                raise RequestError(f"shape over axes {sorted(key)} straddles datacube branches")
    return list(groups.values()), owner


def request_extents(schema, pieces, eps=DEFAULT_EPS):
    """Per-axis bounding constraints of a request (for the bounding-box baseline)."""
    ranges, labels = {}, {}
    for piece in pieces:
        if piece.polytope is not None:
            for a in piece.polytope.axes:
                lo, hi = extents(piece.polytope, a)
                if a in ranges:
                    lo, hi = min(lo, ranges[a][0]), max(hi, ranges[a][1])
                ranges[a] = (lo, hi)
        for a, sel in piece.selections.items():
            if sel is None or labels.get(a, ()) is None:
                labels[a] = None
            else:
                labels[a] = list(dict.fromkeys([*labels.get(a, ()), *sel]))
    out = {}
    for a, (lo, hi) in ranges.items():
        tol = eps * schema.find_axis(a).scale
        out[a] = Extent(lo - tol, hi + tol)
    out.update(labels)
    return out


def extract(schema, pieces, eps=DEFAULT_EPS):
    """Build the index tree of every grid point inside the union of ``pieces``.

    Pieces constraining the same axis set form a union; different axis sets
    combine as a product. Returns ``(tree, stats)``; an empty result is a
    valid (empty) tree.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    # the tree is acyclic; cyclic-GC passes over millions of fresh nodes are pure overhead
    paused = gc.isenabled()
    gc.disable()
    try:
        return _extract(schema, pieces, eps)
    finally:
        if paused:
            gc.enable()


def _extract(schema, pieces, eps):
    t_start = time.perf_counter()
    groups, owner = _group_pieces(schema, pieces)

    live0 = []
    for group in groups:
        items = []
        for piece in group:
            poly = piece.polytope
            if poly is not None:
                scale = max(schema.find_axis(a).scale for a in poly.axes)
                poly = dedup_vertices(poly, eps * scale)
            items.append(_Item(poly, dict(piece.selections)))
        live0.append(items)

    stats = ExtractionStats()
    slices = defaultdict(int)
    found = {}
    slicing_time = 0.0
    n_leaves = 0
    perf = time.perf_counter
    tree = IndexTree(schema)

    parents = {}  # interior node -> parent, for pruning dead branches
    frontier = [(tree.root, schema.axes, tuple(live0))]
    while frontier:
        next_frontier = []
        for node, axes_left, live in frontier:
            axis = axes_left[0]
            name = axis.name
            g = owner.get(name)
            if g is None:
                raise RequestError(f"axis {name!r} is not constrained by the request")
            buckets = defaultdict(list)

            if axis.kind == CATEGORICAL:
                for item in live[g]:
                    sel = item.selections[name]
                    labels = axis.indices if sel is None else select_categorical(axis, sel)
                    for label in labels:
                        _add_item(buckets[axis.position(label)], item)
                order = list(buckets)
            else:
                tol = eps * axis.scale
                for item in live[g]:
                    poly = item.polytope
                    if poly is None or name not in poly.axes:
                        # an All() constraint: every index, resolved like a 1D range
                        lo, hi = float(axis.numeric[0]), float(axis.numeric[-1])
                        one_d = True
                    else:
                        lo, hi = extents(poly, name)
                        one_d = poly.dim == 1
                    positions, coords = axis.locate(lo - tol, hi + tol)
                    if one_d:
                        done = _Item(None, item.selections)
                        t0 = perf()
                        lo_t, hi_t = lo - tol, hi + tol
                        hits = [p for p, c in zip(positions.tolist(), coords.tolist()) if lo_t <= c <= hi_t]
                        slicing_time += perf() - t0
                        slices[1] += len(hits)
                        for p in hits:
                            _add_item(buckets[p], done)
                    elif poly.dim == 2:
                        # one planar polytope cut at every located index in one pass
                        other = (poly.axes[1] if poly.axes[0] == name else poly.axes[0],)
                        t0 = perf()
                        low, high, hit = slice_planar_many(poly, name, coords, tol)
                        subs = [
                            _trusted(other, np.array([[lo_]]) if hi_ - lo_ <= tol else np.array([[lo_], [hi_]]))
                            for lo_, hi_ in zip(low[hit].tolist(), high[hit].tolist())
                        ]
                        slicing_time += perf() - t0
                        slices[2] += len(coords)
                        for p, sub in zip(positions[hit].tolist(), subs):
                            buckets[p].append(_Item(sub, item.selections))
                    else:
                        dim = poly.dim
                        for p, c in zip(positions.tolist(), coords.tolist()):
                            t0 = perf()
                            sub = slice_polytope(poly, name, c, tol)
                            slicing_time += perf() - t0
                            slices[dim] += 1
                            if sub is not None:
                                buckets[p].append(_Item(sub, item.selections))
                order = sorted(buckets)

            if not order:
                # nothing below this node: unlink it and any ancestors left empty
                while node is not tree.root:
                    parent = parents.pop(id(node))
                    del parent.children[node.pos]
                    if parent.children:
                        break
                    node = parent
                continue
            found.setdefault(name, set()).update(order)
            if name == schema.branch_axis:
                for p in order:
                    child = node.add_child(name, axis.indices[p], p)
                    parents[id(child)] = node
                    sub_axes = schema.sub_schema(p).axes
                    next_frontier.append((child, sub_axes, live[:g] + (buckets[p],) + live[g + 1:]))
            elif len(axes_left) == 1:
                indices = axis.indices
                node.children = children = node.children or {}
                for p in order:
                    children[p] = Node(name, indices[p], p)
                n_leaves += len(order)
            else:
                rest = axes_left[1:]
                for p in order:
                    child = node.add_child(name, axis.indices[p], p)
                    parents[id(child)] = node
                    next_frontier.append((child, rest, live[:g] + (buckets[p],) + live[g + 1:]))
        frontier = next_frontier

    stats.slices_by_dim = {d: slices[d] for d in sorted(slices, reverse=True)}
    stats.n_per_axis = {a: len(s) for a, s in found.items()}
    stats.m = len(stats.n_per_axis)
    stats.points_found = n_leaves
    stats.slicing_time = slicing_time
    stats.total_time = time.perf_counter() - t_start

    bpv = BYTES_PER_VALUE
    stats.bytes_polytope = stats.points_found * bpv
    stats.bytes_whole, stats.bytes_bbox = baseline_bytes(schema, request_extents(schema, pieces, eps), bpv)
    return tree, stats


def extract_request(schema, request, eps=DEFAULT_EPS, settings=None):
    """Decompose shapes (one shape or a list of them) and extract."""
    return extract(schema, decompose(request, settings), eps)


def merge(tree, other):
    """Union of the leaf sets of two trees over the same schema, as a new tree."""
    if tree.schema != other.schema:
        raise ValueError("cannot merge index trees built over different datacube schemas")
    out = tree.copy()
    schema = tree.schema

    def graft(dst, src):
        if not src.children:
            return
        if dst.children is None:
            dst.children = {}
        added = False
        for pos, child in src.children.items():
            mine = dst.children.get(pos)
            if mine is None:
                dst.children[pos] = child.copy()
                added = True
            else:
                graft(mine, child)
        if added:
            first = next(iter(dst.children.values()))
            if schema.find_axis(first.axis).kind != CATEGORICAL:
                dst.children = dict(sorted(dst.children.items()))

    graft(out.root, other.root)
    return out


def attach_values(tree, storage, schema):
    """Set ``value`` on every leaf from the datacube storage; returns ``tree``."""
    by_leaf = defaultdict(list)
    for path in tree.iter_leaves():
        key = None
        positions = []
        for n in path:
            if n.axis == schema.branch_axis:
                key = (n.axis, n.index)
            else:
                positions.append(n.pos)
        by_leaf[key].append((path[-1], positions))
    for key, entries in by_leaf.items():
        shape = schema.leaf_shape(key)
        idx = np.array([pos for _, pos in entries], dtype=np.intp)
        if idx.shape[1] != len(shape):
            raise ValueError("tree leaves do not assign every datacube axis")
        offsets = np.ravel_multi_index(tuple(idx.T), shape)
        vals = np.asarray(storage.values[key])[offsets].tolist()
        for (leaf, _), v in zip(entries, vals):
            leaf.value = v
    return tree
