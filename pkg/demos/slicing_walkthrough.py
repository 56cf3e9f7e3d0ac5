"""Walk through successive slicing on small cubes.

A triangle over a 3x3 grid shows the index tree the engine builds, and a
4D box with two indices per axis shows how slices are counted per
dimension and how that count meets the worst-case bound.

Run:  python demos/slicing_walkthrough.py
"""
import numpy as np

from polyslice import (
    ORDERED,
    AxisSpec,
    Box,
    ConvexPiece,
    DatacubeSchema,
    Polygon,
    Polytope,
    attach_values,
    extract,
    extract_request,
    slice_polytope,
    synthesize,
)


def grid(*names, n=3):
    return DatacubeSchema(tuple(AxisSpec(a, ORDERED, tuple(range(n))) for a in names))


# one slicing step: a triangle cut along lat=1 leaves a segment on lon
tri = Polytope(("lat", "lon"), [(0, 0), (2, 0), (0, 2)])
seg = slice_polytope(tri, "lat", 1.0)
print("triangle cut at lat=1 ->", seg.axes, seg.vertices.ravel().tolist())

# the full extraction over a 3x3 cube whose value at (i, j) is 10*i + j
schema = grid("lat", "lon")
storage = synthesize(schema, lambda i, j: 10 * i + j)
tree, stats = extract_request(schema, Polygon(("lat", "lon"), ((0, 0), (2, 0), (0, 2))))
attach_values(tree, storage, schema)
print("\ntriangle over 3x3 grid:")
for path, value in tree.points():
    print("  ", path, "->", value)
print("   slices by dimension:", stats.slices_by_dim)

# 4D box covering indices 1..2 on every axis of a 4^4 cube
schema = grid("w", "x", "y", "z", n=4)
tree, stats = extract_request(schema, Box(tuple("wxyz"), (0.5,) * 4, (2.5,) * 4))
print("\n4D box, two indices per axis:")
print("   slices by dimension:", stats.slices_by_dim)
print("   total slices:", stats.total_slices, " bound:", stats.slice_bound, " points:", stats.points_found)

# a 4D simplex stays well under the bound: its narrowing sections prune sub-trees
tilted = Polytope(tuple("wxyz"), np.array([[0, 0, 0, 0], [3, 3, 0, 0], [3, 3, 3, 0], [3, 3, 3, 3], [3, 0, 0, 0]]))
tree, stats = extract(schema, [ConvexPiece(tilted, {})])
print("\nsimplex-like 4D polytope:")
print("   total slices:", stats.total_slices, " bound:", stats.slice_bound, " points:", stats.points_found)
