"""Independent oracles and fixtures shared by the test modules.

Nothing here calls the breadth-first engine: containment is decided from
half-space inequalities, and the reference extractor recurses depth-first.
"""
import itertools

import numpy as np
from scipy.spatial import ConvexHull

from polyslice import CATEGORICAL, CYCLIC, ORDERED, AxisSpec, DatacubeSchema
from polyslice.geometry import slice_polytope


def grid_schema(indices_per_axis, names=None, kind=ORDERED):
    names = names or [f"a{k}" for k in range(len(indices_per_axis))]
    return DatacubeSchema(tuple(AxisSpec(n, kind, tuple(ix)) for n, ix in zip(names, indices_per_axis)))


def branching_cube():
    """Two categorical layers; ax2 branches into differently shaped sub-cubes."""
    sub = lambda *axes: DatacubeSchema(tuple(axes))
    ten = tuple(range(10))
    return DatacubeSchema(
        (
            AxisSpec("ax1", CATEGORICAL, ("val1", "val2")),
            AxisSpec("ax2", CATEGORICAL, ("val3", "val4", "val5")),
        ),
        {
            ("ax2", "val3"): sub(AxisSpec("w", ORDERED, (0, 1, 2))),
            ("ax2", "val4"): sub(
                AxisSpec("x", ORDERED, ten), AxisSpec("y", ORDERED, ten), AxisSpec("z", ORDERED, ten)
            ),
            ("ax2", "val5"): sub(AxisSpec("u", ORDERED, (0, 1)), AxisSpec("v", ORDERED, (0, 1))),
        },
    )


def halfspaces(vertices):
    """(A, b) with the hull = {x : A x + b <= 0}, unit-norm rows (full-dimensional input)."""
    eq = ConvexHull(vertices).equations
    return eq[:, :-1], eq[:, -1]


def contains(A, b, pts, tol):
    return (pts @ A.T + b <= tol).all(axis=1)


def brute_force_points(schema, polytopes, eps=1e-12):
    """Grid points (as tuples of raw indices) inside any of ``polytopes``.

    Every polytope must span all schema axes and be full-dimensional; the
    tolerance is scaled like the engine's, by the largest axis magnitude.
    """
    axes = schema.axes
    names = [a.name for a in axes]
    grid = np.array(list(itertools.product(*[a.numeric for a in axes])), dtype=float)
    raw = list(itertools.product(*[a.indices for a in axes]))
    scale = max(a.scale for a in axes)
    inside = np.zeros(len(grid), dtype=bool)
    for p in polytopes:
        cols = [list(p.axes).index(n) for n in names]
        A, b = halfspaces(p.vertices[:, cols])
        inside |= contains(A, b, grid, eps * scale)
    return {tuple(zip(names, raw[k])) for k in np.flatnonzero(inside)}


def reference_extract(schema, polytopes, eps=1e-12):
    """Depth-first recursive extraction over a regular cube of ordered axes."""
    out = set()

    def visit(k, poly, prefix):
        axis = schema.axes[k]
        tol = eps * axis.scale
        col = poly.vertices[:, list(poly.axes).index(axis.name)]
        positions, coords = axis.locate(col.min() - tol, col.max() + tol)
        for pos, c in zip(positions.tolist(), coords.tolist()):
            path = prefix + ((axis.name, axis.indices[pos]),)
            if len(poly.axes) == 1:
                if col.min() - tol <= c <= col.max() + tol:
                    out.add(path)
                continue
            sub = slice_polytope(poly, axis.name, c, tol)
            if sub is not None:
                visit(k + 1, sub, path)

    for p in polytopes:
        visit(0, p, ())
    return out


def hull_oracle_2d(points, tol=1e-9):
    """Extreme points of a planar set by the O(n^3) supporting-line test."""
    pts = np.asarray(points, dtype=float)
    n = len(pts)
    extreme = set()
    for i, j in itertools.permutations(range(n), 2):
        d = pts[j] - pts[i]
        if np.hypot(*d) <= tol:
            continue
        cross = d[0] * (pts[:, 1] - pts[i, 1]) - d[1] * (pts[:, 0] - pts[i, 0])
        # every point on the left (or on the line within the segment) makes i-j a hull edge
        if (cross >= -tol).all():
            on = np.abs(cross) <= tol
            t = ((pts[on] - pts[i]) @ d) / (d @ d)
            if (t >= -tol).all() and (t <= 1 + tol).all():
                extreme.update((i, j))
    return {tuple(pts[k]) for k in extreme}


def random_case(rng, dim=None):
    """Random grid (<= 10 indices per axis) and random hull polytope over it."""
    from polyslice import Polytope

    dim = dim or int(rng.integers(2, 5))
    integer = rng.random() < 0.5
    indices = []
    for _ in range(dim):
        n = int(rng.integers(1, 11))
        if integer:
            ix = sorted(rng.choice(np.arange(11), size=n, replace=False).tolist())
        else:
            ix = np.unique(np.round(rng.uniform(0, 10, size=n), 3)).tolist()
        indices.append(ix)
    schema = grid_schema(indices)
    k = int(rng.integers(dim + 1, 13))
    while True:
        if integer:
            pts = rng.integers(0, 11, size=(k, dim)).astype(float)
        else:
            pts = rng.uniform(-1, 11, size=(k, dim))
        if np.linalg.matrix_rank(pts - pts[0]) == dim:
            break
    order = rng.permutation(dim)
    names = [schema.axes[j].name for j in order]
    return schema, Polytope(tuple(names), pts[:, order])


def cyclic_axis(name="lon", step=5):
    return AxisSpec(name, CYCLIC, tuple(range(0, 360, step)), period=(0, 360))
