"""Convex polytopes over named axes and the hyperplane slicing step.

A polytope is stored purely by its vertices (V-representation). Slicing it
with the hyperplane ``axis == value`` interpolates every edge-candidate pair
of vertices straddling the plane and keeps the hull of the result, so the
vertex count stays small as the polytope is cut down one axis at a time.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import ConvexHull, QhullError, cKDTree

from .errors import AxisError

DEFAULT_EPS = 1e-12

# Above this (affine) dimension hull reduction is skipped and only dedup runs.
HULL_MAX_DIM = 8

# Relative spread below which a direction is treated as flat.
_FLAT_RTOL = 1e-10
# Relative separation margin an extreme point must have in the LP test.
_LP_MARGIN = 1e-9
# Pairwise dedup switches to a KD-tree above this many points.
_DEDUP_DENSE_MAX = 512


@dataclass(frozen=True)
class Extent:
    """Closed interval ``[low, high]`` along one axis."""

    low: float
    high: float

    def __post_init__(self):
        if not self.low <= self.high:
            raise ValueError(f"extent low {self.low!r} exceeds high {self.high!r}")

    def __iter__(self):
        yield self.low
        yield self.high

    def widen(self, tol):
        return Extent(self.low - tol, self.high + tol)


@dataclass(frozen=True, eq=False)
class Polytope:
    """Convex hull of ``vertices``; column ``k`` holds coordinates on ``axes[k]``."""

    axes: tuple
    vertices: np.ndarray

    def __post_init__(self):
        axes = tuple(self.axes)
        if len(set(axes)) != len(axes):
            raise ValueError(f"duplicate axis names in {axes}")
        verts = np.asarray(self.vertices, dtype=float)
        if verts.ndim == 1 and len(axes) == 1:
            verts = verts.reshape(-1, 1)
        if verts.ndim != 2 or verts.shape[1] != len(axes):
            raise ValueError(
                f"vertices of shape {verts.shape} do not match {len(axes)} axes"
            )
        if verts.shape[0] == 0:
            raise ValueError("a polytope needs at least one vertex")
        if not np.isfinite(verts).all():
            raise ValueError("vertex coordinates must be finite")
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "vertices", verts)

    @property
    def dim(self):
        return len(self.axes)

    def __len__(self):
        return self.vertices.shape[0]

    def axis_index(self, axis_name):
        try:
            return self.axes.index(axis_name)
        except ValueError:
            raise AxisError(f"axis {axis_name!r} is not in polytope axes {self.axes}") from None

    def same_shape(self, other, eps=DEFAULT_EPS):
        """Vertex-set equality up to ``eps`` (order-insensitive)."""
        if self.axes != other.axes or len(self) != len(other):
            return False
        d = np.abs(self.vertices[:, None, :] - other.vertices[None, :, :]).max(axis=2)
        return bool((d <= eps).any(axis=1).all() and (d <= eps).any(axis=0).all())

    def __repr__(self):
        return f"Polytope(axes={self.axes}, n_vertices={len(self)})"


def _unique_rows(points, eps):
    """Indices of the first occurrence of every eps-distinct row (inf-norm)."""
    n = len(points)
    if n <= 1:
        return np.arange(n)
    if n <= _DEDUP_DENSE_MAX:
        close = np.abs(points[:, None, :] - points[None, :, :]).max(axis=2) <= eps
        # a row is dropped iff some earlier surviving row is close; with
        # transitive chains this greedy scan is the reference behaviour
        keep = []
        dropped = np.zeros(n, dtype=bool)
        for i in range(n):
            if dropped[i]:
                continue
            keep.append(i)
            dropped |= close[i]
        return np.asarray(keep)
    tree = cKDTree(points)
    neighbours = tree.query_ball_point(points, r=eps, p=np.inf)
    keep = []
    dropped = np.zeros(n, dtype=bool)
    for i in range(n):
        if dropped[i]:
            continue
        keep.append(i)
        dropped[neighbours[i]] = True
    return np.asarray(keep)


def dedup_vertices(p, eps=DEFAULT_EPS):
    """Drop vertices within ``eps`` (max-coordinate distance) of an earlier one."""
    keep = _unique_rows(p.vertices, eps)
    if len(keep) == len(p):
        return p
    return Polytope(p.axes, p.vertices[keep])


def extents(p, axis_name):
    col = p.vertices[:, p.axis_index(axis_name)]
    return Extent(float(col.min()), float(col.max()))


def _quickhull_2d(pts, tol):
    """Indices of the strictly extreme points of a full-rank planar set."""
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    lo, hi = int(order[0]), int(order[-1])
    cand = np.arange(len(pts))
    out = [lo]
    _quickhull_side(pts, cand, lo, hi, tol, out)
    out.append(hi)
    _quickhull_side(pts, cand, hi, lo, tol, out)
    return out


def _quickhull_side(pts, cand, a, b, tol, out):
    d = pts[b] - pts[a]
    rel = pts[cand] - pts[a]
    cross = d[0] * rel[:, 1] - d[1] * rel[:, 0]
    mask = cross > tol * np.hypot(d[0], d[1])
    if not mask.any():
        return
    cand = cand[mask]
    far = int(cand[np.argmax(cross[mask])])
    _quickhull_side(pts, cand, a, far, tol, out)
    out.append(far)
    _quickhull_side(pts, cand, far, b, tol, out)


def _lp_extreme(pts):
    """Extreme-point mask via one separation LP per point.

    Point ``i`` is extreme iff some direction ``w`` (``|w|_inf <= 1``) puts it
    strictly ahead of every other point; the LP maximises that margin.
    """
    n, d = pts.shape
    keep = np.ones(n, dtype=bool)
    c = np.zeros(d + 1)
    c[-1] = -1.0
    bounds = [(-1.0, 1.0)] * d + [(None, 1.0)]
    for i in range(n):
        others = np.delete(pts, i, axis=0) - pts[i]
        a_ub = np.hstack([others, np.ones((n - 1, 1))])
        res = linprog(
            c,
            A_ub=a_ub,
            b_ub=np.zeros(n - 1),
            bounds=bounds,
            method="highs",
            options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10},
        )
        if res.status == 0 and -res.fun <= _LP_MARGIN:
            keep[i] = False
    return keep


def convex_hull(vertices, dim=None, *, max_dim=HULL_MAX_DIM):
    """Return the subset of ``vertices`` that are vertices of their convex hull.

    Input order is preserved for the survivors and no new points are made.
    Degenerate (flat) inputs are hulled inside their affine span, so
    collinear or coplanar sets come back as their extreme points.

    Parameters
    ----------
    vertices : sequence of coordinate sequences, or (n, dim) array
    dim : int, optional
        Expected dimensionality; checked against the data when given.
    max_dim : int
        Affine dimension above which only duplicate removal is performed.
    """
    if isinstance(vertices, np.ndarray):
        pts = np.asarray(vertices, dtype=float)
    else:
        rows = [tuple(np.atleast_1d(v)) for v in vertices]
        lengths = {len(r) for r in rows}
        if len(lengths) > 1:
            raise ValueError(f"mixed vertex dimensionality: {sorted(lengths)}")
        pts = np.asarray(rows, dtype=float)
    if pts.size == 0:
        raise ValueError("convex_hull needs at least one vertex")
    if pts.ndim == 1:
        pts = pts.reshape(-1, 1)
    if dim is not None and pts.shape[1] != dim:
        raise ValueError(f"vertices have dimension {pts.shape[1]}, expected {dim}")
    return pts[_hull_indices(pts, max_dim)]


def _hull_indices(pts, max_dim=HULL_MAX_DIM):
    n, d = pts.shape
    if n == 1:
        return np.array([0])
    if d == 1:
        lo, hi = int(np.argmin(pts[:, 0])), int(np.argmax(pts[:, 0]))
        return np.array([lo]) if pts[lo, 0] == pts[hi, 0] else np.sort([lo, hi])

    spread = np.ptp(pts, axis=0)
    scale = spread.max()
    if scale == 0.0:
        return np.array([0])
    centred = pts - pts.mean(axis=0)
    _, _, vt = np.linalg.svd(centred, full_matrices=False)
    proj = centred @ vt.T
    widths = np.ptp(proj, axis=0)
    rank = int((widths > _FLAT_RTOL * widths.max()).sum())
    proj = proj[:, :rank] / widths.max()

    if rank == 1:
        lo, hi = int(np.argmin(proj[:, 0])), int(np.argmax(proj[:, 0]))
        return np.sort([lo, hi])
    if rank == 2:
        return np.sort(_quickhull_2d(proj, 1e-12))
    if rank == 3:
        try:
            return np.sort(ConvexHull(proj).vertices)
        except QhullError:
            return _unique_rows(pts, 0.0)
    if rank <= max_dim:
        return np.flatnonzero(_lp_extreme(proj))
    return _unique_rows(pts, 0.0)


def _trusted(axes, verts):
    # internal constructor for already-validated data
    p = object.__new__(Polytope)
    object.__setattr__(p, "axes", axes)
    object.__setattr__(p, "vertices", verts)
    return p


def _slice_planar(p, k, value, eps):
    # same rule as the general path, specialised to a polygon cut into an interval
    d = p.vertices[:, k] - value
    y = p.vertices[:, 1 - k]
    below = d < -eps
    above = d > eps
    on = ~(below | above)
    if below.any() and above.any():
        db, da = d[below], d[above]
        yb = y[below]
        t = db[:, None] / (db[:, None] - da)
        ys = yb[:, None] + t * (y[above] - yb[:, None])
        lo, hi = ys.min(), ys.max()
        if on.any():
            lo, hi = min(lo, y[on].min()), max(hi, y[on].max())
    elif on.any():
        lo, hi = y[on].min(), y[on].max()
    else:
        return None
    reduced = np.array([[lo]]) if hi - lo <= eps else np.array([[lo], [hi]])
    return _trusted((p.axes[1 - k],), reduced)


def _planar_cut(x, y, i, j, values, eps):
    # section [low, high] at each value from ON vertices and straddling pairs (i below, j above)
    low = np.full(len(values), np.inf)
    high = np.full(len(values), -np.inf)
    # bound the (values x pairs) temporaries
    step = max(1, 2_000_000 // max(1, len(i) + len(x)))
    for s0 in range(0, len(values), step):
        d = x[None, :] - values[s0:s0 + step, None]
        on = np.abs(d) <= eps
        lo = np.where(on, y, np.inf).min(axis=1)
        hi = np.where(on, y, -np.inf).max(axis=1)
        if len(i):
            di, dj = d[:, i], d[:, j]
            straddle = (di < -eps) & (dj > eps)
            t = di / np.where(straddle, di - dj, 1.0)
            ys = y[i] + t * (y[j] - y[i])
            lo = np.minimum(lo, np.where(straddle, ys, np.inf).min(axis=1))
            hi = np.maximum(hi, np.where(straddle, ys, -np.inf).max(axis=1))
        low[s0:s0 + step] = lo
        high[s0:s0 + step] = hi
    return low, high


def slice_planar_many(p, axis_name, values, eps=DEFAULT_EPS):
    """Slice a two-axis polytope at many values of one axis at once.

    Gives the same sections as calling :func:`slice_polytope` per value and
    returns ``(low, high, hit)`` arrays: the interval on the other axis and
    whether the line meets the polygon at all.

    Where no vertex lies within ``eps`` of the value, the section's ends sit
    on hull edges, so only the edges are interpolated; the remaining values
    fall back to interpolating every below/above vertex pair.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    k = p.axis_index(axis_name)
    if len(p.axes) != 2:
        raise ValueError("slice_planar_many needs a two-axis polytope")
    values = np.asarray(values, dtype=float)
    x = p.vertices[:, k]
    y = p.vertices[:, 1 - k]

    ring = np.asarray(_quickhull_2d(p.vertices, 0.0))
    a, b = ring, np.roll(ring, -1)
    flip = x[a] > x[b]
    i, j = np.where(flip, b, a), np.where(flip, a, b)
    keep = x[i] < x[j]
    low, high = _planar_cut(x, y, i[keep], j[keep], values, eps)

    near = np.abs(x[None, :] - values[:, None]).min(axis=1) <= eps if len(values) else np.zeros(0, bool)
    if near.any():
        pi, pj = np.nonzero(x[:, None] < x[None, :])
        low[near], high[near] = _planar_cut(x, y, pi, pj, values[near], eps)
    hit = low <= high
    return low, high, hit


def slice_polytope(p, axis_name, value, eps=DEFAULT_EPS):
    """Intersect ``p`` with the hyperplane ``axis_name == value``.

    Returns the lower-dimensional polytope over the remaining axes, or None
    when the plane misses ``p``. Vertices within ``eps`` of the plane are
    taken as-is; every below/above pair contributes its interpolant.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    k = p.axis_index(axis_name)
    if len(p.axes) < 2:
        raise ValueError("cannot slice a one-axis polytope; resolve it by index lookup")
    verts = p.vertices
    if len(p.axes) == 2:
        return _slice_planar(p, k, value, eps)
    coord = verts[:, k]
    below = coord < value - eps
    above = coord > value + eps
    keep_cols = [j for j in range(len(p.axes)) if j != k]
    rest = p.axes[:k] + p.axes[k + 1:]

    on_pts = verts[~(below | above)][:, keep_cols]
    if below.any() and above.any():
        a, b = verts[below], verts[above]
        a_k, b_k = a[:, k], b[:, k]
        t = (value - a_k)[:, None] / (b_k[None, :] - a_k[:, None])
        a_r, b_r = a[:, keep_cols], b[:, keep_cols]
        inter = a_r[:, None, :] + t[:, :, None] * (b_r[None, :, :] - a_r[:, None, :])
        points = np.concatenate([on_pts, inter.reshape(-1, len(rest))])
    elif len(on_pts):
        points = on_pts
    else:
        return None

    if len(rest) == 1:
        lo, hi = points.min(), points.max()
        reduced = np.array([[lo]]) if hi - lo <= eps else np.array([[lo], [hi]])
    else:
        reduced = points[_hull_indices(points)]
        reduced = reduced[_unique_rows(reduced, eps)]
    return _trusted(rest, reduced)
