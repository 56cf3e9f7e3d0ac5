"""Request shapes and their decomposition into convex pieces.

Three levels of shapes are offered:

* low level: :class:`ConvexPolytope`, a convex hull of explicit vertices;
* high level: :class:`Box`, disks (:func:`make_disk`), :class:`Polygon`,
  :class:`Span`, :class:`Point`, :class:`Select`, :class:`All`, plus the
  constructive :class:`Union` and :func:`make_path` sweeps;
* domain helpers: :func:`make_timeseries` and :func:`make_vertical_profile`.

Every shape decomposes into :class:`ConvexPiece` objects, which is all the
extraction engine ever sees. A request is a list of shapes constraining
disjoint axis sets.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .axes import coerce_numeric
from .errors import IndexFormatError, RequestError
from .geometry import Polytope, convex_hull

DEFAULT_DISK_SEGMENTS = 32


@dataclass(frozen=True)
class DecomposeSettings:
    disk_segments: int = DEFAULT_DISK_SEGMENTS


@dataclass(frozen=True, eq=False)
class ConvexPiece:
    """A convex polytope over ordered axes plus exact categorical selections.

    A selection of ``None`` means every index of that axis.
    """

    polytope: Polytope | None
    selections: dict = field(default_factory=dict)

    @property
    def axes(self):
        poly = self.polytope.axes if self.polytope is not None else ()
        return poly + tuple(self.selections)


def _numbers(values, what):
    try:
        return tuple(coerce_numeric(v) for v in values)
    except (IndexFormatError, TypeError) as exc:
        raise RequestError(f"{what}: {exc}") from None


def _axis_names(axes, what):
    axes = (axes,) if isinstance(axes, str) else tuple(axes)
    if not axes or not all(isinstance(a, str) and a for a in axes):
        raise RequestError(f"{what}: axis names must be non-empty strings")
    if len(set(axes)) != len(axes):
        raise RequestError(f"{what}: repeated axis names {axes}")
    return axes


class Shape:
    """Base class; subclasses define ``axes`` and ``pieces``."""

    axes: tuple

    def pieces(self, settings):
        raise NotImplementedError


@dataclass(frozen=True)
class ConvexPolytope(Shape):
    axes: tuple
    vertices: tuple

    def __post_init__(self):
        axes = _axis_names(self.axes, "polytope.axes")
        verts = tuple(_numbers(v, "polytope.vertices") for v in self.vertices)
        if not verts:
            raise RequestError("polytope.vertices: at least one vertex is required")
        if any(len(v) != len(axes) for v in verts):
            raise RequestError(f"polytope.vertices: every vertex needs {len(axes)} coordinates")
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "vertices", verts)

    def pieces(self, settings):
        hull = convex_hull(np.array(self.vertices), len(self.axes))
        return [ConvexPiece(Polytope(self.axes, hull))]


@dataclass(frozen=True)
class Box(Shape):
    axes: tuple
    lower: tuple
    upper: tuple

    def __post_init__(self):
        axes = _axis_names(self.axes, "box.axes")
        lower = _numbers(self.lower, "box.lower")
        upper = _numbers(self.upper, "box.upper")
        if len(lower) != len(axes) or len(upper) != len(axes):
            raise RequestError(f"box: lower and upper need {len(axes)} coordinates each")
        for name, lo, hi in zip(axes, lower, upper):
            if lo > hi:
                raise RequestError(f"box: lower bound {lo} exceeds upper bound {hi} on axis {name!r}")
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    def pieces(self, settings):
        corners = np.array(list(itertools.product(*zip(self.lower, self.upper))))
        return [ConvexPiece(Polytope(self.axes, corners))]


@dataclass(frozen=True)
class Point(Shape):
    axes: tuple
    coords: tuple

    def __post_init__(self):
        axes = _axis_names(self.axes, "point.axes")
        coords = _numbers(self.coords, "point.coords")
        if len(coords) != len(axes):
            raise RequestError(f"point: {len(axes)} axes but {len(coords)} coordinates")
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "coords", coords)

    def pieces(self, settings):
        return [ConvexPiece(Polytope(self.axes, np.array([self.coords])))]


@dataclass(frozen=True)
class Span(Shape):
    """Closed range on one ordered axis."""

    axis: str
    lower: float
    upper: float

    def __post_init__(self):
        _axis_names(self.axis, "span.axis")
        lo, hi = _numbers((self.lower, self.upper), "span")
        if lo > hi:
            raise RequestError(f"span on {self.axis!r}: lower {self.lower!r} is after upper {self.upper!r}")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def axes(self):
        return (self.axis,)

    def pieces(self, settings):
        return [ConvexPiece(Polytope(self.axes, np.array([[self.lower], [self.upper]])))]


@dataclass(frozen=True)
class Select(Shape):
    """Exact index selection on a categorical axis."""

    axis: str
    values: tuple

    def __post_init__(self):
        _axis_names(self.axis, "select.axis")
        if isinstance(self.values, str) or not self.values:
            raise RequestError("select.values: a non-empty list of labels is required")
        object.__setattr__(self, "values", tuple(str(v) for v in self.values))

    @property
    def axes(self):
        return (self.axis,)

    def pieces(self, settings):
        return [ConvexPiece(None, {self.axis: self.values})]


@dataclass(frozen=True)
class All(Shape):
    """Every index of one axis."""

    axis: str

    def __post_init__(self):
        _axis_names(self.axis, "all.axis")

    @property
    def axes(self):
        return (self.axis,)

    def pieces(self, settings):
        return [ConvexPiece(None, {self.axis: None})]


def _segments_cross(p1, p2, q1, q2):
    """True if closed segments p1p2 and q1q2 share any point."""

    def orient(a, b, c):
        v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        return 0 if v == 0 else (1 if v > 0 else -1)

    def on_seg(a, b, c):
        return min(a[0], b[0]) <= c[0] <= max(a[0], b[0]) and min(a[1], b[1]) <= c[1] <= max(a[1], b[1])

    o1, o2 = orient(p1, p2, q1), orient(p1, p2, q2)
    o3, o4 = orient(q1, q2, p1), orient(q1, q2, p2)
    if o1 != o2 and o3 != o4:
        return True
    return (
        (o1 == 0 and on_seg(p1, p2, q1))
        or (o2 == 0 and on_seg(p1, p2, q2))
        or (o3 == 0 and on_seg(q1, q2, p1))
        or (o4 == 0 and on_seg(q1, q2, p2))
    )


def signed_area(ring):
    x, y = np.asarray(ring, dtype=float).T
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _in_triangle(p, a, b, c):
    # closed triangle, counter-clockwise a-b-c
    return _cross(a, b, p) >= 0 and _cross(b, c, p) >= 0 and _cross(c, a, p) >= 0


def ear_clip(ring):
    """Triangulate a simple counter-clockwise ring; returns index triples."""
    idx = list(range(len(ring)))
    tris = []
    guard = 0
    while len(idx) > 3:
        n = len(idx)
        for k in range(n):
            i_prev, i, i_next = idx[k - 1], idx[k], idx[(k + 1) % n]
            a, b, c = ring[i_prev], ring[i], ring[i_next]
            if _cross(a, b, c) <= 0:
                continue
            blocked = any(
                _in_triangle(ring[j], a, b, c)
                for j in idx
                if j not in (i_prev, i, i_next)
            )
            if not blocked:
                tris.append((i_prev, i, i_next))
                del idx[k]
                break
        else:
            raise RequestError("polygon could not be triangulated; is it simple?")
        guard += 1
        if guard > len(ring) ** 2:
            raise RequestError("polygon triangulation did not terminate")
    tris.append(tuple(idx))
    return tris


@dataclass(frozen=True)
class Polygon(Shape):
    """Simple polygon on two ordered axes; concave rings are split into triangles."""

    axes: tuple
    points: tuple

    def __post_init__(self):
        axes = _axis_names(self.axes, "polygon.axes")
        if len(axes) != 2:
            raise RequestError("polygon.axes: exactly two axes are required")
        pts = [_numbers(p, "polygon.points") for p in self.points]
        if any(len(p) != 2 for p in pts):
            raise RequestError("polygon.points: every point needs 2 coordinates")
        ring = []
        for p in pts:
            if not ring or p != ring[-1]:
                ring.append(p)
        if len(ring) > 1 and ring[0] == ring[-1]:
            ring.pop()
        if len(set(ring)) < 3:
            raise RequestError("polygon.points: at least 3 distinct points are required")
        if len(set(ring)) != len(ring):
            raise RequestError("polygon.points: ring revisits a point (self-intersecting)")
        n = len(ring)
        for i in range(n):
            for j in range(i + 1, n):
                if j == i + 1 or (i == 0 and j == n - 1):
                    continue
                if _segments_cross(ring[i], ring[(i + 1) % n], ring[j], ring[(j + 1) % n]):
                    raise RequestError(f"polygon.points: edges {i} and {j} intersect")
        if signed_area(ring) == 0:
            raise RequestError("polygon.points: ring encloses no area")
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "points", tuple(ring))

    def ring_ccw(self):
        ring = list(self.points)
        if signed_area(ring) < 0:
            ring.reverse()
        # 180-degree vertices do not change the region and stall ear clipping
        changed = True
        while changed and len(ring) > 3:
            changed = False
            for k in range(len(ring)):
                if _cross(ring[k - 1], ring[k], ring[(k + 1) % len(ring)]) == 0:
                    del ring[k]
                    changed = True
                    break
        return ring

    def is_convex(self):
        ring = self.ring_ccw()
        n = len(ring)
        return all(_cross(ring[k - 1], ring[k], ring[(k + 1) % n]) > 0 for k in range(n))

    def pieces(self, settings):
        ring = self.ring_ccw()
        if self.is_convex():
            return [ConvexPiece(Polytope(self.axes, convex_hull(np.array(ring), 2)))]
        return [
            ConvexPiece(Polytope(self.axes, np.array([ring[i] for i in tri])))
            for tri in ear_clip(ring)
        ]


@dataclass(frozen=True)
class Union(Shape):
    """Union of shapes that all constrain the same axes."""

    shapes: tuple

    def __post_init__(self):
        shapes = tuple(self.shapes)
        if not shapes:
            raise RequestError("union.shapes: at least one member is required")
        first = set(shapes[0].axes)
        for k, s in enumerate(shapes[1:], 1):
            if set(s.axes) != first:
                raise RequestError(
                    f"union.shapes[{k}]: axes {sorted(s.axes)} differ from {sorted(first)}"
                )
        object.__setattr__(self, "shapes", shapes)

    @property
    def axes(self):
        return self.shapes[0].axes

    def pieces(self, settings):
        return [p for s in self.shapes for p in s.pieces(settings)]


def make_disk(axes, center, radius, segments=DEFAULT_DISK_SEGMENTS):
    """Polygon inscribed in the axis-aligned ellipse ``center ± radius``.

    ``radius`` is one number for a circle or a pair of semi-axes.

    Vertex ``k`` sits at angle ``2*pi*k/segments``, so doubling ``segments``
    keeps every old vertex and the polygon only grows toward the ellipse.
    """
    axes = _axis_names(axes, "disk.axes")
    if len(axes) != 2:
        raise RequestError("disk.axes: exactly two axes are required")
    cx, cy = _numbers(center, "disk.center")
    if isinstance(radius, (int, float, np.integer, np.floating)) and not isinstance(radius, bool):
        radius = (radius, radius)
    rx, ry = _numbers(radius, "disk.radius")
    if rx <= 0 or ry <= 0:
        raise RequestError(f"disk.radius: components must be positive, got {(rx, ry)}")
    if int(segments) != segments or segments < 3:
        raise RequestError(f"disk.segments: need an integer >= 3, got {segments!r}")
    theta = 2 * np.pi * np.arange(int(segments)) / int(segments)
    # cos/sin at multiples of pi/2 are not exactly 0/1 in floating point
    c, s = np.round(np.cos(theta), 15), np.round(np.sin(theta), 15)
    pts = [(cx + rx * a, cy + ry * b) for a, b in zip(c, s)]
    return Polygon(axes, tuple(pts))


def make_path(base, waypoints, axes=None):
    """Sweep ``base`` along ``waypoints``: a union of per-segment convex hulls.

    ``axes`` names the waypoint coordinates and defaults to ``base.axes``;
    base axes must be a subset of them, missing ones are treated as zero
    offset so e.g. a 2D disk can be swept through 4D space.
    """
    axes = _axis_names(axes if axes is not None else base.axes, "path.axes")
    missing = set(base.axes) - set(axes)
    if missing:
        raise RequestError(f"path: base axes {sorted(missing)} are not among waypoint axes {axes}")
    wps = [np.array(_numbers(w, "path.waypoints")) for w in waypoints]
    if len(wps) < 2:
        raise RequestError("path.waypoints: at least 2 waypoints are required")
    if any(len(w) != len(axes) for w in wps):
        raise RequestError(f"path.waypoints: every waypoint needs {len(axes)} coordinates")

    members = []
    for piece in base.pieces(DecomposeSettings()):
        if piece.selections or piece.polytope is None:
            raise RequestError("path: the base shape must not involve categorical selections")
        poly = piece.polytope
        local = np.zeros((len(poly), len(axes)))
        for j, name in enumerate(poly.axes):
            local[:, axes.index(name)] = poly.vertices[:, j]
        for w0, w1 in zip(wps, wps[1:]):
            pts = np.concatenate([local + w0, local + w1])
            members.append(ConvexPolytope(axes, tuple(map(tuple, convex_hull(pts)))))
    return Union(tuple(members))


def make_timeseries(location, time_axis, t0, t1):
    """Point on the spatial axes of ``location`` (a mapping) times a time span."""
    axes = tuple(location)
    if time_axis in axes:
        raise RequestError(f"timeseries: {time_axis!r} is both a location axis and the time axis")
    return [Point(axes, tuple(location.values())), Span(time_axis, t0, t1)]


def make_vertical_profile(location, level_axis, l0, l1):
    """Point on the horizontal axes of ``location`` times a span of levels."""
    axes = tuple(location)
    if level_axis in axes:
        raise RequestError(f"vertical profile: {level_axis!r} is both a location axis and the level axis")
    return [Point(axes, tuple(location.values())), Span(level_axis, l0, l1)]


def decompose(request, settings=None):
    """Convex pieces of a shape or of a whole request (a list of shapes)."""
    settings = settings or DecomposeSettings()
    if isinstance(request, Shape):
        return request.pieces(settings)
    return [p for shape in request for p in decompose(shape, settings)]


# -- JSON request documents ---------------------------------------------------


def _field(obj, name, where):
    if name not in obj:
        raise RequestError(f"{where}: missing field {name!r}")
    return obj[name]


def shape_from_json(obj, where="request", settings=None):
    settings = settings or DecomposeSettings()
    if not isinstance(obj, dict):
        raise RequestError(f"{where}: each shape must be a JSON object")
    kind = _field(obj, "type", where)
    where = f"{where}({kind})"
    try:
        if kind == "box":
            return Box(_field(obj, "axes", where), _field(obj, "lower", where), _field(obj, "upper", where))
        if kind == "disk":
            return make_disk(
                _field(obj, "axes", where),
                _field(obj, "center", where),
                _field(obj, "radius", where),
                obj.get("segments", settings.disk_segments),
            )
        if kind == "polygon":
            return Polygon(_field(obj, "axes", where), tuple(_field(obj, "points", where)))
        if kind == "span":
            return Span(_field(obj, "axis", where), _field(obj, "lower", where), _field(obj, "upper", where))
        if kind == "select":
            return Select(_field(obj, "axis", where), tuple(_field(obj, "values", where)))
        if kind == "point":
            return Point(_field(obj, "axes", where), _field(obj, "coords", where))
        if kind == "polytope":
            return ConvexPolytope(_field(obj, "axes", where), tuple(_field(obj, "vertices", where)))
        if kind == "all":
            return All(_field(obj, "axis", where))
        if kind == "union":
            members = _field(obj, "shapes", where)
            if not isinstance(members, list):
                raise RequestError(f"{where}.shapes: must be a list")
            return Union(tuple(
                shape_from_json(m, f"{where}.shapes[{k}]", settings) for k, m in enumerate(members)
            ))
        if kind == "path":
            base = shape_from_json(_field(obj, "base", where), f"{where}.base", settings)
            return make_path(base, _field(obj, "waypoints", where), obj.get("axes"))
    except RequestError as exc:
        msg = str(exc)
        raise RequestError(msg if msg.startswith(where) else f"{where}: {msg}") from None
    except TypeError as exc:
        raise RequestError(f"{where}: {exc}") from None
    raise RequestError(f"{where}: unknown shape type {kind!r}")


def parse_request(doc, settings=None):
    """Shapes of a request document ``{"request": [...]}``."""
    if not isinstance(doc, dict) or not isinstance(doc.get("request"), list):
        raise RequestError("request: document must be an object with a 'request' list")
    return [shape_from_json(s, f"request[{k}]", settings) for k, s in enumerate(doc["request"])]
