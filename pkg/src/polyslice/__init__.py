"""Polytope-shaped data extraction from multidimensional datacubes."""

from .axes import (
    CATEGORICAL,
    CYCLIC,
    ORDERED,
    AxisSpec,
    NumericIndex,
    find_indices,
    remap_cyclic,
    select_categorical,
    to_numeric,
)
from .datacube import (
    DatacubeSchema,
    DatacubeStorage,
    baseline_bytes,
    get_value,
    load,
    next_axes,
    save,
    synthesize,
)
from .engine import (
    ExtractionStats,
    IndexTree,
    attach_values,
    extract,
    extract_request,
    merge,
    slice_bound,
)
from .errors import PolysliceError, RequestError
from .geometry import (
    DEFAULT_EPS,
    Extent,
    Polytope,
    convex_hull,
    dedup_vertices,
    extents,
    slice_polytope,
)
from .shapes import (
    All,
    Box,
    ConvexPiece,
    ConvexPolytope,
    DecomposeSettings,
    Point,
    Polygon,
    Select,
    Span,
    Union,
    decompose,
    make_disk,
    make_path,
    make_timeseries,
    make_vertical_profile,
    parse_request,
)

__version__ = "0.1.0"
