"""Datacube axes: ordered, cyclic and categorical.

Ordered and cyclic axes map every index to a float so that polytopes can be
interpolated across them; timestamps become seconds since the Unix epoch.
Lookups are binary searches over the sorted numeric indices.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import NamedTuple

import numpy as np

from .errors import IndexFormatError, UnsupportedAxisOperation
from .geometry import Extent

ORDERED = "ordered"
CYCLIC = "cyclic"
CATEGORICAL = "categorical"
KINDS = (ORDERED, CYCLIC, CATEGORICAL)


class NumericIndex(NamedTuple):
    value: float
    origin: object


def parse_timestamp(text):
    """RFC 3339 string (or datetime) to epoch seconds; naive values are UTC."""
    if isinstance(text, datetime):
        dt = text
    else:
        s = text.strip()
        if s.endswith(("Z", "z")):
            s = s[:-1] + "+00:00"
        try:
            dt = datetime.fromisoformat(s)
        except ValueError:
            raise IndexFormatError(f"not an RFC 3339 timestamp: {text!r}") from None
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.timestamp()


def coerce_numeric(raw):
    """Numeric value of a raw ordered index: numbers pass through, strings are timestamps."""
    if isinstance(raw, bool):
        raise IndexFormatError(f"boolean is not an ordered index: {raw!r}")
    if isinstance(raw, (int, float, np.integer, np.floating)):
        value = float(raw)
        if not math.isfinite(value):
            raise IndexFormatError(f"index must be finite, got {raw!r}")
        return value
    if isinstance(raw, (str, datetime)):
        return parse_timestamp(raw)
    raise IndexFormatError(f"cannot interpret {raw!r} as an ordered index")


@dataclass(frozen=True)
class AxisSpec:
    """One datacube dimension.

    ``indices`` keeps the raw index values (numbers, timestamp strings or
    category labels); ``period`` is required for cyclic axes only.
    """

    name: str
    kind: str
    indices: tuple
    period: tuple | None = None
    numeric: np.ndarray = field(init=False, repr=False, compare=False)
    _positions: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"axis {self.name!r}: unknown kind {self.kind!r}")
        object.__setattr__(self, "indices", tuple(self.indices))
        if not self.indices:
            raise ValueError(f"axis {self.name!r}: no indices")

        if self.kind == CATEGORICAL:
            if self.period is not None:
                raise ValueError(f"axis {self.name!r}: categorical axes take no period")
            labels = [str(i) for i in self.indices]
            if len(set(labels)) != len(labels):
                raise ValueError(f"axis {self.name!r}: duplicate categorical indices")
            object.__setattr__(self, "indices", tuple(labels))
            object.__setattr__(self, "numeric", None)
            object.__setattr__(self, "_positions", {v: i for i, v in enumerate(labels)})
            return

        numeric = np.array([coerce_numeric(i) for i in self.indices], dtype=float)
        if len(numeric) > 1 and not (np.diff(numeric) > 0).all():
            raise ValueError(f"axis {self.name!r}: indices must be strictly increasing")
        if self.kind == CYCLIC:
            if self.period is None or len(self.period) != 2:
                raise ValueError(f"axis {self.name!r}: cyclic axes need a (low, high) period")
            low, high = (float(v) for v in self.period)
            if not low < high:
                raise ValueError(f"axis {self.name!r}: empty period {self.period}")
            if numeric[0] < low or numeric[-1] >= high:
                raise ValueError(f"axis {self.name!r}: indices must lie in [{low}, {high})")
            object.__setattr__(self, "period", (low, high))
        elif self.period is not None:
            raise ValueError(f"axis {self.name!r}: only cyclic axes take a period")
        numeric.flags.writeable = False
        object.__setattr__(self, "numeric", numeric)
        object.__setattr__(self, "_positions", None)

    @property
    def is_ordered(self):
        return self.kind != CATEGORICAL

    def __len__(self):
        return len(self.indices)

    @property
    def scale(self):
        """Coordinate magnitude used to turn a relative tolerance into an absolute one."""
        if self.kind == CATEGORICAL:
            return 1.0
        bound = np.abs(self.numeric).max()
        if self.period is not None:
            bound = max(bound, abs(self.period[0]), abs(self.period[1]))
        return max(1.0, float(bound))

    def position(self, raw):
        """Position of an exact raw index value; KeyError if absent."""
        if self.kind == CATEGORICAL:
            return self._positions[str(raw)]
        try:
            if isinstance(raw, str) and not isinstance(self.indices[0], str):
                value = float(raw)
            else:
                value = coerce_numeric(raw)
        except (IndexFormatError, ValueError):
            raise KeyError(raw) from None
        if self.kind == CYCLIC:
            low, high = self.period
            value = low + (value - low) % (high - low)
        pos = int(np.searchsorted(self.numeric, value))
        if pos < len(self.numeric) and self.numeric[pos] == value:
            return pos
        raise KeyError(raw)

    def locate(self, low, high):
        """Positions of indices in the closed range ``[low, high]``.

        Returns ``(positions, coords)`` where ``coords`` are the index values
        expressed in the caller's frame. On a cyclic axis one position may
        appear several times, once per period the range wraps over.
        """
        if self.kind == CATEGORICAL:
            raise UnsupportedAxisOperation(f"axis {self.name!r} is categorical")
        num = self.numeric
        if self.kind == ORDERED:
            i0 = int(np.searchsorted(num, low, side="left"))
            i1 = int(np.searchsorted(num, high, side="right"))
            return np.arange(i0, i1), num[i0:i1]
        p_low, p_high = self.period
        width = p_high - p_low
        k0 = math.floor((low - p_low) / width)
        k1 = math.floor((high - p_low) / width)
        positions, coords = [], []
        for k in range(k0, k1 + 1):
            shift = k * width
            i0 = int(np.searchsorted(num, max(low - shift, p_low), side="left"))
            i1 = int(np.searchsorted(num, min(high - shift, p_high), side="right"))
            positions.append(np.arange(i0, i1))
            coords.append(num[i0:i1] + shift)
        return np.concatenate(positions), np.concatenate(coords)


def to_numeric(axis, raw):
    if axis.kind == CATEGORICAL:
        raise UnsupportedAxisOperation(f"axis {axis.name!r} is categorical; its indices have no numeric value")
    return NumericIndex(coerce_numeric(raw), raw)


def remap_cyclic(axis, ext):
    """Canonical sub-ranges of the period congruent to ``ext``.

    >>> lon = AxisSpec("lon", CYCLIC, (0, 90, 180, 270), period=(0, 360))
    >>> remap_cyclic(lon, Extent(350, 370))
    [Extent(low=350.0, high=360.0), Extent(low=0.0, high=10.0)]
    """
    if axis.kind != CYCLIC:
        raise UnsupportedAxisOperation(f"axis {axis.name!r} is not cyclic")
    low, high = axis.period
    width = high - low
    if ext.high - ext.low >= width:
        return [Extent(low, high)]
    shift = math.floor((ext.low - low) / width) * width
    lo, hi = ext.low - shift, ext.high - shift
    if hi < high:
        return [Extent(lo, hi)]
    return [Extent(lo, high), Extent(low, hi - width)]


def positions_in(axis, ext):
    """Sorted, distinct positions of the indices inside the closed extent."""
    if axis.kind == CATEGORICAL:
        raise UnsupportedAxisOperation(f"axis {axis.name!r} is categorical; use select_categorical")
    if axis.kind == CYCLIC:
        found = set()
        for sub in remap_cyclic(axis, ext):
            found.update(axis.locate(sub.low, sub.high)[0].tolist())
        return sorted(found)
    return axis.locate(ext.low, ext.high)[0].tolist()


def find_indices(axis, ext):
    """Axis indices inside the closed extent, ascending, as NumericIndex values."""
    positions = positions_in(axis, ext)
    return [NumericIndex(float(axis.numeric[p]), axis.indices[p]) for p in positions]


def select_categorical(axis, requested):
    """Requested labels present on the axis, in request order, without repeats."""
    if axis.kind != CATEGORICAL:
        raise UnsupportedAxisOperation(f"axis {axis.name!r} is not categorical")
    out = {}
    for value in map(str, requested):
        if value in axis._positions:
            out.setdefault(value, None)
    return list(out)
