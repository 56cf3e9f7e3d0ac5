"""Meteorological-style requests against a synthetic global cube.

The cube has a parameter axis, daily time steps, pressure levels and a
half-degree lat/lon grid with cyclic longitude. Each request reports how
many bytes it reads compared with the bounding box that encloses it and
with the whole cube, in the spirit of a data-reduction table.

No values are loaded here (the cube would be large); byte counts come from
the index tree and the schema alone.

Run:  python demos/weather_requests.py
"""
import numpy as np

from polyslice import (
    CATEGORICAL,
    CYCLIC,
    ORDERED,
    AxisSpec,
    Box,
    DatacubeSchema,
    Polygon,
    Select,
    Span,
    extract_request,
    make_disk,
    make_path,
    make_timeseries,
    make_vertical_profile,
)

days = [f"2024-03-{d:02d}T00:00:00Z" for d in range(1, 31)]
levels = (50, 100, 150, 200, 250, 300, 350, 400, 450, 500, 550, 600, 650, 700, 750, 800, 850, 900, 925, 950, 975, 1000)
schema = DatacubeSchema((
    AxisSpec("param", CATEGORICAL, ("2t", "10u", "10v", "tp")),
    AxisSpec("time", ORDERED, days),
    AxisSpec("level", ORDERED, levels),
    AxisSpec("lat", ORDERED, tuple(np.arange(-90, 90.5, 0.5).tolist())),
    AxisSpec("lon", CYCLIC, tuple(np.arange(0, 360, 0.5).tolist()), period=(0, 360)),
))

one_day = Span("time", days[4], days[4])
surface = Span("level", 1000, 1000)
t2m = Select("param", ("2t",))

# a rough, concave outline around a country-sized region (lat, lon)
outline = Polygon(("lat", "lon"), (
    (42.5, -4.5), (43.5, 3.0), (47.0, 8.0), (51.0, 2.5), (48.5, -4.8), (46.0, -1.0),
))

# a flight: a small lat/lon/level box swept along waypoints that also advance in time
t0 = schema.axes[1].numeric[0]
day = 86400.0
flight_base = Box(("lat", "lon", "level", "time"), (-0.5, -0.5, -25, -0.5 * day), (0.5, 0.5, 25, 0.5 * day))
flight = make_path(flight_base, [
    (51.5, -0.5, 1000, t0),
    (52.5, 5.0, 300, t0 + 2 * day),
    (50.0, 14.0, 250, t0 + 5 * day),
    (45.5, 12.0, 900, t0 + 7 * day),
])

requests = {
    "box over western Europe": [t2m, one_day, surface, Box(("lat", "lon"), (35, -10), (60, 20))],
    "timeseries at London, 14 days": [t2m, *make_timeseries({"lat": 51.5, "lon": -0.5, "level": 1000}, "time", days[0], days[13])],
    "vertical profile at Rome": [t2m, one_day, *make_vertical_profile({"lat": 42.0, "lon": 12.5}, "level", 50, 1000)],
    "country outline": [t2m, one_day, surface, outline],
    "disk of 5 degrees at the dateline": [t2m, one_day, surface, make_disk(("lat", "lon"), (0, 180), 5.0, 64)],
    "flight path through 4 axes": [t2m, flight],
}

print(f"{'request':36s} {'points':>8s} {'polytope B':>11s} {'bbox B':>11s} {'x bbox':>8s} {'x whole':>10s}")
for name, req in requests.items():
    _, st = extract_request(schema, req)
    print(
        f"{name:36s} {st.points_found:8d} {st.bytes_polytope:11d} {st.bytes_bbox:11d} "
        f"{st.reduction_factor_bbox:8.2f} {st.reduction_factor_whole:10.0f}"
    )
