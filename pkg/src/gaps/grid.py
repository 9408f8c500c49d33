"""Regular lat/lon raster: ASCII grid I/O, sampling, masking, rendering.

Row 0 of the value array is the northernmost row. Cells are half-open
([min, max) on both axes) so every interior point maps to exactly one cell.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .geometry import (
    MultiPolygon,
    Point,
    Polygon,
    Rect,
    bounding_box,
    intersection_area_deg2,
)


class GridError(ValueError):
    """Malformed grid file or invalid grid operation."""


class UnknownClassError(KeyError):
    def __init__(self, code: int):
        super().__init__(code)
        self.code = code

    def __str__(self) -> str:
        return f"class code {self.code} not present in legend"


@dataclass(frozen=True)
class GeoGrid:
    ncols: int
    nrows: int
    xll: float
    yll: float
    cellsize: float
    nodata: float
    values: np.ndarray  # shape (nrows, ncols), row 0 = north

    def __post_init__(self):
        if self.ncols <= 0 or self.nrows <= 0:
            raise GridError("grid dimensions must be positive")
        if self.cellsize <= 0:
            raise GridError("cellsize must be positive")
        arr = np.asarray(self.values, dtype=float).reshape(self.nrows, self.ncols)
        if not np.all(np.isfinite(arr) | (arr == self.nodata)):
            raise GridError("grid contains non-finite values that are not nodata")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def extent(self) -> Rect:
        return Rect(
            self.xll,
            self.yll,
            self.xll + self.ncols * self.cellsize,
            self.yll + self.nrows * self.cellsize,
        )

    def mask(self) -> np.ndarray:
        return self.values == self.nodata

    def data_values(self) -> np.ndarray:
        return self.values[~self.mask()]

    def with_values(self, values: np.ndarray) -> "GeoGrid":
        return GeoGrid(self.ncols, self.nrows, self.xll, self.yll,
                       self.cellsize, self.nodata, values)

    def same_georeference(self, other: "GeoGrid") -> bool:
        return (self.ncols == other.ncols and self.nrows == other.nrows
                and self.xll == other.xll and self.yll == other.yll
                and self.cellsize == other.cellsize)


@dataclass(frozen=True)
class Legend:
    names: dict[int, str]

    def __post_init__(self):
        for code, name in self.names.items():
            if not name:
                raise GridError(f"empty legend name for code {code}")

    @classmethod
    def from_csv(cls, text: str | bytes) -> "Legend":
        if isinstance(text, bytes):
            text = text.decode("utf-8")
        reader = csv.DictReader(io.StringIO(text))
        names: dict[int, str] = {}
        for row in reader:
            code = int(row["code"])
            if code in names:
                raise GridError(f"duplicate legend code {code}")
            names[code] = row["name"]
        return cls(names)


@dataclass(frozen=True)
class ColorMap:
    stops: tuple[tuple[float, tuple[int, int, int]], ...]

    def __post_init__(self):
        fracs = [f for f, _ in self.stops]
        if fracs[0] != 0.0 or fracs[-1] != 1.0:
            raise GridError("colormap must start at 0 and end at 1")
        if any(a >= b for a, b in zip(fracs, fracs[1:])):
            raise GridError("colormap fractions must be strictly increasing")

    def color_at(self, t: float) -> tuple[int, int, int]:
        t = min(max(t, 0.0), 1.0)
        for (f0, c0), (f1, c1) in zip(self.stops, self.stops[1:]):
            if t <= f1:
                u = (t - f0) / (f1 - f0)
                return tuple(
                    int(math.floor(c0[i] + u * (c1[i] - c0[i]) + 0.5))
                    for i in range(3)
                )
        return self.stops[-1][1]


BLUE_RED = ColorMap(((0.0, (0, 0, 255)), (1.0, (255, 0, 0))))

_HEADER_KEYS = ("ncols", "nrows", "xllcorner", "yllcorner", "cellsize",
                "nodata_value")


def read_ascii_grid(data: bytes | str) -> GeoGrid:
    """Parse an ESRI ASCII grid; header keys are case-insensitive."""
    if isinstance(data, bytes):
        data = data.decode("ascii")
    lines = data.splitlines()
    header: dict[str, float] = {}
    body_start = 0
    for i, line in enumerate(lines):
        tokens = line.split()
        if not tokens:
            continue
        key = tokens[0].lower()
        if key in _HEADER_KEYS:
            if len(tokens) != 2:
                raise GridError(f"line {i + 1}: malformed header line {line!r}")
            try:
                header[key] = float(tokens[1])
            except ValueError:
                raise GridError(
                    f"line {i + 1}: non-numeric header value {tokens[1]!r}"
                ) from None
            body_start = i + 1
        else:
            break
    for key in _HEADER_KEYS:
        if key not in header:
            raise GridError(f"missing header key: {key}")
    ncols = int(header["ncols"])
    nrows = int(header["nrows"])
    values: list[float] = []
    for i in range(body_start, len(lines)):
        for token in lines[i].split():
            try:
                values.append(float(token))
            except ValueError:
                raise GridError(
                    f"line {i + 1}: non-numeric value token {token!r}"
                ) from None
    if len(values) != ncols * nrows:
        raise GridError(
            f"expected {ncols * nrows} values, found {len(values)}"
        )
    return GeoGrid(ncols, nrows, header["xllcorner"], header["yllcorner"],
                   header["cellsize"], header["nodata_value"],
                   np.array(values).reshape(nrows, ncols))


def _num(x: float) -> str:
    # Shortest decimal that round-trips; integers without trailing ".0".
    if float(x) == int(x) and abs(x) < 1e15:
        return str(int(x))
    return repr(float(x))


def write_ascii_grid(g: GeoGrid) -> bytes:
    """Canonical serialisation: fixed header order, round-trip-exact values."""
    out = [
        f"ncols {g.ncols}",
        f"nrows {g.nrows}",
        f"xllcorner {_num(g.xll)}",
        f"yllcorner {_num(g.yll)}",
        f"cellsize {_num(g.cellsize)}",
        f"NODATA_value {_num(g.nodata)}",
    ]
    for row in g.values:
        out.append(" ".join(_num(v) for v in row))
    return ("\n".join(out) + "\n").encode("ascii")


def locate_pixel(g: GeoGrid, p: Point) -> tuple[int, int] | None:
    """(row, col) of the cell containing p, or None when outside the extent."""
    col = math.floor((p.lon - g.xll) / g.cellsize)
    row = g.nrows - 1 - math.floor((p.lat - g.yll) / g.cellsize)
    if 0 <= col < g.ncols and 0 <= row < g.nrows:
        return row, col
    return None


def sample_value(g: GeoGrid, p: Point) -> float | None:
    """Cell value at p; nodata propagates as the sentinel; None if outside."""
    loc = locate_pixel(g, p)
    if loc is None:
        return None
    return float(g.values[loc])


def pixel_footprint(g: GeoGrid, row: int, col: int) -> Rect:
    if not (0 <= row < g.nrows and 0 <= col < g.ncols):
        raise IndexError(f"pixel ({row}, {col}) outside {g.nrows}x{g.ncols} grid")
    min_lon = g.xll + col * g.cellsize
    min_lat = g.yll + (g.nrows - 1 - row) * g.cellsize
    return Rect(min_lon, min_lat, min_lon + g.cellsize, min_lat + g.cellsize)


def clip_mask(g: GeoGrid, region: MultiPolygon | Polygon,
              min_coverage: float = 0.0) -> GeoGrid:
    """Mask cells whose footprint coverage by region is <= min_coverage."""
    if not (0.0 <= min_coverage <= 1.0):
        raise GridError(f"min_coverage out of [0, 1]: {min_coverage}")
    region = MultiPolygon.wrap(region)
    bbox = bounding_box(region)
    values = np.array(g.values)
    cell_area = g.cellsize * g.cellsize
    for row in range(g.nrows):
        for col in range(g.ncols):
            fp = pixel_footprint(g, row, col)
            if fp.disjoint(bbox):
                values[row, col] = g.nodata
                continue
            coverage = intersection_area_deg2(region, fp) / cell_area
            if coverage <= min_coverage:
                values[row, col] = g.nodata
    return g.with_values(values)


def classify_point(g: GeoGrid, legend: Legend, p: Point) -> str | None:
    """Legend class name at p; None when nodata or out of bounds."""
    v = sample_value(g, p)
    if v is None or v == g.nodata:
        return None
    code = int(round(v))
    if code not in legend.names:
        raise UnknownClassError(code)
    return legend.names[code]


def compute_exceedance(g: GeoGrid, threshold: float) -> GeoGrid:
    """Per-cell value minus threshold; positive means exceedance."""
    if not math.isfinite(threshold):
        raise GridError("threshold must be finite")
    values = np.where(g.mask(), g.nodata, g.values - threshold)
    return g.with_values(values)


def render_overlay(g: GeoGrid, cmap: ColorMap = BLUE_RED) -> np.ndarray:
    """RGBA uint8 image (nrows, ncols, 4); nodata cells fully transparent."""
    data = g.data_values()
    if data.size == 0:
        raise GridError("cannot render an all-nodata grid (empty value range)")
    lo, hi = float(data.min()), float(data.max())
    span = hi - lo
    img = np.zeros((g.nrows, g.ncols, 4), dtype=np.uint8)
    for row in range(g.nrows):
        for col in range(g.ncols):
            v = g.values[row, col]
            if v == g.nodata:
                continue
            t = 0.0 if span == 0.0 else (v - lo) / span
            img[row, col, :3] = cmap.color_at(t)
            img[row, col, 3] = 255
    return img


def to_ppm(rgba: np.ndarray) -> bytes:
    """Binary PPM (P6); alpha composited over white."""
    h, w = rgba.shape[:2]
    alpha = rgba[:, :, 3:4].astype(np.float64) / 255.0
    rgb = rgba[:, :, :3].astype(np.float64) * alpha + 255.0 * (1.0 - alpha)
    body = np.floor(rgb + 0.5).astype(np.uint8).tobytes()
    return f"P6\n{w} {h}\n255\n".encode("ascii") + body


def to_png(rgba: np.ndarray) -> bytes:
    from PIL import Image

    buf = io.BytesIO()
    Image.fromarray(rgba, mode="RGBA").save(buf, format="PNG")
    return buf.getvalue()
