"""Planar polygon primitives: point-in-polygon, rectangle clipping, areas.

Coordinates are WGS84 decimal degrees throughout. Areas are computed on the
equirectangular plane and scaled to km^2 with a cos(mid-latitude) factor,
which is adequate at the country scale these regions have.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

KM_PER_DEGREE = 111.32


class GeometryError(ValueError):
    """Invalid geometric input (open ring, too few vertices, bad range)."""


@dataclass(frozen=True)
class Point:
    lon: float
    lat: float

    def __post_init__(self) -> None:
        if not (-180.0 <= self.lon <= 180.0):
            raise GeometryError(f"longitude out of range: {self.lon}")
        if not (-90.0 <= self.lat <= 90.0):
            raise GeometryError(f"latitude out of range: {self.lat}")


@dataclass(frozen=True)
class Ring:
    """Closed vertex loop: first vertex equals last, at least 4 vertices."""

    vertices: tuple[Point, ...]

    def __init__(self, vertices: Iterable[Point]) -> None:
        object.__setattr__(self, "vertices", tuple(vertices))
        self.validate()

    def validate(self) -> None:
        v = self.vertices
        if len(v) < 4:
            raise GeometryError(f"ring needs >= 4 vertices, got {len(v)}")
        if v[0] != v[-1]:
            raise GeometryError("ring is not closed (first != last vertex)")
        for a, b in zip(v, v[1:]):
            if a == b:
                raise GeometryError(f"consecutive duplicate vertex {a}")

    @classmethod
    def from_coords(cls, coords: Iterable[tuple[float, float]]) -> "Ring":
        return cls(Point(lon, lat) for lon, lat in coords)


@dataclass(frozen=True)
class Polygon:
    exterior: Ring
    holes: tuple[Ring, ...] = ()

    def __init__(self, exterior: Ring, holes: Iterable[Ring] = ()) -> None:
        object.__setattr__(self, "exterior", exterior)
        object.__setattr__(self, "holes", tuple(holes))
        if ring_area(self.exterior) == 0.0:
            raise GeometryError("polygon exterior has zero area")
        ext_bbox = _ring_bbox(self.exterior)
        for hole in self.holes:
            if not _bbox_within(_ring_bbox(hole), ext_bbox):
                raise GeometryError("hole outside exterior bounding box")


@dataclass(frozen=True)
class MultiPolygon:
    parts: tuple[Polygon, ...]

    def __init__(self, parts: Iterable[Polygon]) -> None:
        object.__setattr__(self, "parts", tuple(parts))
        if not self.parts:
            raise GeometryError("multipolygon needs >= 1 part")

    @classmethod
    def wrap(cls, geom: "Polygon | MultiPolygon") -> "MultiPolygon":
        if isinstance(geom, MultiPolygon):
            return geom
        return cls([geom])


@dataclass(frozen=True)
class Rect:
    min_lon: float
    min_lat: float
    max_lon: float
    max_lat: float

    def __post_init__(self) -> None:
        if not (self.min_lon < self.max_lon and self.min_lat < self.max_lat):
            raise GeometryError(f"degenerate rect {self}")

    @property
    def mid_lat(self) -> float:
        return 0.5 * (self.min_lat + self.max_lat)

    def area_deg2(self) -> float:
        return (self.max_lon - self.min_lon) * (self.max_lat - self.min_lat)

    def area_km2(self) -> float:
        return self.area_deg2() * deg2_to_km2_factor(self.mid_lat)

    def contains(self, p: Point) -> bool:
        return (self.min_lon <= p.lon <= self.max_lon
                and self.min_lat <= p.lat <= self.max_lat)

    def disjoint(self, other: "Rect") -> bool:
        return (self.max_lon < other.min_lon or other.max_lon < self.min_lon
                or self.max_lat < other.min_lat or other.max_lat < self.min_lat)


def deg2_to_km2_factor(mid_lat: float) -> float:
    return KM_PER_DEGREE * KM_PER_DEGREE * math.cos(math.radians(mid_lat))


def _ring_bbox(ring: Ring) -> Rect:
    lons = [p.lon for p in ring.vertices]
    lats = [p.lat for p in ring.vertices]
    # Pad degenerate (axis-aligned flat) boxes so Rect stays valid.
    eps = 1e-12
    return Rect(min(lons), min(lats), max(lons) + eps, max(lats) + eps)


def bounding_box(poly: MultiPolygon) -> Rect:
    boxes = [_ring_bbox(part.exterior) for part in poly.parts]
    return Rect(
        min(b.min_lon for b in boxes),
        min(b.min_lat for b in boxes),
        max(b.max_lon for b in boxes),
        max(b.max_lat for b in boxes),
    )


def _bbox_within(inner: Rect, outer: Rect) -> bool:
    return (outer.min_lon <= inner.min_lon and inner.max_lon <= outer.max_lon
            and outer.min_lat <= inner.min_lat and inner.max_lat <= outer.max_lat)


def ring_area(ring: Ring) -> float:
    """Signed shoelace area in degrees^2, counter-clockwise positive."""
    v = ring.vertices
    acc = 0.0
    for a, b in zip(v, v[1:]):
        acc += a.lon * b.lat - b.lon * a.lat
    return 0.5 * acc


def _on_segment(p: Point, a: Point, b: Point, eps: float = 1e-12) -> bool:
    cross = (b.lon - a.lon) * (p.lat - a.lat) - (b.lat - a.lat) * (p.lon - a.lon)
    if abs(cross) > eps * max(1.0, abs(b.lon - a.lon), abs(b.lat - a.lat)):
        return False
    return (min(a.lon, b.lon) - eps <= p.lon <= max(a.lon, b.lon) + eps
            and min(a.lat, b.lat) - eps <= p.lat <= max(a.lat, b.lat) + eps)


def _ring_crossings(ring: Ring, p: Point) -> int:
    """Count crossings of the eastward ray from p (half-open edge rule)."""
    count = 0
    v = ring.vertices
    for a, b in zip(v, v[1:]):
        if (a.lat > p.lat) != (b.lat > p.lat):
            x = a.lon + (p.lat - a.lat) * (b.lon - a.lon) / (b.lat - a.lat)
            if x > p.lon:
                count += 1
    return count


def contains_point(poly: MultiPolygon | Polygon, p: Point) -> bool:
    """Even-odd point-in-polygon test; boundary points count as inside."""
    poly = MultiPolygon.wrap(poly)
    crossings = 0
    for part in poly.parts:
        for ring in (part.exterior, *part.holes):
            v = ring.vertices
            for a, b in zip(v, v[1:]):
                if _on_segment(p, a, b):
                    return True
            crossings += _ring_crossings(ring, p)
    return crossings % 2 == 1


_EDGES = ("left", "right", "bottom", "top")


def _inside_edge(p: Point, edge: str, r: Rect) -> bool:
    if edge == "left":
        return p.lon >= r.min_lon
    if edge == "right":
        return p.lon <= r.max_lon
    if edge == "bottom":
        return p.lat >= r.min_lat
    return p.lat <= r.max_lat


def _edge_intersect(a: Point, b: Point, edge: str, r: Rect) -> Point:
    if edge in ("left", "right"):
        x = r.min_lon if edge == "left" else r.max_lon
        t = (x - a.lon) / (b.lon - a.lon)
        return Point(x, a.lat + t * (b.lat - a.lat))
    y = r.min_lat if edge == "bottom" else r.max_lat
    t = (y - a.lat) / (b.lat - a.lat)
    return Point(a.lon + t * (b.lon - a.lon), y)


def clip_ring_to_rect(ring: Ring, r: Rect) -> Ring | None:
    """Sutherland-Hodgman clip of one ring against the four rect edges.

    Returns None when the intersection is empty or degenerate
    (fewer than 3 distinct vertices).
    """
    pts: list[Point] = list(ring.vertices[:-1])
    for edge in _EDGES:
        if not pts:
            return None
        out: list[Point] = []
        prev = pts[-1]
        prev_in = _inside_edge(prev, edge, r)
        for cur in pts:
            cur_in = _inside_edge(cur, edge, r)
            if cur_in:
                if not prev_in:
                    out.append(_edge_intersect(prev, cur, edge, r))
                out.append(cur)
            elif prev_in:
                out.append(_edge_intersect(prev, cur, edge, r))
            prev, prev_in = cur, cur_in
        pts = out
    # Drop consecutive duplicates introduced by clipping at vertices.
    dedup: list[Point] = []
    for p in pts:
        if not dedup or p != dedup[-1]:
            dedup.append(p)
    if len(dedup) > 1 and dedup[0] == dedup[-1]:
        dedup.pop()
    if len(dedup) < 3:
        return None
    return Ring(dedup + [dedup[0]])


def clip_to_rect(poly: Polygon, r: Rect) -> list[Ring]:
    """Rings of poly's exterior intersected with r; empty when disjoint."""
    clipped = clip_ring_to_rect(poly.exterior, r)
    return [clipped] if clipped is not None else []


def intersection_area_deg2(poly: MultiPolygon | Polygon, r: Rect) -> float:
    """Unsigned area of poly ∩ r in degrees^2 (holes subtracted)."""
    poly = MultiPolygon.wrap(poly)
    total = 0.0
    for part in poly.parts:
        if _ring_bbox(part.exterior).disjoint(r):
            continue
        ext = clip_ring_to_rect(part.exterior, r)
        if ext is None:
            continue
        part_area = abs(ring_area(ext))
        for hole in part.holes:
            clipped = clip_ring_to_rect(hole, r)
            if clipped is not None:
                part_area -= abs(ring_area(clipped))
        total += max(part_area, 0.0)
    return total


def intersection_area(poly: MultiPolygon | Polygon, r: Rect) -> float:
    """Area of poly ∩ r in km^2 (cos mid-latitude scaling of r)."""
    return intersection_area_deg2(poly, r) * deg2_to_km2_factor(r.mid_lat)


def _normalize_ring_coords(coords: Sequence[Sequence[float]]) -> Ring:
    pts = [Point(float(c[0]), float(c[1])) for c in coords]
    if pts and pts[0] != pts[-1]:
        pts.append(pts[0])
    dedup: list[Point] = []
    for p in pts[:-1]:
        if not dedup or p != dedup[-1]:
            dedup.append(p)
    if len(dedup) < 3:
        raise GeometryError("GeoJSON ring has fewer than 3 distinct vertices")
    return Ring(dedup + [dedup[0]])


def _polygon_from_geojson(coords: Sequence) -> Polygon:
    if not coords:
        raise GeometryError("empty GeoJSON polygon")
    exterior = _normalize_ring_coords(coords[0])
    holes = [_normalize_ring_coords(c) for c in coords[1:]]
    return Polygon(exterior, holes)


def from_geojson(obj) -> MultiPolygon:
    """Parse a GeoJSON geometry/Feature/FeatureCollection into a MultiPolygon.

    Ring orientation is not enforced on input (RFC 7946 files vary); areas
    are taken unsigned downstream so orientation does not matter.
    """
    if isinstance(obj, (bytes, str)):
        obj = json.loads(obj)
    t = obj.get("type")
    if t == "FeatureCollection":
        parts: list[Polygon] = []
        for feature in obj["features"]:
            parts.extend(from_geojson(feature).parts)
        return MultiPolygon(parts)
    if t == "Feature":
        return from_geojson(obj["geometry"])
    if t == "Polygon":
        return MultiPolygon([_polygon_from_geojson(obj["coordinates"])])
    if t == "MultiPolygon":
        return MultiPolygon(
            [_polygon_from_geojson(c) for c in obj["coordinates"]]
        )
    raise GeometryError(f"unsupported GeoJSON geometry type: {t!r}")


def load_geojson(path) -> MultiPolygon:
    with open(path, "rb") as fh:
        return from_geojson(fh.read())
