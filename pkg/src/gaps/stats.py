"""Model evaluation metrics and area-weighted regional aggregation.

FAC2 / FB / NMSE follow the Chang & Hanna definitions:
  FAC2 = fraction of pairs with 0.5 <= Cp/Co <= 2.0 (inclusive)
  FB   = (mean(Co) - mean(Cp)) / (0.5 * (mean(Co) + mean(Cp)))
  NMSE = mean((Co - Cp)^2) / (mean(Co) * mean(Cp))
A result is accepted when at least two of the three threshold criteria
(FAC2 >= 0.5, |FB| <= 0.3, NMSE <= 1.5) hold.
"""
from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime
from typing import Iterable, Mapping, Sequence

from .geometry import MultiPolygon, bounding_box, intersection_area
from .grid import GeoGrid, locate_pixel, pixel_footprint
from .obs import NotFoundError, Station

FAC2_THRESHOLD = 0.5
FB_THRESHOLD = 0.3
NMSE_THRESHOLD = 1.5


class MetricsError(ValueError):
    pass


@dataclass(frozen=True)
class PairedSample:
    station_id: str
    observed: float  # Co, > 0
    predicted: float  # Cp, >= 0


@dataclass(frozen=True)
class EvalResult:
    fac2: float
    fb: float
    nmse: float
    n: int
    pass_fac2: bool
    pass_fb: bool
    pass_nmse: bool
    accepted: bool

    def to_dict(self) -> dict:
        return {
            "fac2": self.fac2, "fb": self.fb, "nmse": self.nmse, "n": self.n,
            "pass_fac2": self.pass_fac2, "pass_fb": self.pass_fb,
            "pass_nmse": self.pass_nmse, "accepted": self.accepted,
        }


@dataclass(frozen=True)
class WeightMap:
    grid: GeoGrid  # georeference carrier
    weights: dict[tuple[int, int], float]  # (row, col) -> km^2, > 0


@dataclass(frozen=True)
class RegionalStats:
    region_id: str
    timestamp: datetime
    min: float
    max: float
    weighted_mean: float

    def to_dict(self) -> dict:
        return {
            "region_id": self.region_id,
            "timestamp": self.timestamp.isoformat(),
            "min": self.min, "max": self.max,
            "weighted_mean": self.weighted_mean,
        }


def pair_stations_with_layer(
    stations: Sequence[Station],
    observed: Mapping[str, float],
    layer: GeoGrid,
) -> tuple[list[PairedSample], list[tuple[str, str]]]:
    """Pair each station's observed value with its grid-cell prediction.

    Stations outside the grid, over nodata cells, without an observed value,
    or with observed <= 0 are excluded; reasons are returned alongside.
    """
    pairs: list[PairedSample] = []
    excluded: list[tuple[str, str]] = []
    for station in stations:
        loc = locate_pixel(layer, station.location)
        if loc is None:
            excluded.append((station.id, "outside grid extent"))
            continue
        predicted = float(layer.values[loc])
        if predicted == layer.nodata:
            excluded.append((station.id, "grid cell is nodata"))
            continue
        if station.id not in observed:
            excluded.append((station.id, "no observed value"))
            continue
        co = observed[station.id]
        if co <= 0:
            excluded.append((station.id, f"observed value {co} <= 0"))
            continue
        pairs.append(PairedSample(station.id, co, predicted))
    return pairs, excluded


def compute_metrics(pairs: Sequence[PairedSample]) -> tuple[float, float, float]:
    """(fac2, fb, nmse) over the paired samples."""
    n = len(pairs)
    if n == 0:
        raise MetricsError("cannot compute metrics over zero pairs")
    mean_obs = sum(p.observed for p in pairs) / n
    mean_pred = sum(p.predicted for p in pairs) / n
    if mean_obs * mean_pred == 0.0:
        raise MetricsError("undefined metrics: product of means is zero")
    fac2 = sum(
        1 for p in pairs if 0.5 <= p.predicted / p.observed <= 2.0) / n
    fb = (mean_obs - mean_pred) / (0.5 * (mean_obs + mean_pred))
    nmse = (sum((p.observed - p.predicted) ** 2 for p in pairs) / n
            / (mean_obs * mean_pred))
    return fac2, fb, nmse


def acceptance(fac2: float, fb: float, nmse: float, n: int) -> EvalResult:
    """Threshold flags plus the two-out-of-three acceptance verdict."""
    pass_fac2 = fac2 >= FAC2_THRESHOLD
    pass_fb = abs(fb) <= FB_THRESHOLD
    pass_nmse = nmse <= NMSE_THRESHOLD
    accepted = sum((pass_fac2, pass_fb, pass_nmse)) >= 2
    return EvalResult(fac2, fb, nmse, n, pass_fac2, pass_fb, pass_nmse,
                      accepted)


def evaluate_pairs(pairs: Sequence[PairedSample]) -> EvalResult:
    fac2, fb, nmse = compute_metrics(pairs)
    return acceptance(fac2, fb, nmse, len(pairs))


def region_weights(g: GeoGrid, region: MultiPolygon) -> WeightMap:
    """Pixel-footprint intersection areas (km^2) for cells touching region."""
    bbox = bounding_box(region)
    weights: dict[tuple[int, int], float] = {}
    for row in range(g.nrows):
        for col in range(g.ncols):
            fp = pixel_footprint(g, row, col)
            if fp.disjoint(bbox):
                continue
            w = intersection_area(region, fp)
            if w > 0.0:
                weights[(row, col)] = w
    return WeightMap(g, weights)


def weighted_stats(g: GeoGrid, wmap: WeightMap, region_id: str,
                   timestamp: datetime) -> RegionalStats:
    """min / max / area-weighted mean over the non-nodata weighted cells."""
    if not wmap.grid.same_georeference(g):
        raise MetricsError("weight map georeference does not match grid")
    total_w = 0.0
    total_wv = 0.0
    vmin = vmax = None
    for (row, col), w in wmap.weights.items():
        v = float(g.values[row, col])
        if v == g.nodata:
            continue
        total_w += w
        total_wv += w * v
        vmin = v if vmin is None else min(vmin, v)
        vmax = v if vmax is None else max(vmax, v)
    if total_w == 0.0 or vmin is None:
        raise MetricsError("all weighted cells are nodata (empty region)")
    return RegionalStats(region_id, timestamp, vmin, vmax,
                         total_wv / total_w)


def build_regional_series(store, pollutant: str, quantity, resolution,
                          region: MultiPolygon,
                          region_id: str) -> list[RegionalStats]:
    """One RegionalStats per stored timestep; weight map computed once."""
    from .model import LayerKey  # local import to avoid a module cycle

    stamps = store.timestamps(pollutant, quantity, resolution)
    if not stamps:
        raise NotFoundError(
            f"no layers stored for {pollutant}/{quantity}/{resolution}")
    wmap: WeightMap | None = None
    series: list[RegionalStats] = []
    for ts in stamps:
        grid = store.get(LayerKey(pollutant, quantity, resolution, ts))
        if wmap is None or not wmap.grid.same_georeference(grid):
            wmap = region_weights(grid, region)
        series.append(weighted_stats(grid, wmap, region_id, ts))
    return series


def regional_series_to_csv(series: Iterable[RegionalStats]) -> str:
    lines = ["region_id,timestamp,min,max,weighted_mean"]
    for s in series:
        lines.append(f"{s.region_id},{s.timestamp.isoformat()},"
                     f"{s.min},{s.max},{s.weighted_mean}")
    return "\n".join(lines) + "\n"
