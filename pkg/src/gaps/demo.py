"""Deterministic desk-scale dataset generator.

Builds a small but complete input tree (station registry, one year of
hourly observations, a catalogue of monthly+annual model grids, region
polygons, gazetteer extract, landcover grid, portal config) so the full
pipeline can run end to end in seconds.
"""
from __future__ import annotations

import calendar
import json
import math
from datetime import datetime, timedelta, timezone
from pathlib import Path

import numpy as np

from .grid import GeoGrid, write_ascii_grid

NCOLS, NROWS = 40, 30
XLL, YLL, CELLSIZE = -10.0, 36.5, 0.15
NODATA = -9999.0

STATIONS = [
    # id, name, lat, lon, influence, environment
    ("S1", "Norte Rural", 40.20, -8.20, "background", "rural"),
    ("S2", "Sul Suburbana", 37.40, -8.05, "background", "suburban"),
    ("S3", "Trafego Urbano", 38.75, -9.15, "traffic", "urban"),
]

GAZETTEER_ROWS = [
    (2267057, "Lisboa", "Lisboa", 38.7167, -9.1333, "PT", 517802),
    (2735943, "Porto", "Porto", 41.1496, -8.6110, "PT", 249633),
    (2267094, "Leiria", "Leiria", 39.7436, -8.8071, "PT", 45112),
    (2735170, "São Brás de Alportel", "Sao Bras de Alportel",
     37.1500, -7.8833, "PT", 10032),
]


def grid_value(lon: float, lat: float, month: int) -> float:
    """Smooth synthetic concentration field (µg/m³)."""
    return 10.0 + month + 0.1 * (lat - YLL) + 0.05 * (lon - XLL)


def make_month_grid(month: int) -> GeoGrid:
    values = np.zeros((NROWS, NCOLS))
    for row in range(NROWS):
        lat = YLL + (NROWS - 1 - row + 0.5) * CELLSIZE
        for col in range(NCOLS):
            lon = XLL + (col + 0.5) * CELLSIZE
            values[row, col] = round(grid_value(lon, lat, month), 4)
    return GeoGrid(NCOLS, NROWS, XLL, YLL, CELLSIZE, NODATA, values)


def make_annual_grid(year: int) -> GeoGrid:
    monthly = [make_month_grid(m) for m in range(1, 13)]
    weights = [calendar.monthrange(year, m)[1] for m in range(1, 13)]
    stacked = np.average([g.values for g in monthly], axis=0, weights=weights)
    return GeoGrid(NCOLS, NROWS, XLL, YLL, CELLSIZE, NODATA,
                   np.round(stacked, 4))


def _rect_geojson(min_lon, min_lat, max_lon, max_lat) -> dict:
    return {
        "type": "Polygon",
        "coordinates": [[
            [min_lon, min_lat], [max_lon, min_lat], [max_lon, max_lat],
            [min_lon, max_lat], [min_lon, min_lat],
        ]],
    }


def observation_rows(year: int) -> list[str]:
    """Hourly NO2 rows; S2 misses every fifth hour (80% capture),
    S1/S3 are complete. Station bias keeps pooled metrics inside the
    acceptance thresholds.
    """
    bias = {"S1": 0.92, "S2": 1.12, "S3": 1.60}
    rows = []
    start = datetime(year, 1, 1, tzinfo=timezone.utc)
    hours = 8784 if calendar.isleap(year) else 8760
    for h in range(hours):
        ts = start + timedelta(hours=h)
        for sid, _, lat, lon, _, _ in STATIONS:
            if sid == "S2" and h % 5 == 0:
                continue
            base = grid_value(lon, lat, ts.month) * bias[sid]
            value = base + 0.5 * math.sin(2 * math.pi * (h % 24) / 24)
            rows.append(f"{sid},{ts.isoformat()},NO2,{value:.4f},ug/m3")
    return rows


def build_fixture(root: Path, year: int = 2017) -> dict[str, Path]:
    """Write the full desk-scale input tree under root; returns key paths."""
    root = Path(root)
    inputs = root / "inputs"
    inputs.mkdir(parents=True, exist_ok=True)

    stations_csv = inputs / "stations.csv"
    stations_csv.write_text(
        "id,name,lat,lon,influence,environment\n"
        + "\n".join(",".join(map(str, s)) for s in STATIONS) + "\n")

    obs_csv = inputs / f"obs_{year}.csv"
    obs_csv.write_text("station_id,timestamp,pollutant,value,unit\n"
                       + "\n".join(observation_rows(year)) + "\n")

    # ROI keeps a margin of masked cells around the data.
    roi_path = inputs / "roi.geojson"
    roi_path.write_text(json.dumps(
        _rect_geojson(-9.8, 36.7, -4.3, 40.85)))
    regions_dir = inputs / "regions"
    regions_dir.mkdir(exist_ok=True)
    regions = {
        "mainland": _rect_geojson(-9.8, 36.7, -4.3, 40.85),
        "norte": _rect_geojson(-9.5, 39.5, -4.5, 40.8),
        "sul": _rect_geojson(-9.5, 36.8, -4.5, 38.8),
    }
    region_paths = {}
    for name, geom in regions.items():
        p = regions_dir / f"{name}.geojson"
        p.write_text(json.dumps(geom))
        region_paths[name] = p

    grids_dir = inputs / "grids"
    grids_dir.mkdir(exist_ok=True)
    monthly_files = []
    for m in range(1, 13):
        fname = f"no2_{year}_{m:02d}.asc"
        (grids_dir / fname).write_bytes(write_ascii_grid(make_month_grid(m)))
        monthly_files.append(
            {"timestamp": f"{year}-{m:02d}-01T000000Z", "path": fname})
    annual_file = f"no2_{year}_annual.asc"
    (grids_dir / annual_file).write_bytes(
        write_ascii_grid(make_annual_grid(year)))
    (grids_dir / "manifest_monthly.json").write_text(
        json.dumps({"grid_files": monthly_files}))
    (grids_dir / "manifest_annual.json").write_text(json.dumps({
        "grid_files": [{"timestamp": f"{year}-01-01T000000Z",
                        "path": annual_file}]}))

    catalogue_path = inputs / "catalogue.json"
    catalogue_path.write_text(json.dumps({
        "version": 1,
        "entries": [
            {"id": f"no2-{year}-monthly", "pollutant": "NO2",
             "quantity": "concentration", "year": year,
             "resolution": "monthly",
             "url": (grids_dir / "manifest_monthly.json").as_uri()},
            {"id": f"no2-{year}-annual", "pollutant": "NO2",
             "quantity": "concentration", "year": year,
             "resolution": "annual",
             "url": (grids_dir / "manifest_annual.json").as_uri()},
        ],
    }))

    gazetteer_path = inputs / "gazetteer.tsv"
    gazetteer_path.write_text("\n".join(
        "\t".join(str(f) for f in row) for row in GAZETTEER_ROWS) + "\n")

    # Categorical landcover: code by coarse latitude band.
    lc_values = np.zeros((NROWS, NCOLS))
    for row in range(NROWS):
        lc_values[row, :] = 1 + (row * 3) // NROWS
    landcover_path = inputs / "landcover.asc"
    landcover_path.write_bytes(write_ascii_grid(
        GeoGrid(NCOLS, NROWS, XLL, YLL, CELLSIZE, NODATA, lc_values)))
    legend_path = inputs / "landcover_legend.csv"
    legend_path.write_text(
        "code,name\n1,Agricultural areas\n2,Coniferous forest\n3,Urban fabric\n")

    data_dir = root / "data"
    data_dir.mkdir(exist_ok=True)
    config_path = root / "config.json"
    config_path.write_text(json.dumps({
        "data_dir": str(data_dir),
        "thresholds": {"NO2": 30.0},
        "roi": str(roi_path),
        "regions": {name: str(p) for name, p in region_paths.items()},
        "catalogue_url": catalogue_path.as_uri(),
        "observations_source": inputs.as_uri() + "/obs_{year}.csv",
        "gazetteer": str(gazetteer_path),
        "schedule": {"day_of_year": 60, "interval_days": 365},
    }, indent=2))

    return {
        "root": root,
        "config": config_path,
        "data_dir": data_dir,
        "stations_csv": stations_csv,
        "obs_csv": obs_csv,
        "catalogue": catalogue_path,
        "roi": roi_path,
        "regions_dir": regions_dir,
        "gazetteer": gazetteer_path,
        "landcover": landcover_path,
        "legend": legend_path,
    }
