"""Portal engine: configuration, store wiring, persistent result cache,
and the evaluation / precompute pipelines shared by the CLI and the API.
"""
from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from . import stats
from .gazetteer import Gazetteer
from .geometry import MultiPolygon, load_geojson
from .grid import GeoGrid, Legend, read_ascii_grid
from .model import (
    Fetcher,
    LayerKey,
    LayerStore,
    Quantity,
    SyncReport,
    parse_catalogue,
    sync_datasets,
)
from .obs import (
    NotFoundError,
    ObservationStore,
    Period,
    Resolution,
    aggregate_temporal,
)


class ConfigError(ValueError):
    pass


@dataclass
class PortalConfig:
    data_dir: Path
    upstream_url: str | None = None
    thresholds: dict[str, float] = field(default_factory=dict)
    regions: dict[str, str] = field(default_factory=dict)  # id -> geojson path
    roi: str | None = None  # geojson path used when syncing model data
    catalogue_url: str | None = None
    observations_source: str | None = None  # url template with {year}
    gazetteer_path: str | None = None
    schedule: dict | None = None  # {"day_of_year": int, "interval_days": int}
    static_dir: str | None = None

    @classmethod
    def load(cls, path: str | Path | None = None) -> "PortalConfig":
        raw: dict = {}
        base = Path(".")
        if path is not None:
            base = Path(path).parent
            try:
                raw = json.loads(Path(path).read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError(f"cannot load config {path}: {exc}") from None
        data_dir = os.environ.get("GAPS_DATA_DIR") or raw.get("data_dir")
        if not data_dir:
            raise ConfigError("data_dir missing (config key or GAPS_DATA_DIR)")
        data_dir = Path(data_dir)
        if not data_dir.is_absolute():
            data_dir = base / data_dir
        upstream = os.environ.get("GAPS_UPSTREAM_URL") or raw.get("upstream_url")

        def _resolve(p):
            if p is None:
                return None
            p = Path(p)
            return str(p if p.is_absolute() else base / p)

        return cls(
            data_dir=data_dir,
            upstream_url=upstream,
            thresholds={k: float(v)
                        for k, v in raw.get("thresholds", {}).items()},
            regions={k: _resolve(v) for k, v in raw.get("regions", {}).items()},
            roi=_resolve(raw.get("roi")),
            catalogue_url=raw.get("catalogue_url"),
            observations_source=raw.get("observations_source"),
            gazetteer_path=_resolve(raw.get("gazetteer")),
            schedule=raw.get("schedule"),
            static_dir=_resolve(raw.get("static_dir")),
        )


class ResultCache:
    """Disk cache keyed by (endpoint tuple, store version).

    Payloads are canonical JSON text; a hit is returned byte-identical to
    what the compute produced.
    """

    def __init__(self, cache_dir: Path):
        self.dir = Path(cache_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.computations = 0
        self.hits = 0

    def _path(self, key: tuple) -> Path:
        digest = hashlib.sha256(
            json.dumps(key, sort_keys=True).encode()).hexdigest()
        return self.dir / f"{digest}.json"

    def get_or_compute(self, key: tuple, version: int, compute) -> str:
        path = self._path(key)
        if path.exists():
            entry = json.loads(path.read_text())
            if entry["version"] == version:
                self.hits += 1
                return entry["payload"]
        payload = compute()
        self.computations += 1
        entry = {
            "key": list(key),
            "version": version,
            "created": datetime.now(timezone.utc).isoformat(),
            "payload": payload,
        }
        tmp = path.with_suffix(".tmp")
        tmp.write_text(json.dumps(entry))
        os.replace(tmp, path)
        return payload


def _canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


class Portal:
    """All stores plus the derived-result pipelines, rooted at one data_dir."""

    def __init__(self, config: PortalConfig):
        self.config = config
        self.data_dir = Path(config.data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.obs = ObservationStore(self.data_dir / "obs.sqlite")
        self.layers = LayerStore(self.data_dir)
        self.cache = ResultCache(self.data_dir / "cache")
        self._regions: dict[str, MultiPolygon] = {}
        self._gazetteer: Gazetteer | None = None
        self._landcover: dict[str, tuple[GeoGrid, Legend]] = {}

    # -- store version ------------------------------------------------------

    @property
    def _version_path(self) -> Path:
        return self.data_dir / "version.txt"

    def version(self) -> int:
        try:
            return int(self._version_path.read_text())
        except (OSError, ValueError):
            return 0

    def bump_version(self) -> int:
        v = self.version() + 1
        tmp = self._version_path.with_suffix(".tmp")
        tmp.write_text(str(v))
        os.replace(tmp, self._version_path)
        return v

    # -- lazy-loaded auxiliary stores ----------------------------------------

    def region(self, region_id: str) -> MultiPolygon:
        if region_id not in self._regions:
            path = self.config.regions.get(region_id)
            if path is None:
                candidate = self.data_dir / "regions" / f"{region_id}.geojson"
                if not candidate.exists():
                    raise NotFoundError(f"unknown region {region_id!r}")
                path = candidate
            self._regions[region_id] = load_geojson(path)
        return self._regions[region_id]

    def region_ids(self) -> list[str]:
        ids = set(self.config.regions)
        region_dir = self.data_dir / "regions"
        if region_dir.is_dir():
            ids.update(p.stem for p in region_dir.glob("*.geojson"))
        return sorted(ids)

    def gazetteer(self) -> Gazetteer:
        if self._gazetteer is None:
            path = self.config.gazetteer_path or self.data_dir / "gazetteer.tsv"
            path = Path(path)
            data = path.read_bytes() if path.exists() else b""
            self._gazetteer = Gazetteer.load(data)
        return self._gazetteer

    def ingest_landcover(self, kind: str, grid_bytes: bytes,
                         legend_text: str) -> None:
        if kind not in ("landuse", "ecosystem"):
            raise ConfigError(f"landcover kind must be landuse|ecosystem, "
                              f"got {kind!r}")
        read_ascii_grid(grid_bytes)  # validate before persisting
        Legend.from_csv(legend_text)
        d = self.data_dir / "landcover"
        d.mkdir(parents=True, exist_ok=True)
        (d / f"{kind}.asc").write_bytes(grid_bytes)
        (d / f"{kind}_legend.csv").write_text(legend_text)
        self._landcover.pop(kind, None)
        self.bump_version()

    def landcover(self, kind: str) -> tuple[GeoGrid, Legend]:
        if kind not in self._landcover:
            d = self.data_dir / "landcover"
            grid_path = d / f"{kind}.asc"
            if not grid_path.exists():
                raise NotFoundError(f"no landcover data for kind {kind!r}")
            self._landcover[kind] = (
                read_ascii_grid(grid_path.read_bytes()),
                Legend.from_csv((d / f"{kind}_legend.csv").read_text()),
            )
        return self._landcover[kind]

    # -- ingestion / sync -----------------------------------------------------

    def ingest_stations(self, text: str | bytes):
        report = self.obs.ingest_stations_csv(text)
        self.bump_version()
        return report

    def ingest_observations(self, text: str | bytes):
        report = self.obs.ingest_observations_csv(text)
        self.bump_version()
        return report

    def sync_model(self, catalogue_doc: bytes, roi: MultiPolygon,
                   fetcher: Fetcher | None = None) -> SyncReport:
        entries = parse_catalogue(catalogue_doc)
        report = sync_datasets(entries, roi, fetcher or Fetcher(), self.layers)
        if report.stored:
            self.bump_version()
        return report

    # -- derived results -------------------------------------------------------

    def observed_values(self, stations, pollutant: str, period: Period,
                        resolution: Resolution,
                        timestamp: datetime) -> dict[str, float]:
        """Aggregated observed value per station at one bucket timestamp."""
        values: dict[str, float] = {}
        for station in stations:
            hourly = self.obs.hourly_series(station.id, pollutant, period)
            if not hourly.points:
                continue
            agg = aggregate_temporal(hourly, resolution)
            for ts, v in agg.points:
                if ts == timestamp:
                    values[station.id] = v
                    break
        return values

    def evaluate(self, pollutant: str, resolution: Resolution, date: str,
                 region_id: str) -> dict:
        """Pooled + per-station evaluation of one layer against observations."""
        period = Period.parse(date)
        timestamp = period.start
        region = self.region(region_id)
        layer = self.layers.get(LayerKey(pollutant, Quantity.concentration,
                                         resolution, timestamp))
        stations = self.obs.select_valid_stations(pollutant, period, region)
        observed = self.observed_values(stations, pollutant, period,
                                        resolution, timestamp)
        pairs, excluded = stats.pair_stations_with_layer(stations, observed,
                                                         layer)
        result = {
            "pollutant": pollutant,
            "quantity": Quantity.concentration.value,
            "resolution": resolution.value,
            "date": date,
            "region_id": region_id,
            "n_stations": len(stations),
            "excluded": [{"station_id": s, "reason": r} for s, r in excluded],
            "pairs": [{"station_id": p.station_id, "observed": p.observed,
                       "predicted": p.predicted} for p in pairs],
        }
        if pairs:
            result["pooled"] = stats.evaluate_pairs(pairs).to_dict()
            result["per_station"] = {
                p.station_id: stats.evaluate_pairs([p]).to_dict()
                for p in pairs
            }
        else:
            result["pooled"] = None
            result["per_station"] = {}
        return result

    def regional_series(self, pollutant: str, quantity: Quantity,
                        resolution: Resolution, region_id: str) -> list[dict]:
        series = stats.build_regional_series(
            self.layers, pollutant, quantity, resolution,
            self.region(region_id), region_id)
        return [s.to_dict() for s in series]

    # -- cached accessors -------------------------------------------------------

    def cached_regional_series(self, pollutant: str, quantity: Quantity,
                               resolution: Resolution, region_id: str) -> str:
        key = ("regional", pollutant, quantity.value, resolution.value,
               region_id)
        return self.cache.get_or_compute(
            key, self.version(),
            lambda: _canonical_json(self.regional_series(
                pollutant, quantity, resolution, region_id)))

    def cached_evaluation(self, pollutant: str, resolution: Resolution,
                          date: str, region_id: str) -> str:
        key = ("evaluation", pollutant, resolution.value, date, region_id)
        return self.cache.get_or_compute(
            key, self.version(),
            lambda: _canonical_json(self.evaluate(pollutant, resolution,
                                                  date, region_id)))

    def precompute(self, pollutants: list[str] | None = None,
                   resolutions: list[Resolution] | None = None,
                   regions: list[str] | None = None,
                   progress=None) -> dict:
        """Populate the cache for regional series and evaluations."""
        keys = self.layers.list_layers()
        combos = sorted({(k.pollutant, k.quantity, k.resolution) for k in keys},
                        key=lambda c: (c[0], c[1].value, c[2].value))
        if pollutants is not None:
            combos = [c for c in combos if c[0] in pollutants]
        if resolutions is not None:
            combos = [c for c in combos if c[2] in resolutions]
        region_ids = regions if regions is not None else self.region_ids()
        report = {"regional_series": 0, "evaluations": 0, "failures": []}
        tasks: list[tuple] = []
        for pollutant, quantity, resolution in combos:
            for region_id in region_ids:
                tasks.append(("regional", pollutant, quantity, resolution,
                              region_id))
                if (quantity is Quantity.concentration
                        and resolution is not Resolution.hourly):
                    stamps = self.layers.timestamps(pollutant, quantity,
                                                    resolution)
                    for ts in stamps:
                        tasks.append(("evaluation", pollutant, resolution,
                                      _date_text(ts, resolution), region_id))
        for i, task in enumerate(tasks):
            try:
                if task[0] == "regional":
                    _, pollutant, quantity, resolution, region_id = task
                    self.cached_regional_series(pollutant, quantity,
                                                resolution, region_id)
                    report["regional_series"] += 1
                else:
                    _, pollutant, resolution, date, region_id = task
                    self.cached_evaluation(pollutant, resolution, date,
                                           region_id)
                    report["evaluations"] += 1
            except Exception as exc:
                report["failures"].append(
                    {"task": [str(t) for t in task], "reason": str(exc)})
            if progress is not None:
                progress((i + 1) / len(tasks))
        return report


def _date_text(ts: datetime, resolution: Resolution) -> str:
    if resolution is Resolution.annual:
        return f"{ts.year:04d}"
    if resolution is Resolution.monthly:
        return f"{ts.year:04d}-{ts.month:02d}"
    return f"{ts.year:04d}-{ts.month:02d}-{ts.day:02d}"
