"""Station registry and observation store.

Backed by SQLite: a `stations` table plus one row per hourly measurement.
All timestamps are UTC. Data capture follows the one-sample-per-hour model,
so the expected count for a period is simply its hour count.
"""
from __future__ import annotations

import calendar
import csv
import io
import re
import sqlite3
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

from .geometry import MultiPolygon, Point, contains_point


class NotFoundError(KeyError):
    pass


class IngestError(ValueError):
    pass


class Influence(str, Enum):
    background = "background"
    traffic = "traffic"
    industrial = "industrial"


class Environment(str, Enum):
    urban = "urban"
    suburban = "suburban"
    rural = "rural"


class Resolution(str, Enum):
    hourly = "hourly"
    daily = "daily"
    monthly = "monthly"
    annual = "annual"


@dataclass(frozen=True)
class Station:
    id: str
    name: str
    location: Point
    influence: Influence
    environment: Environment


@dataclass(frozen=True)
class ParserConfig:
    """Four-step tabular parser configuration.

    Step 1: coordinate columns/format/CRS; step 2: primary key;
    step 3: foreign links; step 4: remaining column types.
    """

    primary_key: str
    lat_column: str | None = None
    lon_column: str | None = None
    coord_format: str = "decimal"  # decimal | dms
    crs: str = "WGS84"
    foreign_links: tuple[tuple[str, str, str], ...] = ()
    column_types: dict[str, str] = field(default_factory=dict)  # Integer|Float|String|DateTime

    def __post_init__(self):
        if self.crs != "WGS84":
            raise IngestError(f"unsupported CRS {self.crs!r}; only WGS84")
        if self.coord_format not in ("decimal", "dms"):
            raise IngestError(f"unknown coordinate format {self.coord_format!r}")
        coord_cols = {c for c in (self.lat_column, self.lon_column) if c}
        linked = {c for c, _, _ in self.foreign_links}
        typed = set(self.column_types)
        if typed & (coord_cols | linked):
            raise IngestError(
                "typed columns must be disjoint from coordinate and linked columns"
            )


@dataclass(frozen=True)
class ObservationSeries:
    station_id: str
    pollutant: str
    resolution: Resolution
    points: tuple[tuple[datetime, float], ...]


@dataclass(frozen=True)
class CaptureReport:
    station_id: str
    pollutant: str
    period: tuple[datetime, datetime]
    expected: int
    observed: int

    @property
    def fraction(self) -> float:
        return self.observed / self.expected if self.expected else 0.0


@dataclass(frozen=True)
class IngestReport:
    table: str
    created_table: bool
    created: int
    updated: int
    rejected: tuple[tuple[int, str], ...]  # (1-based data row number, reason)


@dataclass(frozen=True)
class Period:
    """Calendar-aligned UTC period: a year, a month, or a day."""

    start: datetime
    end: datetime  # exclusive

    @classmethod
    def parse(cls, text: str) -> "Period":
        parts = text.split("-")
        try:
            if len(parts) == 1:
                y = int(parts[0])
                return cls(_utc(y, 1, 1), _utc(y + 1, 1, 1))
            if len(parts) == 2:
                y, m = int(parts[0]), int(parts[1])
                ny, nm = (y + 1, 1) if m == 12 else (y, m + 1)
                return cls(_utc(y, m, 1), _utc(ny, nm, 1))
            if len(parts) == 3:
                y, m, d = (int(p) for p in parts)
                start = _utc(y, m, d)
                return cls(start, start + timedelta(days=1))
        except ValueError:
            pass
        raise IngestError(f"unparseable period {text!r} (want YYYY[-MM[-DD]])")

    @property
    def hours(self) -> int:
        return int((self.end - self.start).total_seconds() // 3600)


def _utc(y: int, m: int, d: int) -> datetime:
    return datetime(y, m, d, tzinfo=timezone.utc)


_DMS_RE = re.compile(
    r"""^\s*(-?\d+(?:\.\d+)?)\s*[°d:\s]\s*
        (?:(\d+(?:\.\d+)?)\s*['m:\s]\s*)?
        (?:(\d+(?:\.\d+)?)\s*["s]?\s*)?
        ([NSEWnsew])?\s*$""",
    re.VERBOSE,
)


def parse_coordinate(text: str, fmt: str = "decimal") -> float:
    """Signed decimal degrees from decimal or DMS text; S/W negate."""
    if fmt == "decimal":
        try:
            return float(text)
        except ValueError:
            raise IngestError(f"unparseable decimal coordinate {text!r}") from None
    if fmt != "dms":
        raise IngestError(f"unknown coordinate format {fmt!r}")
    m = _DMS_RE.match(text)
    if not m:
        raise IngestError(f"unparseable DMS coordinate {text!r}")
    deg = float(m.group(1))
    minutes = float(m.group(2) or 0.0)
    seconds = float(m.group(3) or 0.0)
    value = abs(deg) + minutes / 60.0 + seconds / 3600.0
    if deg < 0:
        value = -value
    hemi = m.group(4)
    if hemi and hemi.upper() in "SW":
        value = -value
    return value


def _parse_timestamp(text: str) -> datetime:
    ts = datetime.fromisoformat(text.replace("Z", "+00:00"))
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def _coerce(value: str, ctype: str):
    if ctype == "Integer":
        return int(value)
    if ctype == "Float":
        return float(value)
    if ctype == "DateTime":
        return _parse_timestamp(value).isoformat()
    return value


_SCHEMA = """
CREATE TABLE IF NOT EXISTS observations (
    station_id TEXT NOT NULL,
    pollutant TEXT NOT NULL,
    timestamp TEXT NOT NULL,
    value REAL NOT NULL,
    PRIMARY KEY (station_id, pollutant, timestamp)
);
CREATE INDEX IF NOT EXISTS idx_obs_lookup
    ON observations (station_id, pollutant, timestamp);
"""

STATION_PARSER_CONFIG = ParserConfig(
    primary_key="id",
    lat_column="lat",
    lon_column="lon",
    coord_format="decimal",
    column_types={"name": "String", "influence": "String",
                  "environment": "String"},
)


class ObservationStore:
    """Single-writer, multi-reader store over SQLite (WAL-free, file-based)."""

    def __init__(self, path: str | Path = ":memory:"):
        self._conn = sqlite3.connect(str(path), check_same_thread=False)
        self._conn.executescript(_SCHEMA)
        self._conn.commit()

    # -- generic configurable ingestion ------------------------------------

    def ingest_table(self, table: str, header: Sequence[str],
                     rows: Iterable[Sequence[str]],
                     config: ParserConfig) -> IngestReport:
        """Create-or-update ingest of tabular rows keyed by the primary key."""
        cols = list(header)
        if config.primary_key not in cols:
            raise IngestError(f"primary key column {config.primary_key!r} "
                              f"missing from header {cols}")
        for c in (config.lat_column, config.lon_column):
            if c and c not in cols:
                raise IngestError(f"coordinate column {c!r} missing from header")
        has_coords = bool(config.lat_column and config.lon_column)
        store_cols = [config.primary_key]
        store_cols += [c for c in cols
                       if c not in (config.primary_key, config.lat_column,
                                    config.lon_column)]
        if has_coords:
            store_cols += ["lat", "lon"]
        created_table = not self._table_exists(table)
        col_defs = ", ".join(
            f'"{c}" {"REAL" if c in ("lat", "lon") else "TEXT"}'
            if c != config.primary_key else f'"{c}" TEXT PRIMARY KEY'
            for c in store_cols
        )
        cur = self._conn.cursor()
        cur.execute(f'CREATE TABLE IF NOT EXISTS "{table}" ({col_defs})')

        created = updated = 0
        rejected: list[tuple[int, str]] = []
        seen_keys: set[str] = set()
        idx = {c: i for i, c in enumerate(cols)}
        try:
            for line_no, raw in enumerate(rows, start=1):
                row = {c: raw[idx[c]] for c in cols}
                key = row[config.primary_key]
                if key in seen_keys:
                    rejected.append(
                        (line_no, f"duplicate primary key {key!r} in input"))
                    continue
                record: dict[str, object] = {config.primary_key: key}
                try:
                    if has_coords:
                        record["lat"] = parse_coordinate(
                            row[config.lat_column], config.coord_format)
                        record["lon"] = parse_coordinate(
                            row[config.lon_column], config.coord_format)
                        Point(record["lon"], record["lat"])  # range check
                    for col, ctype in config.column_types.items():
                        record[col] = _coerce(row[col], ctype)
                except (ValueError, IngestError) as exc:
                    rejected.append((line_no, str(exc)))
                    continue
                link_ok = True
                for col, target_table, target_col in config.foreign_links:
                    record[col] = row[col]
                    hit = cur.execute(
                        f'SELECT 1 FROM "{target_table}" WHERE "{target_col}" = ?',
                        (row[col],),
                    ).fetchone()
                    if hit is None:
                        rejected.append(
                            (line_no,
                             f"foreign link {col!r}={row[col]!r} has no match "
                             f"in {target_table}.{target_col}"))
                        link_ok = False
                        break
                if not link_ok:
                    continue
                for col in store_cols:
                    record.setdefault(col, row.get(col, ""))
                seen_keys.add(key)
                exists = cur.execute(
                    f'SELECT 1 FROM "{table}" WHERE '
                    f'"{config.primary_key}" = ?', (key,)).fetchone()
                placeholders = ", ".join("?" for _ in store_cols)
                quoted = ", ".join(f'"{c}"' for c in store_cols)
                cur.execute(
                    f'INSERT OR REPLACE INTO "{table}" ({quoted}) '
                    f'VALUES ({placeholders})',
                    [record[c] for c in store_cols],
                )
                if exists:
                    updated += 1
                else:
                    created += 1
        except Exception:
            self._conn.rollback()
            raise
        self._conn.commit()
        return IngestReport(table, created_table, created, updated,
                            tuple(rejected))

    def _table_exists(self, table: str) -> bool:
        row = self._conn.execute(
            "SELECT 1 FROM sqlite_master WHERE type='table' AND name=?",
            (table,)).fetchone()
        return row is not None

    # -- stations ------------------------------------------------------------

    def ingest_stations_csv(self, text: str | bytes) -> IngestReport:
        """Registry CSV: id,name,lat,lon,influence,environment."""
        if isinstance(text, bytes):
            text = text.decode("utf-8")
        reader = csv.reader(io.StringIO(text))
        header = next(reader)
        return self.ingest_table("stations", header, list(reader),
                                 STATION_PARSER_CONFIG)

    def get_station(self, station_id: str) -> Station:
        row = self._conn.execute(
            'SELECT id, name, lat, lon, influence, environment '
            'FROM stations WHERE id = ?', (station_id,)).fetchone()
        if row is None:
            raise NotFoundError(f"unknown station {station_id!r}")
        return Station(row[0], row[1], Point(row[3], row[2]),
                       Influence(row[4]), Environment(row[5]))

    def list_stations(self) -> list[Station]:
        rows = self._conn.execute(
            'SELECT id FROM stations ORDER BY id').fetchall()
        return [self.get_station(r[0]) for r in rows]

    # -- observations ----------------------------------------------------------

    def ingest_observations_csv(self, text: str | bytes) -> IngestReport:
        """Observations CSV: station_id,timestamp,pollutant,value,unit."""
        if isinstance(text, bytes):
            text = text.decode("utf-8")
        reader = csv.reader(io.StringIO(text))
        header = next(reader)
        expected = ["station_id", "timestamp", "pollutant", "value", "unit"]
        if header != expected:
            raise IngestError(f"observations header must be {expected}, "
                              f"got {header}")
        created = updated = 0
        rejected: list[tuple[int, str]] = []
        cur = self._conn.cursor()
        try:
            for line_no, row in enumerate(reader, start=1):
                try:
                    station_id, ts_text, pollutant, value_text, unit = row
                    if unit != "ug/m3":
                        raise IngestError(f"unsupported unit {unit!r}")
                    ts = _parse_timestamp(ts_text)
                    value = float(value_text)
                except (ValueError, IngestError) as exc:
                    rejected.append((line_no, str(exc)))
                    continue
                exists = cur.execute(
                    'SELECT 1 FROM observations WHERE station_id=? AND '
                    'pollutant=? AND timestamp=?',
                    (station_id, pollutant, ts.isoformat())).fetchone()
                cur.execute(
                    'INSERT OR REPLACE INTO observations VALUES (?,?,?,?)',
                    (station_id, pollutant, ts.isoformat(), value))
                if exists:
                    updated += 1
                else:
                    created += 1
        except Exception:
            self._conn.rollback()
            raise
        self._conn.commit()
        return IngestReport("observations", False, created, updated,
                            tuple(rejected))

    def hourly_series(self, station_id: str, pollutant: str,
                      period: Period) -> ObservationSeries:
        rows = self._conn.execute(
            'SELECT timestamp, value FROM observations WHERE station_id=? '
            'AND pollutant=? AND timestamp >= ? AND timestamp < ? '
            'ORDER BY timestamp',
            (station_id, pollutant, period.start.isoformat(),
             period.end.isoformat())).fetchall()
        points = tuple((_parse_timestamp(t), v) for t, v in rows)
        return ObservationSeries(station_id, pollutant, Resolution.hourly,
                                 points)

    def list_pollutants(self, station_id: str) -> list[str]:
        self.get_station(station_id)  # raises NotFoundError for unknown ids
        rows = self._conn.execute(
            'SELECT DISTINCT pollutant FROM observations WHERE station_id=? '
            'ORDER BY pollutant', (station_id,)).fetchall()
        return [r[0] for r in rows]

    def data_capture(self, station_id: str, pollutant: str,
                     period: Period) -> CaptureReport:
        self.get_station(station_id)
        expected = period.hours
        observed = self._conn.execute(
            'SELECT COUNT(*) FROM observations WHERE station_id=? AND '
            'pollutant=? AND timestamp >= ? AND timestamp < ?',
            (station_id, pollutant, period.start.isoformat(),
             period.end.isoformat())).fetchone()[0]
        return CaptureReport(station_id, pollutant,
                             (period.start, period.end), expected, observed)

    def select_valid_stations(self, pollutant: str, period: Period,
                              region: MultiPolygon,
                              resolution: Resolution = Resolution.hourly,
                              ) -> list[Station]:
        """Background stations inside region with capture strictly above 75%.

        The capture rule counts hourly samples against the period's hour
        count regardless of the target resolution; the resolution argument
        documents the caller's aggregation target only.
        """
        kept = []
        for station in self.list_stations():
            if station.influence is not Influence.background:
                continue
            if not contains_point(region, station.location):
                continue
            report = self.data_capture(station.id, pollutant, period)
            if report.fraction > 0.75:
                kept.append(station)
        return kept


def _bucket_start(ts: datetime, target: Resolution) -> datetime:
    if target is Resolution.daily:
        return ts.replace(hour=0, minute=0, second=0, microsecond=0)
    if target is Resolution.monthly:
        return ts.replace(day=1, hour=0, minute=0, second=0, microsecond=0)
    if target is Resolution.annual:
        return ts.replace(month=1, day=1, hour=0, minute=0, second=0,
                          microsecond=0)
    raise IngestError(f"target resolution must be coarser than hourly: {target}")


def aggregate_temporal(series: ObservationSeries,
                       target: Resolution) -> ObservationSeries:
    """Mean of available hourly values per UTC calendar bucket."""
    if series.resolution is not Resolution.hourly:
        raise IngestError("aggregation source must be the hourly base series")
    buckets: dict[datetime, list[float]] = {}
    for ts, value in series.points:
        buckets.setdefault(_bucket_start(ts, target), []).append(value)
    points = tuple(
        (ts, sum(vals) / len(vals))
        for ts, vals in sorted(buckets.items())
    )
    return ObservationSeries(series.station_id, series.pollutant, target,
                             points)


def expected_hours(period: Period) -> int:
    """Leap-aware hour count of a calendar period (Jan = 744, year = 8760/8784)."""
    return period.hours
