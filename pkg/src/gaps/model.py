"""Catalogue-driven acquisition and storage of model-prediction rasters.

Catalogue entries point (via file:// or http(s)://) at a manifest JSON
listing one ASCII grid file per timestep. Synced grids are clipped to the
region of interest and stored one file per timestep under
<data_dir>/model/<pollutant>/<quantity>/<resolution>/<timestamp>.asc.
"""
from __future__ import annotations

import json
import os
import threading
import urllib.parse
import urllib.request
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from enum import Enum
from pathlib import Path
from typing import Callable, Iterable, Sequence

from .geometry import MultiPolygon, Point
from .grid import GeoGrid, clip_mask, read_ascii_grid, sample_value, write_ascii_grid
from .obs import NotFoundError, Resolution


class CatalogueError(ValueError):
    pass


class FetchError(IOError):
    pass


class Quantity(str, Enum):
    concentration = "concentration"
    wet_deposition = "wet_deposition"
    dry_deposition = "dry_deposition"
    total_deposition = "total_deposition"


@dataclass(frozen=True)
class CatalogueEntry:
    id: str
    pollutant: str
    quantity: Quantity
    year: int
    resolution: Resolution
    url: str


@dataclass(frozen=True)
class LayerKey:
    pollutant: str
    quantity: Quantity
    resolution: Resolution
    timestamp: datetime  # period start, UTC


@dataclass(frozen=True)
class SyncReport:
    fetched: int
    stored: int
    failures: tuple[tuple[str, str], ...]  # (entry id, reason)


_TS_FORMAT = "%Y-%m-%dT%H%M%SZ"


def format_timestamp(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).strftime(_TS_FORMAT)


def parse_timestamp(text: str) -> datetime:
    try:
        return datetime.strptime(text, _TS_FORMAT).replace(tzinfo=timezone.utc)
    except ValueError:
        ts = datetime.fromisoformat(text.replace("Z", "+00:00"))
        if ts.tzinfo is None:
            ts = ts.replace(tzinfo=timezone.utc)
        return ts.astimezone(timezone.utc)


def parse_catalogue(doc: bytes | str) -> list[CatalogueEntry]:
    """Validate the catalogue JSON and return its entries in document order."""
    try:
        obj = json.loads(doc)
    except json.JSONDecodeError as exc:
        raise CatalogueError(f"malformed catalogue JSON: {exc}") from None
    if not isinstance(obj, dict) or obj.get("version") != 1:
        raise CatalogueError("catalogue must be a JSON object with version 1")
    entries: list[CatalogueEntry] = []
    seen: set[str] = set()
    for i, raw in enumerate(obj.get("entries", [])):
        where = f"entries[{i}]"
        try:
            entry = CatalogueEntry(
                id=str(raw["id"]),
                pollutant=str(raw["pollutant"]),
                quantity=Quantity(raw["quantity"]),
                year=int(raw["year"]),
                resolution=Resolution(raw["resolution"]),
                url=str(raw["url"]),
            )
        except KeyError as exc:
            raise CatalogueError(f"{where}: missing field {exc}") from None
        except ValueError as exc:
            raise CatalogueError(f"{where}: {exc}") from None
        if entry.year < 1900:
            raise CatalogueError(f"{where}: year {entry.year} < 1900")
        scheme = urllib.parse.urlparse(entry.url).scheme
        if scheme not in ("file", "http", "https"):
            raise CatalogueError(f"{where}: unsupported url scheme {scheme!r}")
        if entry.id in seen:
            raise CatalogueError(f"{where}: duplicate id {entry.id!r}")
        seen.add(entry.id)
        entries.append(entry)
    return entries


class Fetcher:
    """Resolves file:// and http(s):// URLs to bytes."""

    def __init__(self, timeout: float = 10.0):
        self.timeout = timeout

    def fetch(self, url: str) -> bytes:
        scheme = urllib.parse.urlparse(url).scheme
        if scheme not in ("file", "http", "https"):
            raise FetchError(f"unsupported url scheme in {url!r}")
        try:
            with urllib.request.urlopen(url, timeout=self.timeout) as resp:
                return resp.read()
        except OSError as exc:
            raise FetchError(f"fetch failed for {url!r}: {exc}") from None


class LayerStore:
    """On-disk model layer store; replacement is atomic per layer key."""

    def __init__(self, data_dir: str | Path):
        self.root = Path(data_dir) / "model"

    def _path(self, key: LayerKey) -> Path:
        return (self.root / key.pollutant / key.quantity.value /
                key.resolution.value / f"{format_timestamp(key.timestamp)}.asc")

    def put(self, key: LayerKey, grid: GeoGrid) -> None:
        path = self._path(key)
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(".asc.tmp")
        tmp.write_bytes(write_ascii_grid(grid))
        os.replace(tmp, path)  # readers see old or new, never a mixture

    def get(self, key: LayerKey) -> GeoGrid:
        path = self._path(key)
        if not path.exists():
            raise NotFoundError(f"no stored layer for {key}")
        return read_ascii_grid(path.read_bytes())

    def timestamps(self, pollutant: str, quantity: Quantity,
                   resolution: Resolution) -> list[datetime]:
        d = self.root / pollutant / quantity.value / resolution.value
        if not d.is_dir():
            return []
        return sorted(parse_timestamp(p.stem) for p in d.glob("*.asc"))

    def list_layers(self) -> list[LayerKey]:
        keys = []
        for path in sorted(self.root.glob("*/*/*/*.asc")):
            resolution = Resolution(path.parent.name)
            quantity = Quantity(path.parent.parent.name)
            pollutant = path.parent.parent.parent.name
            keys.append(LayerKey(pollutant, quantity, resolution,
                                 parse_timestamp(path.stem)))
        return keys

    def extract_point_series(self, pollutant: str, quantity: Quantity,
                             resolution: Resolution, years: Iterable[int],
                             p: Point) -> list[tuple[datetime, float]]:
        """sample_value per stored timestep; nodata timesteps omitted."""
        year_set = set(years)
        stamps = [t for t in self.timestamps(pollutant, quantity, resolution)
                  if t.year in year_set]
        if not stamps:
            raise NotFoundError(
                f"no layers for {pollutant}/{quantity.value}/{resolution.value} "
                f"in years {sorted(year_set)}")
        series = []
        for ts in stamps:
            grid = self.get(LayerKey(pollutant, quantity, resolution, ts))
            v = sample_value(grid, p)
            if v is None or v == grid.nodata:
                continue
            series.append((ts, v))
        return series


def _resolve_relative(base_url: str, rel: str) -> str:
    return urllib.parse.urljoin(base_url, rel)


def sync_datasets(entries: Sequence[CatalogueEntry], roi: MultiPolygon,
                  fetcher: Fetcher, store: LayerStore,
                  min_coverage: float = 0.0) -> SyncReport:
    """Fetch, clip to roi, and store each entry; failures isolated per entry."""
    fetched = stored = 0
    failures: list[tuple[str, str]] = []
    for entry in entries:
        fetched += 1
        try:
            manifest = json.loads(fetcher.fetch(entry.url))
            grid_files = manifest["grid_files"]
            layers: list[tuple[LayerKey, GeoGrid]] = []
            for item in grid_files:
                ts = parse_timestamp(item["timestamp"])
                raw = fetcher.fetch(_resolve_relative(entry.url, item["path"]))
                grid = clip_mask(read_ascii_grid(raw), roi, min_coverage)
                layers.append(
                    (LayerKey(entry.pollutant, entry.quantity,
                              entry.resolution, ts), grid))
            for key, grid in layers:  # write only after the whole entry parsed
                store.put(key, grid)
            stored += 1
        except Exception as exc:
            failures.append((entry.id, str(exc)))
    return SyncReport(fetched, stored, tuple(failures))


class Clock:
    """Wall clock; swap for SimulatedClock in tests."""

    def now(self) -> datetime:
        return datetime.now(timezone.utc)

    def sleep(self, seconds: float) -> None:
        import time

        time.sleep(seconds)


class SimulatedClock(Clock):
    def __init__(self, start: datetime):
        self._now = start
        self._waiters: list[RefreshHandle] = []

    def now(self) -> datetime:
        return self._now

    def attach(self, handle: "RefreshHandle") -> None:
        self._waiters.append(handle)

    def advance(self, delta: timedelta) -> None:
        """Move time forward, firing every due run in order."""
        target = self._now + delta
        while True:
            due = [(h.next_run, h) for h in self._waiters
                   if h.active and h.next_run is not None
                   and h.next_run <= target]
            if not due:
                break
            due.sort(key=lambda x: x[0])
            when, handle = due[0]
            self._now = when
            handle.fire()
        self._now = target


class RefreshHandle:
    """Recurring refresh task; runs never overlap (late runs queue up)."""

    def __init__(self, task: Callable[[], None], first_run: datetime,
                 interval: timedelta, clock: Clock):
        self.task = task
        self.interval = interval
        self.clock = clock
        self.next_run: datetime | None = first_run
        self.active = True
        self.runs = 0
        self._lock = threading.Lock()
        self._thread: threading.Thread | None = None

    def fire(self) -> None:
        if not self.active:
            return
        with self._lock:  # serialize: a trigger during a run waits its turn
            self.task()
            self.runs += 1
            if self.next_run is not None:
                self.next_run = self.next_run + self.interval

    def cancel(self) -> None:
        self.active = False
        self.next_run = None

    def start_background(self) -> None:
        def loop():
            while self.active and self.next_run is not None:
                delay = (self.next_run - self.clock.now()).total_seconds()
                if delay > 0:
                    self.clock.sleep(min(delay, 1.0))
                    continue
                self.fire()

        self._thread = threading.Thread(target=loop, daemon=True)
        self._thread.start()


def schedule_refresh(task: Callable[[], None], day_of_year: int,
                     interval_days: int, clock: Clock | None = None,
                     background: bool = False) -> RefreshHandle:
    """Recurring refresh starting at the next given day-of-year."""
    if not (1 <= day_of_year <= 366):
        raise ValueError(f"day_of_year out of range: {day_of_year}")
    if interval_days < 1:
        raise ValueError(f"interval must be >= 1 day, got {interval_days}")
    clock = clock or Clock()
    now = clock.now()
    first = datetime(now.year, 1, 1, tzinfo=timezone.utc) + timedelta(
        days=day_of_year - 1)
    while first <= now:
        first += timedelta(days=interval_days)
    handle = RefreshHandle(task, first, timedelta(days=interval_days), clock)
    if isinstance(clock, SimulatedClock):
        clock.attach(handle)
    elif background:
        handle.start_background()
    return handle
