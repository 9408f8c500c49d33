"""Toponym index: coordinate lookup and prefix autocomplete.

Names are matched after folding (Unicode casefold + diacritic strip) so
ASCII queries hit accented Portuguese toponyms.
"""
from __future__ import annotations

import bisect
import unicodedata
from dataclasses import dataclass

from .geometry import Point


@dataclass(frozen=True)
class Toponym:
    geoname_id: int
    name: str
    ascii_name: str
    location: Point
    country: str
    population: int


def fold(text: str) -> str:
    decomposed = unicodedata.normalize("NFKD", text.casefold())
    return "".join(c for c in decomposed if not unicodedata.combining(c))


class Gazetteer:
    """Immutable after load; rebuild by loading into a fresh instance."""

    def __init__(self, toponyms: dict[int, Toponym], skipped: int = 0):
        self._by_id = dict(toponyms)
        self.skipped_rows = skipped
        entries: set[tuple[str, int]] = set()
        for t in self._by_id.values():
            entries.add((fold(t.name), t.geoname_id))
            entries.add((fold(t.ascii_name), t.geoname_id))
        self._index = sorted(entries)
        self._keys = [k for k, _ in self._index]

    def __len__(self) -> int:
        return len(self._by_id)

    @classmethod
    def load(cls, tsv: bytes | str) -> "Gazetteer":
        """Parse headerless TSV rows:
        geonameid, name, asciiname, latitude, longitude, country_code, population.
        Malformed rows are skipped and tallied; duplicate ids, last wins.
        """
        if isinstance(tsv, bytes):
            tsv = tsv.decode("utf-8")
        toponyms: dict[int, Toponym] = {}
        skipped = 0
        for line in tsv.splitlines():
            if not line.strip():
                continue
            parts = line.split("\t")
            try:
                gid = int(parts[0])
                name, ascii_name = parts[1], parts[2]
                if not name or not ascii_name:
                    raise ValueError("empty name")
                lat, lon = float(parts[3]), float(parts[4])
                country = parts[5]
                population = int(parts[6])
                if population < 0:
                    raise ValueError("negative population")
                toponyms[gid] = Toponym(gid, name, ascii_name,
                                        Point(lon, lat), country, population)
            except (IndexError, ValueError):
                skipped += 1
        return cls(toponyms, skipped)

    def _matching_ids(self, prefix: str, exact: bool) -> list[int]:
        folded = fold(prefix)
        lo = bisect.bisect_left(self._keys, folded)
        ids: set[int] = set()
        for key, gid in self._index[lo:]:
            if exact:
                if key != folded:
                    break
            elif not key.startswith(folded):
                break
            ids.add(gid)
        return sorted(
            ids,
            key=lambda g: (-self._by_id[g].population, self._by_id[g].name),
        )

    def autocomplete(self, prefix: str, limit: int = 10) -> list[str]:
        """Names starting with prefix (folded), most populous first."""
        if limit < 1:
            raise ValueError(f"limit must be >= 1, got {limit}")
        return [self._by_id[g].name
                for g in self._matching_ids(prefix, exact=False)][:limit]

    def lookup(self, name: str) -> list[tuple[str, Point]]:
        """All exact folded-name matches, most populous first."""
        return [(self._by_id[g].name, self._by_id[g].location)
                for g in self._matching_ids(name, exact=True)]
