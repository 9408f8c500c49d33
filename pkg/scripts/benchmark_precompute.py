#!/usr/bin/env python3
"""Time cold-cache precompute per temporal resolution on the desk fixture.

Prints wall time for annual (1 timestep) and monthly (12 timesteps) work
and their ratio. Usage: python3 scripts/benchmark_precompute.py
"""
import tempfile
import time
from pathlib import Path

from gaps.demo import build_fixture
from gaps.geometry import load_geojson
from gaps.obs import Resolution
from gaps.portal import Portal, PortalConfig


def main() -> None:
    with tempfile.TemporaryDirectory() as tmp:
        paths = build_fixture(Path(tmp))
        portal = Portal(PortalConfig.load(paths["config"]))
        portal.ingest_stations(paths["stations_csv"].read_bytes())
        portal.ingest_observations(paths["obs_csv"].read_bytes())
        portal.sync_model(paths["catalogue"].read_bytes(),
                          load_geojson(paths["roi"]))
        timings = {}
        for resolution in (Resolution.annual, Resolution.monthly):
            t0 = time.perf_counter()
            portal.precompute(resolutions=[resolution])
            timings[resolution.value] = time.perf_counter() - t0
        for name, t in timings.items():
            print(f"{name:8s} {t * 1000:8.1f} ms")
        print(f"monthly/annual ratio: "
              f"{timings['monthly'] / timings['annual']:.2f}")


if __name__ == "__main__":
    main()
