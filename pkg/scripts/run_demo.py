#!/usr/bin/env python3
"""Build the desk-scale fixture, ingest everything, precompute the cache,
and serve the HTTP API on localhost.

Usage: python3 scripts/run_demo.py [--root demo_data] [--port 8000]
"""
import argparse
from pathlib import Path

from gaps.demo import build_fixture
from gaps.geometry import load_geojson
from gaps.portal import Portal, PortalConfig
from gaps.service import serve


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--root", type=Path, default=Path("demo_data"))
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8000)
    parser.add_argument("--static-dir", type=Path,
                        help="serve a built dashboard from this directory")
    args = parser.parse_args()

    paths = build_fixture(args.root)
    config = PortalConfig.load(paths["config"])
    if args.static_dir:
        config.static_dir = str(args.static_dir)
    portal = Portal(config)
    print(portal.ingest_stations(paths["stations_csv"].read_bytes()))
    print(portal.ingest_observations(paths["obs_csv"].read_bytes()))
    print(portal.sync_model(paths["catalogue"].read_bytes(),
                            load_geojson(paths["roi"])))
    portal.ingest_landcover("landuse", paths["landcover"].read_bytes(),
                            paths["legend"].read_text())
    report = portal.precompute()
    print(f"precomputed: {report}")
    print(f"serving on http://{args.host}:{args.port}")
    serve(portal, host=args.host, port=args.port)


if __name__ == "__main__":
    main()
