#!/usr/bin/env python3
"""Generate the deterministic desk-scale dataset (stations, a year of
hourly observations, monthly+annual model grids, regions, gazetteer,
landcover, portal config) under a target directory.

Usage: python3 scripts/make_fixture.py out_dir [--year 2017]
"""
import argparse
from pathlib import Path

from gaps.demo import build_fixture


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("out_dir", type=Path)
    parser.add_argument("--year", type=int, default=2017)
    args = parser.parse_args()
    paths = build_fixture(args.out_dir, year=args.year)
    print(f"fixture written under {paths['root']}")
    print(f"portal config: {paths['config']}")


if __name__ == "__main__":
    main()
