"""Operator command line: ingestion, sync, precompute, evaluation,
geocoding, rendering, and serving.

Exit codes: 0 success, 1 validation error, 2 runtime failure.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import grid as gridmod
from .geometry import GeometryError, load_geojson
from .model import CatalogueError, FetchError, LayerKey, Quantity
from .obs import IngestError, NotFoundError, Period, Resolution
from .portal import ConfigError, Portal, PortalConfig
from .stats import MetricsError

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2


class ValidationFailure(Exception):
    pass


def _atomic_write(path: Path, data: bytes) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def _portal(args) -> Portal:
    if getattr(args, "config", None):
        config = PortalConfig.load(args.config)
    else:
        data_dir = (getattr(args, "data_dir", None)
                    or os.environ.get("GAPS_DATA_DIR") or "data")
        config = PortalConfig(data_dir=Path(data_dir))
    return Portal(config)


def _read_file(path: str) -> bytes:
    p = Path(path)
    if not p.exists():
        raise ValidationFailure(f"input file not found: {path}")
    return p.read_bytes()


def _print_report(report) -> None:
    print(f"table={report.table} created={report.created} "
          f"updated={report.updated} rejected={len(report.rejected)}")
    for line_no, reason in report.rejected:
        print(f"  row {line_no}: {reason}", file=sys.stderr)


def cmd_ingest_stations(args) -> int:
    portal = _portal(args)
    _print_report(portal.ingest_stations(_read_file(args.csv)))
    return EXIT_OK


def cmd_ingest_obs(args) -> int:
    portal = _portal(args)
    _print_report(portal.ingest_observations(_read_file(args.csv)))
    return EXIT_OK


def cmd_ingest_landcover(args) -> int:
    portal = _portal(args)
    portal.ingest_landcover(args.kind, _read_file(args.asc),
                            _read_file(args.legend).decode("utf-8"))
    print(f"landcover[{args.kind}] ingested")
    return EXIT_OK


def cmd_sync_model(args) -> int:
    doc = _read_file(args.catalogue)
    roi_bytes = _read_file(args.roi)
    portal = _portal(args)
    try:
        roi = load_geojson(args.roi)
    except GeometryError as exc:
        raise ValidationFailure(f"invalid roi geojson: {exc}")
    report = portal.sync_model(doc, roi)
    print(f"fetched={report.fetched} stored={report.stored} "
          f"failures={len(report.failures)}")
    for entry_id, reason in report.failures:
        print(f"  {entry_id}: {reason}", file=sys.stderr)
    return EXIT_OK if not report.failures else EXIT_RUNTIME


def cmd_precompute(args) -> int:
    portal = _portal(args)
    resolutions = None
    if args.resolutions:
        resolutions = [Resolution(r) for r in args.resolutions.split(",")]
    report = portal.precompute(
        pollutants=args.pollutants.split(",") if args.pollutants else None,
        resolutions=resolutions,
        regions=args.regions.split(",") if args.regions else None,
        progress=lambda f: print(f"\rprecompute {f:.0%}", end="",
                                 file=sys.stderr),
    )
    print("", file=sys.stderr)
    print(json.dumps(report))
    if args.out:
        _atomic_write(Path(args.out), json.dumps(report).encode())
    return EXIT_OK if not report["failures"] else EXIT_RUNTIME


def cmd_evaluate(args) -> int:
    portal = _portal(args)
    result = portal.evaluate(args.pollutant, Resolution(args.resolution),
                             args.date, args.region)
    payload = json.dumps(result, indent=2, sort_keys=True)
    if args.out:
        _atomic_write(Path(args.out), payload.encode())
        pooled = result.get("pooled")
        verdict = ("accepted" if pooled and pooled["accepted"] else
                   "rejected" if pooled else "no pairs")
        print(f"evaluation written to {args.out} ({verdict})")
    else:
        print(payload)
    return EXIT_OK


def cmd_geocode(args) -> int:
    portal = _portal(args)
    matches = portal.gazetteer().lookup(args.name)
    if not matches:
        suggestions = portal.gazetteer().autocomplete(args.name, 5)
        print(f"no match for {args.name!r}"
              + (f"; did you mean: {', '.join(suggestions)}" if suggestions
                 else ""))
        return EXIT_RUNTIME
    for name, p in matches:
        print(f"{name}\t{p.lat}\t{p.lon}")
    return EXIT_OK


def cmd_render(args) -> int:
    portal = _portal(args)
    key = LayerKey(args.pollutant, Quantity(args.quantity),
                   Resolution(args.resolution), Period.parse(args.date).start)
    layer = portal.layers.get(key)
    rgba = gridmod.render_overlay(layer)
    out = Path(args.out)
    if out.suffix == ".png":
        _atomic_write(out, gridmod.to_png(rgba))
    else:
        _atomic_write(out, gridmod.to_ppm(rgba))
    print(f"rendered {out}")
    return EXIT_OK


def cmd_serve(args) -> int:
    from .service import serve

    config = PortalConfig.load(args.config)
    serve(Portal(config), host=args.host, port=args.port)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gaps",
        description="Geo air-pollution portal: ingest, sync, evaluate, serve.")
    parser.add_argument("--data-dir", help="data directory "
                        "(default: $GAPS_DATA_DIR or ./data)")
    parser.add_argument("--config", help="portal config JSON")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest-stations", help="ingest station registry CSV")
    p.add_argument("csv")
    p.set_defaults(fn=cmd_ingest_stations)

    p = sub.add_parser("ingest-obs", help="ingest observations CSV")
    p.add_argument("csv")
    p.set_defaults(fn=cmd_ingest_obs)

    p = sub.add_parser("ingest-landcover",
                       help="ingest a categorical landcover grid + legend")
    p.add_argument("asc")
    p.add_argument("legend")
    p.add_argument("--kind", choices=["landuse", "ecosystem"],
                   default="landuse")
    p.set_defaults(fn=cmd_ingest_landcover)

    p = sub.add_parser("sync-model",
                       help="fetch model rasters listed in a catalogue")
    p.add_argument("catalogue")
    p.add_argument("--roi", required=True, help="region-of-interest GeoJSON")
    p.set_defaults(fn=cmd_sync_model)

    p = sub.add_parser("precompute", help="populate the result cache")
    p.add_argument("--pollutants", help="comma-separated pollutant codes")
    p.add_argument("--resolutions", help="comma-separated resolutions")
    p.add_argument("--regions", help="comma-separated region ids")
    p.add_argument("--out", help="write the JSON report here")
    p.set_defaults(fn=cmd_precompute)

    p = sub.add_parser("evaluate", help="evaluate model against observations")
    p.add_argument("--pollutant", required=True)
    p.add_argument("--resolution", required=True,
                   choices=[r.value for r in Resolution])
    p.add_argument("--date", required=True)
    p.add_argument("--region", required=True)
    p.add_argument("--out", help="write the EvalResult JSON here")
    p.set_defaults(fn=cmd_evaluate)

    p = sub.add_parser("geocode", help="look up a toponym")
    p.add_argument("name")
    p.set_defaults(fn=cmd_geocode)

    p = sub.add_parser("render", help="render a stored layer to PPM/PNG")
    p.add_argument("--pollutant", required=True)
    p.add_argument("--quantity", default="concentration",
                   choices=[q.value for q in Quantity])
    p.add_argument("--resolution", required=True,
                   choices=[r.value for r in Resolution])
    p.add_argument("--date", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_render)

    p = sub.add_parser("serve", help="run the HTTP API")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(fn=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_VALIDATION if exc.code not in (0, None) else EXIT_OK
    if args.command == "serve" and not args.config:
        print("serve requires --config", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        return args.fn(args)
    except (ValidationFailure, IngestError, CatalogueError, ConfigError,
            GeometryError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (NotFoundError, FetchError, MetricsError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
