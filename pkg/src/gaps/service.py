"""HTTP API over the portal stores, with background jobs, a persistent
result cache, and an upstream proxy fallback for layer imagery.
"""
from __future__ import annotations

import json
import urllib.error
import urllib.parse
import urllib.request
from datetime import datetime

from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse, PlainTextResponse

from . import grid as gridmod
from .geometry import GeometryError, Point, contains_point
from .grid import GridError, UnknownClassError
from .jobs import JobManager
from .model import Fetcher, LayerKey, Quantity
from .obs import IngestError, NotFoundError, Period, Resolution
from .portal import ConfigError, Portal


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


def _bad_request(message: str) -> ApiError:
    return ApiError(400, "bad_request", message)


def _parse_enum(enum_cls, text: str, name: str):
    try:
        return enum_cls(text)
    except ValueError:
        valid = ", ".join(e.value for e in enum_cls)
        raise _bad_request(f"invalid {name} {text!r} (expected one of {valid})")


def _parse_point(lat: str | None, lon: str | None) -> Point:
    if lat is None or lon is None:
        raise _bad_request("lat and lon query parameters are required")
    try:
        return Point(float(lon), float(lat))
    except (ValueError, GeometryError) as exc:
        raise _bad_request(f"invalid coordinates: {exc}")


def _require(value: str | None, name: str) -> str:
    if value is None:
        raise _bad_request(f"missing query parameter {name!r}")
    return value


def _layer_timestamp(date: str) -> datetime:
    try:
        return Period.parse(date).start
    except IngestError as exc:
        raise _bad_request(str(exc))


def create_app(portal: Portal, job_manager: JobManager | None = None) -> FastAPI:
    app = FastAPI(title="gaps", docs_url=None, redoc_url=None)
    jobs = job_manager or JobManager()
    app.state.portal = portal
    app.state.jobs = jobs

    @app.exception_handler(ApiError)
    async def handle_api_error(request: Request, exc: ApiError):
        return JSONResponse(
            status_code=exc.status,
            content={"status": exc.status, "code": exc.code,
                     "message": exc.message},
        )

    def error(status: int, code: str, message: str) -> ApiError:
        return ApiError(status, code, message)

    def wrap_not_found(fn):
        try:
            return fn()
        except NotFoundError as exc:
            raise error(404, "not_found", str(exc))

    @app.exception_handler(404)
    async def handle_404(request: Request, exc):
        return JSONResponse(
            status_code=404,
            content={"status": 404, "code": "not_found",
                     "message": f"no such route: {request.url.path}"},
        )

    # -- stations / observations ------------------------------------------

    @app.get("/api/stations")
    def stations(region: str | None = None):
        all_stations = portal.obs.list_stations()
        if region is not None:
            poly = wrap_not_found(lambda: portal.region(region))
            all_stations = [s for s in all_stations
                            if contains_point(poly, s.location)]
        return [
            {"id": s.id, "name": s.name, "lat": s.location.lat,
             "lon": s.location.lon, "influence": s.influence.value,
             "environment": s.environment.value}
            for s in all_stations
        ]

    @app.get("/api/stations/{station_id}/pollutants")
    def station_pollutants(station_id: str):
        return wrap_not_found(lambda: portal.obs.list_pollutants(station_id))

    @app.get("/api/observations")
    def observations(station: str | None = None, pollutant: str | None = None,
                     date: str | None = None, resolution: str | None = None):
        station = _require(station, "station")
        pollutant = _require(pollutant, "pollutant")
        try:
            period = Period.parse(_require(date, "date"))
        except IngestError as exc:
            raise _bad_request(str(exc))
        res = _parse_enum(Resolution, _require(resolution, "resolution"),
                          "resolution")
        wrap_not_found(lambda: portal.obs.get_station(station))
        series = portal.obs.hourly_series(station, pollutant, period)
        if res is not Resolution.hourly:
            from .obs import aggregate_temporal

            series = aggregate_temporal(series, res)
        return {
            "station_id": station, "pollutant": pollutant,
            "resolution": res.value,
            "points": [{"timestamp": ts.isoformat(), "value": v}
                       for ts, v in series.points],
        }

    # -- model layers ---------------------------------------------------------

    @app.get("/api/model/layers")
    def model_layers():
        groups: dict[tuple, list[str]] = {}
        for key in portal.layers.list_layers():
            groups.setdefault(
                (key.pollutant, key.quantity.value, key.resolution.value),
                []).append(key.timestamp.isoformat())
        return [
            {"pollutant": p, "quantity": q, "resolution": r,
             "timestamps": sorted(ts)}
            for (p, q, r), ts in sorted(groups.items())
        ]

    def _layer_key(pollutant, quantity, resolution, date) -> LayerKey:
        return LayerKey(
            _require(pollutant, "pollutant"),
            _parse_enum(Quantity, _require(quantity, "quantity"), "quantity"),
            _parse_enum(Resolution, _require(resolution, "resolution"),
                        "resolution"),
            _layer_timestamp(_require(date, "date")),
        )

    @app.get("/api/model/value")
    def model_value(pollutant: str | None = None, quantity: str | None = None,
                    resolution: str | None = None, date: str | None = None,
                    lat: str | None = None, lon: str | None = None):
        key = _layer_key(pollutant, quantity, resolution, date)
        p = _parse_point(lat, lon)
        layer = wrap_not_found(lambda: portal.layers.get(key))
        v = gridmod.sample_value(layer, p)
        nodata = v is None or v == layer.nodata
        return {"value": None if nodata else v, "nodata": nodata,
                "lat": p.lat, "lon": p.lon}

    @app.get("/api/model/timeseries")
    def model_timeseries(pollutant: str | None = None,
                         quantity: str | None = None,
                         resolution: str | None = None,
                         date: str | None = None,
                         lat: str | None = None, lon: str | None = None):
        q = _parse_enum(Quantity, _require(quantity, "quantity"), "quantity")
        res = _parse_enum(Resolution, _require(resolution, "resolution"),
                          "resolution")
        p = _parse_point(lat, lon)
        date = _require(date, "date")
        try:
            if ":" in date:
                lo, hi = date.split(":", 1)
                years = range(int(lo), int(hi) + 1)
            else:
                years = [int(date)]
        except ValueError:
            raise _bad_request(f"date must be YYYY or YYYY:YYYY, got {date!r}")
        series = wrap_not_found(lambda: portal.layers.extract_point_series(
            _require(pollutant, "pollutant"), q, res, years, p))
        lines = ["timestamp,value"]
        lines += [f"{ts.isoformat()},{v}" for ts, v in series]
        return PlainTextResponse("\n".join(lines) + "\n", media_type="text/csv")

    def _render_layer(layer, fmt: str, threshold: float | None = None):
        if threshold is not None:
            layer = gridmod.compute_exceedance(layer, threshold)
        try:
            rgba = gridmod.render_overlay(layer)
        except GridError as exc:
            raise error(422, "empty_range", str(exc))
        ext = layer.extent
        headers = {
            "X-GAPS-BBox": f"{ext.min_lon},{ext.min_lat},"
                           f"{ext.max_lon},{ext.max_lat}",
        }
        if fmt == "png":
            return Response(gridmod.to_png(rgba), media_type="image/png",
                            headers=headers)
        return Response(gridmod.to_ppm(rgba),
                        media_type="image/x-portable-pixmap", headers=headers)

    def _proxy_upstream(request: Request):
        upstream = portal.config.upstream_url
        if not upstream:
            raise error(502, "upstream_unavailable",
                        "layer not stored locally and no upstream configured")
        url = upstream.rstrip("/") + request.url.path
        if request.url.query:
            url += "?" + request.url.query
        try:
            with urllib.request.urlopen(url, timeout=10) as resp:
                body = resp.read()
                headers = {"X-GAPS-Source": "upstream"}
                if resp.headers.get("X-GAPS-BBox"):
                    headers["X-GAPS-BBox"] = resp.headers["X-GAPS-BBox"]
                return Response(
                    body, media_type=resp.headers.get_content_type(),
                    headers=headers)
        except (urllib.error.URLError, OSError) as exc:
            raise error(502, "upstream_unavailable",
                        f"layer not stored locally and upstream failed: {exc}")

    @app.get("/api/model/overlay")
    def model_overlay(request: Request, pollutant: str | None = None,
                      quantity: str | None = None,
                      resolution: str | None = None, date: str | None = None,
                      format: str = "ppm"):
        key = _layer_key(pollutant, quantity, resolution, date)
        try:
            layer = portal.layers.get(key)
        except NotFoundError:
            return _proxy_upstream(request)
        response = _render_layer(layer, format)
        response.headers["X-GAPS-Source"] = "local"
        return response

    @app.get("/api/model/exceedance")
    def model_exceedance(request: Request, pollutant: str | None = None,
                         quantity: str | None = None,
                         resolution: str | None = None,
                         date: str | None = None,
                         threshold: str | None = None, format: str = "ppm"):
        key = _layer_key(pollutant, quantity, resolution, date)
        if threshold is None:
            configured = portal.config.thresholds.get(key.pollutant)
            if configured is None:
                raise _bad_request(
                    f"no threshold given and none configured for "
                    f"{key.pollutant!r}")
            thr = configured
        else:
            try:
                thr = float(threshold)
            except ValueError:
                raise _bad_request(f"invalid threshold {threshold!r}")
        try:
            layer = portal.layers.get(key)
        except NotFoundError:
            return _proxy_upstream(request)
        response = _render_layer(layer, format, threshold=thr)
        response.headers["X-GAPS-Source"] = "local"
        return response

    # -- cached derived results ---------------------------------------------

    @app.get("/api/model/regional")
    def model_regional(region: str | None = None, pollutant: str | None = None,
                       quantity: str | None = None,
                       resolution: str | None = None, format: str = "json"):
        region = _require(region, "region")
        q = _parse_enum(Quantity, _require(quantity, "quantity"), "quantity")
        res = _parse_enum(Resolution, _require(resolution, "resolution"),
                          "resolution")
        payload = wrap_not_found(lambda: portal.cached_regional_series(
            _require(pollutant, "pollutant"), q, res, region))
        if format == "csv":
            rows = json.loads(payload)
            lines = ["region_id,timestamp,min,max,weighted_mean"]
            lines += [f"{r['region_id']},{r['timestamp']},{r['min']},"
                      f"{r['max']},{r['weighted_mean']}" for r in rows]
            return PlainTextResponse("\n".join(lines) + "\n",
                                     media_type="text/csv")
        return Response(payload, media_type="application/json")

    @app.get("/api/evaluation")
    def evaluation(region: str | None = None, pollutant: str | None = None,
                   resolution: str | None = None, date: str | None = None):
        res = _parse_enum(Resolution, _require(resolution, "resolution"),
                          "resolution")
        payload = wrap_not_found(lambda: portal.cached_evaluation(
            _require(pollutant, "pollutant"), res, _require(date, "date"),
            _require(region, "region")))
        return Response(payload, media_type="application/json")

    # -- landcover / gazetteer ---------------------------------------------

    @app.get("/api/landcover")
    def landcover(lat: str | None = None, lon: str | None = None,
                  kind: str = "landuse"):
        p = _parse_point(lat, lon)
        lc_grid, legend = wrap_not_found(lambda: portal.landcover(kind))
        try:
            name = gridmod.classify_point(lc_grid, legend, p)
        except UnknownClassError as exc:
            raise error(422, "unknown_class", str(exc))
        return {"kind": kind, "class": name, "lat": p.lat, "lon": p.lon}

    @app.get("/api/geonames/autocomplete")
    def geonames_autocomplete(q: str | None = None, limit: int = 10):
        q = _require(q, "q")
        if limit < 1:
            raise _bad_request("limit must be >= 1")
        return portal.gazetteer().autocomplete(q, limit)

    @app.get("/api/geonames/lookup")
    def geonames_lookup(name: str | None = None):
        name = _require(name, "name")
        return [{"name": n, "lat": p.lat, "lon": p.lon}
                for n, p in portal.gazetteer().lookup(name)]

    # -- jobs ------------------------------------------------------------------

    @app.post("/api/jobs")
    async def submit_job(request: Request):
        try:
            body = await request.json()
        except json.JSONDecodeError:
            raise _bad_request("request body must be JSON")
        kind = body.get("kind")
        if kind == "refresh_observations":
            year = body.get("year")
            if not isinstance(year, int):
                raise _bad_request("refresh_observations requires integer 'year'")
            fn = _refresh_observations_fn(portal, year)
            kind = f"refresh_observations({year})"
        elif kind == "sync_model":
            fn = _sync_model_fn(portal)
        elif kind == "precompute":
            fn = _precompute_fn(portal, body)
        else:
            raise _bad_request(f"unknown job kind {kind!r}")
        job = jobs.submit(kind, fn)
        return JSONResponse(status_code=202, content=job.to_dict())

    @app.get("/api/jobs/{job_id}")
    def job_status(job_id: str):
        job = jobs.get(job_id)
        if job is None:
            raise error(404, "not_found", f"unknown job {job_id!r}")
        return job.to_dict()

    _mount_static(app, portal)
    return app


def _refresh_observations_fn(portal: Portal, year: int):
    def run(progress) -> str:
        template = portal.config.observations_source
        if not template:
            raise ConfigError("observations_source not configured")
        url = template.format(year=year)
        progress(0.1)
        data = Fetcher().fetch(url)
        progress(0.5)
        report = portal.ingest_observations(data)
        return (f"ingested observations for {year}: {report.created} created, "
                f"{report.updated} updated, {len(report.rejected)} rejected")

    return run


def _sync_model_fn(portal: Portal):
    def run(progress) -> str:
        if not portal.config.catalogue_url:
            raise ConfigError("catalogue_url not configured")
        if not portal.config.roi:
            raise ConfigError("roi not configured")
        from .geometry import load_geojson

        progress(0.1)
        doc = Fetcher().fetch(portal.config.catalogue_url)
        roi = load_geojson(portal.config.roi)
        progress(0.3)
        report = portal.sync_model(doc, roi)
        if report.failures and not report.stored:
            raise RuntimeError(f"sync failed for all entries: "
                               f"{report.failures}")
        return (f"synced {report.stored}/{report.fetched} entries; "
                f"failures: {list(report.failures)}")

    return run


def _precompute_fn(portal: Portal, body: dict):
    def run(progress) -> str:
        from .obs import Resolution

        resolutions = body.get("resolutions")
        if resolutions is not None:
            resolutions = [Resolution(r) for r in resolutions]
        report = portal.precompute(
            pollutants=body.get("pollutants"),
            resolutions=resolutions,
            regions=body.get("regions"),
            progress=progress,
        )
        return json.dumps(report)

    return run


def _mount_static(app: FastAPI, portal: Portal) -> None:
    static = portal.config.static_dir
    if static:
        from pathlib import Path

        if Path(static).is_dir():
            from fastapi.staticfiles import StaticFiles

            app.mount("/", StaticFiles(directory=static, html=True),
                      name="dashboard")


def serve(portal: Portal, host: str = "127.0.0.1", port: int = 8000) -> None:
    import uvicorn

    uvicorn.run(create_app(portal), host=host, port=port, log_level="warning")
