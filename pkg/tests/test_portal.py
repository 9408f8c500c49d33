import json

import pytest

from gaps.geometry import load_geojson
from gaps.model import Quantity
from gaps.obs import NotFoundError, Resolution
from gaps.portal import Portal, PortalConfig

from conftest import populate


@pytest.fixture
def fresh_portal(desk_fixture, tmp_path):
    config = PortalConfig.load(desk_fixture["config"])
    config.data_dir = tmp_path / "data"
    return Portal(config)


class TestVersioning:
    def test_bumps_on_ingest_and_sync(self, desk_fixture, fresh_portal):
        portal = fresh_portal
        assert portal.version() == 0
        portal.ingest_stations(desk_fixture["stations_csv"].read_bytes())
        assert portal.version() == 1
        portal.sync_model(desk_fixture["catalogue"].read_bytes(),
                          load_geojson(desk_fixture["roi"]))
        assert portal.version() == 2

    def test_failed_sync_does_not_bump(self, fresh_portal, desk_fixture):
        portal = fresh_portal
        doc = json.dumps({"version": 1, "entries": [{
            "id": "x", "pollutant": "NO2", "quantity": "concentration",
            "year": 2017, "resolution": "monthly",
            "url": "file:///nonexistent/manifest.json"}]}).encode()
        report = portal.sync_model(doc, load_geojson(desk_fixture["roi"]))
        assert report.stored == 0
        assert portal.version() == 0


class TestRegions:
    def test_configured_regions(self, populated_portal):
        assert set(populated_portal.region_ids()) == {"mainland", "norte",
                                                      "sul"}

    def test_unknown_region(self, populated_portal):
        with pytest.raises(NotFoundError):
            populated_portal.region("atlantis")


class TestEvaluate:
    def test_annual_evaluation_accepted(self, populated_portal):
        result = populated_portal.evaluate("NO2", Resolution.annual, "2017",
                                           "mainland")
        assert result["pooled"] is not None
        # fixture biases are 0.92 and 1.12: well within a factor of two
        assert result["pooled"]["fac2"] == 1.0
        assert result["pooled"]["accepted"] is True
        assert result["pooled"]["n"] == 2  # S3 is a traffic station
        assert set(result["per_station"]) == {"S1", "S2"}

    def test_monthly_evaluation(self, populated_portal):
        result = populated_portal.evaluate("NO2", Resolution.monthly,
                                           "2017-06", "sul")
        assert result["pooled"]["n"] == 1  # only S2 sits in the south
        assert result["pooled"]["accepted"] is True

    def test_region_with_no_stations(self, populated_portal):
        result = populated_portal.evaluate("NO2", Resolution.monthly,
                                           "2017-02", "norte")
        assert result["pooled"]["n"] == 1  # S1 only

    def test_missing_layer(self, populated_portal):
        with pytest.raises(NotFoundError):
            populated_portal.evaluate("NO2", Resolution.annual, "2031",
                                      "mainland")


class TestRegionalSeries:
    def test_monthly_series_chronological(self, populated_portal):
        series = populated_portal.regional_series(
            "NO2", Quantity.concentration, Resolution.monthly, "norte")
        assert len(series) == 12
        stamps = [s["timestamp"] for s in series]
        assert stamps == sorted(stamps)
        for s in series:
            assert s["min"] <= s["weighted_mean"] <= s["max"]

    def test_matches_per_timestep_oracle(self, populated_portal):
        from gaps.model import LayerKey, parse_timestamp
        from gaps.stats import region_weights, weighted_stats

        portal = populated_portal
        series = portal.regional_series("NO2", Quantity.concentration,
                                        Resolution.monthly, "sul")
        region = portal.region("sul")
        for entry in series:
            ts = parse_timestamp(entry["timestamp"])
            grid = portal.layers.get(LayerKey(
                "NO2", Quantity.concentration, Resolution.monthly, ts))
            wmap = region_weights(grid, region)
            expected = weighted_stats(grid, wmap, "sul", ts)
            assert entry["weighted_mean"] == pytest.approx(
                expected.weighted_mean, rel=1e-12)


class TestCache:
    def test_precompute_then_zero_recomputations(self, desk_fixture,
                                                 tmp_path):
        config = PortalConfig.load(desk_fixture["config"])
        config.data_dir = tmp_path / "data"
        portal = populate(Portal(config), desk_fixture)
        report = portal.precompute(resolutions=[Resolution.annual],
                                   regions=["norte", "sul"])
        assert report["regional_series"] == 2
        assert report["evaluations"] == 2
        assert portal.cache.computations == 4
        report2 = portal.precompute(resolutions=[Resolution.annual],
                                    regions=["norte", "sul"])
        assert portal.cache.computations == 4  # all hits
        assert report2["failures"] == []

    def test_cached_payload_byte_identical_to_fresh(self, desk_fixture,
                                                    tmp_path):
        config = PortalConfig.load(desk_fixture["config"])
        config.data_dir = tmp_path / "data"
        portal = populate(Portal(config), desk_fixture)
        first = portal.cached_evaluation("NO2", Resolution.annual, "2017",
                                         "mainland")
        cached = portal.cached_evaluation("NO2", Resolution.annual, "2017",
                                          "mainland")
        assert cached == first
        from gaps.portal import _canonical_json

        fresh = _canonical_json(portal.evaluate("NO2", Resolution.annual,
                                                "2017", "mainland"))
        assert cached.encode() == fresh.encode()

    def test_version_bump_invalidates(self, desk_fixture, tmp_path):
        config = PortalConfig.load(desk_fixture["config"])
        config.data_dir = tmp_path / "data"
        portal = populate(Portal(config), desk_fixture)
        portal.cached_regional_series("NO2", Quantity.concentration,
                                      Resolution.annual, "norte")
        assert portal.cache.computations == 1
        portal.cached_regional_series("NO2", Quantity.concentration,
                                      Resolution.annual, "norte")
        assert portal.cache.computations == 1
        portal.ingest_stations(desk_fixture["stations_csv"].read_bytes())
        portal.cached_regional_series("NO2", Quantity.concentration,
                                      Resolution.annual, "norte")
        assert portal.cache.computations == 2


class TestLandcover:
    def test_classify(self, populated_portal):
        from gaps.geometry import Point
        from gaps.grid import classify_point

        grid, legend = populated_portal.landcover("landuse")
        name = classify_point(grid, legend, Point(-8.2, 40.2))
        assert name in {"Agricultural areas", "Coniferous forest",
                        "Urban fabric"}

    def test_unknown_kind(self, populated_portal):
        with pytest.raises(NotFoundError):
            populated_portal.landcover("ecosystem")


class TestConfig:
    def test_env_overrides(self, desk_fixture, tmp_path, monkeypatch):
        monkeypatch.setenv("GAPS_DATA_DIR", str(tmp_path / "other"))
        monkeypatch.setenv("GAPS_UPSTREAM_URL", "http://upstream.test")
        config = PortalConfig.load(desk_fixture["config"])
        assert config.data_dir == tmp_path / "other"
        assert config.upstream_url == "http://upstream.test"

    def test_missing_data_dir(self, tmp_path):
        p = tmp_path / "c.json"
        p.write_text("{}")
        from gaps.portal import ConfigError

        with pytest.raises(ConfigError, match="data_dir"):
            PortalConfig.load(p)
