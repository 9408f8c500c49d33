import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))  # for oracles.py

from gaps.demo import build_fixture
from gaps.geometry import load_geojson
from gaps.portal import Portal, PortalConfig


@pytest.fixture(autouse=True)
def _no_env_overrides(monkeypatch):
    monkeypatch.delenv("GAPS_DATA_DIR", raising=False)
    monkeypatch.delenv("GAPS_UPSTREAM_URL", raising=False)


@pytest.fixture(scope="session")
def desk_fixture(tmp_path_factory):
    """Full desk-scale input tree, built once per test session."""
    root = tmp_path_factory.mktemp("desk")
    return build_fixture(root)


def populate(portal: Portal, fixture: dict) -> Portal:
    portal.ingest_stations(fixture["stations_csv"].read_bytes())
    portal.ingest_observations(fixture["obs_csv"].read_bytes())
    portal.sync_model(fixture["catalogue"].read_bytes(),
                      load_geojson(fixture["roi"]))
    portal.ingest_landcover("landuse", fixture["landcover"].read_bytes(),
                            fixture["legend"].read_text())
    return portal


@pytest.fixture(scope="session")
def populated_portal(desk_fixture):
    """Portal with all desk-scale data ingested; shared by read-mostly tests."""
    import os

    os.environ.pop("GAPS_DATA_DIR", None)
    os.environ.pop("GAPS_UPSTREAM_URL", None)
    config = PortalConfig.load(desk_fixture["config"])
    return populate(Portal(config), desk_fixture)
