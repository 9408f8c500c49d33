import json

import pytest

from gaps.cli import main


def run(argv, capsys):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


@pytest.fixture
def data_args(tmp_path):
    return ["--data-dir", str(tmp_path / "data")]


def ingest_all(desk_fixture, data_args, capsys):
    for argv in (
        ["ingest-stations", str(desk_fixture["stations_csv"])],
        ["ingest-obs", str(desk_fixture["obs_csv"])],
        ["ingest-landcover", str(desk_fixture["landcover"]),
         str(desk_fixture["legend"])],
        ["sync-model", str(desk_fixture["catalogue"]),
         "--roi", str(desk_fixture["roi"])],
    ):
        code, _, err = run(data_args + argv, capsys)
        assert code == 0, err


class TestIngestCommands:
    def test_ingest_stations(self, desk_fixture, data_args, capsys):
        code, out, _ = run(data_args + ["ingest-stations",
                                        str(desk_fixture["stations_csv"])],
                           capsys)
        assert code == 0
        assert "created=3" in out

    def test_missing_file_exit_1(self, data_args, capsys):
        code, _, err = run(data_args + ["ingest-obs", "missing.csv"], capsys)
        assert code == 1
        assert "not found" in err

    def test_unknown_subcommand_exit_1(self, data_args, capsys):
        assert run(data_args + ["frobnicate"], capsys)[0] == 1


class TestSyncModel:
    def test_sync(self, desk_fixture, data_args, tmp_path, capsys):
        code, out, _ = run(data_args + [
            "sync-model", str(desk_fixture["catalogue"]),
            "--roi", str(desk_fixture["roi"])], capsys)
        assert code == 0
        assert "stored=2" in out
        assert (tmp_path / "data" / "model" / "NO2" / "concentration"
                / "monthly").is_dir()

    def test_missing_catalogue_no_store_change(self, desk_fixture, data_args,
                                               tmp_path, capsys):
        code, _, err = run(data_args + [
            "sync-model", "missing.json",
            "--roi", str(desk_fixture["roi"])], capsys)
        assert code == 1
        assert not (tmp_path / "data" / "model").exists()
        assert not (tmp_path / "data" / "version.txt").exists()


class TestEvaluate:
    def test_writes_eval_json(self, desk_fixture, data_args, tmp_path,
                              capsys):
        ingest_all(desk_fixture, data_args, capsys)
        regions = tmp_path / "data" / "regions"
        regions.mkdir()
        regions.joinpath("norte.geojson").write_text(
            (desk_fixture["regions_dir"] / "norte.geojson").read_text())
        out_path = tmp_path / "e.json"
        code, out, _ = run(data_args + [
            "evaluate", "--pollutant", "NO2", "--resolution", "annual",
            "--date", "2017", "--region", "norte",
            "--out", str(out_path)], capsys)
        assert code == 0
        result = json.loads(out_path.read_text())
        assert result["pooled"]["accepted"] in (True, False)
        assert "accepted" in out or "rejected" in out

    def test_region_geojson_from_data_dir(self, desk_fixture, data_args,
                                          tmp_path, capsys):
        ingest_all(desk_fixture, data_args, capsys)
        regions = tmp_path / "data" / "regions"
        regions.mkdir()
        regions.joinpath("norte.geojson").write_text(
            (desk_fixture["regions_dir"] / "norte.geojson").read_text())
        code, out, _ = run(data_args + [
            "evaluate", "--pollutant", "NO2", "--resolution", "annual",
            "--date", "2017", "--region", "norte"], capsys)
        assert code == 0
        assert json.loads(out)["pooled"]["n"] == 1


class TestPrecompute:
    def test_precompute_report(self, desk_fixture, data_args, tmp_path,
                               capsys):
        ingest_all(desk_fixture, data_args, capsys)
        regions = tmp_path / "data" / "regions"
        regions.mkdir()
        for name in ("norte", "sul"):
            regions.joinpath(f"{name}.geojson").write_text(
                (desk_fixture["regions_dir"] / f"{name}.geojson").read_text())
        code, out, _ = run(data_args + [
            "precompute", "--resolutions", "annual"], capsys)
        assert code == 0
        report = json.loads(out)
        assert report["regional_series"] == 2
        assert report["evaluations"] == 2


class TestGeocode:
    def test_geocode_fixture_name(self, desk_fixture, tmp_path, capsys):
        code, out, _ = run(["--config", str(desk_fixture["config"]),
                            "geocode", "Lisboa"], capsys)
        assert code == 0
        assert "38.7167" in out and "-9.1333" in out

    def test_geocode_unknown(self, desk_fixture, capsys):
        code, out, _ = run(["--config", str(desk_fixture["config"]),
                            "geocode", "Atlantis"], capsys)
        assert code == 2


class TestRender:
    def test_render_ppm(self, desk_fixture, data_args, tmp_path, capsys):
        ingest_all(desk_fixture, data_args, capsys)
        out_path = tmp_path / "layer.ppm"
        code, _, _ = run(data_args + [
            "render", "--pollutant", "NO2", "--resolution", "annual",
            "--date", "2017", "--out", str(out_path)], capsys)
        assert code == 0
        assert out_path.read_bytes().startswith(b"P6\n40 30\n255\n")

    def test_render_missing_layer_exit_2(self, data_args, tmp_path, capsys):
        code, _, err = run(data_args + [
            "render", "--pollutant", "NO2", "--resolution", "annual",
            "--date", "2017", "--out", str(tmp_path / "x.ppm")], capsys)
        assert code == 2
        assert not (tmp_path / "x.ppm").exists()
