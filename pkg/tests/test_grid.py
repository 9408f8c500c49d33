import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gaps.geometry import MultiPolygon, Point, Polygon, Rect, Ring
from gaps.grid import (
    BLUE_RED,
    ColorMap,
    GeoGrid,
    GridError,
    Legend,
    UnknownClassError,
    classify_point,
    clip_mask,
    compute_exceedance,
    locate_pixel,
    pixel_footprint,
    read_ascii_grid,
    render_overlay,
    sample_value,
    to_png,
    to_ppm,
    write_ascii_grid,
)

from oracles import raycast_contains, random_convex_polygon


def grid_2x2(values=(1, 2, 3, 4), nodata=-9999.0):
    return GeoGrid(2, 2, 0.0, 0.0, 1.0, nodata, np.array(values, float))


def rect_region(min_lon, min_lat, max_lon, max_lat):
    return MultiPolygon([Polygon(Ring.from_coords([
        (min_lon, min_lat), (max_lon, min_lat), (max_lon, max_lat),
        (min_lon, max_lat), (min_lon, min_lat)]))])


def random_grid(rng: random.Random) -> GeoGrid:
    ncols = rng.randint(1, 8)
    nrows = rng.randint(1, 8)
    nodata = rng.choice([-9999.0, -1.0, 1e9])
    values = [
        nodata if rng.random() < 0.2 else rng.uniform(-100, 100)
        for _ in range(ncols * nrows)
    ]
    return GeoGrid(ncols, nrows, rng.uniform(-170, 160),
                   rng.uniform(-80, 70), rng.uniform(0.01, 2.0), nodata,
                   np.array(values).reshape(nrows, ncols))


class TestAsciiIO:
    def test_read_simple(self):
        text = ("ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 1\n"
                "NODATA_value -9999\n1 2\n3 4\n")
        g = read_ascii_grid(text.encode())
        assert g.values.tolist() == [[1, 2], [3, 4]]
        assert (g.ncols, g.nrows, g.xll, g.yll, g.cellsize) == (2, 2, 0, 0, 1)

    def test_header_keys_case_insensitive(self):
        text = ("NCOLS 1\nNROWS 1\nXLLCORNER 0\nYLLCORNER 0\nCELLSIZE 1\n"
                "nodata_VALUE -1\n5\n")
        assert read_ascii_grid(text).values[0, 0] == 5

    def test_missing_cellsize(self):
        text = ("ncols 1\nnrows 1\nxllcorner 0\nyllcorner 0\n"
                "NODATA_value -1\n5\n")
        with pytest.raises(GridError, match="cellsize"):
            read_ascii_grid(text)

    def test_value_count_mismatch(self):
        text = ("ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 1\n"
                "NODATA_value -1\n1 2 3\n")
        with pytest.raises(GridError, match="expected 4 values, found 3"):
            read_ascii_grid(text)

    def test_non_numeric_token_reports_line(self):
        text = ("ncols 2\nnrows 1\nxllcorner 0\nyllcorner 0\ncellsize 1\n"
                "NODATA_value -1\n1 abc\n")
        with pytest.raises(GridError, match="line 7.*'abc'"):
            read_ascii_grid(text)

    def test_roundtrip_identity(self):
        g = grid_2x2()
        assert read_ascii_grid(write_ascii_grid(g)).values.tolist() == \
            g.values.tolist()

    def test_roundtrip_100_random_grids_byte_identical(self):
        rng = random.Random(1234)
        for _ in range(100):
            g = random_grid(rng)
            data = write_ascii_grid(g)
            assert write_ascii_grid(read_ascii_grid(data)) == data

    def test_nodata_preserved(self):
        g = grid_2x2(values=(1, -9999.0, 3, 4))
        g2 = read_ascii_grid(write_ascii_grid(g))
        assert g2.nodata == g.nodata
        assert g2.values[0, 1] == -9999.0


class TestLocateAndSample:
    def test_hand_computed_location(self):
        g = GeoGrid(30, 40, -10.0, 36.0, 0.1, -9999.0, np.zeros((40, 30)))
        assert locate_pixel(g, Point(-9.15, 38.72)) == (12, 8)

    def test_lower_left_corner(self):
        g = GeoGrid(30, 40, -10.0, 36.0, 0.1, -9999.0, np.zeros((40, 30)))
        assert locate_pixel(g, Point(-10.0, 36.0)) == (39, 0)

    def test_out_of_bounds(self):
        g = GeoGrid(30, 40, -10.0, 36.0, 0.1, -9999.0, np.zeros((40, 30)))
        assert locate_pixel(g, Point(0.0, 0.0)) is None

    def test_top_right_edge_is_out_of_bounds(self):
        g = grid_2x2()
        assert locate_pixel(g, Point(2.0, 1.0)) is None
        assert locate_pixel(g, Point(1.0, 2.0)) is None

    def test_sample_value_and_nodata(self):
        g = grid_2x2(values=(7.5, -9999.0, 3, 4))
        assert sample_value(g, Point(0.5, 1.5)) == 7.5
        assert sample_value(g, Point(1.5, 1.5)) == -9999.0
        assert sample_value(g, Point(9, 9)) is None

    def test_sample_matches_footprint_scan(self):
        rng = random.Random(5)
        for _ in range(20):
            g = random_grid(rng)
            ext = g.extent
            for _ in range(20):
                p = Point(rng.uniform(ext.min_lon, ext.max_lon - 1e-9),
                          rng.uniform(ext.min_lat, ext.max_lat - 1e-9))
                hits = [
                    (r, c) for r in range(g.nrows) for c in range(g.ncols)
                    if (lambda fp: fp.min_lon <= p.lon < fp.max_lon
                        and fp.min_lat <= p.lat < fp.max_lat)(
                        pixel_footprint(g, r, c))
                ]
                assert len(hits) == 1
                assert sample_value(g, p) == g.values[hits[0]]


class TestFootprint:
    def test_origin_cell(self):
        g = grid_2x2()
        assert pixel_footprint(g, 1, 0) == Rect(0, 0, 1, 1)

    def test_out_of_range(self):
        with pytest.raises(IndexError):
            pixel_footprint(grid_2x2(), 2, 0)

    def test_tiling_no_gaps_no_overlaps(self):
        g = GeoGrid(4, 3, -1.0, 2.0, 0.5, -9999.0, np.zeros((3, 4)))
        total = sum(pixel_footprint(g, r, c).area_deg2()
                    for r in range(3) for c in range(4))
        assert total == pytest.approx(g.extent.area_deg2(), rel=1e-12)

    def test_locate_of_center_inverts(self):
        g = GeoGrid(5, 4, 3.0, -2.0, 0.25, -9999.0, np.zeros((4, 5)))
        for r in range(4):
            for c in range(5):
                fp = pixel_footprint(g, r, c)
                center = Point((fp.min_lon + fp.max_lon) / 2,
                               (fp.min_lat + fp.max_lat) / 2)
                assert locate_pixel(g, center) == (r, c)


class TestClipMask:
    def test_full_extent_identity(self):
        g = grid_2x2()
        ext = g.extent
        region = rect_region(ext.min_lon, ext.min_lat, ext.max_lon,
                             ext.max_lat)
        out = clip_mask(g, region, 0.0)
        assert out.values.tolist() == g.values.tolist()

    def test_single_cell_region(self):
        g = grid_2x2()
        fp = pixel_footprint(g, 0, 0)
        region = rect_region(fp.min_lon, fp.min_lat, fp.max_lon, fp.max_lat)
        out = clip_mask(g, region, 0.0)
        assert out.values[0, 0] == g.values[0, 0]
        assert (out.values == g.nodata).sum() == 3

    def test_georeferencing_and_kept_values_unchanged(self):
        g = grid_2x2()
        out = clip_mask(g, rect_region(0, 0, 1.2, 2.0), 0.0)
        assert out.same_georeference(g)
        kept = out.values != g.nodata
        assert (out.values[kept] == g.values[kept]).all()

    def test_against_monte_carlo_coverage_oracle(self):
        rng = random.Random(77)
        g = GeoGrid(6, 6, 0.0, 0.0, 1.0, -9999.0,
                    np.arange(36, dtype=float).reshape(6, 6) + 1)
        verts = random_convex_polygon(rng, 3, 3, 2.5)
        region = MultiPolygon([Polygon(Ring.from_coords(verts + [verts[0]]))])
        out = clip_mask(g, region, 0.5)
        for r in range(6):
            for c in range(6):
                fp = pixel_footprint(g, r, c)
                hits = sum(
                    raycast_contains(
                        verts,
                        rng.uniform(fp.min_lon, fp.max_lon),
                        rng.uniform(fp.min_lat, fp.max_lat))
                    for _ in range(10**4))
                coverage = hits / 10**4
                if abs(coverage - 0.5) < 0.02:
                    continue  # too close to the cut to resolve by sampling
                expected_kept = coverage > 0.5
                assert (out.values[r, c] != g.nodata) == expected_kept


class TestClassify:
    LEGEND = Legend({1: "Agricultural areas", 3: "Coniferous forest"})

    def test_known_code(self):
        g = grid_2x2(values=(3, 1, 1, 1))
        assert classify_point(g, self.LEGEND, Point(0.5, 1.5)) == \
            "Coniferous forest"

    def test_nodata_gives_none(self):
        g = grid_2x2(values=(-9999.0, 1, 1, 1))
        assert classify_point(g, self.LEGEND, Point(0.5, 1.5)) is None

    def test_unknown_code_error_carries_code(self):
        g = grid_2x2(values=(9, 1, 1, 1))
        with pytest.raises(UnknownClassError) as exc:
            classify_point(g, self.LEGEND, Point(0.5, 1.5))
        assert exc.value.code == 9

    def test_legend_csv(self):
        legend = Legend.from_csv("code,name\n1,Urban\n2,Forest\n")
        assert legend.names == {1: "Urban", 2: "Forest"}


class TestExceedance:
    def test_subtraction(self):
        g = grid_2x2(values=(1, 5, 1, 5))
        out = compute_exceedance(g, 3.0)
        assert out.values.tolist() == [[-2, 2], [-2, 2]]

    def test_zero_threshold_identity(self):
        g = grid_2x2()
        assert compute_exceedance(g, 0.0).values.tolist() == \
            g.values.tolist()

    def test_nodata_propagates(self):
        g = grid_2x2(values=(-9999.0,) * 4)
        assert (compute_exceedance(g, 3.0).values == -9999.0).all()

    # thresholds on the same dyadic lattice as the values, so the
    # subtraction is exact and restoration can be checked bit-for-bit
    @given(st.integers(-400, 400).map(lambda k: k / 8))
    @settings(max_examples=30, deadline=None)
    def test_add_back_restores(self, t):
        g = grid_2x2(values=(1.5, -9999.0, 3.25, 4.125))
        out = compute_exceedance(g, t)
        mask = g.mask()
        restored = out.values + t
        assert (restored[~mask] == g.values[~mask]).all()


class TestRender:
    def test_endpoints_and_midpoint(self):
        g = GeoGrid(3, 1, 0, 0, 1, -9999.0, np.array([[0.0, 5.0, 10.0]]))
        img = render_overlay(g, BLUE_RED)
        assert img[0, 0].tolist() == [0, 0, 255, 255]
        assert img[0, 2].tolist() == [255, 0, 0, 255]
        assert img[0, 1].tolist() == [128, 0, 128, 255]

    def test_nodata_transparent(self):
        g = grid_2x2(values=(1, -9999.0, 3, 4))
        img = render_overlay(g)
        assert img[0, 1, 3] == 0

    def test_all_nodata_is_error(self):
        g = grid_2x2(values=(-9999.0,) * 4)
        with pytest.raises(GridError, match="empty"):
            render_overlay(g)

    def test_ppm_and_png_headers(self):
        img = render_overlay(grid_2x2())
        ppm = to_ppm(img)
        assert ppm.startswith(b"P6\n2 2\n255\n")
        assert len(ppm) == len(b"P6\n2 2\n255\n") + 12
        assert to_png(img).startswith(b"\x89PNG")

    def test_colormap_validation(self):
        with pytest.raises(GridError):
            ColorMap(((0.5, (0, 0, 0)), (1.0, (1, 1, 1))))
        with pytest.raises(GridError):
            ColorMap(((0.0, (0, 0, 0)), (0.0, (1, 1, 1)), (1.0, (2, 2, 2))))
