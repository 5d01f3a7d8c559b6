import math

import numpy as np
import pytest

from leveltopo import (SIGMOID, Classification, Window, classify_component,
                       component_encloses, extract_components, init_weights,
                       link_components, marching_squares, network_scalar_fn,
                       region_components, sample_grid)
from leveltopo.contours import analyze_level, band_oracle_compare
from leveltopo.fields import sample_noncritical_levels


def window2(half=2.0):
    return Window(np.array([-half, -half]), np.array([half, half]))


def circle_field(res=201, half=2.0, radius=1.0):
    f = lambda p: p[:, 0] ** 2 + p[:, 1] ** 2 - radius ** 2
    return sample_grid(f, window2(half), (res, res))


def two_circle_field(res=201, half=4.0):
    def f(p):
        a = (p[:, 0] - 2.0) ** 2 + p[:, 1] ** 2 - 1.0
        b = (p[:, 0] + 2.0) ** 2 + p[:, 1] ** 2 - 1.0
        return np.minimum(a, b)

    return sample_grid(f, window2(half), (res, res))


class TestMarchingSquares:
    def test_circle_is_single_closed_loop(self):
        comps = extract_components(circle_field(), 0.0)
        assert len(comps) == 1
        comp = comps[0]
        assert comp.classification is Classification.BOUNDED
        assert len(comp.polylines) == 1
        chain = comp.polylines[0]
        np.testing.assert_array_equal(chain[0], chain[-1])  # closed

    def test_circle_length_within_two_percent(self):
        comps = extract_components(circle_field(), 0.0)
        assert comps[0].length == pytest.approx(2 * math.pi, rel=0.02)

    def test_vertical_line_spans_window(self):
        fld = sample_grid(lambda p: p[:, 0], window2(), (101, 101))
        comps = extract_components(fld, 0.0)
        assert len(comps) == 1
        assert comps[0].classification is Classification.BOUNDARY_TOUCHING
        ys = comps[0].polylines[0][:, 1]
        assert ys.min() == -2.0 and ys.max() == 2.0

    def test_constant_field_empty(self):
        fld = sample_grid(lambda p: np.zeros(len(p)), window2(), (21, 21))
        assert extract_components(fld, 1.0) == []
        soup = marching_squares(fld, 1.0)
        assert len(soup.segments) == 0

    def test_level_equal_to_constant_field_empty(self):
        fld = sample_grid(lambda p: np.zeros(len(p)), window2(), (21, 21))
        assert extract_components(fld, 0.0) == []

    def test_level_through_lattice_values_is_nudged(self):
        # f = x hits the level 0 exactly on a lattice column; the nudge keeps
        # the extraction a single clean line
        fld = sample_grid(lambda p: p[:, 0], window2(), (41, 41))
        comps = extract_components(fld, 0.0)
        assert len(comps) == 1

    def test_vertices_lie_on_straddling_edges(self):
        fld = circle_field(81)
        soup = marching_squares(fld, 0.0)
        xs, ys = fld.axis(0), fld.axis(1)
        dx, dy = fld.spacing
        for vx, vy in soup.vertices:
            on_x_lattice = np.any(np.isclose(vx, xs, atol=1e-12))
            on_y_lattice = np.any(np.isclose(vy, ys, atol=1e-12))
            assert on_x_lattice or on_y_lattice

    def test_segment_endpoints_shared_exactly(self):
        soup = marching_squares(circle_field(81), 0.0)
        # each interior vertex is referenced by exactly two segments
        counts = np.zeros(len(soup.vertices), dtype=int)
        for a, b in soup.segments:
            counts[a] += 1
            counts[b] += 1
        assert np.all(counts == 2)  # closed loop: no frame endpoints

    def test_3d_field_rejected(self):
        win = Window(-np.ones(3), np.ones(3))
        fld = sample_grid(lambda p: np.sum(p * p, axis=1), win, (9, 9, 9))
        with pytest.raises(ValueError):
            marching_squares(fld, 0.5)

    def test_nonfinite_level_rejected(self):
        with pytest.raises(ValueError):
            marching_squares(circle_field(21), math.nan)


class TestLinkAndClassify:
    def test_two_disjoint_circles(self):
        comps = extract_components(two_circle_field(), 0.0)
        assert len(comps) == 2
        assert all(c.classification is Classification.BOUNDED for c in comps)

    def test_two_circles_against_flood_fill(self):
        fld = two_circle_field()
        result = band_oracle_compare(fld, 0.0, band_delta=1e-3 * np.ptp(fld.values))
        assert result["agree"], result["issues"]
        assert result["contour_count"] == 2 == result["band_count"]

    def test_empty_input(self):
        fld = sample_grid(lambda p: np.zeros(len(p)), window2(), (11, 11))
        assert link_components(marching_squares(fld, 5.0)) == []

    def test_classify_circle_bounded(self):
        comps = extract_components(circle_field(), 0.0)
        fld = circle_field()
        assert classify_component(comps[0].polylines, fld.window,
                                  boundary_tol=fld.cell_diagonal) is Classification.BOUNDED

    def test_classify_diagonal_touching(self):
        chain = [np.array([[-2.0, -2.0], [2.0, 2.0]])]
        assert classify_component(chain, window2(),
                                  boundary_tol=0.1) is Classification.BOUNDARY_TOUCHING

    def test_classify_vertex_exactly_on_boundary(self):
        chain = [np.array([[2.0, 0.0], [1.0, 0.0]])]
        assert classify_component(chain, window2(),
                                  boundary_tol=0.0) is Classification.BOUNDARY_TOUCHING

    def test_boundary_tol_controls_verdict(self):
        # circle of radius 1 in [-2,2]^2: min distance to the frame is 1
        comps = extract_components(circle_field(), 0.0)
        assert classify_component(comps[0].polylines, window2(),
                                  boundary_tol=0.9) is Classification.BOUNDED
        assert classify_component(comps[0].polylines, window2(),
                                  boundary_tol=1.1) is Classification.BOUNDARY_TOUCHING

    def test_component_order_deterministic(self):
        a = extract_components(two_circle_field(), 0.0)
        b = extract_components(two_circle_field(), 0.0)
        for ca, cb in zip(a, b):
            np.testing.assert_array_equal(ca.polylines[0], cb.polylines[0])


class TestEnclosure:
    def test_circle_encloses_origin(self):
        comps = extract_components(circle_field(), 0.0)
        assert component_encloses(comps[0], (0.0, 0.0))
        assert not component_encloses(comps[0], (1.5, 1.5))

    def test_line_encloses_nothing(self):
        fld = sample_grid(lambda p: p[:, 0], window2(), (41, 41))
        comps = extract_components(fld, 0.0)
        assert not component_encloses(comps[0], (0.5, 0.5))


class TestRefinementStability:
    @pytest.mark.parametrize("builder,level,expected_bounded", [
        (circle_field, 0.0, 1),
        (two_circle_field, 0.0, 2),
    ])
    def test_doubling_resolution_keeps_bounded_count(self, builder, level,
                                                     expected_bounded):
        for res in (101, 201, 401):
            comps = extract_components(builder(res), level)
            bounded = [c for c in comps
                       if c.classification is Classification.BOUNDED]
            assert len(bounded) == expected_bounded


class TestTopologyReport:
    def test_counts_and_dict_shape(self):
        fld = two_circle_field()
        report = analyze_level(fld, 0.0, provenance={"source": "two-circles"})
        assert report.bounded_count == 2 and report.boundary_count == 0
        d = report.to_dict()
        assert d["counts"] == {"bounded": 2, "boundary_touching": 0}
        assert d["provenance"]["source"] == "two-circles"
        assert len(d["components"]) == 2


class TestOracleEquivalence:
    def test_random_sigmoid_nets_agree_with_flood_fill(self):
        rng = np.random.default_rng(42)
        window = window2(3.0)
        for _ in range(5):
            depth = int(rng.integers(1, 4))
            arch = [2] + [int(rng.integers(2, 4)) for _ in range(depth)] + [1]
            net = init_weights(arch, SIGMOID, int(rng.integers(2 ** 31)))
            fld = sample_grid(network_scalar_fn(net), window, (201, 201))
            delta = 1e-3 * np.ptp(fld.values)
            for level in sample_noncritical_levels(fld, 3, rng):
                result = band_oracle_compare(fld, float(level), delta)
                assert result["agree"], result["issues"]
