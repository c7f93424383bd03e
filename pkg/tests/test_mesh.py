import logging

import numpy as np
import pytest

from thermofit.mesh import (
    Mesh,
    MeshError,
    MeshParseError,
    generate_plate_with_hole,
    generate_rect_grid,
    load_mesh,
    save_mesh,
)


def test_unit_grid_smallest():
    m = generate_rect_grid(1, 1, 1.0, 1.0)
    assert m.n_nodes == 4
    assert m.n_elements == 2
    assert np.allclose(m.areas(), 0.5)


def test_two_cell_grid_area_additivity():
    m = generate_rect_grid(2, 1, 2.0, 1.0)
    assert m.n_nodes == 6
    assert m.n_elements == 4
    assert m.total_area() == pytest.approx(2.0, rel=1e-12)


def test_structured_grid_enumeration():
    # hand enumeration: (nx+1)(ny+1) nodes, 2 nx ny triangles
    m = generate_rect_grid(10, 5, 60.0, 30.0)
    assert m.n_nodes == 66
    assert m.n_elements == 100
    left = m.boundary_tags["left"]
    assert len(left) == 6
    assert np.all(m.nodes[left, 0] == 0.0)


def test_grid_tags_on_geometric_boundary():
    m = generate_rect_grid(7, 3, 14.0, 9.0)
    assert np.all(np.abs(m.nodes[m.boundary_tags["right"], 0] - 14.0) <= 1e-9)
    assert np.all(np.abs(m.nodes[m.boundary_tags["top"], 1] - 9.0) <= 1e-9)
    assert np.all(np.abs(m.nodes[m.boundary_tags["bottom"], 1]) <= 1e-9)


def test_grid_area_matches_domain():
    m = generate_rect_grid(13, 7, 3.3, 1.7)
    assert m.total_area() == pytest.approx(3.3 * 1.7, rel=1e-9)


def test_grid_rejects_bad_dimensions():
    with pytest.raises(ValueError):
        generate_rect_grid(0, 1, 1.0, 1.0)
    with pytest.raises(ValueError):
        generate_rect_grid(2, 2, -1.0, 1.0)
    with pytest.raises(ValueError):
        generate_rect_grid(2, 2, 1.0, 0.0)


def test_plate_with_hole_element_count_and_area():
    m = generate_plate_with_hole(60.0, 30.0, (30.0, 15.0), 10.0, 646)
    expected_area = 60.0 * 30.0 - np.pi * 25.0
    assert abs(m.n_elements - 646) <= 0.3 * 646
    assert m.total_area() == pytest.approx(expected_area, rel=0.02)


def test_plate_with_hole_centroids_outside_hole():
    for target in (100, 646):
        m = generate_plate_with_hole(60.0, 30.0, (30.0, 15.0), 10.0, target)
        d = np.linalg.norm(m.centroids() - np.array([30.0, 15.0]), axis=1)
        assert np.all(d > 5.0)


def test_plate_zero_diameter_is_plain_rectangle():
    m = generate_plate_with_hole(60.0, 30.0, (30.0, 15.0), 0.0, 646)
    assert m.total_area() == pytest.approx(1800.0, rel=1e-9)


def test_plate_hole_touching_boundary_rejected():
    with pytest.raises(ValueError):
        generate_plate_with_hole(60.0, 30.0, (5.0, 15.0), 10.0, 646)
    with pytest.raises(ValueError):
        generate_plate_with_hole(60.0, 30.0, (30.0, 28.0), 10.0, 646)


def test_plate_hole_tag_on_circle():
    m = generate_plate_with_hole(60.0, 30.0, (30.0, 15.0), 10.0, 646)
    hole = m.boundary_tags["hole"]
    assert len(hole) > 0
    d = np.linalg.norm(m.nodes[hole] - np.array([30.0, 15.0]), axis=1)
    assert np.all(np.abs(d - 5.0) <= 1e-9 * 60.0)


def test_all_triangles_ccw():
    m = generate_plate_with_hole(60.0, 30.0, (30.0, 15.0), 10.0, 300)
    assert np.all(m.areas() > 1e-12)


def test_save_load_round_trip():
    m = generate_rect_grid(1, 1, 1.0, 1.0)
    m2 = load_mesh(save_mesh(m))
    assert np.array_equal(m.triangles, m2.triangles)
    assert np.max(np.abs(m.nodes - m2.nodes)) <= 1e-15
    assert set(m.boundary_tags) == set(m2.boundary_tags)
    for name in m.boundary_tags:
        assert np.array_equal(m.boundary_tags[name], m2.boundary_tags[name])


def test_round_trip_plate_bit_exact_coords():
    m = generate_plate_with_hole(60.0, 30.0, (30.0, 15.0), 10.0, 200)
    m2 = load_mesh(save_mesh(m))
    assert np.array_equal(m.nodes, m2.nodes)  # repr round-trip is exact
    assert np.array_equal(m.triangles, m2.triangles)


def test_load_out_of_range_index_names_line():
    text = "nodes 4 triangles 1\n0 0\n1 0\n1 1\n0 1\n0 1 99\n"
    with pytest.raises(MeshParseError) as err:
        load_mesh(text)
    assert "99" in str(err.value)
    assert "line 6" in str(err.value)


def test_load_cw_triangle_reoriented_with_warning(caplog):
    text = "nodes 3 triangles 1\n0 0\n1 0\n0 1\n0 2 1\n"  # clockwise
    with caplog.at_level(logging.WARNING):
        m = load_mesh(text)
    assert m.areas()[0] > 0
    assert any("re-oriented" in rec.message for rec in caplog.records)


def test_load_degenerate_triangle_rejected():
    text = "nodes 3 triangles 1\n0 0\n1 0\n2 0\n0 1 2\n"
    with pytest.raises(MeshParseError) as err:
        load_mesh(text)
    assert "degenerate" in str(err.value)


def test_load_handles_comments_and_tags():
    text = """# a comment
nodes 4 triangles 2
0 0
1 0  # trailing comment
1 1
0 1
0 1 2
0 2 3
tag left 2 0 3
"""
    m = load_mesh(text)
    assert m.n_elements == 2
    assert list(m.boundary_tags["left"]) == [0, 3]


def test_load_bad_header():
    with pytest.raises(MeshParseError):
        load_mesh("vertices 3 cells 1\n")


def test_mesh_immutable():
    m = generate_rect_grid(2, 2, 1.0, 1.0)
    with pytest.raises(ValueError):
        m.nodes[0, 0] = 5.0
    with pytest.raises(ValueError):
        m.triangles[0, 0] = 3


def test_mesh_validation_rejects_bad_input():
    with pytest.raises(MeshError):
        Mesh(np.array([[0.0, 0.0], [1.0, 0.0]]), np.array([[0, 1, 5]]))
    with pytest.raises(MeshError):
        Mesh(
            np.array([[0.0, 0.0], [1.0, 0.0], [np.nan, 1.0]]),
            np.array([[0, 1, 2]]),
        )
