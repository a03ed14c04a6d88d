"""Domain specifications and midpoint quadrature meshes."""

import os

import numpy as np
import pytest

from resonax import (DomainSpec, GeometryError, ball, box, build_mesh, disk,
                     ellipse, ellipsoid, load_raster, raster, rectangle,
                     scale_translate)


# -- domain validation --------------------------------------------------------

def test_dimension_must_be_2_or_3():
    with pytest.raises(GeometryError):
        DomainSpec(4, "ball", (1.0,))


def test_shape_dimension_mismatch_rejected():
    with pytest.raises(GeometryError):
        DomainSpec(2, "ball", (1.0,))
    with pytest.raises(GeometryError):
        DomainSpec(3, "disk", (1.0,))


def test_nonpositive_radii_rejected():
    with pytest.raises(GeometryError):
        disk(0.0)
    with pytest.raises(GeometryError):
        ellipse(1.0, -2.0)


def test_center_length_checked():
    with pytest.raises(GeometryError):
        DomainSpec(2, "disk", (1.0,), center=(0.0, 0.0, 0.0))


def test_default_center_is_origin():
    assert ball(1.0).center == (0.0, 0.0, 0.0)


def test_raster_needs_filled_cell():
    with pytest.raises(GeometryError):
        raster(np.zeros((3, 3), dtype=int), 0.5)


def test_contains_is_strict_interior():
    d = disk(1.0)
    assert not d.contains([[1.0, 0.0]])[0]
    assert d.contains([[0.99, 0.0]])[0]
    r = rectangle(1.0, 0.5)
    assert not r.contains([[0.0, 0.5]])[0]
    assert r.contains([[0.0, 0.49]])[0]


def test_diameter():
    assert disk(1.0).diameter() == 2.0
    assert ellipsoid(1.0, 2.0, 3.0).diameter() == 6.0
    # box diagonal
    assert np.isclose(box(1.0, 1.0, 1.0).diameter(), 2.0 * np.sqrt(3.0))


# -- meshing ------------------------------------------------------------------

def test_disk_mesh_nodes_inside_and_uniform(disk_mesh):
    assert np.all(np.sum(disk_mesh.nodes ** 2, axis=1) < 1.0)
    assert np.allclose(disk_mesh.weights, disk_mesh.h ** 2)
    assert disk_mesh.h == 2.0 / 16


def test_mesh_volume_converges_to_area():
    areas = [build_mesh(disk(1.0), n).volume() for n in (16, 32, 64)]
    errs = [abs(a - np.pi) for a in areas]
    assert errs[1] < errs[0] and errs[2] < errs[1]


def test_ball_mesh_volume(ball_mesh_fine):
    vol = 4.0 * np.pi / 3.0
    assert abs(ball_mesh_fine.volume() - vol) / vol < 0.1


def test_mesh_is_deterministic():
    m1 = build_mesh(ellipse(1.0, 0.5), 12)
    m2 = build_mesh(ellipse(1.0, 0.5), 12)
    assert np.array_equal(m1.nodes, m2.nodes)
    assert np.array_equal(m1.weights, m2.weights)


def test_node_ordering_lexicographic(disk_mesh):
    lat = disk_mesh.lattice
    keys = [tuple(row) for row in lat]
    assert keys == sorted(keys)


def test_mesh_centroid_symmetric(disk_mesh, ball_mesh):
    assert np.allclose(disk_mesh.centroid(), 0.0, atol=1e-14)
    assert np.allclose(ball_mesh.centroid(), 0.0, atol=1e-14)


def test_mesh_arrays_read_only(disk_mesh):
    with pytest.raises(ValueError):
        disk_mesh.nodes[0, 0] = 99.0
    with pytest.raises(ValueError):
        disk_mesh.weights[0] = 99.0


def test_cells_per_axis_lower_bound():
    with pytest.raises(GeometryError):
        build_mesh(disk(1.0), 1)


def test_anisotropic_shape_grid():
    mesh = build_mesh(rectangle(1.0, 0.25), 8)
    # h set by the largest extent; the short axis gets fewer cells
    assert mesh.h == 2.0 / 8
    assert mesh.grid_shape[0] == 8 and mesh.grid_shape[1] == 2
    assert np.isclose(mesh.volume(), 8 * 2 * mesh.h ** 2)


# -- scale/translate ----------------------------------------------------------

def test_scale_translate_maps_nodes_weights(disk_mesh):
    delta, z = 0.05, np.array([3.0, -1.0])
    scaled = scale_translate(disk_mesh, delta, z)
    assert np.allclose(scaled.nodes, disk_mesh.nodes * delta + z)
    assert np.allclose(scaled.weights, disk_mesh.weights * delta ** 2)
    assert np.isclose(scaled.h, disk_mesh.h * delta)
    assert np.isclose(scaled.volume(), disk_mesh.volume() * delta ** 2)
    assert np.allclose(scaled.centroid(), z, atol=1e-12)


def test_scale_translate_validates(ball_mesh):
    with pytest.raises(GeometryError):
        scale_translate(ball_mesh, -1.0, (0.0, 0.0, 0.0))
    with pytest.raises(GeometryError):
        scale_translate(ball_mesh, 0.5, (0.0, 0.0))


# -- raster domains -----------------------------------------------------------

def test_raster_mesh_counts_bits():
    bits = np.array([[1, 1, 0], [1, 0, 0], [1, 1, 1]])
    mesh = build_mesh(raster(bits, 0.5), 99)   # cells_per_axis ignored
    assert len(mesh) == int(np.sum(bits))
    assert np.allclose(mesh.weights, 0.25)
    assert mesh.h == 0.5


def test_raster_file_round_trip(tmp_path):
    path = os.path.join(tmp_path, "shape.txt")
    with open(path, "w") as fh:
        fh.write("2 3 0.25\n110\n011\n")
    dom = load_raster(path)
    mesh = build_mesh(dom, 0)
    assert len(mesh) == 4
    assert np.isclose(mesh.volume(), 4 * 0.25 ** 2)


def test_raster_file_errors(tmp_path):
    bad = os.path.join(tmp_path, "bad.txt")
    with open(bad, "w") as fh:
        fh.write("2 3 0.25\n110\n01x\n")
    with pytest.raises(GeometryError):
        load_raster(bad)
