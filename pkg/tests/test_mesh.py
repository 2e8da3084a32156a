import json
import math

import numpy as np
import pytest

from sgvem.mesh import (
    MeshError,
    PolygonMesh,
    compute_geometry,
    generate_cvt_mesh,
    generate_structured_triangles,
    geometry_from_vertices,
    load_mesh,
    mesh_quality,
    save_mesh,
)


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------

def test_single_site_voronoi_is_unit_square():
    mesh = generate_cvt_mesh(1, seed=3, lloyd_iters=0)
    assert mesh.n_cells == 1
    assert mesh.n_vertices == 4
    corners = sorted(map(tuple, np.round(mesh.vertices, 12)))
    assert corners == [(0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0)]
    assert compute_geometry(mesh, 0).area == pytest.approx(1.0, abs=1e-12)


def test_cvt_partition_properties(mesh32):
    assert mesh32.n_cells == 32
    assert abs(mesh32.total_area() - 1.0) <= 1e-12
    for i in range(32):
        g = mesh32.geometry(i)
        # outward normals close up: integral of n over the cell boundary
        assert np.linalg.norm(g.edge_lengths @ g.normals) < 1e-12
        # virtual triangulation covers the cell
        tri_area = sum(
            0.5 * abs((t[1] - t[0])[0] * (t[2] - t[0])[1] - (t[1] - t[0])[1] * (t[2] - t[0])[0])
            for t in g.fan_triangles()
        )
        assert tri_area == pytest.approx(g.area, rel=1e-12)


def test_cvt_energy_non_increasing():
    _, energies = generate_cvt_mesh(64, seed=7, lloyd_iters=50, return_energy_trace=True)
    assert len(energies) == 51
    assert np.all(np.diff(energies) <= 1e-13)


def test_cvt_determinism():
    a = generate_cvt_mesh(40, seed=9, lloyd_iters=25)
    b = generate_cvt_mesh(40, seed=9, lloyd_iters=25)
    assert np.array_equal(a.vertices, b.vertices)
    assert all(np.array_equal(x, y) for x, y in zip(a.cells, b.cells))


def test_cvt_rejects_bad_arguments():
    with pytest.raises(MeshError):
        generate_cvt_mesh(0, seed=1)
    with pytest.raises(MeshError):
        generate_cvt_mesh(4, seed=1, lloyd_iters=-1)


@pytest.mark.parametrize("n", [2, 3, 5])
def test_cvt_tiny_site_counts(n):
    mesh = generate_cvt_mesh(n, seed=1, lloyd_iters=30)
    assert mesh.n_cells == n
    assert abs(mesh.total_area() - 1.0) <= 1e-12


def test_structured_triangles_counts():
    m1 = generate_structured_triangles(1)
    assert m1.n_cells == 2 and m1.n_vertices == 4
    m4 = generate_structured_triangles(4)
    assert m4.n_cells == 32 and m4.n_vertices == 25
    m8 = generate_structured_triangles(8)
    assert m8.max_diameter() == pytest.approx(math.sqrt(2) / 8, rel=1e-14)
    assert abs(m8.total_area() - 1.0) <= 1e-12


# ---------------------------------------------------------------------------
# geometry
# ---------------------------------------------------------------------------

def test_geometry_unit_square(unit_square_geom):
    g = unit_square_geom
    assert g.area == pytest.approx(1.0, abs=1e-15)
    assert g.diameter == pytest.approx(math.sqrt(2), rel=1e-15)
    assert np.allclose(g.centroid, [0.5, 0.5])
    assert np.allclose(g.normals[0], [0.0, -1.0])


def test_geometry_right_triangle():
    g = geometry_from_vertices([[0, 0], [1, 0], [0, 1]])
    assert g.area == pytest.approx(0.5)
    assert np.allclose(g.centroid, [1 / 3, 1 / 3])


def test_geometry_regular_hexagon():
    ang = np.arange(6) * np.pi / 3
    g = geometry_from_vertices(np.column_stack([np.cos(ang), np.sin(ang)]))
    assert g.area == pytest.approx(3 * math.sqrt(3) / 2, rel=1e-14)
    assert g.min_fan_angle() == pytest.approx(60.0, abs=1e-9)


def test_geometry_rejects_degenerate():
    with pytest.raises(MeshError):
        geometry_from_vertices([[0, 0], [1, 0], [1, 0], [0, 1]])


def test_quality_flags_and_values(mesh32):
    square = PolygonMesh(
        [[0, 0], [1, 0], [1, 1], [0, 1]], [[0, 1, 2, 3]]
    )
    q = mesh_quality(square)
    assert q.min_fan_angle_deg == pytest.approx(45.0, abs=1e-9)
    assert q.n_cells == 1 and not q.flagged_cells
    q32 = mesh_quality(mesh32)
    assert np.isfinite(q32.max_diameter_edge_ratio)


def test_quality_on_fine_cvt():
    mesh = generate_cvt_mesh(512, seed=7)
    q = mesh_quality(mesh)
    assert np.isfinite(q.min_fan_angle_deg) and np.isfinite(q.max_diameter_edge_ratio)
    assert q.flagged_cells == ()


# ---------------------------------------------------------------------------
# validation and IO
# ---------------------------------------------------------------------------

def test_edge_topology_flips(mesh32):
    # interior edges are seen with opposite orientations by their two cells
    seen = {}
    for ci in range(mesh32.n_cells):
        for eid, flip in zip(mesh32.cell_edge_ids[ci], mesh32.cell_edge_flips[ci]):
            seen.setdefault(eid, []).append(flip)
    for eid, flips in seen.items():
        if not mesh32.boundary_edges[eid]:
            assert sorted(flips) == [-1.0, 1.0]
        else:
            assert len(flips) == 1


def test_roundtrip_bit_exact(tmp_path, mesh32):
    path = tmp_path / "mesh.json"
    save_mesh(mesh32, path)
    again = load_mesh(path)
    assert np.array_equal(again.vertices, mesh32.vertices)
    assert all(np.array_equal(a, b) for a, b in zip(again.cells, mesh32.cells))


def test_load_rejects_clockwise_cell(tmp_path):
    path = tmp_path / "cw.json"
    path.write_text(json.dumps({
        "vertices": [[0, 0], [1, 0], [1, 1], [0, 1]],
        "cells": [[0, 3, 2, 1]],
    }))
    with pytest.raises(MeshError, match="cell 0"):
        load_mesh(path)


def test_load_rejects_out_of_range_index(tmp_path):
    path = tmp_path / "oor.json"
    path.write_text(json.dumps({
        "vertices": [[0, 0], [1, 0], [1, 1], [0, 1]],
        "cells": [[0, 1, 7]],
    }))
    with pytest.raises(MeshError, match="index 7"):
        load_mesh(path)


def test_load_rejects_malformed_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(MeshError, match="malformed"):
        load_mesh(path)


def test_load_rejects_unused_vertex(tmp_path):
    path = tmp_path / "dangling.json"
    path.write_text(json.dumps({
        "vertices": [[0, 0], [1, 0], [1, 1], [0, 1], [2, 2]],
        "cells": [[0, 1, 2, 3]],
    }))
    with pytest.raises(MeshError, match="vertex 4"):
        load_mesh(path)


def test_nonconvex_cell_rejected():
    with pytest.raises(MeshError, match="convex"):
        PolygonMesh(
            [[0, 0], [2, 0], [2, 2], [1, 0.5], [0, 2]],
            [[0, 1, 2, 3, 4]],
        )


def test_meshes_are_immutable(mesh32):
    with pytest.raises(ValueError):
        mesh32.vertices[0, 0] = 42.0
