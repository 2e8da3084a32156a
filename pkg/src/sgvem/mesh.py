"""Convex polygonal meshes of the unit square.

Meshes are immutable after construction: vertex/cell arrays are marked
read-only and all derived data (edges, adjacency, per-cell geometry) is
computed once.  Cells are stored as CCW vertex-index loops; global edges are
directed from the lower to the higher vertex index and carry the fixed
"right of travel" unit normal, so each cell records a +-1 flip between the
global normal and its own outward normal.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import Voronoi

from .poly import polygon_fan_quadrature, triangle_quadrature, map_to_triangle


class MeshError(Exception):
    """Invalid or degenerate mesh data."""


def _polygon_area_centroid(coords: np.ndarray):
    x = coords[:, 0]
    y = coords[:, 1]
    xn = np.roll(x, -1)
    yn = np.roll(y, -1)
    cross = x * yn - xn * y
    area = 0.5 * cross.sum()
    if area == 0.0:
        raise MeshError("polygon has zero area")
    cx = ((x + xn) * cross).sum() / (6.0 * area)
    cy = ((y + yn) * cross).sum() / (6.0 * area)
    return area, np.array([cx, cy])


def _check_convex_ccw(coords: np.ndarray, diameter: float, label: str):
    nv = len(coords)
    area = 0.5 * np.sum(
        coords[:, 0] * np.roll(coords[:, 1], -1) - np.roll(coords[:, 0], -1) * coords[:, 1]
    )
    if area <= 0.0:
        raise MeshError(f"{label}: vertices are not in CCW order (signed area {area:.3e})")
    tol = 1e-12 * diameter**2
    for i in range(nv):
        a = coords[i]
        b = coords[(i + 1) % nv]
        c = coords[(i + 2) % nv]
        cross = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0])
        if cross < -tol:
            raise MeshError(f"{label}: not convex at vertex {(i + 1) % nv}")


@dataclass
class ElementGeometry:
    """Measured quantities of one convex cell.

    Edge ``i`` runs CCW from local vertex ``i`` to ``i+1``; ``normals`` are the
    element-outward unit normals and ``edge_flips[i]`` converts moments stored
    against the global edge normal into outward ones.
    """

    cell_index: int
    vertices: np.ndarray
    area: float
    centroid: np.ndarray
    diameter: float
    edge_lengths: np.ndarray
    tangents: np.ndarray
    normals: np.ndarray
    edge_ids: np.ndarray
    edge_flips: np.ndarray
    _quad_cache: dict = field(default_factory=dict, repr=False)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    def fan_quadrature(self, degree: int):
        """Cached quadrature points/weights on the centroid-fan triangulation."""
        if degree not in self._quad_cache:
            self._quad_cache[degree] = polygon_fan_quadrature(
                self.vertices, self.centroid, degree
            )
        return self._quad_cache[degree]

    def fan_triangles(self) -> np.ndarray:
        nv = self.n_vertices
        tris = np.empty((nv, 3, 2))
        for i in range(nv):
            tris[i] = [self.centroid, self.vertices[i], self.vertices[(i + 1) % nv]]
        return tris

    def min_fan_angle(self) -> float:
        """Smallest interior angle (degrees) over the fan triangles."""
        worst = 180.0
        for tri in self.fan_triangles():
            for j in range(3):
                u = tri[(j + 1) % 3] - tri[j]
                v = tri[(j + 2) % 3] - tri[j]
                cosang = u @ v / (np.linalg.norm(u) * np.linalg.norm(v))
                worst = min(worst, math.degrees(math.acos(np.clip(cosang, -1.0, 1.0))))
        return worst


def geometry_from_vertices(coords, cell_index: int = -1,
                           edge_ids=None, edge_flips=None) -> ElementGeometry:
    """Build :class:`ElementGeometry` for a standalone CCW convex polygon."""
    coords = np.asarray(coords, dtype=float)
    nv = len(coords)
    if nv < 3:
        raise MeshError(f"cell {cell_index}: fewer than 3 vertices")
    edges = np.roll(coords, -1, axis=0) - coords
    lengths = np.linalg.norm(edges, axis=1)
    diam = max(
        np.linalg.norm(coords[i] - coords[j])
        for i in range(nv) for j in range(i + 1, nv)
    )
    if lengths.min() <= 1e-14 * diam:
        raise MeshError(f"cell {cell_index}: degenerate (zero-length) edge")
    _check_convex_ccw(coords, diam, f"cell {cell_index}")
    area, centroid = _polygon_area_centroid(coords)
    tangents = edges / lengths[:, None]
    normals = np.column_stack([tangents[:, 1], -tangents[:, 0]])
    if edge_ids is None:
        edge_ids = np.arange(nv)
    if edge_flips is None:
        edge_flips = np.ones(nv)
    return ElementGeometry(
        cell_index, coords, area, centroid, diam, lengths,
        tangents, normals, np.asarray(edge_ids), np.asarray(edge_flips, dtype=float),
    )


class PolygonMesh:
    """Conforming mesh of convex CCW polygons with derived edge topology."""

    def __init__(self, vertices, cells):
        self.vertices = np.array(vertices, dtype=float)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 2:
            raise MeshError("vertices must be an (n, 2) array")
        self.cells = [np.asarray(c, dtype=int) for c in cells]
        self._validate_indices()
        self._build_edges()
        self._memo: dict = {}
        self.vertices.flags.writeable = False
        for c in self.cells:
            c.flags.writeable = False
        # geometry construction validates convexity/orientation of every cell
        for i in range(self.n_cells):
            self.geometry(i)

    # -- basic sizes ----------------------------------------------------
    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    # -- construction helpers -------------------------------------------
    def _validate_indices(self):
        nv = self.n_vertices
        used = np.zeros(nv, dtype=bool)
        for ci, cell in enumerate(self.cells):
            if len(cell) < 3:
                raise MeshError(f"cell {ci}: fewer than 3 vertices")
            if np.any(cell < 0) or np.any(cell >= nv):
                bad = cell[(cell < 0) | (cell >= nv)][0]
                raise MeshError(f"cell {ci}: vertex index {bad} out of range")
            if len(np.unique(cell)) != len(cell):
                raise MeshError(f"cell {ci}: repeated vertex index")
            used[cell] = True
        if not used.all():
            raise MeshError(f"vertex {int(np.flatnonzero(~used)[0])} is not used by any cell")

    def _build_edges(self):
        edge_index: dict[tuple[int, int], int] = {}
        edge_cells: list[list[int]] = []
        cell_edge_ids = []
        cell_edge_flips = []
        for ci, cell in enumerate(self.cells):
            ids = np.empty(len(cell), dtype=int)
            flips = np.empty(len(cell))
            for k in range(len(cell)):
                a, b = int(cell[k]), int(cell[(k + 1) % len(cell)])
                key = (a, b) if a < b else (b, a)
                e = edge_index.get(key)
                if e is None:
                    e = len(edge_index)
                    edge_index[key] = e
                    edge_cells.append([])
                if len(edge_cells[e]) >= 2:
                    raise MeshError(f"edge {key} shared by more than two cells")
                edge_cells[e].append(ci)
                ids[k] = e
                flips[k] = 1.0 if a < b else -1.0
            cell_edge_ids.append(ids)
            cell_edge_flips.append(flips)
        self.edges = np.array(list(edge_index.keys()), dtype=int).reshape(-1, 2)
        self.edge_cells = np.full((len(self.edges), 2), -1, dtype=int)
        for e, cs in enumerate(edge_cells):
            self.edge_cells[e, : len(cs)] = cs
        self.boundary_edges = self.edge_cells[:, 1] < 0
        self.boundary_vertices = np.zeros(self.n_vertices, dtype=bool)
        self.boundary_vertices[self.edges[self.boundary_edges].ravel()] = True
        self.cell_edge_ids = cell_edge_ids
        self.cell_edge_flips = cell_edge_flips
        for arr in (self.edges, self.edge_cells, self.boundary_edges, self.boundary_vertices):
            arr.flags.writeable = False

    # -- geometry --------------------------------------------------------
    def geometry(self, cell_index: int) -> ElementGeometry:
        """Per-cell :class:`ElementGeometry`, memoized."""
        geoms = self._memo.setdefault("geometry", {})
        if cell_index not in geoms:
            cell = self.cells[cell_index]
            geoms[cell_index] = geometry_from_vertices(
                self.vertices[cell],
                cell_index,
                self.cell_edge_ids[cell_index],
                self.cell_edge_flips[cell_index],
            )
        return geoms[cell_index]

    def total_area(self) -> float:
        return sum(self.geometry(i).area for i in range(self.n_cells))

    def max_diameter(self) -> float:
        return max(self.geometry(i).diameter for i in range(self.n_cells))

    def edge_vector(self, edge_index: int) -> np.ndarray:
        a, b = self.edges[edge_index]
        return self.vertices[b] - self.vertices[a]

    def global_edge_normal(self, edge_index: int) -> np.ndarray:
        t = self.edge_vector(edge_index)
        t = t / np.linalg.norm(t)
        return np.array([t[1], -t[0]])


def compute_geometry(mesh: PolygonMesh, cell_index: int) -> ElementGeometry:
    """Geometry of one cell of ``mesh`` (module-level spelling)."""
    return mesh.geometry(cell_index)


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------

def _clipped_voronoi(sites: np.ndarray):
    """Voronoi cells of ``sites`` clipped to the unit square.

    Mirroring every site across the four square edges makes each original
    site's region bounded with the square edges appearing as bisectors, so the
    returned polygons tile the square exactly.
    """
    n = len(sites)
    mirrors = [
        sites * [-1.0, 1.0],
        sites * [1.0, -1.0],
        np.column_stack([2.0 - sites[:, 0], sites[:, 1]]),
        np.column_stack([sites[:, 0], 2.0 - sites[:, 1]]),
    ]
    vor = Voronoi(np.vstack([sites] + mirrors))
    verts = np.clip(vor.vertices, 0.0, 1.0)
    polygons = []
    for i in range(n):
        region = vor.regions[vor.point_region[i]]
        if len(region) < 3 or -1 in region:
            raise MeshError(f"degenerate Voronoi cell for site {i}")
        coords = verts[region]
        # canonical CCW order around the site
        ang = np.arctan2(coords[:, 1] - sites[i, 1], coords[:, 0] - sites[i, 0])
        coords = coords[np.argsort(ang)]
        polygons.append(coords)
    return polygons


def _merge_polygon_vertices(polygons, tol: float = 1e-10):
    """Deduplicate vertices globally and drop zero-length polygon sides."""
    table: dict[tuple[int, int], int] = {}
    verts: list[np.ndarray] = []
    cells = []
    for poly in polygons:
        ids = []
        for p in poly:
            key = (round(p[0] / tol), round(p[1] / tol))
            j = table.get(key)
            if j is None:
                j = len(verts)
                table[key] = j
                verts.append(p)
            ids.append(j)
        dedup = [v for k, v in enumerate(ids) if v != ids[(k + 1) % len(ids)]]
        if len(dedup) < 3:
            raise MeshError("degenerate cell after vertex merge")
        cells.append(np.array(dedup, dtype=int))
    return np.array(verts), cells


def _cvt_energy(polygons, sites) -> float:
    rule = triangle_quadrature(2)
    total = 0.0
    for poly, site in zip(polygons, sites):
        nv = len(poly)
        for i in range(nv):
            tri = np.array([site, poly[i], poly[(i + 1) % nv]])
            pts, w = map_to_triangle(rule, tri)
            total += w @ np.sum((pts - site) ** 2, axis=1)
    return total


def generate_cvt_mesh(n_cells: int, seed: int = 0, lloyd_iters: int = 400,
                      return_energy_trace: bool = False):
    """Centroidal-Voronoi-style mesh of the unit square.

    Random seeds are relaxed by ``lloyd_iters`` Lloyd iterations (each cell's
    generator moves to its clipped-cell centroid).  Deterministic in
    ``(n_cells, seed, lloyd_iters)``.  With ``return_energy_trace`` also
    returns the quantization energy after each iteration (length
    ``lloyd_iters + 1``, starting from the unrelaxed configuration).
    """
    if n_cells < 1:
        raise MeshError("n_cells must be >= 1")
    if lloyd_iters < 0:
        raise MeshError("lloyd_iters must be >= 0")
    rng = np.random.default_rng(seed)
    sites = rng.random((n_cells, 2))
    energies = []
    polygons = _clipped_voronoi(sites)
    if return_energy_trace:
        energies.append(_cvt_energy(polygons, sites))
    for _ in range(lloyd_iters):
        sites = np.array([_polygon_area_centroid(p)[1] for p in polygons])
        polygons = _clipped_voronoi(sites)
        if return_energy_trace:
            energies.append(_cvt_energy(polygons, sites))
    verts, cells = _merge_polygon_vertices(polygons)
    mesh = PolygonMesh(verts, cells)
    if abs(mesh.total_area() - 1.0) > 1e-12:
        raise MeshError(f"cell areas sum to {mesh.total_area():.15f}, expected 1")
    if return_energy_trace:
        return mesh, np.array(energies)
    return mesh


def generate_structured_triangles(n_per_side: int) -> PolygonMesh:
    """Uniform right-triangle mesh of the unit square with ``2 n^2`` cells."""
    if n_per_side < 1:
        raise MeshError("n_per_side must be >= 1")
    n = n_per_side
    xs = np.linspace(0.0, 1.0, n + 1)
    verts = np.array([[x, y] for y in xs for x in xs])
    vid = lambda i, j: j * (n + 1) + i
    cells = []
    for j in range(n):
        for i in range(n):
            cells.append([vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)])
            cells.append([vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)])
    return PolygonMesh(verts, cells)


# ---------------------------------------------------------------------------
# file format
# ---------------------------------------------------------------------------

def save_mesh(mesh: PolygonMesh, path) -> None:
    """Write the mesh as JSON: ``{"vertices": [[x, y], ...], "cells": [[...]]}``."""
    data = {
        "vertices": [[float(x), float(y)] for x, y in mesh.vertices],
        "cells": [[int(i) for i in cell] for cell in mesh.cells],
    }
    with open(path, "w") as fh:
        json.dump(data, fh)


def load_mesh(path) -> PolygonMesh:
    """Load and fully validate a mesh JSON file."""
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise MeshError(f"{path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise MeshError(f"{path}: malformed JSON ({exc})") from exc
    if not isinstance(data, dict) or "vertices" not in data or "cells" not in data:
        raise MeshError(f"{path}: expected an object with 'vertices' and 'cells'")
    return PolygonMesh(data["vertices"], data["cells"])


# ---------------------------------------------------------------------------
# quality
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QualityReport:
    n_cells: int
    min_fan_angle_deg: float
    max_diameter_edge_ratio: float
    flagged_cells: tuple

    def __str__(self):
        lines = [
            f"cells:                  {self.n_cells}",
            f"min fan-triangle angle: {self.min_fan_angle_deg:.3f} deg",
            f"max h_K / min edge:     {self.max_diameter_edge_ratio:.3f}",
            f"flagged cells (<5 deg): {list(self.flagged_cells) if self.flagged_cells else 'none'}",
        ]
        return "\n".join(lines)


def mesh_quality(mesh: PolygonMesh) -> QualityReport:
    """Shape-regularity surrogates: fan angles and diameter/edge ratios."""
    min_angle = 180.0
    max_ratio = 0.0
    flagged = []
    for i in range(mesh.n_cells):
        g = mesh.geometry(i)
        ang = g.min_fan_angle()
        min_angle = min(min_angle, ang)
        max_ratio = max(max_ratio, g.diameter / g.edge_lengths.min())
        if ang < 5.0:
            flagged.append(i)
    return QualityReport(mesh.n_cells, min_angle, max_ratio, tuple(flagged))
