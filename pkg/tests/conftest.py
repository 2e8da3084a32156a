import numpy as np
import pytest

from sgvem.mesh import generate_cvt_mesh, geometry_from_vertices


@pytest.fixture(scope="session")
def cvt_meshes():
    """The CVT refinement family used by the reference-table sweeps (seed 7)."""
    return {n: generate_cvt_mesh(n, seed=7, lloyd_iters=400) for n in (32, 64, 128, 256, 512)}


@pytest.fixture(scope="session")
def mesh100():
    return generate_cvt_mesh(100, seed=7, lloyd_iters=400)


@pytest.fixture(scope="session")
def mesh32(cvt_meshes):
    return cvt_meshes[32]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def unit_square_geom():
    return geometry_from_vertices([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])


@pytest.fixture
def pentagon_geom():
    ang = np.array([0.13, 1.4, 2.6, 3.9, 5.2])
    pts = np.column_stack([np.cos(ang), np.sin(ang)]) * 0.7 + 0.5
    return geometry_from_vertices(pts)


def project_onto_basis(func, basis, geom, degree=8):
    """Test-side oracle: L2-project a callable onto a scaled monomial basis."""
    pts, w = geom.fan_quadrature(degree)
    V = basis.eval(pts)
    M = (V.T * w) @ V
    return np.linalg.solve(M, V.T @ (w * func(pts)))


def vector_poly_coeffs(fx, fy, basis, geom):
    """Interleaved (P2)^2 coefficients of the vector polynomial (fx, fy)."""
    cx = project_onto_basis(fx, basis, geom)
    cy = project_onto_basis(fy, basis, geom)
    out = np.empty(2 * basis.dim)
    out[0::2] = cx
    out[1::2] = cy
    return out
