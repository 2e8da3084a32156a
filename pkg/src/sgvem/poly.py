"""Scaled monomial bases, quadrature rules, and polygon integration.

All element-level polynomial work is expressed in scaled monomials
``((x - x_D)/h_D)^s`` so that coefficient vectors stay well conditioned
independently of the cell size.  Monomials are ordered graded-lexicographically:
``1, X, Y, X^2, XY, Y^2, ...`` with ``X = (x - x_D)/h_D``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import roots_jacobi


def monomial_exponents(degree: int) -> np.ndarray:
    """Graded-lex exponent table for 2D monomials of total degree <= degree."""
    exps = [(s - j, j) for s in range(degree + 1) for j in range(s + 1)]
    return np.array(exps, dtype=int)


def monomial_dim(degree: int) -> int:
    return (degree + 1) * (degree + 2) // 2


class ScaledMonomialBasis2D:
    """Scaled monomials of total degree <= ``degree`` on a cell.

    Parameters
    ----------
    degree : int
    centroid : (2,) array
    diameter : float
        Cell diameter; each differentiation brings down a factor ``1/diameter``.
    """

    def __init__(self, degree, centroid, diameter):
        if degree < 0:
            raise ValueError("degree must be nonnegative")
        self.degree = int(degree)
        self.centroid = np.asarray(centroid, dtype=float)
        self.diameter = float(diameter)
        self.exponents = monomial_exponents(self.degree)
        self.dim = len(self.exponents)

    def _scaled(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return (pts - self.centroid) / self.diameter

    def eval(self, points, derivative_order: int = 0) -> np.ndarray:
        """Evaluate members (or their derivative tensors) at ``points``.

        Returns shape ``(npts, dim)`` for order 0, ``(npts, dim, 2)`` for the
        gradient and ``(npts, dim, 2, 2)`` for the Hessian.
        """
        if derivative_order not in (0, 1, 2):
            raise ValueError("derivative_order must be 0, 1 or 2")
        X = self._scaled(points)
        n = X.shape[0]
        deg = self.degree
        # cumulative power tables; lowered exponents are clipped to zero, which
        # is safe because the combinatorial prefactor vanishes there
        xp = np.ones((n, deg + 1))
        yp = np.ones((n, deg + 1))
        for k in range(1, deg + 1):
            xp[:, k] = xp[:, k - 1] * X[:, 0]
            yp[:, k] = yp[:, k - 1] * X[:, 1]
        a = self.exponents[:, 0]
        b = self.exponents[:, 1]
        if derivative_order == 0:
            return xp[:, a] * yp[:, b]
        h = self.diameter
        a1 = np.maximum(a - 1, 0)
        b1 = np.maximum(b - 1, 0)
        if derivative_order == 1:
            out = np.empty((n, self.dim, 2))
            out[:, :, 0] = a * xp[:, a1] * yp[:, b] / h
            out[:, :, 1] = b * xp[:, a] * yp[:, b1] / h
            return out
        a2 = np.maximum(a - 2, 0)
        b2 = np.maximum(b - 2, 0)
        out = np.empty((n, self.dim, 2, 2))
        out[:, :, 0, 0] = a * (a - 1) * xp[:, a2] * yp[:, b] / h**2
        out[:, :, 1, 1] = b * (b - 1) * xp[:, a] * yp[:, b2] / h**2
        cross = a * b * xp[:, a1] * yp[:, b1] / h**2
        out[:, :, 0, 1] = cross
        out[:, :, 1, 0] = cross
        return out

    def derivative_matrix(self, axis: int) -> np.ndarray:
        """Coefficient-space map of d/dx_axis into the degree-1-lower basis."""
        if self.degree == 0:
            return np.zeros((0, 1))
        lower = monomial_exponents(self.degree - 1)
        lower_index = {tuple(e): i for i, e in enumerate(lower)}
        D = np.zeros((len(lower), self.dim))
        for j, (a, b) in enumerate(self.exponents):
            e = (a - 1, b) if axis == 0 else (a, b - 1)
            fac = a if axis == 0 else b
            if fac > 0:
                D[lower_index[e], j] = fac / self.diameter
        return D


class ScaledMonomialBasis1D:
    """Scaled monomials on an edge, in the arclength parameter t in [0, 1]."""

    def __init__(self, degree, midpoint, length):
        if degree < 0:
            raise ValueError("degree must be nonnegative")
        self.degree = int(degree)
        self.midpoint = np.asarray(midpoint, dtype=float)
        self.length = float(length)
        self.dim = self.degree + 1

    def eval(self, t, derivative_order: int = 0) -> np.ndarray:
        """Members ((s - s_mid)/|e|)^j = (t - 1/2)^j and their t-derivatives."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        j = np.arange(self.dim)[None, :]
        u = (t - 0.5)[:, None]
        if derivative_order == 0:
            return u**j
        f = np.ones_like(j, dtype=float)
        for _ in range(derivative_order):
            f = f * j
            j = np.maximum(j - 1, 0)
        vals = f * u ** np.maximum(j, 0)
        vals[:, : derivative_order] = 0.0
        # derivative w.r.t. arclength s = |e| t carries 1/|e| per order
        return vals / self.length**derivative_order


@dataclass(frozen=True)
class QuadratureRule:
    """Reference quadrature rule (edge on [0,1], triangle on the unit simplex)."""

    points: np.ndarray
    weights: np.ndarray
    degree: int
    kind: str  # "edge" | "triangle"


def edge_quadrature(degree: int) -> QuadratureRule:
    """Gauss-Legendre rule on [0, 1] exact for polynomials up to ``degree``."""
    if degree < 0:
        raise ValueError("degree must be nonnegative")
    n = max(1, (degree + 2) // 2)
    x, w = leggauss(n)
    return QuadratureRule((x + 1) / 2, w / 2, 2 * n - 1, "edge")


def triangle_quadrature(degree: int) -> QuadratureRule:
    """Collapsed Gauss-Legendre x Gauss-Jacobi rule on the reference triangle.

    Exact for total degree <= ``degree``; all weights positive.  Reference
    triangle is {(x, y): x, y >= 0, x + y <= 1}.
    """
    if degree < 0:
        raise ValueError("degree must be nonnegative")
    m = max(1, (degree + 2) // 2)
    xu, wu = leggauss(m)          # for the collapsed direction, on [-1, 1]
    u = (xu + 1) / 2
    wu = wu / 2
    xv, wv = roots_jacobi(m, 1.0, 0.0)   # weight (1 - x) on [-1, 1]
    v = (xv + 1) / 2
    wv = wv / 4
    U, V = np.meshgrid(u, v, indexing="ij")
    pts = np.column_stack([(U * (1 - V)).ravel(), V.ravel()])
    w = np.outer(wu, wv).ravel()
    return QuadratureRule(pts, w, 2 * m - 1, "triangle")


def map_to_triangle(rule: QuadratureRule, tri: np.ndarray):
    """Push a reference triangle rule to the physical triangle ``tri`` (3x2)."""
    v0, v1, v2 = tri
    J = np.array([v1 - v0, v2 - v0])  # rows
    pts = v0 + rule.points @ J
    w = rule.weights * abs(np.linalg.det(J))
    return pts, w


def polygon_fan_quadrature(vertices: np.ndarray, center: np.ndarray, degree: int):
    """Quadrature on a convex polygon via the fan triangulation around ``center``."""
    rule = triangle_quadrature(degree)
    nv = len(vertices)
    pts = []
    wts = []
    for i in range(nv):
        tri = np.array([center, vertices[i], vertices[(i + 1) % nv]])
        p, w = map_to_triangle(rule, tri)
        pts.append(p)
        wts.append(w)
    return np.concatenate(pts), np.concatenate(wts)


def integrate_polygon(integrand, geometry, degree: int = 8):
    """Integrate a callable over a cell using its virtual triangulation.

    ``integrand(points)`` receives an ``(n, 2)`` array and returns ``(n,)`` or
    ``(n, k)`` values.  Exact for polynomials of total degree <= ``degree``.
    """
    pts, w = geometry.fan_quadrature(degree)
    vals = np.asarray(integrand(pts))
    return w @ vals


# Trace of a virtual function on an edge: v|_e is the quadratic in t in [0,1]
# fixed by (value at start, value at end, edge mean).  Columns map those three
# data to the t-monomial coefficients (1, t, t^2).
EDGE_TRACE_COEFFS = np.array(
    [
        [1.0, 0.0, 0.0],
        [-4.0, -2.0, 6.0],
        [3.0, 3.0, -6.0],
    ]
)


def edge_polynomial_from_dofs(value_a: float, value_b: float, mean: float) -> np.ndarray:
    """Quadratic on [0, 1] with endpoint values ``value_a``/``value_b`` and mean."""
    return EDGE_TRACE_COEFFS @ np.array([value_a, value_b, mean], dtype=float)


def edge_trace_matrix(t: np.ndarray) -> np.ndarray:
    """Values at parameters ``t`` of the three edge trace shape functions.

    Returns ``(len(t), 3)``; columns correspond to (start value, end value,
    edge mean) data of the quadratic trace.
    """
    t = np.asarray(t, dtype=float)
    V = np.column_stack([np.ones_like(t), t, t * t])
    return V @ EDGE_TRACE_COEFFS


@dataclass(frozen=True)
class StrainDivergenceTables:
    """Coefficient-space actions on vector polynomials ``p`` in (P_r)^2.

    A coefficient vector ``c`` of length ``2*dim`` interleaves the two
    components (``p_i = sum_j c[2j+i] m_j``).  Fields map ``c`` to coefficient
    vectors in the one- and two-degrees-lower scaled monomial bases.
    """

    grad: np.ndarray       # (2, 2, dim1, 2*dim): grad[i, l] -> coeffs of d_l p_i
    eps: np.ndarray        # (2, 2, dim1, 2*dim): symmetric gradient entries
    div: np.ndarray        # (dim1, 2*dim)
    grad_eps: np.ndarray   # (2, 2, 2, dim0, 2*dim): grad_eps[l, i, j] -> d_l eps_ij
    grad_div: np.ndarray   # (2, dim0, 2*dim)
    hess: np.ndarray       # (2, 2, 2, dim0, 2*dim): hess[i, j, l] -> d_j d_l p_i


def strain_divergence_tables(basis: ScaledMonomialBasis2D) -> StrainDivergenceTables:
    """Exact strain/divergence actions for vector polynomials over ``basis``."""
    dim = basis.dim
    n = 2 * dim
    D = [basis.derivative_matrix(0), basis.derivative_matrix(1)]
    lower = ScaledMonomialBasis2D(basis.degree - 1, basis.centroid, basis.diameter)
    D1 = [lower.derivative_matrix(0), lower.derivative_matrix(1)]
    dim1 = lower.dim
    dim0 = monomial_dim(basis.degree - 2) if basis.degree >= 2 else 0

    grad = np.zeros((2, 2, dim1, n))
    for i in range(2):
        for l in range(2):
            grad[i, l, :, i::2] = D[l]
    eps = 0.5 * (grad + grad.transpose(1, 0, 2, 3))
    div = grad[0, 0] + grad[1, 1]
    grad_eps = np.zeros((2, 2, 2, dim0, n))
    hess = np.zeros((2, 2, 2, dim0, n))
    for l in range(2):
        for i in range(2):
            for j in range(2):
                grad_eps[l, i, j] = D1[l] @ eps[i, j]
                hess[i, j, l] = D1[j] @ grad[i, l]
    grad_div = np.stack([D1[0] @ div, D1[1] @ div])
    return StrainDivergenceTables(grad, eps, div, grad_eps, grad_div, hess)


def eval_basis(basis, points, derivative_order: int = 0) -> np.ndarray:
    """Functional alias for ``basis.eval``."""
    return basis.eval(points, derivative_order)
