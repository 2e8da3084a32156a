"""Manufactured displacement fields, analytic body forces, continuous norms.

Every shipped solution is a sum of separable terms ``coef * X(x) * Y(y)``
whose 1D factors carry closed-form derivatives up to order four, so the body
force ``f = (iota^2 Lap - I) L u`` (``L`` the Lame operator) is exact without
any symbolic dependency.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .mesh import PolygonMesh

MAX_ORDER = 4


class SinFactor:
    """``amplitude * sin(omega t + phase) + shift`` (shift at order zero only)."""

    def __init__(self, omega, phase=0.0, amplitude=1.0, shift=0.0):
        self.omega = omega
        self.phase = phase
        self.amplitude = amplitude
        self.shift = shift

    def eval(self, t, order):
        val = self.amplitude * self.omega**order * np.sin(
            self.omega * t + self.phase + order * np.pi / 2
        )
        if order == 0:
            val = val + self.shift
        return val


def cos_factor(omega, amplitude=1.0, shift=0.0):
    return SinFactor(omega, np.pi / 2, amplitude, shift)


class PolyFactor:
    """Polynomial with ascending coefficients."""

    def __init__(self, coeffs):
        p = np.polynomial.Polynomial(coeffs)
        self._derivs = [p]
        for _ in range(MAX_ORDER):
            p = p.deriv()
            self._derivs.append(p)

    def eval(self, t, order):
        return self._derivs[order](t)


class ExpFactor:
    """``scale * exp(rate * t)``."""

    def __init__(self, rate, scale=1.0):
        self.rate = rate
        self.scale = scale

    def eval(self, t, order):
        return self.scale * self.rate**order * np.exp(self.rate * t)


class ExpCosFactor:
    """``exp(cos(omega t)) + shift``, differentiated in the (sin, cos) algebra.

    Each derivative of ``P(s, c) e^c`` (with ``s = sin(omega t)``,
    ``c = cos(omega t)``) is again of that form, so the coefficient arrays of
    ``P`` are precomputed once per order.
    """

    def __init__(self, omega, shift=0.0):
        self.omega = omega
        self.shift = shift
        P = np.zeros((1, 1))
        P[0, 0] = 1.0
        self._P = [P]
        for _ in range(MAX_ORDER):
            self._P.append(self._differentiate(self._P[-1]))

    def _differentiate(self, P):
        ni, nj = P.shape
        out = np.zeros((ni + 1, nj + 1))
        w = self.omega
        for i in range(ni):
            for j in range(nj):
                v = P[i, j]
                if v == 0.0:
                    continue
                if i > 0:
                    out[i - 1, j + 1] += w * i * v     # d/dt s^i -> i s^(i-1) * wc
                if j > 0:
                    out[i + 1, j - 1] -= w * j * v     # d/dt c^j -> -j c^(j-1) * ws
                out[i + 1, j] -= w * v                 # chain rule on e^c
        return out

    def eval(self, t, order):
        t = np.asarray(t, dtype=float)
        s = np.sin(self.omega * t)
        c = np.cos(self.omega * t)
        P = self._P[order]
        ni, nj = P.shape
        spow = np.stack([s**i for i in range(ni)])
        cpow = np.stack([c**j for j in range(nj)])
        val = np.einsum("ij,i...,j...->...", P, spow, cpow) * np.exp(c)
        if order == 0:
            val = val + self.shift
        return val


@dataclass(frozen=True)
class Term:
    coef: float
    fx: object
    fy: object


@dataclass(frozen=True)
class ExactSolution:
    """Two displacement components with derivatives up to total order four.

    ``essential_bc`` states how a solver run should fill the boundary DOFs:
    ``"interpolated"`` imposes the field's own DOF values (the convention all
    shipped benchmarks use; it reduces to zero data for the compatible ones),
    ``"zero"`` forces the fully clamped problem regardless of the field.
    """

    name: str
    components: tuple
    reduced_force: bool = False
    clamped_value: bool = True      # u = 0 on the boundary of the unit square
    clamped_normal: bool = True     # normal derivative vanishes there too
    essential_bc: str = "interpolated"

    def derivative(self, comp: int, dx: int, dy: int, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.zeros(len(pts))
        for term in self.components[comp]:
            out += term.coef * term.fx.eval(pts[:, 0], dx) * term.fy.eval(pts[:, 1], dy)
        return out

    def displacement(self, points) -> np.ndarray:
        return np.stack([self.derivative(i, 0, 0, points) for i in range(2)], axis=1)

    def gradient(self, points) -> np.ndarray:
        """``(n, 2, 2)`` array of d_j u_i."""
        pts = np.atleast_2d(points)
        out = np.empty((len(pts), 2, 2))
        for i in range(2):
            out[:, i, 0] = self.derivative(i, 1, 0, pts)
            out[:, i, 1] = self.derivative(i, 0, 1, pts)
        return out

    def hessian(self, points) -> np.ndarray:
        """``(n, 2, 2, 2)`` array of d_j d_k u_i."""
        pts = np.atleast_2d(points)
        out = np.empty((len(pts), 2, 2, 2))
        for i in range(2):
            out[:, i, 0, 0] = self.derivative(i, 2, 0, pts)
            out[:, i, 1, 1] = self.derivative(i, 0, 2, pts)
            out[:, i, 0, 1] = out[:, i, 1, 0] = self.derivative(i, 1, 1, pts)
        return out

    def divergence(self, points) -> np.ndarray:
        return self.derivative(0, 1, 0, points) + self.derivative(1, 0, 1, points)

    def div_gradient(self, points) -> np.ndarray:
        """Gradient of the divergence, ``(n, 2)``."""
        pts = np.atleast_2d(points)
        gx = self.derivative(0, 2, 0, pts) + self.derivative(1, 1, 1, pts)
        gy = self.derivative(0, 1, 1, pts) + self.derivative(1, 0, 2, pts)
        return np.stack([gx, gy], axis=1)

    def div_hessian(self, points) -> np.ndarray:
        """Second derivatives of the divergence, ``(n, 2, 2)``."""
        pts = np.atleast_2d(points)
        out = np.empty((len(pts), 2, 2))
        out[:, 0, 0] = self.derivative(0, 3, 0, pts) + self.derivative(1, 2, 1, pts)
        out[:, 1, 1] = self.derivative(0, 1, 2, pts) + self.derivative(1, 0, 3, pts)
        out[:, 0, 1] = out[:, 1, 0] = (
            self.derivative(0, 2, 1, pts) + self.derivative(1, 1, 2, pts)
        )
        return out


EXAMPLE_NAMES = ("exam1a", "exam1b", "exam3", "divfree")


def example_solution(name: str, params) -> ExactSolution:
    """Built-in benchmark displacement fields on the unit square.

    ``exam1a``: smooth, fully clamped-compatible.
    ``exam1b``: boundary-layer variant of width ``iota``; violates the clamped
    conditions on purpose.
    ``exam3``: trigonometric field whose second part scales like
    ``1/(1 + lambda)``; value-compatible but with nonzero normal derivative.
    ``divfree``: divergence-free polynomial solving the reduced (second-order)
    problem; its force is used unchanged for the full problem.
    """
    if name == "exam1a":
        f = ExpCosFactor(2 * np.pi, shift=-math.e)
        comps = (
            (Term(1.0, f, f),),
            (Term(1.0, cos_factor(2 * np.pi, shift=-1.0), cos_factor(4 * np.pi, shift=-1.0)),),
        )
        return ExactSolution("exam1a", comps)
    if name == "exam1b":
        iota = params.iota
        decay = ExpFactor(-1.0 / iota)
        one = PolyFactor([1.0])
        t1 = PolyFactor([0.0, 1.0])
        t2 = PolyFactor([0.0, 0.0, 1.0])
        shared = (Term(iota, decay, one), Term(iota, one, decay))
        comps = (
            shared + (Term(-1.0, t2, t1),),
            shared + (Term(-1.0, t1, t2),),
        )
        return ExactSolution("exam1b", comps, clamped_value=False, clamped_normal=False)
    if name == "exam3":
        lam = params.lam
        c = 1.0 / (1.0 + lam)
        sin2 = SinFactor(2 * np.pi)
        sin1 = SinFactor(np.pi)
        cosm1 = cos_factor(2 * np.pi, shift=-1.0)
        comps = (
            (Term(1.0, cosm1, sin2), Term(c, sin1, sin1)),
            (Term(-1.0, sin2, cosm1), Term(c, sin1, sin1)),
        )
        return ExactSolution("exam3", comps, clamped_normal=False)
    if name == "divfree":
        a = PolyFactor([0.0, 0.0, 1.0, -2.0, 1.0])   # t^2 (1-t)^2
        b = PolyFactor([0.0, 1.0, -3.0, 2.0])        # t (1-t)(1-2t)
        comps = (
            (Term(-1.0, a, b),),
            (Term(1.0, b, a),),
        )
        return ExactSolution("divfree", comps, reduced_force=True, clamped_normal=False)
    raise ValueError(f"unknown example {name!r}; choose from {EXAMPLE_NAMES}")


def body_force(solution: ExactSolution, params):
    """Analytic body force as a callable ``points -> (n, 2)``.

    For the standard examples ``f = (iota^2 Lap - I)(mu Lap u + (lam + mu)
    grad div u)`` assembled from the exact second-to-fourth derivatives.  For
    the divergence-free example the force of the reduced problem,
    ``-mu Lap u``, is used instead; it depends on neither ``lam`` nor
    ``iota``.
    """
    mu, lam, iota = params.mu, params.lam, params.iota

    if solution.reduced_force:
        def reduced(points):
            pts = np.atleast_2d(points)
            f = np.empty((len(pts), 2))
            for i in range(2):
                f[:, i] = -mu * (
                    solution.derivative(i, 2, 0, pts) + solution.derivative(i, 0, 2, pts)
                )
            return f
        return reduced

    def force(points):
        pts = np.atleast_2d(points)
        n = len(pts)
        lap = np.empty((n, 2))
        bilap = np.empty((n, 2))
        for i in range(2):
            lap[:, i] = solution.derivative(i, 2, 0, pts) + solution.derivative(i, 0, 2, pts)
            bilap[:, i] = (
                solution.derivative(i, 4, 0, pts)
                + 2 * solution.derivative(i, 2, 2, pts)
                + solution.derivative(i, 0, 4, pts)
            )
        grad_div = solution.div_gradient(pts)
        # Lap(grad div u)_i = d_i(Lap(div u)): pure fourth-derivative chains
        grad_lap_div = np.empty((n, 2))
        grad_lap_div[:, 0] = (
            solution.derivative(0, 4, 0, pts) + solution.derivative(1, 3, 1, pts)
            + solution.derivative(0, 2, 2, pts) + solution.derivative(1, 1, 3, pts)
        )
        grad_lap_div[:, 1] = (
            solution.derivative(0, 3, 1, pts) + solution.derivative(1, 2, 2, pts)
            + solution.derivative(0, 1, 3, pts) + solution.derivative(1, 0, 4, pts)
        )
        L = mu * lap + (lam + mu) * grad_div
        lap_L = mu * bilap + (lam + mu) * grad_lap_div
        return iota**2 * lap_L - L

    return force


def continuous_norms(solution: ExactSolution, params, mesh: PolygonMesh,
                     degree: int = 8) -> dict:
    """Global norms by quadrature on the mesh's virtual triangulation.

    Returns ``f_l2`` (L2 norm of the body force), ``lam_div_h2``
    (``lam`` times the full H2 norm of the divergence), and the H1/H2
    seminorms of the displacement.
    """
    pts, w, _ = mesh_fan_quadrature(mesh, degree)
    f = body_force(solution, params)(pts)
    f_l2 = math.sqrt(w @ np.sum(f**2, axis=1))
    grad = solution.gradient(pts)
    hess = solution.hessian(pts)
    h1 = math.sqrt(w @ np.sum(grad**2, axis=(1, 2)))
    h2 = math.sqrt(w @ np.sum(hess**2, axis=(1, 2, 3)))
    div = solution.divergence(pts)
    dgrad = solution.div_gradient(pts)
    dhess = solution.div_hessian(pts)
    div_h2 = math.sqrt(
        w @ (div**2) + w @ np.sum(dgrad**2, axis=1) + w @ np.sum(dhess**2, axis=(1, 2))
    )
    return {
        "f_l2": f_l2,
        "lam_div_h2": params.lam * div_h2,
        "h1_semi": h1,
        "h2_semi": h2,
    }


def mesh_fan_quadrature(mesh: PolygonMesh, degree: int):
    """Concatenated fan quadrature over all cells, with cell offsets (memoized)."""
    cache = mesh._memo.setdefault("bulk_quadrature", {})
    if degree not in cache:
        pts, wts, offsets = [], [], [0]
        for i in range(mesh.n_cells):
            p, w = mesh.geometry(i).fan_quadrature(degree)
            pts.append(p)
            wts.append(w)
            offsets.append(offsets[-1] + len(w))
        cache[degree] = (
            np.concatenate(pts), np.concatenate(wts), np.array(offsets)
        )
    return cache[degree]
