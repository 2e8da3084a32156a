"""Local k=2 virtual element: DOFs, projectors, stabilization, stiffness, load.

Per scalar component a cell with ``N_v`` vertices carries ``3 N_v + 1`` DOFs:
vertex values, edge means (with the 1/|e| scaling), edge moments of the normal
derivative (no length scaling, stored against the *global* edge normal), and
one interior mean (the lifting moment).  Vector fields interleave the two
components, so the local vector dimension is ``2 (3 N_v + 1)`` and the local
ordering is::

    [vertex values | edge means | edge normal moments | interior means]

with the two components adjacent inside each block.  All projector matrices
act on DOF vectors in this ordering and return coefficients in the graded-lex
scaled monomial basis of degree 2 ((P2)^2 is 12-dimensional, interleaved the
same way).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .mesh import ElementGeometry
from .poly import (
    ScaledMonomialBasis2D,
    edge_quadrature,
    edge_trace_matrix,
    strain_divergence_tables,
)

# one shared edge rule, exact for every polynomial edge integrand used below
_EDGE_RULE = edge_quadrature(7)
_TRACE = edge_trace_matrix(_EDGE_RULE.points)  # (nq, 3): start / end / mean data
_POLY_QUAD_DEGREE = 4  # exactness for polynomial bilinear forms on the cell
_MIDX = np.arange(6)


@dataclass(frozen=True)
class ModelParams:
    """Lame constants and the microscopic length parameter."""

    lam: float
    mu: float
    iota: float

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lambda must be >= 0")
        if self.mu <= 0:
            raise ValueError("mu must be > 0")
        if not 0 < self.iota <= 1:
            raise ValueError("iota must lie in (0, 1]")


def n_local_dofs(n_vertices: int) -> int:
    return 2 * (3 * n_vertices + 1)


def vertex_dof(v: int, comp: int) -> int:
    return 2 * v + comp


def edge_mean_dof(n_vertices: int, e: int, comp: int) -> int:
    return 2 * n_vertices + 2 * e + comp


def edge_normal_dof(n_vertices: int, e: int, comp: int) -> int:
    return 4 * n_vertices + 2 * e + comp


def interior_dof(n_vertices: int, comp: int) -> int:
    return 6 * n_vertices + comp


def cell_basis(geom: ElementGeometry) -> ScaledMonomialBasis2D:
    return ScaledMonomialBasis2D(2, geom.centroid, geom.diameter)


class _Workspace:
    """Shared per-cell evaluations used by every projector builder."""

    def __init__(self, geom: ElementGeometry):
        self.geom = geom
        self.basis = cell_basis(geom)
        self.tables = strain_divergence_tables(self.basis)
        nv = geom.n_vertices
        starts = geom.vertices
        ends = np.roll(geom.vertices, -1, axis=0)
        t = _EDGE_RULE.points
        self.edge_pts = starts[:, None, :] + t[None, :, None] * (ends - starts)[:, None, :]
        flat = self.edge_pts.reshape(-1, 2)
        nq = len(t)
        self.edge_vals = self.basis.eval(flat).reshape(nv, nq, 6)
        self.edge_grads = self.basis.eval(flat, 1).reshape(nv, nq, 6, 2)
        pts, w = geom.fan_quadrature(_POLY_QUAD_DEGREE)
        V = self.basis.eval(pts)
        self.M1 = (V[:, :3].T * w) @ V[:, :3]
        self.cell_mean = (w @ V) / geom.area
        self.vert_vals = self.basis.eval(geom.vertices)

    def boundary_rows(self, g_all: np.ndarray) -> np.ndarray:
        """DOF-functional rows of ``u -> sum_e int_e g_i(x) u_i(x) ds``.

        ``g_all`` has shape ``(nv, nq, nrows, 2)``; the trace of ``u`` on each
        edge is the quadratic fixed by its endpoint and mean DOFs.
        """
        geom = self.geom
        nv = geom.n_vertices
        nrows = g_all.shape[2]
        contrib = np.einsum(
            "e,q,eqri,qd->erid", geom.edge_lengths, _EDGE_RULE.weights, g_all, _TRACE
        )
        R = np.zeros((nrows, n_local_dofs(nv)))
        for e in range(nv):
            for c in range(2):
                cols = (
                    vertex_dof(e, c),
                    vertex_dof((e + 1) % nv, c),
                    edge_mean_dof(nv, e, c),
                )
                for d, col in enumerate(cols):
                    R[:, col] += contrib[e, :, c, d]
        return R


def build_dof_matrix(geom: ElementGeometry, _ws: _Workspace | None = None) -> np.ndarray:
    """DOF functionals applied to the 12 vector monomials of (P2)^2."""
    ws = _ws or _Workspace(geom)
    nv = geom.n_vertices
    D = np.zeros((n_local_dofs(nv), 12))
    for v in range(nv):
        for c in range(2):
            D[vertex_dof(v, c), 2 * _MIDX + c] = ws.vert_vals[v]
    means = np.einsum("q,eqm->em", _EDGE_RULE.weights, ws.edge_vals)
    n_glob = geom.edge_flips[:, None] * geom.normals
    nmoms = geom.edge_lengths[:, None] * np.einsum(
        "q,eqmd,ed->em", _EDGE_RULE.weights, ws.edge_grads, n_glob
    )
    for e in range(nv):
        for c in range(2):
            D[edge_mean_dof(nv, e, c), 2 * _MIDX + c] = means[e]
            D[edge_normal_dof(nv, e, c), 2 * _MIDX + c] = nmoms[e]
    for c in range(2):
        D[interior_dof(nv, c), 2 * _MIDX + c] = ws.cell_mean
    return D


def build_pi1(geom: ElementGeometry, D: np.ndarray,
              _ws: _Workspace | None = None) -> np.ndarray:
    """Strain-energy projector onto (P2)^2.

    Solves ``(eps(Pu), eps(p))_K = (eps(u), eps(p))_K`` for all polynomial
    ``p``, with the right side evaluated from DOFs only (interior mean for the
    constant-divergence volume term plus quadratic edge traces), and the
    rigid-motion kernel fixed by matching boundary means against RM(K).
    """
    ws = _ws or _Workspace(geom)
    nv = geom.n_vertices
    nq = ws.edge_vals.shape[1]
    eps = ws.tables.eps
    Gc = np.einsum("ijma,mn,ijnd->ad", eps, ws.M1, eps, optimize=True)

    # volume part: -int_K div(eps(p)) . u with div(eps(p)) constant
    diveps = np.zeros((2, 12))
    for i in range(2):
        for j in range(2):
            diveps[i] += ws.tables.grad_eps[j, i, j][0]
    B = np.zeros((12, n_local_dofs(nv)))
    for c in range(2):
        B[:, interior_dof(nv, c)] -= geom.area * diveps[c]

    # boundary part: int_e (eps(p) n) . u for each vector monomial p
    gn = np.einsum("eqmd,ed->eqm", ws.edge_grads, geom.normals)  # (nv, nq, 6)
    g_all = np.zeros((nv, nq, 12, 2))
    for c in range(2):
        g_all[:, :, 2 * _MIDX + c, c] += 0.5 * gn
        g_all[:, :, 2 * _MIDX + c, :] += (
            0.5 * geom.normals[:, c][:, None, None, None] * ws.edge_grads
        )
    B += ws.boundary_rows(g_all)

    # rigid motions: translations and the scaled rotation (-Y, X)
    def rm_vals(pts):
        X = (pts - geom.centroid) / geom.diameter
        r = np.zeros(pts.shape[:-1] + (3, 2))
        r[..., 0, 0] = 1.0
        r[..., 1, 1] = 1.0
        r[..., 2, 0] = -X[..., 1]
        r[..., 2, 1] = X[..., 0]
        return r

    rme = rm_vals(ws.edge_pts)  # (nv, nq, 3, 2)
    C = _interleave_poly_rows(
        np.einsum(
            "e,q,eqri,eqm->rmi", geom.edge_lengths, _EDGE_RULE.weights, rme, ws.edge_vals
        )
    )
    R = ws.boundary_rows(rme)

    K = np.block([[Gc, C.T], [C, np.zeros((3, 3))]])
    rhs = np.vstack([B, R])
    try:
        sol = _refined_solve(K, rhs)
    except np.linalg.LinAlgError as exc:
        raise ArithmeticError(
            f"cell {geom.cell_index}: singular strain-projector system"
        ) from exc
    return sol[:12]


def _refined_solve(K, rhs):
    """Dense solve with one residual-correction step for extra accuracy."""
    sol = np.linalg.solve(K, rhs)
    sol += np.linalg.solve(K, rhs - K @ sol)
    return sol


def _interleave_poly_rows(C):
    """(rows, 6, 2) monomial-by-component blocks -> (rows, 12) interleaved."""
    rows = C.shape[0]
    out = np.empty((rows, 12))
    out[:, 0::2] = C[:, :, 0]
    out[:, 1::2] = C[:, :, 1]
    return out


def build_pidiv(geom: ElementGeometry, D: np.ndarray,
                _ws: _Workspace | None = None) -> np.ndarray:
    """L2 projection of the divergence onto P1, from boundary + interior DOFs."""
    ws = _ws or _Workspace(geom)
    nv = geom.n_vertices
    rhs = np.zeros((3, n_local_dofs(nv)))
    h = geom.diameter
    grad_m = np.array([[0.0, 0.0], [1.0 / h, 0.0], [0.0, 1.0 / h]])
    for c in range(2):
        rhs[:, interior_dof(nv, c)] -= geom.area * grad_m[:, c]
    # (u . n) m_a on each edge
    g_all = ws.edge_vals[:, :, :3, None] * geom.normals[:, None, None, :]
    rhs += ws.boundary_rows(g_all)
    try:
        return _refined_solve(ws.M1, rhs)
    except np.linalg.LinAlgError as exc:
        raise ArithmeticError(
            f"cell {geom.cell_index}: singular P1 Gram matrix"
        ) from exc


def build_pi2(geom: ElementGeometry, D: np.ndarray, jump_sign: float = 1.0,
              _ws: _Workspace | None = None) -> np.ndarray:
    """Strain-gradient projector onto (P2)^2.

    For quadratics the integration-by-parts identity collapses to edge moments
    of the normal derivative weighted by the (edgewise constant) normal-normal
    couple plus vertex jumps of the tangential-normal couple; the (P1)^2
    kernel is fixed by matching boundary means of the value and the gradient.
    ``jump_sign`` is a fault-injection hook for the property suite and must be
    left at 1.0 in real use.
    """
    ws = _ws or _Workspace(geom)
    nv = geom.n_vertices
    ge = ws.tables.grad_eps[:, :, :, 0, :].reshape(8, 12)
    Gd = geom.area * ge.T @ ge

    # M[a, k, i, j] = d_i eps_kj(phi_a), constant for quadratics
    M = ws.tables.grad_eps[:, :, :, 0, :].transpose(3, 1, 0, 2)
    B = np.zeros((12, n_local_dofs(nv)))
    Mnn = np.einsum("akij,ei,ej->eak", M, geom.normals, geom.normals)
    Mtn = np.einsum("akij,ei,ej->eak", M, geom.tangents, geom.normals)
    for e in range(nv):
        for k in range(2):
            B[:, edge_normal_dof(nv, e, k)] += geom.edge_flips[e] * Mnn[e, :, k]
    for v in range(nv):
        jump = Mtn[v] - Mtn[v - 1]  # leaving minus entering edge at vertex v
        for k in range(2):
            B[:, vertex_dof(v, k)] -= jump_sign * jump[:, k]

    # constraints: boundary means of the value (2 rows) and gradient (4 rows)
    int_vals = np.einsum("e,q,eqm->m", geom.edge_lengths, _EDGE_RULE.weights, ws.edge_vals)
    int_grads = np.einsum(
        "e,q,eqmd->md", geom.edge_lengths, _EDGE_RULE.weights, ws.edge_grads
    )
    C = np.zeros((6, 12))
    R = np.zeros((6, n_local_dofs(nv)))
    for c in range(2):
        C[c, 2 * _MIDX + c] = int_vals
        for d in range(2):
            C[2 + 2 * c + d, 2 * _MIDX + c] = int_grads[:, d]
    for e in range(nv):
        le = geom.edge_lengths[e]
        for c in range(2):
            R[c, edge_mean_dof(nv, e, c)] += le
            for d in range(2):
                row = 2 + 2 * c + d
                R[row, edge_normal_dof(nv, e, c)] += geom.edge_flips[e] * geom.normals[e, d]
                R[row, vertex_dof((e + 1) % nv, c)] += geom.tangents[e, d]
                R[row, vertex_dof(e, c)] -= geom.tangents[e, d]

    K = np.block([[Gd, C.T], [C, np.zeros((6, 6))]])
    rhs = np.vstack([B, R])
    try:
        sol = _refined_solve(K, rhs)
    except np.linalg.LinAlgError as exc:
        raise ArithmeticError(
            f"cell {geom.cell_index}: singular strain-gradient projector system"
        ) from exc
    return sol[:12]


def build_pigraddiv(geom: ElementGeometry, D: np.ndarray,
                    _ws: _Workspace | None = None) -> np.ndarray:
    """L2 projection of grad(div) onto constants, from boundary DOFs only."""
    nv = geom.n_vertices
    rhs = np.zeros((2, n_local_dofs(nv)))
    for e in range(nv):
        n = geom.normals[e]
        flip = geom.edge_flips[e]
        for m in range(2):
            for j in range(2):
                rhs[m, edge_normal_dof(nv, e, j)] += flip * n[m] * n[j]
    for v in range(nv):
        n_out, t_out = geom.normals[v], geom.tangents[v]
        n_in, t_in = geom.normals[v - 1], geom.tangents[v - 1]
        for m in range(2):
            jump = t_out[m] * n_out - t_in[m] * n_in
            for j in range(2):
                rhs[m, vertex_dof(v, j)] -= jump[j]
    return rhs / geom.area


@dataclass
class LocalProjectors:
    """All per-cell projector matrices plus the polynomial Gram data."""

    geom: ElementGeometry
    basis: ScaledMonomialBasis2D
    D: np.ndarray
    P1: np.ndarray
    P2: np.ndarray
    Pdiv: np.ndarray
    Pgdiv: np.ndarray
    P0: np.ndarray
    M1: np.ndarray = field(repr=False)
    Gc: np.ndarray = field(repr=False)
    Gd: np.ndarray = field(repr=False)


def build_projectors(geom: ElementGeometry) -> LocalProjectors:
    ws = _Workspace(geom)
    D = build_dof_matrix(geom, ws)
    P1 = build_pi1(geom, D, _ws=ws)
    P2 = build_pi2(geom, D, _ws=ws)
    Pdiv = build_pidiv(geom, D, _ws=ws)
    Pgdiv = build_pigraddiv(geom, D, _ws=ws)
    nv = geom.n_vertices
    P0 = np.zeros((2, n_local_dofs(nv)))
    P0[0, interior_dof(nv, 0)] = 1.0
    P0[1, interior_dof(nv, 1)] = 1.0
    eps = ws.tables.eps
    Gc = np.einsum("ijma,mn,ijnd->ad", eps, ws.M1, eps, optimize=True)
    ge = ws.tables.grad_eps[:, :, :, 0, :].reshape(8, 12)
    Gd = geom.area * ge.T @ ge
    return LocalProjectors(geom, ws.basis, D, P1, P2, Pdiv, Pgdiv, P0, ws.M1, Gc, Gd)


def projectors_for(mesh, cell_index: int) -> LocalProjectors:
    """Memoized :func:`build_projectors` for a mesh cell."""
    cache = mesh._memo.setdefault("projectors", {})
    if cell_index not in cache:
        cache[cell_index] = build_projectors(mesh.geometry(cell_index))
    return cache[cell_index]


def stabilization(proj: LocalProjectors, complement: str = "none") -> np.ndarray:
    """Matrix of the DOF-vector stabilization form ``S(v, w) = chi(v) . chi(w)``.

    ``"none"`` returns the raw (identity-weighted) form; ``"strain"`` and
    ``"strain-gradient"`` apply it to the corresponding projection complement
    ``I - D P``, which is how it enters the discrete bilinear forms.
    """
    n = proj.D.shape[0]
    if complement == "none":
        return np.eye(n)
    if complement == "strain":
        S = np.eye(n) - proj.D @ proj.P1
    elif complement == "strain-gradient":
        S = np.eye(n) - proj.D @ proj.P2
    else:
        raise ValueError(f"unknown complement {complement!r}")
    return S.T @ S


def local_stiffness(proj: LocalProjectors, params: ModelParams,
                    d2_form: str = "projected-gradient") -> np.ndarray:
    """Symmetric local stiffness matrix of the discrete bilinear form.

    ``A = 2 mu c1h + lam c2h + iota^2 (2 mu d1h + lam d2h)`` where the
    consistency parts use the projected polynomials and both stabilization
    terms are plain Euclidean products of DOF-vector projection complements
    (the strain-gradient one weighted by ``h_K^-2``).

    ``d2_form`` selects the grad-div consistency term.  The default
    ``"projected-gradient"`` uses the L2 projection of grad(div u) onto
    constants; ``"gradient-of-projection"`` differentiates the P1 projection
    of div u instead.  Both are exact on quadratics, but the latter
    over-penalizes virtual functions (the 1/h from the derivative amplifies
    the projection defect) and visibly degrades accuracy once
    ``lam * iota^2`` is O(1); the default matches the locking-free analysis
    and reproduces the reference convergence tables.
    """
    geom = proj.geom
    n = proj.D.shape[0]
    I = np.eye(n)
    S1 = I - proj.D @ proj.P1
    S2 = I - proj.D @ proj.P2
    c1 = proj.P1.T @ proj.Gc @ proj.P1 + S1.T @ S1
    c2 = proj.Pdiv.T @ proj.M1 @ proj.Pdiv
    h = geom.diameter
    d1 = proj.P2.T @ proj.Gd @ proj.P2 + S2.T @ S2 / h**2
    if d2_form == "projected-gradient":
        d2 = geom.area * proj.Pgdiv.T @ proj.Pgdiv
    elif d2_form == "gradient-of-projection":
        grad_div = proj.Pdiv[1:] / h
        d2 = geom.area * grad_div.T @ grad_div
    else:
        raise ValueError(f"unknown d2_form {d2_form!r}")
    A = 2 * params.mu * c1 + params.lam * c2 + params.iota**2 * (
        2 * params.mu * d1 + params.lam * d2
    )
    asym = np.abs(A - A.T).max()
    if asym > 1e-12 * max(np.abs(A).max(), 1e-300):
        raise ArithmeticError(
            f"cell {geom.cell_index}: stiffness asymmetry {asym:.3e}"
        )
    return 0.5 * (A + A.T)


def local_load(geom: ElementGeometry, body_force, degree: int = 8) -> np.ndarray:
    """Load vector of the piecewise-constant force projection.

    Only the interior-mean DOFs receive entries: ``|K|`` times the cell mean
    of each force component.
    """
    pts, w = geom.fan_quadrature(degree)
    fbar = (w @ np.asarray(body_force(pts))) / geom.area
    nv = geom.n_vertices
    load = np.zeros(n_local_dofs(nv))
    load[interior_dof(nv, 0)] = geom.area * fbar[0]
    load[interior_dof(nv, 1)] = geom.area * fbar[1]
    return load


# ---------------------------------------------------------------------------
# interpolation
# ---------------------------------------------------------------------------

_INTERP_EDGE_RULE = edge_quadrature(15)


def interpolate_dofs(solution, mesh, dofmap) -> np.ndarray:
    """Nodal interpolant: exact DOFs of a smooth displacement field.

    Vertex values are pointwise, edge moments use high-order Gauss rules, and
    interior means use the degree-8 fan quadrature.  Shared DOFs are computed
    once per global entity, so the result is single-valued by construction.
    """
    u = np.zeros(dofmap.n_dofs)
    vals = solution.displacement(mesh.vertices)
    u[dofmap.vertex_dofs[:, 0]] = vals[:, 0]
    u[dofmap.vertex_dofs[:, 1]] = vals[:, 1]

    tq = _INTERP_EDGE_RULE.points
    wq = _INTERP_EDGE_RULE.weights
    a = mesh.vertices[mesh.edges[:, 0]]
    b = mesh.vertices[mesh.edges[:, 1]]
    pts = a[:, None, :] + tq[None, :, None] * (b - a)[:, None, :]
    flat = pts.reshape(-1, 2)
    uvals = solution.displacement(flat).reshape(len(a), len(tq), 2)
    means = np.einsum("q,eqc->ec", wq, uvals)
    u[dofmap.edge_value_dofs[:, 0]] = means[:, 0]
    u[dofmap.edge_value_dofs[:, 1]] = means[:, 1]

    grads = solution.gradient(flat).reshape(len(a), len(tq), 2, 2)
    lengths = np.linalg.norm(b - a, axis=1)
    tang = (b - a) / lengths[:, None]
    normals = np.column_stack([tang[:, 1], -tang[:, 0]])
    nmom = lengths[:, None] * np.einsum("q,eqcd,ed->ec", wq, grads, normals)
    u[dofmap.edge_normal_dofs[:, 0]] = nmom[:, 0]
    u[dofmap.edge_normal_dofs[:, 1]] = nmom[:, 1]

    for ci in range(mesh.n_cells):
        geom = mesh.geometry(ci)
        p, w = geom.fan_quadrature(8)
        mean = (w @ solution.displacement(p)) / geom.area
        u[dofmap.interior_dofs[ci, 0]] = mean[0]
        u[dofmap.interior_dofs[ci, 1]] = mean[1]
    return u


def commuting_interpolant(solution, mesh, dofmap) -> np.ndarray:
    """Interpolant whose projected divergence data commute with interpolation.

    Starts from :func:`interpolate_dofs` and corrects only the interior means,
    cell by cell, so that the P1 moments of the divergence of the interpolant
    match those of the exact field; the constant moment already matches
    through the edge means.
    """
    u = interpolate_dofs(solution, mesh, dofmap)
    for ci in range(mesh.n_cells):
        geom = mesh.geometry(ci)
        ws = _Workspace(geom)
        nv = geom.n_vertices
        h = geom.diameter
        pts, w = geom.fan_quadrature(8)
        div_u = solution.divergence(pts)
        mono = ws.basis.eval(pts)[:, 1:3]  # X, Y
        rhs_exact = np.array([w @ (div_u * mono[:, 0]), w @ (div_u * mono[:, 1])])

        loc = u[dofmap.cell_dofs(ci)]
        chi4 = np.array([loc[interior_dof(nv, 0)], loc[interior_dof(nv, 1)]])
        rhs_interp = -geom.area / h * chi4  # -(I_h u, grad q)_K for q = X, Y
        for e in range(nv):
            mvals = ws.edge_vals[e, :, 1:3]  # (nq, 2)
            un = np.zeros(mvals.shape[0])
            for c in range(2):
                data = np.array(
                    [
                        loc[vertex_dof(e, c)],
                        loc[vertex_dof((e + 1) % nv, c)],
                        loc[edge_mean_dof(nv, e, c)],
                    ]
                )
                un += (_TRACE @ data) * geom.normals[e, c]
            rhs_interp += geom.edge_lengths[e] * np.einsum(
                "q,q,qm->m", _EDGE_RULE.weights, un, mvals
            )

        delta = rhs_exact - rhs_interp
        u[dofmap.interior_dofs[ci]] += -h / geom.area * delta
    return u
