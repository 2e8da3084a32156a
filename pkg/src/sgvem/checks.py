"""Numerical property suite: consistency, reproduction, kernels, commuting.

These checks are the runnable counterparts of the method's structural
guarantees.  Every check compares the production code paths against
independently assembled oracles (pointwise quadrature of exact integrands,
dense eigendecompositions), so a sign or scaling defect anywhere in the
projector pipeline shows up here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .assembly import assemble, build_dof_map
from .element import (
    ModelParams,
    build_dof_matrix,
    build_pi1,
    build_pi2,
    build_pidiv,
    build_pigraddiv,
    build_projectors,
    cell_basis,
    commuting_interpolant,
    local_stiffness,
    projectors_for,
)
from .mesh import PolygonMesh, generate_cvt_mesh, geometry_from_vertices
from .poly import strain_divergence_tables
from .solutions import ExactSolution, SinFactor, Term, cos_factor


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    residual: float
    limit: float
    detail: str = ""

    def __str__(self):
        tag = "PASS" if self.passed else "FAIL"
        extra = f"  ({self.detail})" if self.detail else ""
        return f"{tag}  {self.name}: max residual {self.residual:.3e} (limit {self.limit:.1e}){extra}"


def random_convex_polygon(rng: np.random.Generator, n_vertices: int) -> np.ndarray:
    """Random convex CCW polygon with exactly ``n_vertices`` corners.

    Uses the random-increment construction (Valtr): edge vectors with zero sum
    sorted by angle always close up into a convex loop.
    """
    for _ in range(100):
        deltas = []
        for _axis in range(2):
            coords = np.sort(rng.uniform(0.0, 1.0, n_vertices))
            lo, hi = coords[0], coords[-1]
            inner = coords[1:-1]
            side = rng.random(len(inner)) < 0.5
            up = np.concatenate([[lo], inner[side], [hi]])
            down = np.concatenate([[lo], inner[~side], [hi]])
            d = np.concatenate([np.diff(up), -np.diff(down)])
            deltas.append(rng.permutation(d))
        vec = np.column_stack(deltas)
        ang = np.arctan2(vec[:, 1], vec[:, 0])
        vec = vec[np.argsort(ang)]
        pts = np.cumsum(vec, axis=0)
        pts = (pts - pts.mean(axis=0)) * rng.uniform(0.5, 1.5) + rng.uniform(-1.0, 1.0, 2)
        try:
            geom = geometry_from_vertices(pts)
        except Exception:
            continue
        # keep to shape-regular samples; the method's geometric assumption
        # excludes needle cells, and so do the suite tolerances
        if geom.min_fan_angle() < 12.0 or geom.diameter / geom.edge_lengths.min() > 10.0:
            continue
        return pts
    raise RuntimeError("could not sample a convex polygon")


def random_trig_field(rng: np.random.Generator, n_terms: int = 3) -> ExactSolution:
    """Random smooth displacement field with exact derivative chains."""
    comps = []
    for _ in range(2):
        terms = []
        for _ in range(n_terms):
            kx, ky = rng.integers(1, 3, 2)
            fx = SinFactor(np.pi * kx) if rng.random() < 0.5 else cos_factor(np.pi * kx)
            fy = SinFactor(np.pi * ky) if rng.random() < 0.5 else cos_factor(np.pi * ky)
            terms.append(Term(rng.uniform(-1.0, 1.0), fx, fy))
        comps.append(tuple(terms))
    return ExactSolution("random-trig", tuple(comps))


def exact_bilinear_gram(geom, params: ModelParams, degree: int = 6) -> np.ndarray:
    """Oracle: the continuous bilinear form on the 12 vector monomials.

    Assembled purely from pointwise derivative evaluations and fan quadrature;
    shares no code with the coefficient-space tables used by the projectors.
    """
    basis = cell_basis(geom)
    pts, w = geom.fan_quadrature(degree)
    g = basis.eval(pts, 1)
    H = basis.eval(pts, 2)
    nq = len(w)
    eps = np.zeros((nq, 12, 2, 2))
    geps = np.zeros((nq, 12, 2, 2, 2))
    div = np.zeros((nq, 12))
    gdiv = np.zeros((nq, 12, 2))
    for m in range(6):
        for c in range(2):
            a = 2 * m + c
            for i in range(2):
                for j in range(2):
                    eps[:, a, i, j] = 0.5 * (
                        (i == c) * g[:, m, j] + (j == c) * g[:, m, i]
                    )
                    for l in range(2):
                        geps[:, a, l, i, j] = 0.5 * (
                            (i == c) * H[:, m, l, j] + (j == c) * H[:, m, l, i]
                        )
            div[:, a] = g[:, m, c]
            gdiv[:, a, :] = H[:, m, c, :]
    mu, lam, i2 = params.mu, params.lam, params.iota**2
    A = 2 * mu * np.einsum("q,qaij,qbij->ab", w, eps, eps)
    A += lam * np.einsum("q,qa,qb->ab", w, div, div)
    A += i2 * 2 * mu * np.einsum("q,qalij,qblij->ab", w, geps, geps)
    A += i2 * lam * np.einsum("q,qai,qbi->ab", w, gdiv, gdiv)
    return A


def rigid_motion_coefficients() -> np.ndarray:
    """Coefficient vectors (interleaved) of the rigid motions in (P2)^2."""
    rm = np.zeros((3, 12))
    rm[0, 0] = 1.0              # (1, 0)
    rm[1, 1] = 1.0              # (0, 1)
    rm[2, 2 * 2 + 0] = -1.0     # (-Y, X): component 0 = -Y
    rm[2, 2 * 1 + 1] = 1.0      # component 1 = X
    return rm


def check_projector_reproduction(geoms, jump_sign: float = 1.0,
                                 limit: float = 1e-12) -> CheckResult:
    """P1/P2 reproduce (P2)^2; Pdiv/Pgdiv match the exact derivative maps.

    The map compositions are accumulated in extended precision: entries of the
    divergence projector grow like 1/h_K, and evaluating the product in double
    would bury the true defect under cancellation noise.
    """
    worst = 0.0
    for geom in geoms:
        D = build_dof_matrix(geom)
        Dl = D.astype(np.longdouble)
        tables = strain_divergence_tables(cell_basis(geom))
        I = np.eye(12)

        def defect(P, target):
            return float(np.abs(P.astype(np.longdouble) @ Dl - target).max())

        worst = max(worst, defect(build_pi1(geom, D), I))
        worst = max(worst, defect(build_pi2(geom, D, jump_sign=jump_sign), I))
        worst = max(worst, defect(build_pidiv(geom, D), tables.div))
        worst = max(worst, defect(build_pigraddiv(geom, D), tables.grad_div[:, 0, :]))
    return CheckResult("projector reproduction", worst <= limit, worst, limit)


def check_patch_test(geoms, params: ModelParams, limit: float = 1e-10) -> CheckResult:
    """Discrete form equals the continuous form on polynomial pairs."""
    worst = 0.0
    for geom in geoms:
        proj = build_projectors(geom)
        A_K = local_stiffness(proj, params)
        discrete = proj.D.T @ A_K @ proj.D
        exact = exact_bilinear_gram(geom, params)
        scale = np.maximum(1.0, np.abs(exact))
        worst = max(worst, (np.abs(discrete - exact) / scale).max())
    return CheckResult("patch test (consistency)", worst <= limit, worst, limit)


def check_kernel(geoms, params: ModelParams, limit: float = 1e-9) -> CheckResult:
    """Local stiffness kernels are exactly the three rigid motions."""
    worst = 0.0
    ok = True
    detail = ""
    rm = rigid_motion_coefficients()
    for geom in geoms:
        proj = build_projectors(geom)
        A_K = local_stiffness(proj, params)
        scale = np.linalg.norm(A_K, 2)
        ev = np.linalg.eigvalsh(A_K)
        n_null = int((ev < limit * scale).sum())
        if n_null != 3:
            ok = False
            detail = f"cell with {geom.n_vertices} vertices: kernel dim {n_null}"
        res = max(
            np.linalg.norm(A_K @ (proj.D @ r)) / scale for r in rm
        )
        worst = max(worst, res)
    return CheckResult("rigid-motion kernel", ok and worst <= limit, worst, limit, detail)


def check_global_spd(mesh: PolygonMesh, params: ModelParams,
                     limit: float = 0.0) -> CheckResult:
    """Dense eigenvalue oracle: the BC-restricted matrix is positive definite."""
    dofmap = build_dof_map(mesh)
    system = assemble(mesh, params, lambda p: np.zeros((len(p), 2)), dofmap)
    free = np.flatnonzero(system.free_mask)
    dense = system.matrix.toarray()[np.ix_(free, free)]
    lam_min = float(np.linalg.eigvalsh(dense)[0])
    return CheckResult(
        "global SPD after BCs", lam_min > limit, lam_min, limit,
        f"{len(free)} free DOFs, min eigenvalue {lam_min:.3e}",
    )


def check_commuting(mesh: PolygonMesh, seed: int = 0, n_fields: int = 5,
                    limit: float = 1e-9) -> CheckResult:
    """Projected divergence data of the corrected interpolant match the field's."""
    rng = np.random.default_rng(seed)
    dofmap = build_dof_map(mesh)
    worst = 0.0
    for _ in range(n_fields):
        sol = random_trig_field(rng)
        uI = commuting_interpolant(sol, mesh, dofmap)
        err_div = norm_div = err_gd = norm_gd = 0.0
        for ci in range(mesh.n_cells):
            geom = mesh.geometry(ci)
            proj = projectors_for(mesh, ci)
            loc = np.asarray(uI)[dofmap.cell_dofs(ci)]
            pts, w = geom.fan_quadrature(8)
            V = proj.basis.eval(pts)[:, :3]
            div_ex = sol.divergence(pts)
            M1 = (V.T * w) @ V
            c_ex = np.linalg.solve(M1, V.T @ (w * div_ex))
            diff = V @ (proj.Pdiv @ loc - c_ex)
            err_div += w @ diff**2
            norm_div += w @ div_ex**2
            gd = sol.div_gradient(pts)
            gd_ex = (w @ gd) / geom.area
            err_gd += geom.area * np.sum((proj.Pgdiv @ loc - gd_ex) ** 2)
            norm_gd += w @ np.sum(gd**2, axis=1)
        worst = max(worst, np.sqrt(err_div / norm_div), np.sqrt(err_gd / norm_gd))
    return CheckResult("commuting interpolant", worst <= limit, worst, limit)


def suite_geometries(seed: int = 0, n_polygons: int = 20):
    """Random convex polygons with 3 to 10 vertices."""
    rng = np.random.default_rng(seed)
    return [
        random_convex_polygon(rng, int(rng.integers(3, 11)))
        for _ in range(n_polygons)
    ]


def run_property_suite(seed: int = 0, jump_sign: float = 1.0) -> list[CheckResult]:
    """All structural checks on random polygons and small meshes."""
    from .mesh import generate_structured_triangles

    params = ModelParams(lam=1.0, mu=1.0, iota=0.5)
    geoms = [geometry_from_vertices(p) for p in suite_geometries(seed)]
    results = [
        check_projector_reproduction(geoms, jump_sign=jump_sign),
        check_patch_test(geoms, params),
        check_kernel(geoms, params),
        check_global_spd(generate_structured_triangles(3), params),
        check_commuting(generate_cvt_mesh(64, seed=seed + 3, lloyd_iters=50)),
    ]
    for n, s in ((12, seed + 1), (24, seed + 2)):
        mesh = generate_cvt_mesh(n, seed=s, lloyd_iters=50)
        cells = [mesh.geometry(i) for i in range(mesh.n_cells)]
        res = check_patch_test(cells, params)
        results.append(
            CheckResult(
                f"patch test on CVT mesh ({mesh.n_cells} cells)",
                res.passed, res.residual, res.limit,
            )
        )
    return results
