"""Error functionals, convergence-rate fitting, and table emission."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .element import ModelParams, projectors_for
from .solutions import continuous_norms, mesh_fan_quadrature


@dataclass
class ConvergenceRecord:
    example: str
    iota: float
    lam: float
    mu: float
    n_cells: int
    h: float
    e_pi: float | None = None
    e_inf: float | None = None
    e_u0: float | None = None
    seconds: float | None = None
    rate: float | None = None


def _broken_energy_squares(solution, u, mesh, dofmap, degree):
    """Per-cell squared H1/H2 projection errors and exact-seminorm squares."""
    pts, w, offs = mesh_fan_quadrature(mesh, degree)
    grad_u = solution.gradient(pts)
    hess_u = solution.hessian(pts)
    num1 = num2 = den1 = den2 = 0.0
    u = np.asarray(u, dtype=float)
    for ci in range(mesh.n_cells):
        proj = projectors_for(mesh, ci)
        loc = u[dofmap.cell_dofs(ci)]
        c1 = proj.P1 @ loc
        c2 = proj.P2 @ loc
        sl = slice(offs[ci], offs[ci + 1])
        p, wq = pts[sl], w[sl]
        gm = proj.basis.eval(p, 1)               # (nq, 6, 2)
        hm = proj.basis.eval(p, 2)               # (nq, 6, 2, 2)
        gp = np.empty((len(wq), 2, 2))
        hp = np.empty((len(wq), 2, 2, 2))
        for i in range(2):
            gp[:, i] = np.einsum("m,qmd->qd", c1[i::2], gm)
            hp[:, i] = np.einsum("m,qmde->qde", c2[i::2], hm)
        num1 += wq @ np.sum((grad_u[sl] - gp) ** 2, axis=(1, 2))
        num2 += wq @ np.sum((hess_u[sl] - hp) ** 2, axis=(1, 2, 3))
        den1 += wq @ np.sum(grad_u[sl] ** 2, axis=(1, 2))
        den2 += wq @ np.sum(hess_u[sl] ** 2, axis=(1, 2, 3))
    return num1, num2, den1, den2


def energy_error_epi(solution, u, mesh, dofmap, params: ModelParams,
                     degree: int = 8) -> float:
    """Relative broken energy error of the solved DOF vector.

    The solution is compared through its elementwise polynomial projections
    (strain projector for the H1 part, strain-gradient projector for the
    iota-weighted H2 part); the denominator is the continuous energy seminorm.
    """
    num1, num2, den1, den2 = _broken_energy_squares(solution, u, mesh, dofmap, degree)
    i2 = params.iota**2
    den = den1 + i2 * den2
    if den <= 0.0:
        raise ValueError("exact solution has zero energy seminorm")
    return math.sqrt((num1 + i2 * num2) / den)


def max_error_einf(solution, u, mesh, dofmap) -> float:
    """Relative maximum vertex error (Euclidean magnitude of the 2-vector)."""
    exact = solution.displacement(mesh.vertices)
    emax = np.linalg.norm(exact, axis=1).max()
    if emax == 0.0:
        raise ValueError("exact solution vanishes at every vertex")
    u = np.asarray(u, dtype=float)
    uh = np.column_stack([u[dofmap.vertex_dofs[:, 0]], u[dofmap.vertex_dofs[:, 1]]])
    return np.linalg.norm(exact - uh, axis=1).max() / emax


def reduced_energy_error(u0_solution, u, mesh, dofmap, params: ModelParams,
                         f_l2: float | None = None, degree: int = 8) -> float:
    """Broken energy distance to the reduced solution, scaled by the force norm."""
    num1, num2, _, _ = _broken_energy_squares(u0_solution, u, mesh, dofmap, degree)
    num = num1 + params.iota**2 * num2
    if num == 0.0:
        return 0.0
    if f_l2 is None:
        f_l2 = continuous_norms(u0_solution, params, mesh, degree)["f_l2"]
    return math.sqrt(num) / f_l2


def fit_rate(records, field: str | None = None) -> float:
    """Least-squares slope of log(error) against log(h) over a sweep."""
    hs, errs = [], []
    for rec in records:
        e = getattr(rec, field) if field else (
            rec.e_pi if rec.e_pi is not None else rec.e_u0
        )
        if e is None:
            raise ValueError(f"record for N={rec.n_cells} has no error value")
        hs.append(rec.h)
        errs.append(e)
    if len(hs) < 2:
        raise ValueError("need at least two records to fit a rate")
    logh = np.log(np.asarray(hs))
    if np.ptp(logh) == 0.0:
        raise ValueError("records have coincident mesh sizes")
    loge = np.log(np.asarray(errs))
    return float(np.polyfit(logh, loge, 1)[0])


CSV_HEADER = "example,iota,lambda,mu,N,h,E_pi,E_inf,E_u0,rate"


def _fmt(x):
    return "" if x is None else f"{x:.6e}"


def emit_report(records, format: str = "csv") -> str:
    """Render convergence records as CSV or a markdown table."""
    if format == "csv":
        lines = [CSV_HEADER]
        for r in records:
            lines.append(
                ",".join(
                    [
                        r.example,
                        _fmt(r.iota),
                        _fmt(r.lam),
                        _fmt(r.mu),
                        str(r.n_cells),
                        _fmt(r.h),
                        _fmt(r.e_pi),
                        _fmt(r.e_inf),
                        _fmt(r.e_u0),
                        _fmt(r.rate),
                    ]
                )
            )
        return "\n".join(lines) + "\n"
    if format == "md":
        groups: dict[tuple, list[ConvergenceRecord]] = {}
        for r in records:
            groups.setdefault((r.example, r.iota, r.lam, r.mu), []).append(r)
        ns = sorted({r.n_cells for r in records})
        head = "| example | iota | lambda | " + " | ".join(f"N={n}" for n in ns) + " | rate |"
        sep = "|" + "---|" * (len(ns) + 4)
        lines = [head, sep]
        for (ex, iota, lam, mu), rows in groups.items():
            by_n = {r.n_cells: r for r in rows}
            cells = []
            for n in ns:
                r = by_n.get(n)
                e = None if r is None else (r.e_pi if r.e_pi is not None else r.e_u0)
                cells.append("" if e is None else f"{e:.4e}")
            rate = next((r.rate for r in rows if r.rate is not None), None)
            lines.append(
                f"| {ex} | {iota:.0e} | {lam:.0e} | "
                + " | ".join(cells)
                + f" | {'' if rate is None else f'{rate:.2f}'} |"
            )
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown report format {format!r}")


def emit_loglog(records) -> str:
    """Two-column (log10 h, log10 E) dump for external plotting."""
    lines = []
    for r in records:
        e = r.e_pi if r.e_pi is not None else r.e_u0
        lines.append(f"{math.log10(r.h):.12g} {math.log10(e):.12g}")
    return "\n".join(lines) + "\n"
