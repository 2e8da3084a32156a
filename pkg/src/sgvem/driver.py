"""One-stop solve runners shared by the CLI, the demos, and the test suites."""

from __future__ import annotations

import time

import numpy as np

from .assembly import assemble, build_dof_map, solve
from .element import ModelParams, interpolate_dofs
from .errors import (
    ConvergenceRecord,
    energy_error_epi,
    fit_rate,
    max_error_einf,
    reduced_energy_error,
)
from .mesh import PolygonMesh, generate_cvt_mesh, generate_structured_triangles
from .solutions import body_force, example_solution


def solve_example(example: str, params: ModelParams, mesh: PolygonMesh,
                  dofmap=None, zero_force: bool = False, dump_path=None):
    """Solve one benchmark on one mesh; returns ``(record, dofs, dofmap)``.

    Boundary DOFs follow the benchmark's convention: interpolated exact values
    for the manufactured fields (which reduces to zero data for the compatible
    one); ``zero_force`` replaces the load with zero and keeps the clamped
    problem.  ``dump_path`` writes the assembled matrix as coordinate text.
    """
    t0 = time.perf_counter()
    if dofmap is None:
        dofmap = build_dof_map(mesh)
    solution = example_solution(example, params)
    if zero_force:
        force = lambda pts: np.zeros((len(np.atleast_2d(pts)), 2))
    else:
        force = body_force(solution, params)
    if solution.essential_bc == "interpolated" and not zero_force:
        bc = interpolate_dofs(solution, mesh, dofmap)
    else:
        bc = None
    system = assemble(mesh, params, force, dofmap, boundary_values=bc,
                      dump_path=dump_path)
    u = solve(system)
    try:
        e_inf = max_error_einf(solution, u, mesh, dofmap)
    except ValueError:
        e_inf = None  # exact solution vanishes at every mesh vertex
    record = ConvergenceRecord(
        example=example,
        iota=params.iota,
        lam=params.lam,
        mu=params.mu,
        n_cells=mesh.n_cells,
        h=mesh.max_diameter(),
        e_pi=energy_error_epi(solution, u, mesh, dofmap, params),
        e_inf=e_inf,
        e_u0=(
            reduced_energy_error(solution, u, mesh, dofmap, params)
            if solution.reduced_force
            else None
        ),
        seconds=time.perf_counter() - t0,
    )
    return record, u, dofmap


def meshes_for_sweep(cells=(32, 64, 128, 256, 512), tri=None,
                     seed: int = 7, lloyd: int = 400):
    """The meshes of a refinement sweep: CVT by cell count or structured triangles."""
    if tri is not None:
        return [generate_structured_triangles(n) for n in tri]
    return [generate_cvt_mesh(n, seed=seed, lloyd_iters=lloyd) for n in cells]


def run_sweep(example: str, params: ModelParams, meshes) -> list[ConvergenceRecord]:
    """Solve a refinement sequence; the trailing record carries the fitted rate."""
    records = []
    for mesh in meshes:
        rec, _, _ = solve_example(example, params, mesh)
        records.append(rec)
    if len(records) >= 2:
        field = "e_u0" if records[-1].e_u0 is not None else "e_pi"
        records[-1].rate = fit_rate(records, field)
    return records
