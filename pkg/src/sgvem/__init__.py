"""Lowest-order C0 nonconforming virtual element solver for strain gradient elasticity."""

from .mesh import (
    ElementGeometry,
    MeshError,
    PolygonMesh,
    QualityReport,
    compute_geometry,
    generate_cvt_mesh,
    generate_structured_triangles,
    geometry_from_vertices,
    load_mesh,
    mesh_quality,
    save_mesh,
)
from .element import (
    LocalProjectors,
    ModelParams,
    build_dof_matrix,
    build_pi1,
    build_pi2,
    build_pidiv,
    build_pigraddiv,
    build_projectors,
    commuting_interpolant,
    interpolate_dofs,
    local_load,
    local_stiffness,
    stabilization,
)
from .assembly import DofVector, GlobalDofMap, LinearSystem, assemble, build_dof_map, solve
from .solutions import ExactSolution, body_force, continuous_norms, example_solution
from .errors import (
    ConvergenceRecord,
    emit_loglog,
    emit_report,
    energy_error_epi,
    fit_rate,
    max_error_einf,
    reduced_energy_error,
)
from .driver import meshes_for_sweep, run_sweep, solve_example
from .checks import CheckResult, run_property_suite

__version__ = "0.1.0"
