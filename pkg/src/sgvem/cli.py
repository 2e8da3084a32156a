"""Command-line interface: mesh generation, solves, sweeps, property checks.

Exit codes: 0 success, 1 usage error, 2 validation error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .assembly import build_dof_map
from .checks import run_property_suite
from .driver import meshes_for_sweep, run_sweep, solve_example
from .element import ModelParams
from .errors import emit_loglog, emit_report
from .mesh import (
    MeshError,
    generate_cvt_mesh,
    generate_structured_triangles,
    load_mesh,
    mesh_quality,
    save_mesh,
)

USAGE_ERROR, VALIDATION_ERROR, NUMERICAL_ERROR = 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(USAGE_ERROR)


def _int_list(text: str):
    try:
        return [int(t) for t in text.split(",") if t]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a comma list of integers: {text!r}") from exc


PRESETS = {
    "table1-top": dict(example="exam1a", lam=1.0, mu=1.0,
                       iotas=(1.0, 1e-1, 1e-2, 1e-3, 1e-4, 1e-5),
                       cells=(32, 64, 128, 256, 512)),
    "table1-bottom": dict(example="exam1b", lam=1.0, mu=1.0,
                          iotas=(1.0, 1e-1, 1e-2, 1e-3, 1e-4, 1e-5),
                          cells=(32, 64, 128, 256, 512)),
    "table2": dict(example="exam3", mu=1.0, iota=1e-5,
                   lams=(10.0, 1e2, 1e3, 1e4, 1e5), cells=(100,)),
    "fig1": dict(example="divfree", lam=1e8, mu=1.0, iota=1e-5,
                 cells=(32, 64, 128, 256, 512), tri=(2, 4, 8, 16, 32)),
}


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="sgvem", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def add_mesh_source(q, default_cells=None):
        q.add_argument("--cells", type=_int_list, default=default_cells,
                       help="comma list of polygon counts for generated CVT meshes")
        q.add_argument("--tri", type=_int_list, default=None,
                       help="comma list of per-side counts for triangle meshes")
        q.add_argument("--seed", type=int, default=7)
        q.add_argument("--lloyd", type=int, default=400)
        q.add_argument("--mesh-file", default=None, help="load this mesh instead of generating")

    def add_params(q):
        q.add_argument("--example", default="exam1a")
        q.add_argument("--iota", type=float, default=1e-5)
        q.add_argument("--lambda", dest="lam", type=float, default=1.0)
        q.add_argument("--mu", type=float, default=1.0)

    q = sub.add_parser("mesh", help="generate and validate a mesh")
    add_mesh_source(q)
    q.add_argument("--out", default="mesh.json")

    q = sub.add_parser("solve", help="solve one benchmark on one mesh")
    add_mesh_source(q)
    add_params(q)
    q.add_argument("--out", default="solution.csv")
    q.add_argument("--format", choices=("csv", "md"), default="csv")
    q.add_argument("--zero-force", action="store_true",
                   help="replace the body force by zero (clamped homogeneous run)")
    q.add_argument("--dump-matrix", default=None, help=argparse.SUPPRESS)

    q = sub.add_parser("convergence", help="refinement sweep with fitted rate")
    add_mesh_source(q, default_cells=None)
    add_params(q)
    q.add_argument("--preset", choices=sorted(PRESETS), default=None)
    q.add_argument("--out", default=None, help="write the report here (default: stdout)")
    q.add_argument("--format", choices=("csv", "md"), default="csv")
    q.add_argument("--loglog-out", default=None,
                   help="also dump two-column (log h, log E) data per sweep")

    q = sub.add_parser("check", help="run the numerical property suite")
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--pi2-jump-sign", type=float, default=1.0, help=argparse.SUPPRESS)
    return p


def _single_mesh(args):
    if args.mesh_file:
        return load_mesh(args.mesh_file)
    if args.tri:
        return generate_structured_triangles(args.tri[0])
    cells = args.cells[0] if args.cells else 32
    return generate_cvt_mesh(cells, seed=args.seed, lloyd_iters=args.lloyd)


def cmd_mesh(args) -> int:
    mesh = _single_mesh(args)
    save_mesh(mesh, args.out)
    print(f"wrote {args.out}")
    print(mesh_quality(mesh))
    return 0


def cmd_solve(args) -> int:
    mesh = _single_mesh(args)
    params = ModelParams(lam=args.lam, mu=args.mu, iota=args.iota)
    dofmap = build_dof_map(mesh)
    record, dofs, _ = solve_example(
        args.example, params, mesh, dofmap,
        zero_force=args.zero_force, dump_path=args.dump_matrix,
    )
    base = args.out[:-4] if args.out.endswith(".csv") else args.out
    dof_path = base + ".dofs.txt"
    np.savetxt(dof_path, np.asarray(dofs, dtype=float))
    with open(args.out, "w") as fh:
        fh.write(emit_report([record], args.format))
    print(f"wrote {args.out} and {dof_path}")
    print(emit_report([record], args.format), end="")
    return 0


def _convergence_runs(args):
    """Yield (params, example, meshes) tuples for the requested sweeps."""
    if args.preset:
        preset = PRESETS[args.preset]
        example = preset["example"]
        if "lams" in preset:  # parameter sweep on one mesh
            mesh = generate_cvt_mesh(preset["cells"][0], seed=args.seed, lloyd_iters=args.lloyd)
            for lam in preset["lams"]:
                yield ModelParams(lam=lam, mu=preset["mu"], iota=preset["iota"]), example, [mesh]
            return
        meshes = meshes_for_sweep(cells=preset["cells"], seed=args.seed, lloyd=args.lloyd)
        iotas = preset.get("iotas", (preset.get("iota"),))
        for iota in iotas:
            yield ModelParams(lam=preset["lam"], mu=preset["mu"], iota=iota), example, meshes
        if "tri" in preset:
            tmeshes = meshes_for_sweep(tri=preset["tri"])
            for iota in iotas:
                yield ModelParams(lam=preset["lam"], mu=preset["mu"], iota=iota), example, tmeshes
        return
    if args.mesh_file:
        raise MeshError("convergence sweeps need generated meshes, not --mesh-file")
    if args.tri:
        meshes = meshes_for_sweep(tri=args.tri)
    else:
        cells = args.cells or [32, 64, 128, 256, 512]
        if len(cells) < 2:
            raise ValueError("need at least two cell counts for a sweep")
        meshes = meshes_for_sweep(cells=cells, seed=args.seed, lloyd=args.lloyd)
    yield ModelParams(lam=args.lam, mu=args.mu, iota=args.iota), args.example, meshes


def cmd_convergence(args) -> int:
    all_records = []
    loglog = []
    for params, example, meshes in _convergence_runs(args):
        records = run_sweep(example, params, meshes)
        all_records.extend(records)
        if args.loglog_out and len(records) >= 2:
            loglog.append(emit_loglog(records))
    text = emit_report(all_records, args.format)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
        print(f"wrote {args.out}")
    print(text, end="")
    if args.loglog_out:
        with open(args.loglog_out, "w") as fh:
            fh.write("\n".join(loglog))
        print(f"wrote {args.loglog_out}")
    return 0


def cmd_check(args) -> int:
    results = run_property_suite(seed=args.seed, jump_sign=args.pi2_jump_sign)
    for res in results:
        print(res)
    if all(r.passed for r in results):
        print("all checks passed")
        return 0
    print("property suite FAILED", file=sys.stderr)
    return NUMERICAL_ERROR


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    for attr in ("cells", "tri"):
        values = getattr(args, attr, None)
        if values is not None and any(v < 1 for v in values):
            parser.error(f"--{attr} entries must be positive")
    handlers = {
        "mesh": cmd_mesh,
        "solve": cmd_solve,
        "convergence": cmd_convergence,
        "check": cmd_check,
    }
    try:
        return handlers[args.command](args)
    except MeshError as exc:
        print(f"mesh error: {exc}", file=sys.stderr)
        return VALIDATION_ERROR
    except ValueError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return VALIDATION_ERROR
    except ArithmeticError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return NUMERICAL_ERROR


if __name__ == "__main__":
    sys.exit(main())
