"""Command-line driver.

Every subcommand prints a machine-readable report (JSON, or CSV for
``convergence``). Library failures exit with status 2 and a JSON diagnostic
naming the error class.
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .crack import enumerate_bridges, region_labels, validate_crack
from .errors import JumpInterpError
from .geometries import FUNCTIONS, GEOMETRIES, FunctionSpec, GeometrySpec, generate
from .interpolant import assemble_interpolant, build_dof_table
from .mesh import build_topology, shape_regularity, solid_angle_check
from .mesh_io import load_mesh, serialize_mesh
from .norms import broken_error, convergence_rates, rates_csv
from .studies import convergence_study, solve_against_exact, solve_study

EXIT_FAILURE = 2


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json(doc) -> str:
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def _geometry(args) -> GeometrySpec:
    spec = GeometrySpec(args.geometry, args.n, args.margin)
    spec.check()
    return spec


def crack_diagnostics(mesh, topo, crack, p: int = 1) -> list:
    """Per node touching Gamma: coordinates, side count, side sizes and bridges."""
    table = build_dof_table(mesh, topo, crack, p)
    out = []
    for i in np.nonzero(table.on_gamma)[0]:
        dec = table.sides[i]
        bridges = enumerate_bridges(dec, crack, topo, mesh)
        out.append({
            "node": int(i),
            "coords": [float(x) for x in table.nodes.coords[i]],
            "q": dec.q,
            "side_sizes": [len(s) for s in dec.sides],
            "bridges": [{"pair": list(b.pair), "face": list(b.face)} for b in bridges],
        })
    return out


def cmd_generate(args) -> int:
    mesh, crack = generate(_geometry(args))
    _emit(serialize_mesh(mesh, crack), args.out)
    return 0


def cmd_validate(args) -> int:
    mesh, crack = load_mesh(args.mesh)
    topo = build_topology(mesh)
    crack = validate_crack(mesh, topo, crack)
    shape = shape_regularity(mesh)
    solid = solid_angle_check(mesh, topo, shape)
    table = build_dof_table(mesh, topo, crack, args.p)
    q = table.q
    report = {
        "ok": True,
        "n_vertices": mesh.n_vertices,
        "n_elements": mesh.n_elements,
        "n_gamma_faces": len(crack),
        "regions": region_labels(mesh, topo, crack).count,
        "shape_gamma": shape.gamma,
        "max_star": solid.max_star,
        "star_bound": solid.bound,
        "n_dofs": table.n_dofs,
        "q_histogram": {str(k): int(v) for k, v in zip(*np.unique(q, return_counts=True))},
    }
    _emit(_json(report), args.out)
    return 0


def cmd_interpolate(args) -> int:
    spec = _geometry(args)
    mesh, crack = generate(spec)
    topo = build_topology(mesh)
    op = assemble_interpolant(mesh, topo, crack, args.p)
    u = FunctionSpec(args.function, args.seed, args.p).build(spec, mesh)
    uh = op.apply(u)
    err = broken_error(u, uh)
    report = {
        "geometry": spec.name, "n": spec.n, "p": args.p, "function": args.function,
        "n_nodes": op.table.n_nodes, "n_dofs": op.table.n_dofs,
        "h": err.h, "L2_error": err.l2_total, "H1_error": err.h1_total,
        "max_terms_per_dof": int(op.term_counts().max()),
        "coefficients": [float(c) for c in uh.coeffs],
    }
    _emit(_json(report), args.out)
    if args.provenance:
        with open(args.provenance, "w") as fh:
            fh.write(op.provenance_json())
    return 0


def cmd_convergence(args) -> int:
    rows = convergence_study(_geometry(args), FunctionSpec(args.function, args.seed, args.p), args.p, args.levels)
    _emit(rates_csv(rows), args.out)
    return 0


def cmd_solve(args) -> int:
    spec = _geometry(args)
    g = FunctionSpec(args.g, args.seed, args.p)
    if args.g in ("indicator", "zero"):
        # both are exact discrete solutions: piecewise constant off Gamma, zero near the boundary
        rows = solve_against_exact(spec, g, g, args.p, args.levels, args.tol)
        reference = "exact"
    else:
        rows = solve_study(spec, g, args.p, args.levels, args.extra, args.tol, start=args.start)
        reference = f"refined x{2 ** args.extra}"
    report = {"geometry": spec.name, "g": args.g, "p": args.p, "reference": reference, "levels": rows}
    if reference != "exact" and len(rows) >= 3:
        report["H1_slope"] = convergence_rates([r["h"] for r in rows], [r["H1_error"] for r in rows]).slope
    _emit(_json(report), args.out)
    return 0


def cmd_diagnose(args) -> int:
    if args.mesh:
        mesh, crack = load_mesh(args.mesh)
    else:
        mesh, crack = generate(_geometry(args))
    topo = build_topology(mesh)
    crack = validate_crack(mesh, topo, crack)
    _emit(_json(crack_diagnostics(mesh, topo, crack, args.p)), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="jumpinterp", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def geometry_flags(p):
        p.add_argument("--geometry", choices=GEOMETRIES, default="theta")
        p.add_argument("--n", type=int, default=8)
        p.add_argument("--margin", type=int, default=1)

    def common(p):
        p.add_argument("--p", type=int, default=1, choices=(1, 2, 3))
        p.add_argument("--out", default=None)

    g = sub.add_parser("generate", help="write a canonical mesh file")
    geometry_flags(g)
    g.add_argument("--out", default=None)
    g.set_defaults(func=cmd_generate)

    v = sub.add_parser("validate", help="check a mesh file and its crack")
    v.add_argument("mesh")
    common(v)
    v.set_defaults(func=cmd_validate)

    it = sub.add_parser("interpolate", help="apply the interpolant to a built-in field")
    geometry_flags(it)
    common(it)
    it.add_argument("--function", choices=FUNCTIONS, default="jumpy-sine")
    it.add_argument("--seed", type=int, default=0)
    it.add_argument("--provenance", default=None, help="write per-DOF functional provenance JSON here")
    it.set_defaults(func=cmd_interpolate)

    c = sub.add_parser("convergence", help="interpolation error table under refinement (CSV)")
    geometry_flags(c)
    common(c)
    c.add_argument("--levels", type=int, default=4)
    c.add_argument("--function", choices=FUNCTIONS, default="jumpy-sine")
    c.add_argument("--seed", type=int, default=0)
    c.set_defaults(func=cmd_convergence)

    s = sub.add_parser("solve", help="prescribed-jump Laplace problem")
    geometry_flags(s)
    common(s)
    s.add_argument("--g", choices=FUNCTIONS, default="solve-g")
    s.add_argument("--levels", type=int, default=3)
    s.add_argument("--extra", type=int, default=2, help="refinements of the reference beyond the finest level")
    s.add_argument("--start", type=int, default=0, help="refinements of the generated mesh before the first level")
    s.add_argument("--tol", type=float, default=1e-10)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_solve)

    d = sub.add_parser("diagnose", help="per-node crack diagnostics (sides, bridges)")
    geometry_flags(d)
    common(d)
    d.add_argument("--mesh", default=None)
    d.set_defaults(func=cmd_diagnose)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except JumpInterpError as exc:
        sys.stdout.write(_json({"ok": False, "error": exc.name, "message": str(exc)}))
        return EXIT_FAILURE
    except OSError as exc:
        sys.stdout.write(_json({"ok": False, "error": "IOError", "message": str(exc)}))
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
