"""Refinement studies shared by the CLI, the scripts and the acceptance suite."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .crack import CrackMesh
from .functions import SideAwareFunction
from .geometries import FunctionSpec, GeometrySpec, generate
from .interpolant import DiscreteFunction, InterpolantOperator, assemble_interpolant
from .mesh import Mesh, MeshTopology, build_topology, shape_regularity
from .norms import broken_error, convergence_rates
from .refine import uniform_refine
from .solver import CoefficientField, solve_prescribed_jump


@dataclass
class Level:
    mesh: Mesh
    topo: MeshTopology
    crack: CrackMesh
    parents: np.ndarray | None  # parent element in the previous level

    @property
    def n(self) -> int:
        return round(np.sqrt(self.mesh.n_elements / 2))


def refinement_levels(spec: GeometrySpec, count: int) -> list[Level]:
    """``count`` meshes: the generated base mesh and its successive red refinements."""
    mesh, crack = generate(spec)
    out = [Level(mesh, build_topology(mesh), crack, None)]
    for _ in range(count - 1):
        mesh, crack, parents = uniform_refine(mesh, crack, return_parents=True)
        out.append(Level(mesh, build_topology(mesh), crack, parents))
    return out


def ancestors(levels: list[Level], fine: int, coarse: int) -> np.ndarray:
    """Element of level ``coarse`` containing each element of level ``fine``."""
    idx = np.arange(levels[fine].mesh.n_elements)
    for k in range(fine, coarse, -1):
        idx = levels[k].parents[idx]
    return idx


def _rates(rows, key_err, key_rate):
    for k in range(1, len(rows)):
        a, b = rows[k - 1], rows[k]
        b[key_rate] = float(np.log(a[key_err] / b[key_err]) / np.log(a["h"] / b["h"]))


def convergence_study(spec: GeometrySpec, fn: FunctionSpec, p: int = 1, levels: int = 4) -> list[dict]:
    """Interpolation errors of Pi_h u on successive refinements; one dict per level."""
    rows = []
    for k, lvl in enumerate(refinement_levels(spec, levels)):
        u = fn.build(spec, lvl.mesh)
        op = assemble_interpolant(lvl.mesh, lvl.topo, lvl.crack, p)
        uh = op.apply(u)
        err = broken_error(u, uh)
        norm_u = broken_error(u, None, mesh=lvl.mesh, degree=2 * p + 3)
        norm_uh = broken_error(None, uh)
        rows.append({
            "level": k, "h": err.h, "L2_error": err.l2_total, "H1_error": err.h1_total,
            "L2_rate": None, "H1_rate": None, "stability_ratio": norm_uh.h1_total / norm_u.h1_total,
        })
    _rates(rows, "L2_error", "L2_rate")
    _rates(rows, "H1_error", "H1_rate")
    return rows


def study_slopes(rows) -> dict:
    h = [r["h"] for r in rows]
    return {
        "L2": convergence_rates(h, [r["L2_error"] for r in rows]).slope,
        "H1": convergence_rates(h, [r["H1_error"] for r in rows]).slope,
    }


def _on_fine(coarse: DiscreteFunction, anc: np.ndarray) -> SideAwareFunction:
    """The coarse solution seen through the fine mesh's element indices."""
    return SideAwareFunction(lambda x, e: coarse.evaluate(x, anc[e]),
                             lambda x, e: coarse.evaluate_gradient(x, anc[e]), "discrete")


def solve_study(spec: GeometrySpec, g: FunctionSpec, p: int = 1, levels: int = 3, extra: int = 2,
                tol: float = 1e-10, alpha: CoefficientField | None = None, start: int = 0) -> list[dict]:
    """Prescribed-jump solves on ``levels`` meshes, measured against a solve ``extra`` levels finer.

    ``start`` skips that many refinements of the generated mesh before the first measured level.
    """
    all_levels = refinement_levels(spec, start + levels + extra)
    measured = list(range(start, start + levels))
    sols = []
    for lvl in [all_levels[k] for k in measured] + all_levels[-1:]:
        op = assemble_interpolant(lvl.mesh, lvl.topo, lvl.crack, p)
        uh, rep = solve_prescribed_jump(op, g.build(spec, lvl.mesh), alpha, tol)
        sols.append((uh, rep))
    ref, ref_rep = sols[-1]
    last = len(all_levels) - 1
    rows = []
    for (uh, rep), k in zip(sols, measured):
        err = broken_error(_on_fine(uh, ancestors(all_levels, last, k)), ref)
        rows.append({
            "level": k, "h": float(shape_regularity(all_levels[k].mesh).h.max()),
            "L2_error": err.l2_total, "H1_error": err.h1_total, "L2_rate": None, "H1_rate": None,
            "iterations": rep.iterations, "residual": rep.residual, "energy": rep.energy,
            "reference_energy": ref_rep.energy,
        })
    _rates(rows, "L2_error", "L2_rate")
    _rates(rows, "H1_error", "H1_rate")
    return rows


def solve_against_exact(spec: GeometrySpec, g: FunctionSpec, exact: FunctionSpec, p: int = 1, levels: int = 3,
                        tol: float = 1e-10) -> list[dict]:
    """Prescribed-jump solves compared with a known exact solution on each level."""
    rows = []
    for k, lvl in enumerate(refinement_levels(spec, levels)):
        op = assemble_interpolant(lvl.mesh, lvl.topo, lvl.crack, p)
        uh, rep = solve_prescribed_jump(op, g.build(spec, lvl.mesh), None, tol)
        err = broken_error(exact.build(spec, lvl.mesh), uh)
        rows.append({"level": k, "h": err.h, "L2_error": err.l2_total, "H1_error": err.h1_total,
                     "iterations": rep.iterations, "residual": rep.residual, "energy": rep.energy})
    return rows
