"""Acceptance gate: ten criteria at their stated tolerances.

Each test records one PASS/FAIL line; the lines are printed in the pytest
terminal summary, or directly when this file is run as a script.
"""
import time
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from jumpinterp.crack import enumerate_bridges, bfs_spanning_tree
from jumpinterp.geometries import GEOMETRIES, FunctionSpec, GeometrySpec, generate
from jumpinterp.interpolant import (
    DiscreteFunction, assemble_interpolant, discrete_jump_lift, solve_bridge_coefficients, two_sided_trace,
)
from jumpinterp.mesh import build_topology, solid_angle_check
from jumpinterp.norms import broken_error
from jumpinterp.refine import uniform_refine
from jumpinterp.studies import convergence_study, refinement_levels, solve_study, study_slopes
from jumpinterp.solver import solve_prescribed_jump

RESULTS: dict = {}


def record(number: int, title: str, ok: bool, detail: str) -> None:
    RESULTS[number] = f"[{'PASS' if ok else 'FAIL'}] criterion {number:2d} {title}: {detail}"


def build(name, n=8, p=1):
    spec = GeometrySpec(name, n)
    mesh, crack = generate(spec)
    topo = build_topology(mesh)
    return spec, mesh, topo, crack, assemble_interpolant(mesh, topo, crack, p)


@lru_cache(maxsize=None)
def cached(name, n=8, p=1):
    return build(name, n, p)


def split_spread(op, coeffs):
    """Largest coefficient difference between sides of the same node."""
    t = op.table
    lo = np.minimum.reduceat(coeffs, t.offsets[:-1])
    hi = np.maximum.reduceat(coeffs, t.offsets[:-1])
    return float((hi - lo).max())


def test_criterion_01_projection():
    start = time.perf_counter()
    rng = np.random.default_rng(1)
    worst = 0.0
    for name in GEOMETRIES:
        for p in (1, 2, 3):
            op = build(name, 8, p)[4]
            for _ in range(100):
                uh = DiscreteFunction(op.table, rng.normal(size=op.table.n_dofs))
                worst = max(worst, float(np.abs(op.apply(uh.as_side_aware()).coeffs - uh.coeffs).max()))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-10 and elapsed < 10
    record(1, "projection", ok, f"max |Pi u_h - u_h| = {worst:.2e} (tol 1e-10), {elapsed:.1f} s (limit 10 s)")
    assert ok


def test_criterion_02_conformity_preservation():
    worst = 0.0
    for name in GEOMETRIES:
        for p in (1, 2, 3):
            spec, mesh, topo, crack, op = cached(name, 8, p)
            for seed in range(10):
                u = FunctionSpec("smooth", seed=seed).build(spec, mesh)
                worst = max(worst, split_spread(op, op.apply(u).coeffs))
    ok = worst <= 1e-10
    record(2, "conformity preservation", ok, f"max side mismatch = {worst:.2e} over 10 fields x 9 setups (tol 1e-10)")
    assert ok


def test_criterion_03_zero_trace_preservation():
    worst = 0.0
    for name in GEOMETRIES:
        for p in (1, 2, 3):
            spec, mesh, topo, crack, op = cached(name, 8, p)
            t = op.table
            mask = np.isin(t.dof_node, np.nonzero(t.on_gamma | t.on_boundary)[0])
            for seed in range(5):
                c = op.apply(FunctionSpec("vanishing", seed=seed).build(spec, mesh)).coeffs
                worst = max(worst, float(np.abs(c[mask]).max()))
    ok = worst <= 1e-9
    record(3, "zero-trace preservation", ok, f"max coefficient on Gamma and boundary = {worst:.2e} (tol 1e-9)")
    assert ok


def duality_residuals(op):
    t = op.table
    m = op.moments
    nodal = sp.csr_matrix((np.ones(t.n_dofs), (np.arange(t.n_dofs), t.dof_node)), shape=(t.n_dofs, t.n_nodes))
    rows, cols, vals = [], [], []
    for c, (i, j) in enumerate(t.tilde):
        rows += [t.dof(i, j), t.dof(i, int(t.q[i]) - 1)]
        cols += [c, c]
        vals += [1.0, -1.0]
    psi = sp.csr_matrix((vals, (rows, cols)), shape=(t.n_dofs, len(t.tilde)))
    s, j = op.single @ m, op.jump @ m
    return (
        np.abs((s @ nodal).toarray() - np.eye(t.n_nodes)).max(),
        np.abs((s @ psi).toarray()).max(),
        np.abs((j @ nodal).toarray()).max(),
        np.abs((j @ psi).toarray() - np.eye(len(t.tilde))).max(),
    )


def test_criterion_04_dual_basis_identities():
    worst = [0.0] * 4
    for p in (1, 2):
        res = duality_residuals(cached("theta", 8, p)[4])
        worst = [max(a, b) for a, b in zip(worst, res)]
    ok = max(worst) <= 1e-10
    detail = ", ".join(f"{k} {v:.1e}" for k, v in zip(("Ni(phi)", "Ni(psi)", "Nij(phi)", "Nij(psi)"), worst))
    record(4, "dual-basis identities", ok, f"{detail} (tol 1e-10)")
    assert ok


@lru_cache(maxsize=None)
def theta_study():
    start = time.perf_counter()
    rows = convergence_study(GeometrySpec("theta", 8), FunctionSpec("jumpy-sine"), 1, 4)
    return rows, time.perf_counter() - start


def test_criterion_05_convergence():
    rows, elapsed = theta_study()
    slopes = study_slopes(rows)
    ok = 1.85 <= slopes["L2"] <= 2.15 and 0.85 <= slopes["H1"] <= 1.15 and elapsed < 120
    record(5, "convergence", ok, f"L2 slope {slopes['L2']:.3f} in [1.85, 2.15], H1 slope {slopes['H1']:.3f} "
                                 f"in [0.85, 1.15], n = 8..64, {elapsed:.1f} s (limit 120 s)")
    assert ok


def test_criterion_06_stability_proxy():
    rows, _ = theta_study()
    ratios = np.array([r["stability_ratio"] for r in rows])
    ok = ratios.max() <= 2 * ratios.min() and ratios.max() <= 50
    record(6, "stability proxy", ok, f"ratios {np.round(ratios, 4).tolist()}, max/min {ratios.max() / ratios.min():.3f} "
                                     f"(<= 2), max {ratios.max():.3f} (<= 50)")
    assert ok


def test_criterion_07_solid_angle_bound():
    checked, worst = 0, 0.0
    meshes = []
    for name in GEOMETRIES:
        for n, margin in ((8, 1), (16, 1), (16, 2), (32, 1)):
            meshes.append(generate(GeometrySpec(name, n, margin)))
    for lvl in refinement_levels(GeometrySpec("theta"), 4):
        meshes.append((lvl.mesh, lvl.crack))
    ok = True
    for mesh, _ in meshes:
        try:
            rep = solid_angle_check(mesh, build_topology(mesh))
        except Exception:
            ok = False
            continue
        checked += 1
        worst = max(worst, rep.max_star / rep.bound)
    ok = ok and checked == len(meshes)
    record(7, "solid-angle bound", ok, f"{checked} meshes, max star / bound = {worst:.3f} (<= 1)")
    assert ok


def test_criterion_08_bridge_system():
    nodes, entries_ok, worst = 0, True, 0.0
    for name in GEOMETRIES:
        for p in (1, 2, 3):
            spec, mesh, topo, crack, op = cached(name, 8, p)
            t = op.table
            for dec in t.sides:
                if dec.q < 2:
                    continue
                nodes += 1
                tree = bfs_spanning_tree(dec.q, enumerate_bridges(dec, crack, topo, mesh))
                a, lams = solve_bridge_coefficients(dec.q, tree)  # raises SingularA if singular
                entries_ok &= all(-2 <= x <= 2 for row in a for x in row)
                exact = all(sum(l * a[r][jp] for r, l in enumerate(lam)) == (j == jp)
                            for j, lam in enumerate(lams) for jp in range(dec.q - 1))
                entries_ok &= exact
            worst = max(worst, duality_residuals(op)[3])
    ok = entries_ok and worst <= 1e-12
    record(8, "bridge system", ok, f"{nodes} split nodes, entries in [-2, 2] and exact duality: {entries_ok}, "
                                   f"float duality residual {worst:.1e} (tol 1e-12)")
    assert ok


def test_criterion_09_prescribed_jump_solve():
    start = time.perf_counter()
    loop = GeometrySpec("loop", 8)
    worst = 0.0
    for lvl in refinement_levels(loop, 4):
        op = assemble_interpolant(lvl.mesh, lvl.topo, lvl.crack, 1)
        g = FunctionSpec("indicator").build(loop, lvl.mesh)
        uh, _ = solve_prescribed_jump(op, g)
        worst = max(worst, broken_error(g, uh).h1_total)
    # theta: levels n = 16, 32, 64 against a solve at n = 256
    rows = solve_study(GeometrySpec("theta", 8), FunctionSpec("solve-g"), 1, levels=3, extra=2, start=1)
    slope = study_slopes(rows)["H1"]
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-8 and 0.8 <= slope <= 1.2 and elapsed < 120
    record(9, "prescribed-jump solve", ok, f"loop indicator H1 error {worst:.1e} (tol 1e-8), theta H1 slope "
                                           f"{slope:.3f} in [0.8, 1.2], {elapsed:.1f} s (limit 120 s)")
    assert ok


def test_criterion_10_jump_lift():
    rng = np.random.default_rng(10)
    worst = 0.0
    for p in (1, 2):
        spec, mesh, topo, crack, op = cached("theta", 16, p)
        for _ in range(50):
            wh = DiscreteFunction(op.table, rng.normal(size=op.table.n_dofs))
            lifted = discrete_jump_lift(op, wh.as_side_aware())
            a = two_sided_trace(lifted, mesh, topo, crack).jump
            b = two_sided_trace(wh, mesh, topo, crack).jump
            worst = max(worst, float(np.abs(a - b).max()))
    ok = worst <= 1e-10
    record(10, "jump lift", ok, f"max face-quadrature jump mismatch {worst:.2e} over 100 data, theta n=16 (tol 1e-10)")
    assert ok


if __name__ == "__main__":
    import sys

    tests = [v for k, v in sorted(globals().items()) if k.startswith("test_criterion")]
    failed = 0
    for fn in tests:
        try:
            fn()
        except AssertionError:
            failed += 1
    for k in sorted(RESULTS):
        print(RESULTS[k])
    sys.exit(1 if failed else 0)
