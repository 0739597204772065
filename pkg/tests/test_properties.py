import itertools
import json

import numpy as np
from hypothesis import given, settings, strategies as st

from conftest import setup
from jumpinterp.crack import Bridge, CrackMesh, bfs_spanning_tree, validate_crack
from jumpinterp.functions import SideAwareFunction
from jumpinterp.geometries import GeometrySpec, generate
from jumpinterp.interpolant import DiscreteFunction, assemble_interpolant, solve_bridge_coefficients
from jumpinterp.mesh import Mesh, build_topology, shape_regularity, simplex_measure
from jumpinterp.mesh_io import parse_mesh, serialize_mesh
from jumpinterp.norms import convergence_rates
from jumpinterp.polynomials import dual_polynomial, lagrange_basis, n_local, quadrature

SETTINGS = settings(max_examples=25, deadline=None)


@st.composite
def connected_bridge_sets(draw):
    q = draw(st.integers(2, 6))
    pairs = list(itertools.combinations(range(q), 2))
    chosen = draw(st.sets(st.sampled_from(pairs), min_size=q - 1))
    # force connectivity with a random spanning path
    order = draw(st.permutations(range(q)))
    chosen |= {tuple(sorted((order[k], order[k + 1]))) for k in range(q - 1)}
    return q, [Bridge(p, (0, 1), (0, 1)) for p in sorted(chosen)]


@SETTINGS
@given(connected_bridge_sets())
def test_bridge_systems_are_exactly_dual(data):
    q, bridges = data
    tree = bfs_spanning_tree(q, bridges)
    assert len(tree) == q - 1
    a, lams = solve_bridge_coefficients(q, tree)
    assert all(-2 <= x <= 2 for row in a for x in row)
    for j, lam in enumerate(lams):
        for jp in range(q - 1):
            assert sum(l * a[r][jp] for r, l in enumerate(lam)) == (j == jp)


simplices = st.lists(st.floats(-3, 3, allow_nan=False), min_size=6, max_size=6).map(
    lambda v: np.array(v).reshape(3, 2))


@SETTINGS
@given(simplices, st.integers(1, 3))
def test_dual_biorthogonality_on_random_triangles(coords, p):
    vol = float(simplex_measure(coords))
    scale = np.abs(coords - coords[0]).max() ** 2
    if vol < 1e-3 * max(scale, 1e-300):
        return
    rule = quadrature(2, 2 * p + 3)
    phi = lagrange_basis(rule.points, p)
    for loc in range(n_local(2, p)):
        psi = dual_polynomial(coords, loc, p)
        moments = vol * (rule.weights * psi(rule.points)) @ phi
        assert np.allclose(moments, np.eye(n_local(2, p))[loc], atol=1e-8)


@st.composite
def similarities(draw):
    angle = draw(st.floats(0, 2 * np.pi))
    scale = draw(st.floats(0.1, 10))
    shift = np.array(draw(st.lists(st.floats(-5, 5), min_size=2, max_size=2)))
    flip = draw(st.booleans())
    rot = np.array([[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]])
    if flip:
        rot = rot @ np.diag([1.0, -1.0])
    return scale * rot, shift


@SETTINGS
@given(similarities(), st.integers(0, 2 ** 31))
def test_projection_is_invariant_under_similarities(sim, seed):
    mat, shift = sim
    spec, mesh, topo, crack, _ = setup("theta")
    moved = Mesh(mesh.vertices @ mat.T + shift, mesh.elements)
    mtopo = build_topology(moved)
    mcrack = validate_crack(moved, mtopo, crack)
    assert np.isclose(shape_regularity(moved).gamma, shape_regularity(mesh).gamma, rtol=1e-9)
    op = assemble_interpolant(moved, mtopo, mcrack, 1)
    uh = DiscreteFunction(op.table, np.random.default_rng(seed).normal(size=op.table.n_dofs))
    assert np.abs(op.apply(uh.as_side_aware()).coeffs - uh.coeffs).max() <= 1e-9


@SETTINGS
@given(st.integers(0, 2 ** 31), st.floats(-3, 3), st.floats(-3, 3))
def test_interpolant_is_linear(seed, a, b):
    spec, mesh, topo, crack, op = setup("theta", p=2)
    rng = np.random.default_rng(seed)
    u = DiscreteFunction(op.table, rng.normal(size=op.table.n_dofs)).as_side_aware()
    w = rng.normal(size=3)
    v = lambda x, e: np.sin(w[0] * x[:, 0] + w[1] * x[:, 1]) + w[2] * e / mesh.n_elements  # noqa: E731
    vf = SideAwareFunction(v)
    lhs = op.apply(u.scaled(a) + vf.scaled(b)).coeffs
    rhs = a * op.apply(u).coeffs + b * op.apply(vf).coeffs
    assert np.allclose(lhs, rhs, atol=1e-10)


@SETTINGS
@given(st.sampled_from(["loop", "theta", "slit"]), st.randoms(use_true_random=False))
def test_mesh_io_round_trip_under_relabeling(name, rnd):
    mesh, crack = generate(GeometrySpec(name))
    doc = json.loads(serialize_mesh(mesh, crack))
    for row in doc["elements"]:
        rnd.shuffle(row)
    rnd.shuffle(doc["elements"])
    for f in doc["gamma_faces"]:
        rnd.shuffle(f)
    m2, c2 = parse_mesh(json.dumps(doc))
    assert c2.faces == crack.faces
    assert sorted(map(tuple, m2.elements.tolist())) == sorted(map(tuple, mesh.elements.tolist()))


@SETTINGS
@given(st.floats(0.5, 4), st.floats(1e-3, 1e3), st.integers(3, 6))
def test_rates_recover_power_laws(rate, const, levels):
    h = 0.5 ** np.arange(1, levels + 1)
    rep = convergence_rates(h, const * h ** rate)
    assert np.isclose(rep.slope, rate, rtol=1e-8)


@SETTINGS
@given(st.integers(0, 2 ** 31))
def test_crack_subsets_keep_projection(seed):
    # any subset of the theta crack is still a valid crack; the projection property must survive
    spec, mesh, topo, crack, _ = setup("theta")
    rng = np.random.default_rng(seed)
    faces = sorted(crack.faces)
    keep = [f for f in faces if rng.random() < 0.6]
    sub = validate_crack(mesh, topo, CrackMesh.from_faces(keep))
    op = assemble_interpolant(mesh, topo, sub, 1)
    uh = DiscreteFunction(op.table, rng.normal(size=op.table.n_dofs))
    assert np.abs(op.matrix().toarray() - np.eye(op.table.n_dofs)).max() <= 1e-10
    assert np.abs(op.apply(uh.as_side_aware()).coeffs - uh.coeffs).max() <= 1e-10
