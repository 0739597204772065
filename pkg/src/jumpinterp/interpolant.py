"""Split degrees of freedom and the jump-aware interpolant.

Indices are 0-based throughout: node ``i``, side ``j`` in ``0..q_i-1``. DOFs are
numbered node-major, side-minor, so DOF ``offsets[i] + j`` carries the value of
the function at node ``i`` approached from side ``j``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .crack import (
    CrackMesh,
    SideDecomposition,
    bfs_spanning_tree,
    enumerate_bridges,
    incident_crack_faces,
    side_decomposition,
)
from .errors import MissingGammaFace, SingularA
from .functions import SideAwareFunction
from .mesh import Mesh, MeshTopology, simplex_measure
from .polynomials import NodeTable, index_of, lagrange_basis, lagrange_basis_dlam, lagrange_nodes, quadrature, reference_dual


@dataclass(frozen=True, eq=False)
class DofTable:
    mesh: Mesh
    topo: MeshTopology
    crack: CrackMesh
    nodes: NodeTable
    sides: tuple  # SideDecomposition per node
    offsets: np.ndarray  # (N + 1,)
    on_gamma: np.ndarray
    on_boundary: np.ndarray
    elem_dofs: np.ndarray  # (ne, nloc)

    @property
    def p(self) -> int:
        return self.nodes.p

    @property
    def n_nodes(self) -> int:
        return self.nodes.n_nodes

    @property
    def n_dofs(self) -> int:
        return int(self.offsets[-1])

    @cached_property
    def q(self) -> np.ndarray:
        return np.diff(self.offsets)

    def dof(self, i: int, j: int) -> int:
        if not 0 <= j < self.q[i]:
            raise IndexError(f"node {i} has {self.q[i]} sides")
        return int(self.offsets[i] + j)

    @cached_property
    def dof_node(self) -> np.ndarray:
        return np.repeat(np.arange(self.n_nodes), self.q)

    @cached_property
    def dof_side(self) -> np.ndarray:
        return np.arange(self.n_dofs) - self.offsets[self.dof_node]

    def representative(self, i: int, j: int) -> int:
        """K_{i,j}: the smallest element of side ``j`` around node ``i``."""
        return self.sides[i].sides[j][0]

    @cached_property
    def tilde(self) -> list:
        """(i, j) with q_i > 1 and j < q_i - 1, in DOF order."""
        return [(i, j) for i in range(self.n_nodes) for j in range(int(self.q[i]) - 1)]


def build_dof_table(mesh: Mesh, topo: MeshTopology, crack: CrackMesh, p: int) -> DofTable:
    nodes = lagrange_nodes(mesh, p)
    n = nodes.n_nodes
    stars: list = [[] for _ in range(n)]
    for k, row in enumerate(nodes.elem_nodes.tolist()):
        for i in row:
            stars[i].append(k)
    gamma_simplices = crack.subsimplices
    boundary_simplices = topo.boundary_subsimplices
    on_gamma = np.zeros(n, dtype=bool)
    on_boundary = np.zeros(n, dtype=bool)
    decs = []
    for i in range(n):
        carrier = nodes.carrier(i)
        on_gamma[i] = carrier in gamma_simplices
        on_boundary[i] = carrier in boundary_simplices
        decs.append(side_decomposition(carrier, stars[i], crack, topo))
    q = np.array([dec.q for dec in decs], dtype=np.int64)
    offsets = np.concatenate([[0], np.cumsum(q)])
    side_of = {(i, k): j for i, dec in enumerate(decs) for j, side in enumerate(dec.sides) for k in side}
    local_side = np.array([[side_of[(i, k)] for i in row] for k, row in enumerate(nodes.elem_nodes.tolist())],
                          dtype=np.int64).reshape(nodes.elem_nodes.shape)
    elem_dofs = offsets[nodes.elem_nodes] + local_side
    for arr in (offsets, on_gamma, on_boundary, elem_dofs):
        arr.setflags(write=False)
    return DofTable(mesh, topo, crack, nodes, tuple(decs), offsets, on_gamma, on_boundary, elem_dofs)


@dataclass(frozen=True, eq=False)
class DiscreteFunction:
    table: DofTable
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.shape != (self.table.n_dofs,):
            raise ValueError(f"expected {self.table.n_dofs} coefficients, got {c.shape}")
        object.__setattr__(self, "coeffs", c)

    def element_coeffs(self) -> np.ndarray:
        return self.coeffs[self.table.elem_dofs]

    def evaluate(self, points, elements) -> np.ndarray:
        mesh = self.table.mesh
        elements = np.asarray(elements)
        lam = mesh.barycentric(points, elements)
        return np.einsum("ml,ml->m", lagrange_basis(lam, self.table.p), self.coeffs[self.table.elem_dofs[elements]])

    def evaluate_gradient(self, points, elements) -> np.ndarray:
        mesh = self.table.mesh
        elements = np.asarray(elements)
        lam = mesh.barycentric(points, elements)
        dlam = lagrange_basis_dlam(lam, self.table.p)  # (m, nloc, d+1)
        grads = np.einsum("mlb,mbx->mlx", dlam, mesh.bary_gradients[elements])
        return np.einsum("mlx,ml->mx", grads, self.coeffs[self.table.elem_dofs[elements]])

    def as_side_aware(self) -> SideAwareFunction:
        return SideAwareFunction(self.evaluate, self.evaluate_gradient, "discrete")

    def __sub__(self, other: "DiscreteFunction") -> "DiscreteFunction":
        return DiscreteFunction(self.table, self.coeffs - other.coeffs)

    def __add__(self, other: "DiscreteFunction") -> "DiscreteFunction":
        return DiscreteFunction(self.table, self.coeffs + other.coeffs)


def split_basis(table: DofTable, i: int, j: int) -> DiscreteFunction:
    c = np.zeros(table.n_dofs)
    c[table.dof(i, j)] = 1.0
    return DiscreteFunction(table, c)


def nodal_basis(table: DofTable, i: int) -> DiscreteFunction:
    """phi_i = sum over sides of the split functions phi_{i,j}."""
    c = np.zeros(table.n_dofs)
    c[table.offsets[i]:table.offsets[i + 1]] = 1.0
    return DiscreteFunction(table, c)


def jump_basis(table: DofTable, i: int, j: int) -> DiscreteFunction:
    """psi_{i,j} = phi_{i,j} - phi_{i,q_i-1} for j < q_i - 1."""
    q = int(table.q[i])
    if not (q > 1 and 0 <= j < q - 1):
        raise IndexError(f"(node {i}, side {j}) is not a jump index")
    c = np.zeros(table.n_dofs)
    c[table.dof(i, j)] = 1.0
    c[table.dof(i, q - 1)] = -1.0
    return DiscreteFunction(table, c)


def interpolate_nodal(table: DofTable, u: SideAwareFunction) -> DiscreteFunction:
    """Coefficients u(x_i) seen from the representative element of each side (Lagrange interpolation)."""
    pts = table.nodes.coords[table.dof_node]
    elems = np.array([table.representative(i, j) for i, j in zip(table.dof_node, table.dof_side)])
    return DiscreteFunction(table, u(pts, elems))


def is_h1_conforming(u_h: DiscreteFunction, tol: float = 1e-10) -> bool:
    t = u_h.table
    c = u_h.coeffs
    lo = np.minimum.reduceat(c, t.offsets[:-1])
    hi = np.maximum.reduceat(c, t.offsets[:-1])
    return bool(np.all(hi - lo <= tol))


def is_h1_broken_valid(u_h: DiscreteFunction) -> bool:
    """Always true: split DOFs already encode trace matching across every non-crack face."""
    return bool(np.all(np.isfinite(u_h.coeffs)))


# ---------------------------------------------------------------------------
# functionals


@dataclass(frozen=True)
class Term:
    node: int
    simplex: tuple  # face (d vertices) or element (d+1 vertices)
    element: int  # context element the trace is taken from


Functional = dict  # Term -> weight


def _merge(*parts) -> Functional:
    out: Functional = {}
    for scale, fn in parts:
        for term, w in fn.items():
            out[term] = out.get(term, 0) + scale * w
    return {t: w for t, w in out.items() if w != 0}


def _element_faces(mesh: Mesh, k: int) -> list:
    row = tuple(int(v) for v in mesh.elements[k])
    return [row[:m] + row[m + 1:] for m in range(len(row))]


def build_single_functional(table: DofTable, i: int) -> tuple[Functional, dict]:
    """N_i, and a provenance record of the control simplices used."""
    mesh, topo, crack = table.mesh, table.topo, table.crack
    carrier = table.nodes.carrier(i)
    dec = table.sides[i]
    cset = set(carrier)
    if table.on_gamma[i]:
        q = dec.q
        fn: Functional = {}
        picks = []
        for side in dec.sides:
            choice = None
            for k in side:
                faces = [f for f in _element_faces(mesh, k) if f in crack.faces and cset.issubset(f)]
                if faces:
                    choice = (min(faces), k)
                    break
            if choice is None:
                raise MissingGammaFace(f"side {side} around node {i} has no crack face containing the node")
            fn[Term(i, choice[0], choice[1])] = Fraction(1, q)
            picks.append({"simplex": list(choice[0]), "element": choice[1]})
        return fn, {"kind": "gamma", "control": picks}
    star_elems = [k for s in dec.sides for k in s]
    if len(carrier) == mesh.dim + 1:
        (k,) = star_elems
        return {Term(i, carrier, k): Fraction(1)}, {"kind": "interior", "control": [{"simplex": list(carrier), "element": k}]}
    candidates = sorted({f for k in star_elems for f in _element_faces(mesh, k) if cset.issubset(f)})
    if table.on_boundary[i]:
        candidates = [f for f in candidates if f in topo.boundary_faces]
        kind = "boundary"
    else:
        kind = "face"
    f = candidates[0]
    k = min(topo.face_to_elements[f])
    return {Term(i, f, k): Fraction(1)}, {"kind": kind, "control": [{"simplex": list(f), "element": k}]}


def bridge_functional(i: int, bridge) -> Functional:
    kk, kl = bridge.elements
    return {Term(i, bridge.face, kk): Fraction(1), Term(i, bridge.face, kl): Fraction(-1)}


def bridge_matrix(q: int, tree) -> list:
    """A[r][c] = psi_{i,c}(x_{i,k_r}) - psi_{i,c}(x_{i,l_r}) for the tree bridges (k_r, l_r)."""

    def psi_at(c, s):
        return (1 if s == c else 0) - (1 if s == q - 1 else 0)

    return [[psi_at(c, b.pair[0]) - psi_at(c, b.pair[1]) for c in range(q - 1)] for b in tree]


def solve_exact(a: list, rhs: list) -> list:
    """Gauss-Jordan elimination over the rationals."""
    n = len(a)
    m = [[Fraction(x) for x in row] + [Fraction(r)] for row, r in zip(a, rhs)]
    for col in range(n):
        piv = next((r for r in range(col, n) if m[r][col] != 0), None)
        if piv is None:
            raise SingularA(f"bridge system is singular at column {col}")
        m[col], m[piv] = m[piv], m[col]
        pv = m[col][col]
        m[col] = [x / pv for x in m[col]]
        for r in range(n):
            if r != col and m[r][col] != 0:
                f = m[r][col]
                m[r] = [x - f * y for x, y in zip(m[r], m[col])]
    return [m[r][n] for r in range(n)]


def solve_bridge_coefficients(q: int, tree) -> tuple[list, list]:
    """lambda^{(j)} for j < q-1 such that sum_r lambda_r N_{i,{k_r,l_r}} is dual to psi_{i,j}.

    Duality N_{i,j}(psi_{i,j'}) = delta_{jj'} reads sum_r lambda_r A[r][j'] = delta_{jj'},
    i.e. the transposed system A^T lambda = e_j.
    """
    a = bridge_matrix(q, tree)
    at = [list(col) for col in zip(*a)]
    lams = []
    for j in range(q - 1):
        e = [1 if r == j else 0 for r in range(q - 1)]
        lams.append(solve_exact(at, e))
    return a, lams


def build_bridge_functionals(table: DofTable, i: int) -> tuple[list, dict]:
    """N_{i,j} for j < q_i - 1 plus provenance (bridges, tree, A, lambda)."""
    dec = table.sides[i]
    if dec.q < 2:
        return [], {}
    bridges = enumerate_bridges(dec, table.crack, table.topo, table.mesh)
    tree = bfs_spanning_tree(dec.q, bridges)
    a, lams = solve_bridge_coefficients(dec.q, tree)
    fns = []
    for lam in lams:
        fns.append(_merge(*[(lr, bridge_functional(i, b)) for lr, b in zip(lam, tree)]))
    prov = {
        "bridges": [{"pair": list(b.pair), "face": list(b.face), "elements": list(b.elements)} for b in bridges],
        "tree": [list(b.pair) for b in tree],
        "A": a,
        "lambda": [[str(x) for x in lam] for lam in lams],
    }
    return fns, prov


# ---------------------------------------------------------------------------
# assembled operator


@dataclass(frozen=True, eq=False)
class InterpolantOperator:
    table: DofTable
    terms: tuple
    single: sp.csr_matrix  # (N, nterms)
    jump: sp.csr_matrix  # (len(tilde), nterms)
    coeff: sp.csr_matrix  # (ndofs, nterms)
    quad_points: np.ndarray  # (npts, d)
    quad_elements: np.ndarray  # (npts,)
    quad_weights: sp.csr_matrix  # (nterms, npts): row t integrates psi * u over term t
    provenance: tuple = field(repr=False)

    def term_integrals(self, u: SideAwareFunction) -> np.ndarray:
        return self.quad_weights @ u(self.quad_points, self.quad_elements)

    def apply(self, u: SideAwareFunction) -> DiscreteFunction:
        return DiscreteFunction(self.table, self.coeff @ self.term_integrals(u))

    def functionals(self, u: SideAwareFunction) -> tuple[np.ndarray, np.ndarray]:
        """(N_i(u) for all nodes, N_{i,j}(u) for (i, j) in table.tilde)."""
        t = self.term_integrals(u)
        return self.single @ t, self.jump @ t

    @cached_property
    def evaluation_matrix(self) -> sp.csr_matrix:
        """(npts, ndofs): split basis values at the quadrature points, seen from their context element."""
        tab = self.table
        lam = tab.mesh.barycentric(self.quad_points, self.quad_elements)
        vals = lagrange_basis(lam, tab.p)
        cols = tab.elem_dofs[self.quad_elements]
        rows = np.repeat(np.arange(len(self.quad_elements)), vals.shape[1])
        return sp.csr_matrix((vals.ravel(), (rows, cols.ravel())), shape=(len(self.quad_elements), tab.n_dofs))

    @cached_property
    def moments(self) -> sp.csr_matrix:
        """(nterms, ndofs): term integrals of each split basis function."""
        return (self.quad_weights @ self.evaluation_matrix).tocsr()

    def matrix(self) -> sp.csr_matrix:
        """The operator restricted to discrete inputs, as a map on coefficient vectors."""
        return (self.coeff @ self.moments).tocsr()

    def term_counts(self) -> np.ndarray:
        return np.diff(self.coeff.indptr)

    def provenance_json(self) -> str:
        out = []
        tab = self.table
        for d in range(tab.n_dofs):
            i, j = int(tab.dof_node[d]), int(tab.dof_side[d])
            row = self.coeff.getrow(d)
            terms = [
                {"simplex": list(self.terms[t].simplex), "element": self.terms[t].element, "weight": float(w)}
                for t, w in zip(row.indices, row.data)
            ]
            out.append({"dof": d, "node": i, "side": j, **self.provenance[i], "terms": terms})
        return json.dumps(out, indent=1)


def assemble_interpolant(mesh: Mesh, topo: MeshTopology, crack: CrackMesh, p: int,
                         degree: int | None = None, table: DofTable | None = None) -> InterpolantOperator:
    table = table if table is not None else build_dof_table(mesh, topo, crack, p)
    degree = 2 * p + 3 if degree is None else degree
    term_index: dict = {}
    singles, jumps, coeffs, prov = [], [], [], []

    def rowify(fn: Functional) -> dict:
        out = {}
        for term, w in fn.items():
            t = term_index.setdefault(term, len(term_index))
            out[t] = float(w)
        return out

    for i in range(table.n_nodes):
        n_i, sprov = build_single_functional(table, i)
        n_ij, bprov = build_bridge_functionals(table, i)
        prov.append({"control": sprov, **bprov})
        singles.append(rowify(n_i))
        jumps.extend(rowify(fn) for fn in n_ij)
        q = int(table.q[i])
        for j in range(q):
            if j < q - 1:
                coeffs.append(rowify(_merge((1, n_i), (1, n_ij[j]))))
            else:
                coeffs.append(rowify(_merge((1, n_i), *[(-1, fn) for fn in n_ij])))

    terms = tuple(sorted(term_index, key=term_index.get))
    nt = len(terms)

    def to_csr(rows):
        r = [k for k, row in enumerate(rows) for _ in row]
        c = [t for row in rows for t in row]
        v = [w for row in rows for w in row.values()]
        return sp.csr_matrix((v, (r, c)), shape=(len(rows), nt))

    pts, elems, weights = _term_quadrature(table, terms, degree)
    return InterpolantOperator(
        table=table,
        terms=terms,
        single=to_csr(singles),
        jump=to_csr(jumps),
        coeff=to_csr(coeffs),
        quad_points=pts,
        quad_elements=elems,
        quad_weights=weights,
        provenance=tuple(prov),
    )


def _term_quadrature(table: DofTable, terms, degree: int):
    mesh = table.mesh
    p = table.p
    pts_all, el_all, w_rows, w_cols, w_vals = [], [], [], [], []
    offset = 0
    by_dim: dict = {}
    for t, term in enumerate(terms):
        by_dim.setdefault(len(term.simplex) - 1, []).append(t)
    for n, ids in sorted(by_dim.items()):
        rule = quadrature(n, degree)
        nq = len(rule.weights)
        simp = np.array([terms[t].simplex for t in ids], dtype=np.int64)
        coords = mesh.vertices[simp]  # (m, n+1, d)
        x = np.einsum("qa,mad->mqd", rule.points, coords)
        local = np.array([table.nodes.local_index(terms[t].node, terms[t].simplex) for t in ids])
        basis = lagrange_basis(rule.points, p)  # (nq, nloc)
        psi_ref = basis @ reference_dual(n, p)  # (nq, nloc): column l is the unit-measure dual of node l
        w = psi_ref[:, local].T * rule.weights[None, :]  # vol cancels: psi = psi_ref / vol, dx = vol * w
        pts_all.append(x.reshape(-1, mesh.dim))
        el_all.append(np.repeat([terms[t].element for t in ids], nq))
        w_rows.append(np.repeat(ids, nq))
        w_cols.append(offset + np.arange(len(ids) * nq))
        w_vals.append(w.ravel())
        offset += len(ids) * nq
    pts = np.concatenate(pts_all) if pts_all else np.zeros((0, mesh.dim))
    elems = np.concatenate(el_all) if el_all else np.zeros(0, dtype=np.int64)
    weights = sp.csr_matrix(
        (np.concatenate(w_vals), (np.concatenate(w_rows), np.concatenate(w_cols))), shape=(len(terms), offset)
    )
    return pts, elems.astype(np.int64), weights


def apply_interpolant(op: InterpolantOperator, u: SideAwareFunction) -> DiscreteFunction:
    return op.apply(u)


def discrete_jump_lift(op: InterpolantOperator, u: SideAwareFunction) -> DiscreteFunction:
    """E_h applied to a lift ``u`` of the jump data: the interpolant of that lift."""
    return op.apply(u)


# ---------------------------------------------------------------------------
# traces


@dataclass(frozen=True)
class TraceSamples:
    faces: tuple
    plus_elements: np.ndarray
    minus_elements: np.ndarray
    points: np.ndarray  # (nf, nq, d)
    weights: np.ndarray  # (nf, nq) physical quadrature weights
    plus: np.ndarray  # (nf, nq)
    minus: np.ndarray

    @property
    def jump(self) -> np.ndarray:
        return self.plus - self.minus


def two_sided_trace(u, mesh: Mesh, topo: MeshTopology, crack: CrackMesh, degree: int = 7) -> TraceSamples:
    """Traces from K+ (smaller element index) and K- (larger) at quadrature points of each crack face."""
    if isinstance(u, DiscreteFunction):
        u = u.as_side_aware()
    faces = tuple(sorted(crack.faces))
    rule = quadrature(mesh.dim - 1, degree)
    nq = len(rule.weights)
    if not faces:
        empty = np.zeros((0, nq))
        return TraceSamples(faces, np.zeros(0, int), np.zeros(0, int), np.zeros((0, nq, mesh.dim)), empty, empty, empty)
    fa = np.array(faces, dtype=np.int64)
    coords = mesh.vertices[fa]
    x = np.einsum("qa,mad->mqd", rule.points, coords)
    w = simplex_measure(coords)[:, None] * rule.weights[None, :]
    kp = np.array([min(topo.face_to_elements[f]) for f in faces])
    km = np.array([max(topo.face_to_elements[f]) for f in faces])
    flat = x.reshape(-1, mesh.dim)
    plus = u(flat, np.repeat(kp, nq)).reshape(len(faces), nq)
    minus = u(flat, np.repeat(km, nq)).reshape(len(faces), nq)
    return TraceSamples(faces, kp, km, x, w, plus, minus)
