"""Lagrange elements on simplices: nodes, nodal bases, quadrature, mass matrices
and dual Lagrange polynomials.

All local objects are expressed in barycentric coordinates of a simplex whose
vertices are listed in increasing global index, so the same local data serve
every element and every face.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import factorial

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy.special import roots_jacobi

from .errors import DegenerateSimplex, SingularMass
from .mesh import Mesh, simplex_measure


@lru_cache(maxsize=None)
def multi_indices(n: int, p: int) -> tuple:
    """All alpha in N^{n+1} with |alpha| = p, in decreasing lexicographic order.

    For p >= 1 the first n+1 entries are the vertex nodes p*e_0, ..., p*e_n.
    """
    if n == 0:
        return ((p,),)
    out = []
    for a0 in range(p, -1, -1):
        for rest in multi_indices(n - 1, p - a0):
            out.append((a0,) + rest)
    if p >= 1:
        verts = [tuple(p if j == i else 0 for j in range(n + 1)) for i in range(n + 1)]
        out = verts + [a for a in out if a not in verts]
    return tuple(out)


@lru_cache(maxsize=None)
def index_of(n: int, p: int) -> dict:
    return {a: k for k, a in enumerate(multi_indices(n, p))}


def n_local(n: int, p: int) -> int:
    return len(multi_indices(n, p))


@lru_cache(maxsize=None)
def _factor_coeffs(p: int, a: int) -> np.ndarray:
    """Power-series coefficients of prod_{k<a} (p t - k)/(k+1)."""
    c = np.array([1.0])
    for k in range(a):
        c = npoly.polymul(c, np.array([-k, p], dtype=float) / (k + 1))
    return c


def lagrange_basis(lam: np.ndarray, p: int) -> np.ndarray:
    """Nodal basis values at barycentric points ``lam`` of shape (m, n+1) -> (m, nloc)."""
    lam = np.atleast_2d(lam)
    n = lam.shape[1] - 1
    alphas = multi_indices(n, p)
    # table[a][:, i] = factor of degree a evaluated at lam[:, i]
    table = [npoly.polyval(lam, _factor_coeffs(p, a)) for a in range(p + 1)]
    out = np.ones((lam.shape[0], len(alphas)))
    for k, alpha in enumerate(alphas):
        for i, a in enumerate(alpha):
            if a:
                out[:, k] *= table[a][:, i]
    return out


def lagrange_basis_dlam(lam: np.ndarray, p: int) -> np.ndarray:
    """Partial derivatives with respect to each barycentric coordinate: (m, nloc, n+1)."""
    lam = np.atleast_2d(lam)
    n = lam.shape[1] - 1
    alphas = multi_indices(n, p)
    val = [npoly.polyval(lam, _factor_coeffs(p, a)) for a in range(p + 1)]
    der = [npoly.polyval(lam, npoly.polyder(_factor_coeffs(p, a))) if a else np.zeros_like(lam)
           for a in range(p + 1)]
    out = np.zeros((lam.shape[0], len(alphas), n + 1))
    for k, alpha in enumerate(alphas):
        for j in range(n + 1):
            term = np.ones(lam.shape[0])
            for i, a in enumerate(alpha):
                term = term * (der[a][:, i] if i == j else val[a][:, i])
            out[:, k, j] = term
    return out


@lru_cache(maxsize=None)
def barycentric_expansion(n: int, p: int) -> tuple:
    """Each basis function as a dict {exponent tuple: coefficient} in barycentric monomials."""
    polys = []
    for alpha in multi_indices(n, p):
        terms = {(0,) * (n + 1): 1.0}
        for i, a in enumerate(alpha):
            coeffs = _factor_coeffs(p, a)
            new = {}
            for expo, c in terms.items():
                for deg, ci in enumerate(coeffs):
                    if ci == 0.0:
                        continue
                    e = list(expo)
                    e[i] += deg
                    e = tuple(e)
                    new[e] = new.get(e, 0.0) + c * ci
            terms = new
        polys.append(terms)
    return tuple(polys)


def monomial_integral(expo) -> float:
    """Integral of prod lam_i^{a_i} over an n-simplex of unit measure.

    Equals n! * prod(a_i!) / (|a| + n)!.
    """
    n = len(expo) - 1
    num = factorial(n)
    for a in expo:
        num *= factorial(a)
    return num / factorial(sum(expo) + n)


@lru_cache(maxsize=None)
def reference_mass(n: int, p: int) -> np.ndarray:
    """Mass matrix of the nodal basis on an n-simplex of unit measure (exact formula)."""
    polys = barycentric_expansion(n, p)
    m = len(polys)
    mass = np.zeros((m, m))
    for a in range(m):
        for b in range(a, m):
            s = 0.0
            for ea, ca in polys[a].items():
                for eb, cb in polys[b].items():
                    s += ca * cb * monomial_integral(tuple(x + y for x, y in zip(ea, eb)))
            mass[a, b] = mass[b, a] = s
    mass.setflags(write=False)
    return mass


def simplex_mass_matrix(coords: np.ndarray, p: int) -> np.ndarray:
    """Physical mass matrix of the nodal basis on the simplex with vertex rows ``coords``."""
    coords = np.asarray(coords, dtype=float)
    n = coords.shape[0] - 1
    vol = float(simplex_measure(coords))
    if vol <= 0.0:
        raise DegenerateSimplex("simplex has zero measure")
    return vol * reference_mass(n, p)


@lru_cache(maxsize=None)
def reference_dual(n: int, p: int) -> np.ndarray:
    """Columns are nodal coefficients of the dual polynomials on a unit-measure simplex."""
    mass = reference_mass(n, p)
    try:
        inv = np.linalg.inv(mass)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - mass is SPD
        raise SingularMass(str(exc)) from exc
    inv.setflags(write=False)
    return inv


@dataclass(frozen=True)
class DualPolynomial:
    simplex: tuple
    node_local: int
    p: int
    coefficients: np.ndarray  # in the nodal basis of the simplex

    def __call__(self, lam: np.ndarray) -> np.ndarray:
        return lagrange_basis(lam, self.p) @ self.coefficients


def dual_polynomial(coords: np.ndarray, node_local: int, p: int, simplex: tuple = ()) -> DualPolynomial:
    """psi with int_S psi * P = P(node) for every P of degree <= p."""
    coords = np.asarray(coords, dtype=float)
    if float(simplex_measure(coords)) <= 0.0:
        raise SingularMass("dual polynomial requested on a degenerate simplex")
    mass = simplex_mass_matrix(coords, p)
    rhs = np.zeros(len(mass))
    rhs[node_local] = 1.0
    try:
        coeffs = np.linalg.solve(mass, rhs)
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise SingularMass(str(exc)) from exc
    return DualPolynomial(simplex=tuple(simplex), node_local=node_local, p=p, coefficients=coeffs)


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray  # barycentric, (m, n+1)
    weights: np.ndarray  # sum to 1
    degree: int


@lru_cache(maxsize=None)
def quadrature(n: int, degree: int) -> QuadratureRule:
    """Collapsed-coordinate Gauss-Jacobi rule on the n-simplex, exact to ``degree``."""
    m = max(1, (degree + 2) // 2)
    if n == 0:
        return QuadratureRule(np.ones((1, 1)), np.ones(1), degree)
    # cartesian points on the unit simplex {x_i >= 0, sum x_i <= 1}
    pts = np.zeros((1, 0))
    wts = np.ones(1)
    for k in range(n):
        # new coordinate v carries weight (1 - v)^k
        x, w = roots_jacobi(m, k, 0)
        v = (x + 1.0) / 2.0
        w = w / 2.0 ** (k + 1)
        new_pts = np.concatenate(
            [np.repeat(pts, m, axis=0) * np.tile(1.0 - v, len(pts))[:, None], np.tile(v, len(pts))[:, None]],
            axis=1,
        )
        pts = new_pts
        wts = np.repeat(wts, m) * np.tile(w, len(wts))
    wts = wts / wts.sum()
    lam = np.concatenate([1.0 - pts.sum(axis=1, keepdims=True), pts], axis=1)
    lam.setflags(write=False)
    wts.setflags(write=False)
    return QuadratureRule(lam, wts, degree)


def integrate_dual_against(coords: np.ndarray, dual: DualPolynomial, f, rule: QuadratureRule) -> float:
    """Quadrature value of int_S psi * f for ``f`` taking an (m, d) array of points."""
    coords = np.asarray(coords, dtype=float)
    x = rule.points @ coords
    vol = float(simplex_measure(coords))
    return float(vol * np.sum(rule.weights * dual(rule.points) * np.asarray(f(x), dtype=float)))


@dataclass(frozen=True, eq=False)
class NodeTable:
    """Global Lagrange nodes of a mesh.

    ``keys[i]`` is the tuple of (vertex, weight) pairs with positive weight, so the
    node is ``sum(weight * vertex) / p``; its carrier is the simplex of those vertices.
    """

    p: int
    coords: np.ndarray
    keys: tuple
    elem_nodes: np.ndarray  # (ne, nloc) global node id of each local node

    @property
    def n_nodes(self) -> int:
        return len(self.keys)

    def carrier(self, i: int) -> tuple:
        return tuple(v for v, _ in self.keys[i])

    def local_index(self, i: int, simplex: tuple) -> int:
        """Position of node ``i`` among the nodal basis of ``simplex`` (sorted vertex tuple)."""
        weights = dict(self.keys[i])
        alpha = tuple(weights.get(v, 0) for v in simplex)
        if sum(alpha) != self.p:
            raise KeyError(f"node {i} is not a Lagrange node of {simplex}")
        return index_of(len(simplex) - 1, self.p)[alpha]


def lagrange_nodes(mesh: Mesh, p: int) -> NodeTable:
    if p < 1:
        raise ValueError("polynomial degree must be at least 1")
    d = mesh.dim
    alphas = multi_indices(d, p)
    lookup: dict = {}
    keys = []
    coords = []
    elem_nodes = np.empty((mesh.n_elements, len(alphas)), dtype=np.int64)
    verts = mesh.vertices
    for k, row in enumerate(mesh.elements.tolist()):
        for loc, alpha in enumerate(alphas):
            key = tuple((v, a) for v, a in zip(row, alpha) if a)
            idx = lookup.get(key)
            if idx is None:
                idx = lookup[key] = len(keys)
                keys.append(key)
                coords.append(sum(a * verts[v] for v, a in key) / p)
            elem_nodes[k, loc] = idx
    coords = np.array(coords)
    coords.setflags(write=False)
    elem_nodes.setflags(write=False)
    return NodeTable(p=p, coords=coords, keys=tuple(keys), elem_nodes=elem_nodes)
