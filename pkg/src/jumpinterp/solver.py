"""Galerkin solution of -div(alpha grad u) = 0 off Gamma with a prescribed jump.

The discrete solution is u_h = Pi_h g + w_h, with w_h continuous across Gamma and
zero on the boundary. The continuous subspace is reached through a restriction
map R that merges the sides of each node and drops boundary nodes; w_h solves
R^T A R w = -R^T A (Pi_h g) by Jacobi-preconditioned conjugate gradients.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import NoConvergence, NonSPD
from .functions import SideAwareFunction
from .interpolant import DiscreteFunction, DofTable, InterpolantOperator
from .norms import stiffness_matrices


@dataclass(frozen=True)
class CoefficientField:
    matrices: np.ndarray  # (ne, d, d)

    def __post_init__(self):
        a = np.asarray(self.matrices, dtype=float)
        if a.ndim != 3 or a.shape[1] != a.shape[2]:
            raise NonSPD("coefficient field must be an (ne, d, d) array")
        if not np.allclose(a, np.swapaxes(a, 1, 2), rtol=0, atol=1e-12 * max(1.0, np.abs(a).max())):
            raise NonSPD("coefficient matrices must be symmetric")
        eig = np.linalg.eigvalsh(a)
        if np.any(eig <= 0):
            raise NonSPD(f"element {int(np.argmin(eig.min(axis=1)))} has a non-positive eigenvalue")
        object.__setattr__(self, "matrices", a)

    @classmethod
    def identity(cls, ne: int, d: int) -> "CoefficientField":
        return cls(np.broadcast_to(np.eye(d), (ne, d, d)).copy())


def assemble_stiffness(table: DofTable, alpha: CoefficientField | None = None) -> sp.csr_matrix:
    """Split-space stiffness: a(phi_{i,j}, phi_{i',j'}) assembled element by element."""
    mesh = table.mesh
    mats = None if alpha is None else alpha.matrices
    local = stiffness_matrices(mesh, table.p, mats)
    dofs = table.elem_dofs
    nloc = dofs.shape[1]
    rows = np.repeat(dofs, nloc, axis=1).ravel()
    cols = np.tile(dofs, (1, nloc)).ravel()
    a = sp.coo_matrix((local.ravel(), (rows, cols)), shape=(table.n_dofs, table.n_dofs)).tocsr()
    a.sum_duplicates()
    return a


def conforming_restriction(table: DofTable, drop_boundary: bool = True) -> sp.csr_matrix:
    """(ndofs, nfree) map from one value per free node to equal values on all its sides."""
    free = np.nonzero(~table.on_boundary)[0] if drop_boundary else np.arange(table.n_nodes)
    col_of = -np.ones(table.n_nodes, dtype=np.int64)
    col_of[free] = np.arange(len(free))
    cols = col_of[table.dof_node]
    keep = cols >= 0
    rows = np.nonzero(keep)[0]
    return sp.csr_matrix((np.ones(len(rows)), (rows, cols[keep])), shape=(table.n_dofs, len(free)))


@dataclass
class SolveReport:
    iterations: int
    residual: float
    energy: float
    errors: dict = field(default_factory=dict)


def pcg(a: sp.spmatrix, b: np.ndarray, tol: float = 1e-10, maxiter: int | None = None) -> tuple[np.ndarray, int, float]:
    """Conjugate gradients with diagonal preconditioning; stops on ||r|| <= tol * ||b||."""
    n = len(b)
    maxiter = 10 * n + 10 if maxiter is None else maxiter
    x = np.zeros(n)
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return x, 0, 0.0
    dinv = 1.0 / a.diagonal()
    r = b.copy()
    z = dinv * r
    d = z.copy()
    rz = r @ z
    for it in range(1, maxiter + 1):
        ad = a @ d
        step = rz / (d @ ad)
        x += step * d
        r -= step * ad
        res = np.linalg.norm(r) / bnorm
        if res <= tol:
            return x, it, float(res)
        z = dinv * r
        rz_new = r @ z
        d = z + (rz_new / rz) * d
        rz = rz_new
    raise NoConvergence(maxiter, float(res))


def solve_prescribed_jump(op: InterpolantOperator, g: SideAwareFunction, alpha: CoefficientField | None = None,
                          tol: float = 1e-10, maxiter: int | None = None) -> tuple[DiscreteFunction, SolveReport]:
    table = op.table
    g_h = op.apply(g)
    a = assemble_stiffness(table, alpha)
    r = conforming_restriction(table)
    ar = (r.T @ a @ r).tocsr()
    rhs = -(r.T @ (a @ g_h.coeffs))
    w, its, res = pcg(ar, rhs, tol=tol, maxiter=maxiter)
    u = g_h.coeffs + r @ w
    energy = float(u @ (a @ u))
    return DiscreteFunction(table, u), SolveReport(iterations=its, residual=res, energy=energy)
