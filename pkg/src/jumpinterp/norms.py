"""Broken (elementwise) L2 / H1 norms and convergence-rate extraction."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .crack import CrackMesh
from .errors import InsufficientLevels, MissingGradient
from .functions import SideAwareFunction
from .interpolant import DiscreteFunction, two_sided_trace
from .mesh import Mesh, MeshTopology, shape_regularity
from .polynomials import lagrange_basis, lagrange_basis_dlam, quadrature, reference_mass


@dataclass(frozen=True)
class NormReport:
    l2: np.ndarray  # per element
    h1_semi: np.ndarray  # per element
    h: float

    @property
    def l2_total(self) -> float:
        return float(np.sqrt(np.sum(self.l2 ** 2)))

    @property
    def h1_semi_total(self) -> float:
        return float(np.sqrt(np.sum(self.h1_semi ** 2)))

    @property
    def h1_total(self) -> float:
        return float(np.sqrt(self.l2_total ** 2 + self.h1_semi_total ** 2))


def _element_samples(mesh: Mesh, degree: int):
    rule = quadrature(mesh.dim, degree)
    x = np.einsum("qa,ead->eqd", rule.points, mesh.element_coords)
    elems = np.repeat(np.arange(mesh.n_elements), len(rule.weights))
    w = mesh.volumes[:, None] * rule.weights[None, :]
    return rule, x.reshape(-1, mesh.dim), elems, w


def _discrete_samples(u_h: DiscreteFunction, rule):
    tab = u_h.table
    mesh = tab.mesh
    uc = u_h.element_coeffs()  # (ne, nloc)
    vals = uc @ lagrange_basis(rule.points, tab.p).T  # (ne, nq)
    dlam = lagrange_basis_dlam(rule.points, tab.p)  # (nq, nloc, d+1)
    grads = np.einsum("el,qlb,ebx->eqx", uc, dlam, mesh.bary_gradients)
    return vals, grads


def broken_error(u_exact: SideAwareFunction | None, u_h: DiscreteFunction | None, mesh: Mesh | None = None,
                 degree: int | None = None) -> NormReport:
    """Elementwise L2 and H1-seminorm of ``u_exact - u_h`` (either side may be None for zero)."""
    if u_h is not None:
        mesh = u_h.table.mesh
        p = u_h.table.p
    else:
        p = 1
    if mesh is None:
        raise ValueError("a mesh is required when u_h is None")
    degree = 2 * p + 3 if degree is None else degree
    rule, x, elems, w = _element_samples(mesh, degree)
    ne, nq = w.shape
    diff = np.zeros((ne, nq))
    gdiff = np.zeros((ne, nq, mesh.dim))
    if u_exact is not None:
        if u_exact.gradient is None:
            raise MissingGradient("exact function needs an elementwise gradient for H1 errors")
        diff += u_exact(x, elems).reshape(ne, nq)
        gdiff += u_exact.grad(x, elems).reshape(ne, nq, mesh.dim)
    if u_h is not None:
        vals, grads = _discrete_samples(u_h, rule)
        diff -= vals
        gdiff -= grads
    l2 = np.sqrt(np.sum(w * diff ** 2, axis=1))
    h1 = np.sqrt(np.sum(w * np.sum(gdiff ** 2, axis=2), axis=1))
    return NormReport(l2=l2, h1_semi=h1, h=float(shape_regularity(mesh).h.max()))


def broken_norm(u: SideAwareFunction, mesh: Mesh, degree: int = 9) -> NormReport:
    return broken_error(u, None, mesh=mesh, degree=degree)


def discrete_norm(u_h: DiscreteFunction) -> NormReport:
    """Norms of u_h by quadrature (the error against zero)."""
    return broken_error(None, u_h)


def element_matrices(u_h: DiscreteFunction) -> tuple[np.ndarray, np.ndarray]:
    """Elementwise squared L2 norm and H1 seminorm through exact local mass/stiffness forms."""
    tab = u_h.table
    mesh = tab.mesh
    uc = u_h.element_coeffs()
    mass = reference_mass(mesh.dim, tab.p)
    l2sq = mesh.volumes * np.einsum("ea,ab,eb->e", uc, mass, uc)
    stiff = stiffness_matrices(mesh, tab.p)
    h1sq = np.einsum("ea,eab,eb->e", uc, stiff, uc)
    return l2sq, h1sq


def stiffness_matrices(mesh: Mesh, p: int, alpha: np.ndarray | None = None) -> np.ndarray:
    """(ne, nloc, nloc) local matrices of int grad(phi_a)^T alpha grad(phi_b)."""
    rule = quadrature(mesh.dim, max(2 * p - 2, 0))
    dlam = lagrange_basis_dlam(rule.points, p)  # (nq, nloc, d+1)
    grads = np.einsum("qlb,ebx->eqlx", dlam, mesh.bary_gradients)
    if alpha is None:
        k = np.einsum("q,eqax,eqbx->eab", rule.weights, grads, grads)
    else:
        k = np.einsum("q,eqax,exy,eqby->eab", rule.weights, grads, alpha, grads)
    return mesh.volumes[:, None, None] * k


@dataclass(frozen=True)
class RateReport:
    slope: float
    pairwise: np.ndarray
    at_floor: bool


def convergence_rates(h, errors, floor: float = 1e-12) -> RateReport:
    """Least-squares slope of log(error) against log(h), plus consecutive log2 ratios."""
    h = np.asarray(h, dtype=float)
    e = np.asarray(errors, dtype=float)
    if len(h) < 3:
        raise InsufficientLevels(f"need at least 3 refinement levels, got {len(h)}")
    if np.any(e <= floor):
        return RateReport(slope=float("nan"), pairwise=np.full(len(e) - 1, np.nan), at_floor=True)
    slope = float(np.polyfit(np.log(h), np.log(e), 1)[0])
    pairwise = np.log(e[:-1] / e[1:]) / np.log(h[:-1] / h[1:])
    return RateReport(slope=slope, pairwise=pairwise, at_floor=False)


def face_l2_jump_error(u_exact, u_h, mesh: Mesh, topo: MeshTopology, crack: CrackMesh, degree: int = 9) -> np.ndarray:
    """Per crack face, the L2 norm of jump(u_exact) - jump(u_h)."""
    a = two_sided_trace(u_exact, mesh, topo, crack, degree)
    b = two_sided_trace(u_h, mesh, topo, crack, degree)
    return np.sqrt(np.sum(a.weights * (a.jump - b.jump) ** 2, axis=1))


CSV_FIELDS = ("level", "h", "L2_error", "H1_error", "L2_rate", "H1_rate", "stability_ratio")


def rates_csv(rows) -> str:
    """CSV text for rows of dicts keyed by CSV_FIELDS; rates of the first level are blank."""
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: ("" if row.get(k) is None else _fmt(row[k])) for k in CSV_FIELDS})
    return buf.getvalue()


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.10e}"
