"""Conforming simplicial meshes: geometry, face topology and shape metrics."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations
from math import factorial, gamma as gamma_fn, pi

import numpy as np

from .errors import BoundViolated, DanglingVertex, DegenerateSimplex, IndexOutOfRange, NonConforming

FaceKey = tuple  # sorted tuple of d vertex indices


def simplex_measure(coords: np.ndarray) -> np.ndarray:
    """n-dimensional measure of simplices given as ``(..., n+1, d)`` vertex arrays."""
    coords = np.asarray(coords, dtype=float)
    n = coords.shape[-2] - 1
    if n == 0:
        return np.ones(coords.shape[:-2])
    jac = coords[..., 1:, :] - coords[..., :1, :]  # (..., n, d)
    gram = jac @ np.swapaxes(jac, -1, -2)
    det = np.linalg.det(gram)
    return np.sqrt(np.clip(det, 0.0, None)) / factorial(n)


def unit_ball_volume(n: int) -> float:
    return pi ** (n / 2) / gamma_fn(n / 2 + 1)


@dataclass(frozen=True, eq=False)
class Mesh:
    """A d-dimensional simplicial mesh.

    ``elements`` rows are stored sorted, so local vertex order is canonical
    and every subsimplex is identified by a sorted tuple of vertex ids.
    """

    vertices: np.ndarray
    elements: np.ndarray

    def __post_init__(self):
        verts = np.array(self.vertices, dtype=float)
        elems = np.array(self.elements, dtype=np.int64)
        if verts.ndim != 2:
            raise ValueError("vertices must be a 2-d array")
        if elems.ndim != 2 or elems.shape[1] != verts.shape[1] + 1:
            raise ValueError(f"elements must have {verts.shape[1] + 1} columns for d={verts.shape[1]}")
        if not np.all(np.isfinite(verts)):
            raise ValueError("vertex coordinates must be finite")
        if elems.size and (elems.min() < 0 or elems.max() >= len(verts)):
            bad = int(np.argmax((elems < 0).any(axis=1) | (elems >= len(verts)).any(axis=1)))
            raise IndexOutOfRange(f"element {bad} references a vertex outside 0..{len(verts) - 1}")
        elems = np.sort(elems, axis=1)
        if elems.size and np.any(elems[:, 1:] == elems[:, :-1]):
            bad = int(np.argmax(np.any(elems[:, 1:] == elems[:, :-1], axis=1)))
            raise DegenerateSimplex(f"element {bad} repeats a vertex")
        if elems.size:
            coords = verts[elems]
            scale = np.abs(coords - coords[:, :1]).max(axis=(1, 2)) ** verts.shape[1]
            flat = simplex_measure(coords) <= 1e-14 * scale
            if flat.any():
                raise DegenerateSimplex(f"element {int(np.argmax(flat))} has zero volume")
        verts.setflags(write=False)
        elems.setflags(write=False)
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "elements", elems)

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_elements(self) -> int:
        return self.elements.shape[0]

    @cached_property
    def element_coords(self) -> np.ndarray:
        """(ne, d+1, d) vertex coordinates per element."""
        return self.vertices[self.elements]

    @cached_property
    def volumes(self) -> np.ndarray:
        vol = simplex_measure(self.element_coords)
        if np.any(vol <= 0.0):
            raise DegenerateSimplex(f"element {int(np.argmin(vol))} has zero volume")
        return vol

    @cached_property
    def bary_inverse(self) -> np.ndarray:
        """(ne, d, d) maps ``x - v0`` to the barycentric weights of vertices 1..d."""
        jac = np.swapaxes(self.element_coords[:, 1:, :] - self.element_coords[:, :1, :], 1, 2)
        return np.linalg.inv(jac)

    @cached_property
    def bary_gradients(self) -> np.ndarray:
        """(ne, d+1, d) constant gradients of the barycentric coordinates."""
        inv = self.bary_inverse
        return np.concatenate([-inv.sum(axis=1, keepdims=True), inv], axis=1)

    def barycentric(self, points: np.ndarray, elements: np.ndarray) -> np.ndarray:
        """Barycentric coordinates of ``points[k]`` with respect to ``elements[k]``."""
        points = np.asarray(points, dtype=float)
        elements = np.asarray(elements)
        rel = points - self.element_coords[elements, 0, :]
        tail = np.einsum("kij,kj->ki", self.bary_inverse[elements], rel)
        return np.concatenate([1.0 - tail.sum(axis=1, keepdims=True), tail], axis=1)

    def centroids(self) -> np.ndarray:
        return self.element_coords.mean(axis=1)

    def diameter(self) -> float:
        return float(shape_regularity(self).h.max())


@dataclass(frozen=True, eq=False)
class MeshTopology:
    face_to_elements: dict
    element_adjacency: list
    boundary_faces: frozenset
    vertex_to_elements: list = field(repr=False)

    @property
    def interior_faces(self) -> list:
        return [f for f, els in self.face_to_elements.items() if len(els) == 2]

    def element_faces(self, k: int, mesh: Mesh) -> list:
        row = tuple(int(v) for v in mesh.elements[k])
        return [row[:m] + row[m + 1:] for m in range(len(row))]

    @cached_property
    def boundary_subsimplices(self) -> frozenset:
        """Every vertex set (sorted tuple) that is a subsimplex of a boundary face."""
        return _closure(self.boundary_faces)


def _closure(faces) -> frozenset:
    out = set()
    for f in faces:
        for r in range(1, len(f) + 1):
            out.update(combinations(f, r))
    return frozenset(out)


def build_topology(mesh: Mesh) -> MeshTopology:
    """Face-to-element incidence, element adjacency and the boundary of ``mesh``.

    Raises :class:`NonConforming` when a face is shared by more than two elements,
    when an element is duplicated, or when two elements sharing a face lie on the
    same side of it; raises :class:`DanglingVertex` for unreferenced vertices.
    """
    d = mesh.dim
    elems = mesh.elements
    used = np.zeros(mesh.n_vertices, dtype=bool)
    used[elems.ravel()] = True
    if not used.all():
        raise DanglingVertex(f"vertex {int(np.argmin(used))} is not referenced by any element")

    seen = {}
    for k, row in enumerate(map(tuple, elems.tolist())):
        if row in seen:
            raise NonConforming(f"elements {seen[row]} and {k} coincide")
        seen[row] = k

    face_to_elements: dict = {}
    for k, row in enumerate(elems.tolist()):
        for m in range(d + 1):
            key = tuple(row[:m] + row[m + 1:])
            face_to_elements.setdefault(key, []).append(k)

    adjacency: list = [[] for _ in range(mesh.n_elements)]
    boundary = []
    interior = []
    for key, els in face_to_elements.items():
        if len(els) > 2:
            raise NonConforming(f"face {key} is shared by {len(els)} elements {els}")
        if len(els) == 1:
            boundary.append(key)
        else:
            a, b = els
            adjacency[a].append((b, key))
            adjacency[b].append((a, key))
            interior.append((key, a, b))

    if interior:
        _check_opposite_sides(mesh, interior)

    v2e: list = [[] for _ in range(mesh.n_vertices)]
    for k, row in enumerate(elems.tolist()):
        for v in row:
            v2e[v].append(k)

    return MeshTopology(
        face_to_elements=face_to_elements,
        element_adjacency=adjacency,
        boundary_faces=frozenset(boundary),
        vertex_to_elements=v2e,
    )


def _check_opposite_sides(mesh: Mesh, interior: list) -> None:
    faces = np.array([f for f, _, _ in interior], dtype=np.int64)
    ea = np.array([a for _, a, _ in interior])
    eb = np.array([b for _, _, b in interior])
    opp = []
    for e in (ea, eb):
        rows = mesh.elements[e]
        mask = ~(rows[:, :, None] == faces[:, None, :]).any(axis=2)
        opp.append(rows[mask])
    base = mesh.vertices[faces[:, 0]]
    span = mesh.vertices[faces[:, 1:]] - base[:, None, :]  # (nf, d-1, d)
    signs = []
    for o in opp:
        mat = np.concatenate([span, (mesh.vertices[o] - base)[:, None, :]], axis=1)
        signs.append(np.sign(np.linalg.det(mat)))
    bad = np.nonzero(signs[0] * signs[1] >= 0)[0]
    if bad.size:
        f, a, b = interior[int(bad[0])]
        raise NonConforming(f"elements {a} and {b} overlap across face {f}")


@dataclass(frozen=True)
class ShapeReport:
    h: np.ndarray
    rho: np.ndarray

    @property
    def ratio(self) -> np.ndarray:
        return self.h / self.rho

    @property
    def gamma(self) -> float:
        return float(self.ratio.max())


def shape_regularity(mesh: Mesh) -> ShapeReport:
    coords = mesh.element_coords
    d = mesh.dim
    diffs = coords[:, :, None, :] - coords[:, None, :, :]
    h = np.sqrt((diffs ** 2).sum(axis=-1)).max(axis=(1, 2))
    vol = simplex_measure(coords)
    if np.any(vol <= 0.0):
        raise DegenerateSimplex(f"element {int(np.argmin(vol))} has zero volume")
    facet_total = np.zeros(mesh.n_elements)
    for m in range(d + 1):
        keep = [j for j in range(d + 1) if j != m]
        facet_total += simplex_measure(coords[:, keep, :])
    rho = d * vol / facet_total
    return ShapeReport(h=h, rho=rho)


def solid_angle_bound(d: int, gamma: float) -> float:
    """Upper bound on the number of elements sharing a vertex of a gamma-shape-regular mesh."""
    return d * gamma ** d * unit_ball_volume(d) / unit_ball_volume(d - 1)


@dataclass(frozen=True)
class SolidAngleReport:
    star_sizes: np.ndarray
    bound: float

    @property
    def max_star(self) -> int:
        return int(self.star_sizes.max())


def solid_angle_check(mesh: Mesh, topo: MeshTopology, shape: ShapeReport | None = None) -> SolidAngleReport:
    shape = shape if shape is not None else shape_regularity(mesh)
    sizes = np.array([len(s) for s in topo.vertex_to_elements])
    bound = solid_angle_bound(mesh.dim, shape.gamma)
    if sizes.max() > bound:
        v = int(np.argmax(sizes))
        raise BoundViolated(f"vertex {v} has {sizes[v]} incident elements, bound is {bound:.3f}")
    return SolidAngleReport(star_sizes=sizes, bound=bound)
