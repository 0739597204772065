"""The crack Gamma_h as a set of interior mesh faces, and the combinatorics around it.

Sides, bridges and region labels are all decided from integer incidence data;
no coordinates are consulted.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np
from scipy.cluster.hierarchy import DisjointSet

from .errors import DisconnectedBridgeGraph, NotResolved, NotStrictlyEnclosed, OrphanNode
from .mesh import Mesh, MeshTopology, _closure


@dataclass(frozen=True, eq=False)
class CrackMesh:
    faces: frozenset
    resolves: bool = False
    strictly_encloses: bool = False

    @classmethod
    def from_faces(cls, faces) -> "CrackMesh":
        return cls(frozenset(tuple(sorted(int(v) for v in f)) for f in faces))

    @property
    def validated(self) -> bool:
        return self.resolves and self.strictly_encloses

    @cached_property
    def subsimplices(self) -> frozenset:
        """All vertex sets lying on Gamma (subsimplices of some crack face)."""
        return _closure(self.faces)

    @cached_property
    def vertices(self) -> frozenset:
        return frozenset(v for f in self.faces for v in f)

    def __len__(self) -> int:
        return len(self.faces)


def validate_crack(mesh: Mesh, topo: MeshTopology, crack: CrackMesh) -> CrackMesh:
    """Check that Gamma is made of interior faces and that it stays away from the boundary."""
    d = mesh.dim
    for f in sorted(crack.faces):
        if len(f) != d:
            raise NotResolved(f"crack face {f} does not have {d} vertices")
        els = topo.face_to_elements.get(f)
        if els is None:
            raise NotResolved(f"crack face {f} is not a face of the mesh")
        if len(els) != 2:
            raise NotResolved(f"crack face {f} lies on the boundary")
    bverts = {v for f in topo.boundary_faces for v in f}
    gverts = crack.vertices
    for k, row in enumerate(mesh.elements.tolist()):
        touches_boundary = any(v in bverts for v in row)
        if touches_boundary and any(v in gverts for v in row):
            raise NotStrictlyEnclosed(f"element {k} touches both the boundary and the crack", element=k)
    return replace(crack, resolves=True, strictly_encloses=True)


def star(carrier: tuple, topo: MeshTopology) -> list:
    """Elements containing the simplex spanned by ``carrier`` (hence every point inside it).

    A Lagrange node lies in the relative interior of its carrier subsimplex, so on a
    conforming mesh it belongs to exactly the elements that contain the carrier.
    """
    sets = [topo.vertex_to_elements[v] for v in carrier]
    common = set(sets[0]).intersection(*sets[1:]) if sets else set()
    if not common:
        raise OrphanNode(f"no element contains the simplex {carrier}")
    return sorted(common)


@dataclass(frozen=True)
class SideDecomposition:
    carrier: tuple
    sides: tuple  # tuple of sorted element tuples, ordered by smallest element

    @property
    def q(self) -> int:
        return len(self.sides)

    def side_of(self, element: int) -> int:
        for j, side in enumerate(self.sides):
            if element in side:
                return j
        raise KeyError(element)


def _shared_face(a_row, b_row) -> tuple:
    return tuple(sorted(set(a_row) & set(b_row)))


def side_decomposition(carrier: tuple, star_elems, crack: CrackMesh, topo: MeshTopology) -> SideDecomposition:
    """Connected components of the star graph whose edges are shared faces not in Gamma."""
    members = set(star_elems)
    ds = DisjointSet(sorted(members))
    for k in members:
        for nbr, face in topo.element_adjacency[k]:
            if nbr in members and face not in crack.faces:
                ds.merge(k, nbr)
    sides = sorted((tuple(sorted(s)) for s in ds.subsets()), key=lambda s: s[0])
    return SideDecomposition(carrier=tuple(carrier), sides=tuple(sides))


@dataclass(frozen=True)
class Bridge:
    pair: tuple  # (k, l) side indices, k < l, zero based
    face: tuple
    elements: tuple  # (K_k, K_l)


def incident_crack_faces(carrier: tuple, star_elems, crack: CrackMesh, mesh: Mesh) -> list:
    cset = set(carrier)
    out = set()
    d = mesh.dim
    for k in star_elems:
        row = tuple(int(v) for v in mesh.elements[k])
        for m in range(d + 1):
            f = row[:m] + row[m + 1:]
            if f in crack.faces and cset.issubset(f):
                out.add(f)
    return sorted(out)


def enumerate_bridges(dec: SideDecomposition, crack: CrackMesh, topo: MeshTopology, mesh: Mesh) -> list:
    """One witness bridge per pair of sides joined by a crack face containing the node."""
    if dec.q < 2:
        return []
    members = {k for side in dec.sides for k in side}
    found: dict = {}
    for f in incident_crack_faces(dec.carrier, members, crack, mesh):
        a, b = topo.face_to_elements[f]
        sa, sb = dec.side_of(a), dec.side_of(b)
        if sa == sb:
            continue
        if sa > sb:
            a, b, sa, sb = b, a, sb, sa
        if (sa, sb) not in found:  # faces come sorted, so the first one is the smallest
            found[(sa, sb)] = Bridge(pair=(sa, sb), face=f, elements=(a, b))
    bridges = [found[key] for key in sorted(found)]
    if not bridge_graph_connected(dec.q, bridges):
        raise DisconnectedBridgeGraph(f"bridge graph around {dec.carrier} is disconnected")
    return bridges


def bridge_graph_connected(q: int, bridges) -> bool:
    return len(bfs_spanning_tree(q, bridges)) == q - 1


def bfs_spanning_tree(q: int, bridges) -> list:
    """Bridges of a BFS spanning tree of the side graph, rooted at side 0."""
    nbrs: dict = {j: [] for j in range(q)}
    for b in bridges:
        k, l = b.pair
        nbrs[k].append((l, b))
        nbrs[l].append((k, b))
    seen = {0}
    tree = []
    todo = deque([0])
    while todo:
        s = todo.popleft()
        for t, b in sorted(nbrs[s], key=lambda item: item[0]):
            if t not in seen:
                seen.add(t)
                tree.append(b)
                todo.append(t)
    return tree


@dataclass(frozen=True)
class RegionLabeling:
    labels: np.ndarray

    @property
    def count(self) -> int:
        return int(self.labels.max()) + 1 if self.labels.size else 0


def region_labels(mesh: Mesh, topo: MeshTopology, crack: CrackMesh) -> RegionLabeling:
    """Connected components of the mesh when crack faces are removed from the adjacency."""
    ne = mesh.n_elements
    ds = DisjointSet(range(ne))
    for face, els in topo.face_to_elements.items():
        if len(els) == 2 and face not in crack.faces:
            ds.merge(els[0], els[1])
    labels = np.empty(ne, dtype=np.int64)
    roots: dict = {}
    for k in range(ne):  # label by first appearance so ids are stable
        r = ds[k]
        labels[k] = roots.setdefault(r, len(roots))
    return RegionLabeling(labels)


def star_face_connected(star_elems, topo: MeshTopology) -> bool:
    members = set(star_elems)
    if not members:
        return True
    start = min(members)
    seen = {start}
    todo = [start]
    while todo:
        k = todo.pop()
        for nbr, _ in topo.element_adjacency[k]:
            if nbr in members and nbr not in seen:
                seen.add(nbr)
                todo.append(nbr)
    return seen == members
