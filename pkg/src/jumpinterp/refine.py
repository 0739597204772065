"""Uniform red (midpoint) refinement of a mesh together with its crack."""
from __future__ import annotations

import numpy as np

from .crack import CrackMesh
from .mesh import Mesh

# Children as pairs of local vertex indices: (a, a) is vertex a, (a, b) the midpoint of edge ab.
RED_TEMPLATES = {
    1: (((0, 0), (0, 1)), ((0, 1), (1, 1))),
    2: (
        ((0, 0), (0, 1), (0, 2)),
        ((0, 1), (1, 1), (1, 2)),
        ((0, 2), (1, 2), (2, 2)),
        ((0, 1), (1, 2), (0, 2)),
    ),
    # Bey's tetrahedral red refinement
    3: (
        ((0, 0), (0, 1), (0, 2), (0, 3)),
        ((0, 1), (1, 1), (1, 2), (1, 3)),
        ((0, 2), (1, 2), (2, 2), (2, 3)),
        ((0, 3), (1, 3), (2, 3), (3, 3)),
        ((0, 1), (0, 2), (0, 3), (1, 3)),
        ((0, 1), (0, 2), (1, 2), (1, 3)),
        ((0, 2), (0, 3), (1, 3), (2, 3)),
        ((0, 2), (1, 2), (1, 3), (2, 3)),
    ),
}


def _edge_codes(a: np.ndarray, b: np.ndarray, nv: int) -> np.ndarray:
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    return lo * nv + hi


def _apply_template(simplices: np.ndarray, template, edge_codes, nv: int) -> np.ndarray:
    rows = []
    for child in template:
        cols = []
        for a, b in child:
            if a == b:
                cols.append(simplices[:, a])
            else:
                code = _edge_codes(simplices[:, a], simplices[:, b], nv)
                cols.append(nv + np.searchsorted(edge_codes, code))
        rows.append(np.stack(cols, axis=1))
    # child c of simplex k lands at row k * len(template) + c
    return np.stack(rows, axis=1).reshape(-1, len(template[0]))


def uniform_refine(mesh: Mesh, crack: CrackMesh, return_parents: bool = False):
    """Split every element into 2^d children through edge midpoints.

    Crack faces descend to the child faces they contain, so the refined mesh still
    resolves Gamma. With ``return_parents`` the parent element of each child is
    returned as a third value.
    """
    d = mesh.dim
    if d not in RED_TEMPLATES or d < 2:
        raise ValueError(f"uniform refinement is implemented for d in (2, 3), got {d}")
    nv = mesh.n_vertices
    elems = mesh.elements
    pairs = [(a, b) for a in range(d + 1) for b in range(a + 1, d + 1)]
    codes = np.unique(np.concatenate([_edge_codes(elems[:, a], elems[:, b], nv) for a, b in pairs]))
    lo, hi = codes // nv, codes % nv
    mids = 0.5 * (mesh.vertices[lo] + mesh.vertices[hi])
    vertices = np.concatenate([mesh.vertices, mids], axis=0)

    children = _apply_template(elems, RED_TEMPLATES[d], codes, nv)
    new_mesh = Mesh(vertices, children)

    if crack.faces:
        faces = np.array(sorted(crack.faces), dtype=np.int64)
        child_faces = _apply_template(faces, RED_TEMPLATES[d - 1], codes, nv)
        new_crack = CrackMesh.from_faces(child_faces.tolist())
    else:
        new_crack = CrackMesh(frozenset())
    new_crack = CrackMesh(new_crack.faces, resolves=crack.resolves, strictly_encloses=crack.strictly_encloses)
    if return_parents:
        parents = np.repeat(np.arange(mesh.n_elements), len(RED_TEMPLATES[d]))
        return new_mesh, new_crack, parents
    return new_mesh, new_crack
