"""JSON mesh files.

Format::

    {"dim": d, "vertices": [[x, y, ...], ...], "elements": [[i0, ..., id], ...],
     "gamma_faces": [[i0, ..., i_{d-1}], ...]}

Indices are 0-based. Vertex order inside a simplex is free on input; output is
canonical (sorted simplices, sorted crack faces).
"""
from __future__ import annotations

import json
from numbers import Integral, Real

from .crack import CrackMesh
from .errors import IndexOutOfRange, ParseError
from .mesh import Mesh


def _int_rows(doc: dict, field: str, width: int, nv: int) -> list:
    rows = doc.get(field)
    if not isinstance(rows, list):
        raise ParseError(f"field '{field}' must be a list")
    out = []
    for r, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != width:
            raise ParseError(f"{field}[{r}]: expected a list of {width} indices")
        for c, v in enumerate(row):
            if isinstance(v, bool) or not isinstance(v, Integral):
                raise ParseError(f"{field}[{r}][{c}]: expected an integer, got {v!r}")
            if not 0 <= v < nv:
                raise IndexOutOfRange(f"{field}[{r}][{c}] = {v} is outside 0..{nv - 1}")
        if len(set(row)) != width:
            raise ParseError(f"{field}[{r}]: repeated vertex index")
        out.append(sorted(int(v) for v in row))
    return out


def parse_mesh(text: str) -> tuple[Mesh, CrackMesh]:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ParseError("top-level value must be an object")
    d = doc.get("dim")
    if isinstance(d, bool) or not isinstance(d, Integral) or d < 1:
        raise ParseError("field 'dim' must be a positive integer")
    verts = doc.get("vertices")
    if not isinstance(verts, list) or not verts:
        raise ParseError("field 'vertices' must be a non-empty list")
    for r, row in enumerate(verts):
        if not isinstance(row, list) or len(row) != d:
            raise ParseError(f"vertices[{r}]: expected {d} coordinates")
        for c, x in enumerate(row):
            if isinstance(x, bool) or not isinstance(x, Real):
                raise ParseError(f"vertices[{r}][{c}]: expected a number, got {x!r}")
    nv = len(verts)
    elems = _int_rows(doc, "elements", d + 1, nv)
    faces = _int_rows(doc, "gamma_faces", d, nv) if "gamma_faces" in doc else []
    unknown = set(doc) - {"dim", "vertices", "elements", "gamma_faces"}
    if unknown:
        raise ParseError(f"unknown fields: {sorted(unknown)}")
    try:
        mesh = Mesh(verts, elems)
    except ValueError as exc:
        raise ParseError(str(exc)) from exc
    return mesh, CrackMesh.from_faces(faces)


def serialize_mesh(mesh: Mesh, crack: CrackMesh) -> str:
    doc = {
        "dim": mesh.dim,
        "vertices": [[float(x) for x in row] for row in mesh.vertices],
        "elements": mesh.elements.tolist(),
        "gamma_faces": [list(f) for f in sorted(crack.faces)],
    }
    lines = ["{", f'  "dim": {doc["dim"]},']
    for name in ("vertices", "elements", "gamma_faces"):
        rows = doc[name]
        body = ",\n".join("    " + json.dumps(r) for r in rows)
        sep = "," if name != "gamma_faces" else ""
        lines.append(f'  "{name}": [\n{body}\n  ]{sep}' if rows else f'  "{name}": []{sep}')
    lines.append("}")
    return "\n".join(lines) + "\n"


def canonical(text: str) -> str:
    return serialize_mesh(*parse_mesh(text))


def load_mesh(path) -> tuple[Mesh, CrackMesh]:
    with open(path) as fh:
        return parse_mesh(fh.read())


def save_mesh(path, mesh: Mesh, crack: CrackMesh) -> None:
    with open(path, "w") as fh:
        fh.write(serialize_mesh(mesh, crack))
