"""Canonical cracked geometries on the unit square and the built-in test fields.

All three geometries live on a structured n x n grid, each cell cut into two
triangles along the same diagonal. With ``a = margin + 1`` grid lines of
clearance and ``b = n - a``:

* ``loop``  : Gamma is the boundary of the square [a, b]^2 (two regions).
* ``theta`` : the loop plus the bar y = n/2 across it (three regions, two
  triple junctions).
* ``slit``  : the open segment y = n/2, a <= x <= b (one region, two tips).

Coordinates are scaled by 1/n, so refining a level-n mesh reproduces the same
Gamma as a set.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import sympy

from .crack import CrackMesh, region_labels, validate_crack
from .errors import InvalidSpec
from .functions import SideAwareFunction
from .mesh import Mesh, build_topology

GEOMETRIES = ("loop", "theta", "slit")


@dataclass(frozen=True)
class GeometrySpec:
    name: str
    n: int = 8
    margin: int = 1

    @property
    def lo(self) -> float:
        return (self.margin + 1) / self.n

    @property
    def hi(self) -> float:
        return 1.0 - self.lo

    def check(self) -> None:
        if self.name not in GEOMETRIES:
            raise InvalidSpec(f"unknown geometry {self.name!r}; choose from {GEOMETRIES}")
        if self.margin < 0:
            raise InvalidSpec("margin must be non-negative")
        if self.n % 2 or self.n < max(4 * self.margin, 2 * self.margin + 4):
            raise InvalidSpec(f"n={self.n} must be even and at least max(4*margin, 2*margin+4)")

    def region_of(self, points: np.ndarray) -> np.ndarray:
        """Geometric region id of points off Gamma: 0 outside the loop, 1 lower, 2 upper."""
        x, y = points[:, 0], points[:, 1]
        inside = (x > self.lo) & (x < self.hi) & (y > self.lo) & (y < self.hi)
        if self.name == "loop":
            return inside.astype(np.int64)
        if self.name == "theta":
            return np.where(inside, np.where(y < 0.5, 1, 2), 0)
        return np.zeros(len(points), dtype=np.int64)

    @property
    def n_regions(self) -> int:
        return {"loop": 2, "theta": 3, "slit": 1}[self.name]

    def gamma_factors(self):
        """Affine factors (as sympy expressions) whose zero sets cover Gamma."""
        x, y = sympy.symbols("x y")
        lo, hi = sympy.Rational(self.margin + 1, self.n), 1 - sympy.Rational(self.margin + 1, self.n)
        half = sympy.Rational(1, 2)
        if self.name == "loop":
            return [x - lo, x - hi, y - lo, y - hi]
        if self.name == "theta":
            return [x - lo, x - hi, y - lo, y - hi, y - half]
        return [y - half]


def structured_square(n: int) -> Mesh:
    idx = np.arange((n + 1) ** 2).reshape(n + 1, n + 1)  # idx[j, i] -> vertex at (i/n, j/n)
    xs, ys = np.meshgrid(np.arange(n + 1) / n, np.arange(n + 1) / n)
    verts = np.stack([xs.ravel(), ys.ravel()], axis=1)
    v00 = idx[:-1, :-1].ravel()
    v10 = idx[:-1, 1:].ravel()
    v01 = idx[1:, :-1].ravel()
    v11 = idx[1:, 1:].ravel()
    lower = np.stack([v00, v10, v11], axis=1)
    upper = np.stack([v00, v11, v01], axis=1)
    elems = np.stack([lower, upper], axis=1).reshape(-1, 3)
    return Mesh(verts, elems)


def _segment_edges(n: int, start, stop) -> list:
    """Grid edges from grid point ``start`` to ``stop`` along one axis."""
    (i0, j0), (i1, j1) = start, stop
    out = []
    if j0 == j1:
        for i in range(min(i0, i1), max(i0, i1)):
            out.append((j0 * (n + 1) + i, j0 * (n + 1) + i + 1))
    else:
        for j in range(min(j0, j1), max(j0, j1)):
            out.append((j * (n + 1) + i0, (j + 1) * (n + 1) + i0))
    return out


def generate(spec: GeometrySpec, validate: bool = True) -> tuple[Mesh, CrackMesh]:
    spec.check()
    n = spec.n
    a, b, mid = spec.margin + 1, n - spec.margin - 1, n // 2
    mesh = structured_square(n)
    edges = []
    if spec.name in ("loop", "theta"):
        edges += _segment_edges(n, (a, a), (b, a))
        edges += _segment_edges(n, (a, b), (b, b))
        edges += _segment_edges(n, (a, a), (a, b))
        edges += _segment_edges(n, (b, a), (b, b))
    if spec.name in ("theta", "slit"):
        edges += _segment_edges(n, (a, mid), (b, mid))
    crack = CrackMesh.from_faces(edges)
    if validate:
        crack = validate_crack(mesh, build_topology(mesh), crack)
    return mesh, crack


def element_regions(spec: GeometrySpec, mesh: Mesh) -> np.ndarray:
    return spec.region_of(mesh.centroids())


# ---------------------------------------------------------------------------
# field library

X, Y = sympy.symbols("x y")
FUNCTIONS = ("jumpy-sine", "smooth", "poly", "vanishing", "indicator", "solve-g", "zero")


def _lambdify(expr):
    f = sympy.lambdify((X, Y), expr, "numpy")
    gx = sympy.lambdify((X, Y), sympy.diff(expr, X), "numpy")
    gy = sympy.lambdify((X, Y), sympy.diff(expr, Y), "numpy")

    def value(pts):
        return np.broadcast_to(np.asarray(f(pts[:, 0], pts[:, 1]), dtype=float), (len(pts),))

    def grad(pts):
        cols = [np.broadcast_to(np.asarray(g(pts[:, 0], pts[:, 1]), dtype=float), (len(pts),)) for g in (gx, gy)]
        return np.stack(cols, axis=1)

    return value, grad


@dataclass(frozen=True)
class FunctionSpec:
    """A named built-in field; ``seed`` and ``p`` parametrize the random families."""

    name: str
    seed: int = 0
    p: int = 1
    params: dict = field(default_factory=dict, compare=False)

    def expressions(self, geometry: GeometrySpec) -> list:
        """One sympy expression per region."""
        R = geometry.n_regions
        rng = np.random.default_rng(self.seed)
        rat = lambda v: sympy.Rational(str(round(float(v), 6)))  # noqa: E731
        if self.name == "jumpy-sine":
            base = sympy.sin(sympy.pi * X) * sympy.sin(sympy.pi * Y)
            offsets = [sympy.Integer(0), 1 + X / 2 - Y / 4, -sympy.Rational(1, 2) + 3 * X / 10 + 7 * Y / 10]
            return [base + offsets[r] for r in range(R)]
        if self.name == "smooth":
            c = rng.uniform(-1, 1, size=6)
            k = rng.uniform(0.5, 3.0, size=4)
            e = (rat(c[0]) * sympy.sin(rat(k[0]) * X + rat(k[1]) * Y + rat(c[1]))
                 + rat(c[2]) * sympy.exp(rat(k[2]) * X / 2) * sympy.cos(rat(k[3]) * Y)
                 + rat(c[3]) * X * Y + rat(c[4]) * Y ** 2 + rat(c[5]))
            return [e] * R
        if self.name == "poly":
            out = []
            for _ in range(R):
                e = sympy.Integer(0)
                for i in range(self.p + 1):
                    for j in range(self.p + 1 - i):
                        e += rat(rng.uniform(-1, 1)) * X ** i * Y ** j
                out.append(e)
            return out
        if self.name == "vanishing":
            bubble = X * (1 - X) * Y * (1 - Y)
            for fac in geometry.gamma_factors():
                bubble *= fac
            c = rng.uniform(-1, 1, size=3)
            modulation = 1 + rat(c[0]) * sympy.sin(2 * X + rat(c[1])) + rat(c[2]) * Y
            # different multiples per region keep the field discontinuous across Gamma
            return [(r + 1) * 50 * bubble * modulation for r in range(R)]
        if self.name == "indicator":
            return [sympy.Integer(1 if r == 1 else 0) for r in range(R)]
        if self.name == "solve-g":
            outer = sympy.sin(sympy.pi * X) * sympy.sin(sympy.pi * Y) / 2
            inner = [outer, 1 + X * Y, -1 + X ** 2]
            return [inner[r] for r in range(R)]
        if self.name == "zero":
            return [sympy.Integer(0)] * R
        raise InvalidSpec(f"unknown function {self.name!r}; choose from {FUNCTIONS}")

    def build(self, geometry: GeometrySpec, mesh: Mesh) -> SideAwareFunction:
        exprs = self.expressions(geometry)
        pairs = [_lambdify(e) for e in exprs]
        regions = element_regions(geometry, mesh)
        if len(set(map(str, exprs))) == 1:
            f, g = pairs[0]
            return SideAwareFunction.from_global(f, g)
        return SideAwareFunction.from_regions(regions, [f for f, _ in pairs], [g for _, g in pairs])


def check_regions(spec: GeometrySpec, mesh: Mesh, crack: CrackMesh) -> bool:
    """True when the geometric region map and the combinatorial components coincide."""
    labels = region_labels(mesh, build_topology(mesh), crack).labels
    geo = element_regions(spec, mesh)
    pairs = set(zip(labels.tolist(), geo.tolist()))
    return len(pairs) == len(set(labels.tolist())) == len(set(geo.tolist()))
