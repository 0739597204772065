from functools import lru_cache

import numpy as np
import pytest

from jumpinterp.geometries import GeometrySpec, generate
from jumpinterp.interpolant import assemble_interpolant
from jumpinterp.mesh import build_topology


@lru_cache(maxsize=None)
def setup(name: str, n: int = 8, p: int = 1, margin: int = 1):
    """(spec, mesh, topo, crack, op) for a generated geometry; cached across tests."""
    spec = GeometrySpec(name, n, margin)
    mesh, crack = generate(spec)
    topo = build_topology(mesh)
    op = assemble_interpolant(mesh, topo, crack, p)
    return spec, mesh, topo, crack, op


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is None or not getattr(mod, "RESULTS", None):
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[k])
