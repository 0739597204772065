import csv
import io
import json

import numpy as np
import pytest

from conftest import setup
from jumpinterp.cli import main
from jumpinterp.errors import InvalidSpec
from jumpinterp.geometries import FUNCTIONS, GeometrySpec, FunctionSpec, element_regions, generate


def test_spec_checks():
    for bad in (GeometrySpec("theta", 7), GeometrySpec("theta", 4), GeometrySpec("moebius"), GeometrySpec("loop", 8, -1)):
        with pytest.raises(InvalidSpec):
            bad.check()
    GeometrySpec("loop", 12, 2).check()


def test_slit_node_classes():
    spec, mesh, topo, crack, op = setup("slit", p=2)
    tab = op.table
    tips = {int(np.argmin(np.abs(tab.nodes.coords - [x, 0.5]).sum(axis=1))) for x in (0.25, 0.75)}
    for i in np.nonzero(tab.on_gamma)[0]:
        assert tab.q[i] == (1 if i in tips else 2)


def test_theta_has_two_triple_junctions():
    spec, mesh, topo, crack, op = setup("theta")
    assert int((op.table.q == 3).sum()) == 2


@pytest.mark.parametrize("name", ["loop", "theta", "slit"])
@pytest.mark.parametrize("fname", FUNCTIONS)
def test_field_gradients_match_finite_differences(name, fname, rng):
    spec = GeometrySpec(name)
    mesh, _ = generate(spec)
    u = FunctionSpec(fname, seed=5, p=2).build(spec, mesh)
    k = rng.integers(0, mesh.n_elements, 40)
    lam = rng.dirichlet(np.ones(3) * 4, 40)
    x = np.einsum("ka,kad->kd", lam, mesh.element_coords[k])
    g = u.grad(x, k)
    eps = 1e-6
    for axis in range(2):
        dx = np.zeros(2)
        dx[axis] = eps
        fd = (u(x + dx, k) - u(x - dx, k)) / (2 * eps)
        assert np.allclose(fd, g[:, axis], atol=1e-5 * max(1.0, np.abs(g).max()))


@pytest.mark.parametrize("name", ["loop", "theta", "slit"])
def test_vanishing_fields_vanish(name):
    spec, mesh, topo, crack, op = setup(name)
    u = FunctionSpec("vanishing", seed=3).build(spec, mesh)
    tab = op.table
    mask = tab.on_gamma | tab.on_boundary
    for i in np.nonzero(mask)[0]:
        for side in tab.sides[i].sides:
            assert abs(u(tab.nodes.coords[i][None, :], [side[0]])[0]) <= 1e-12


def test_region_fields_follow_regions():
    spec = GeometrySpec("theta")
    mesh, _ = generate(spec)
    regions = element_regions(spec, mesh)
    u = FunctionSpec("indicator").build(spec, mesh)
    c = mesh.centroids()
    assert np.array_equal(u(c, np.arange(mesh.n_elements)), (regions == 1).astype(float))


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


def test_generate_and_validate(tmp_path, capsys):
    path = tmp_path / "theta.json"
    assert run(capsys, "generate", "--geometry", "theta", "--out", str(path))[0] == 0
    code, out = run(capsys, "validate", str(path))
    report = json.loads(out)
    assert code == 0 and report["regions"] == 3 and report["q_histogram"]["3"] == 2
    assert report["max_star"] <= report["star_bound"]


def test_validate_corrupted_file(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text('{"dim": 2, "vertices": [[0, 0], [1, 0], [0, 1]], "elements": [[0, 1, 7]]}')
    code, out = run(capsys, "validate", str(path))
    assert code == 2 and json.loads(out)["error"] == "IndexOutOfRange"
    path.write_text('{"dim": 2, "vertices": [[0, 0], [1, 0]')
    code, out = run(capsys, "validate", str(path))
    assert code == 2 and json.loads(out)["error"] == "ParseError"
    code, out = run(capsys, "validate", str(tmp_path / "missing.json"))
    assert code == 2


def test_failure_paths_are_named(capsys):
    code, out = run(capsys, "interpolate", "--geometry", "theta", "--n", "7")
    assert code == 2 and json.loads(out)["error"] == "InvalidSpec"
    code, out = run(capsys, "diagnose", "--geometry", "loop", "--margin", "0")
    assert code == 2 and json.loads(out)["error"] == "NotStrictlyEnclosed"


def test_convergence_csv(capsys):
    code, out = run(capsys, "convergence", "--geometry", "theta", "--p", "1", "--levels", "4",
                    "--function", "jumpy-sine")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 4
    assert rows[0]["L2_rate"] == "" and float(rows[3]["L2_rate"]) == pytest.approx(2.0, abs=0.1)
    code, again = run(capsys, "convergence", "--geometry", "theta", "--p", "1", "--levels", "4",
                      "--function", "jumpy-sine")
    assert again == out


def test_solve_loop_indicator(capsys):
    code, out = run(capsys, "solve", "--geometry", "loop", "--g", "indicator")
    report = json.loads(out)
    assert code == 0 and report["reference"] == "exact"
    assert all(r["H1_error"] <= 1e-8 for r in report["levels"])


def test_solve_with_reference(capsys):
    code, out = run(capsys, "solve", "--geometry", "theta", "--levels", "3", "--extra", "1")
    report = json.loads(out)
    assert code == 0 and "H1_slope" in report


def test_interpolate_and_diagnose(tmp_path, capsys):
    prov = tmp_path / "prov.json"
    code, out = run(capsys, "interpolate", "--geometry", "theta", "--p", "2", "--function", "poly",
                    "--provenance", str(prov))
    report = json.loads(out)
    assert code == 0 and report["H1_error"] <= 1e-10
    assert len(json.loads(prov.read_text())) == report["n_dofs"]
    code, out = run(capsys, "diagnose", "--geometry", "theta")
    nodes = json.loads(out)
    assert code == 0
    junctions = [n for n in nodes if n["q"] == 3]
    assert len(junctions) == 2 and all(len(n["bridges"]) == 3 for n in junctions)
    assert all(sum(n["side_sizes"]) == 6 for n in nodes)
