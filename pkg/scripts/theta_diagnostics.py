"""Side counts, bridges and bridge coefficients at the triple junctions of the theta geometry."""
import argparse
import json

import numpy as np

from jumpinterp.cli import crack_diagnostics
from jumpinterp.geometries import GeometrySpec, generate
from jumpinterp.interpolant import assemble_interpolant
from jumpinterp.mesh import build_topology


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=8)
    ap.add_argument("--p", type=int, default=1)
    args = ap.parse_args()
    mesh, crack = generate(GeometrySpec("theta", args.n))
    topo = build_topology(mesh)
    op = assemble_interpolant(mesh, topo, crack, args.p)
    diag = crack_diagnostics(mesh, topo, crack, args.p)
    q = np.array([d["q"] for d in diag])
    print(f"{len(diag)} nodes on Gamma: " + ", ".join(f"q={k}: {int((q == k).sum())}" for k in np.unique(q)))
    for d in diag:
        if d["q"] == 3:
            prov = op.provenance[d["node"]]
            print(json.dumps({"node": d["node"], "coords": d["coords"], "side_sizes": d["side_sizes"],
                              "tree": prov["tree"], "A": prov["A"], "lambda": prov["lambda"]}))
    print(f"max terms per coefficient functional: {int(op.term_counts().max())}")


if __name__ == "__main__":
    main()
