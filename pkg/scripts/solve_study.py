"""Prescribed-jump Laplace solves: exact loop case and refined-reference theta case."""
import argparse
import json
from pathlib import Path

from jumpinterp.geometries import FunctionSpec, GeometrySpec
from jumpinterp.studies import solve_against_exact, solve_study, study_slopes


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/solve")
    ap.add_argument("--levels", type=int, default=3)
    ap.add_argument("--extra", type=int, default=2)
    ap.add_argument("--start", type=int, default=1)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    ind = FunctionSpec("indicator")
    loop = solve_against_exact(GeometrySpec("loop"), ind, ind, 1, levels=4)
    for r in loop:
        print(f"loop  level {r['level']}  H1 error {r['H1_error']:.2e}  CG iterations {r['iterations']}")

    rows = solve_study(GeometrySpec("theta"), FunctionSpec("solve-g"), 1, args.levels, args.extra, start=args.start)
    for r in rows:
        print(f"theta level {r['level']}  h {r['h']:.4f}  H1 error {r['H1_error']:.3e}  energy {r['energy']:.6f}")
    slope = study_slopes(rows)["H1"]
    print(f"theta H1 slope {slope:.3f}")
    (out / "solve.json").write_text(json.dumps({"loop": loop, "theta": rows, "theta_H1_slope": slope}, indent=1))


if __name__ == "__main__":
    main()
