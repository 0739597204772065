"""Interpolation error tables for every geometry and degree, written as CSV."""
import argparse
from pathlib import Path

from jumpinterp.geometries import GEOMETRIES, FunctionSpec, GeometrySpec
from jumpinterp.norms import rates_csv
from jumpinterp.studies import convergence_study, study_slopes


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/convergence")
    ap.add_argument("--levels", type=int, default=4)
    ap.add_argument("--function", default="jumpy-sine")
    ap.add_argument("--degrees", type=int, nargs="+", default=[1, 2])
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name in GEOMETRIES:
        for p in args.degrees:
            # cap the finest level for p >= 2 to keep the run short
            levels = args.levels if p == 1 else min(args.levels, 3)
            rows = convergence_study(GeometrySpec(name), FunctionSpec(args.function, p=p), p, levels)
            (out / f"{name}_p{p}.csv").write_text(rates_csv(rows))
            s = study_slopes(rows)
            print(f"{name:6s} p={p}  L2 slope {s['L2']:.3f}  H1 slope {s['H1']:.3f}")


if __name__ == "__main__":
    main()
