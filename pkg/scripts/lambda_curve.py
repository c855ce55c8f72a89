"""Equilibrium share as a function of the fairness weight.

Applies one lambda to every institution of a preset and records the
final-window mean theta. Writes a two-column CSV and echoes it.

    python scripts/lambda_curve.py fig5 --lambdas 0 0.5 1 2 4 --instances 40
"""
import argparse
import csv
import sys

from fairdyn import config as cfgmod
from fairdyn.harness import run_batch


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("preset")
    ap.add_argument("--lambdas", type=float, nargs="+", default=[0.25, 0.5, 1.0, 2.0, 4.0])
    ap.add_argument("--instances", type=int, default=40)
    ap.add_argument("--window", type=int, default=50)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--csv", default="-")
    args = ap.parse_args(argv)

    base = cfgmod.preset(args.preset, [f"instances={args.instances}"])
    rows = []
    for lam in args.lambdas:
        s = run_batch(base.with_lambda(lam), workers=args.workers)
        rows.append((lam, float(s.mean_theta[-args.window:].mean())))
    fh = sys.stdout if args.csv == "-" else open(args.csv, "w", newline="")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["lambda", "final_window_theta"])
    w.writerows(rows)
    if fh is not sys.stdout:
        fh.close()


if __name__ == "__main__":
    main()
