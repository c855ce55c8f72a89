"""Run named presets and print one equilibrium line per run.

    python scripts/run_presets.py fig1a fig5 --instances 50 --out runs
    python scripts/run_presets.py            # every preset at full size
"""
import argparse
import csv
from pathlib import Path

from fairdyn import config as cfgmod
from fairdyn.cli import execute


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("names", nargs="*", default=list(cfgmod.PRESETS))
    ap.add_argument("--out", type=Path, default=Path("runs"))
    ap.add_argument("--instances", type=int)
    ap.add_argument("--horizon", type=int)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args(argv)

    overrides = []
    if args.instances:
        overrides.append(f"instances={args.instances}")
    if args.horizon:
        overrides.append(f"horizon={args.horizon}")
    for name in args.names:
        cfg = cfgmod.apply_env(cfgmod.preset(name, overrides))
        out = execute(cfg, args.out / name, workers=args.workers)
        if cfg.lambda_sweep:
            with open(out / "equilibria.csv") as fh:
                for row in csv.DictReader(fh):
                    print(f"{name:9s} lambda={row['lambda']:<5} theta*={float(row['equilibrium_theta']):.4f} "
                          f"converged={row['converged']}")
        else:
            with open(out / "summary.csv") as fh:
                rows = list(csv.DictReader(fh))
            tail = [float(r["mean_theta"]) for r in rows[-50:]]
            print(f"{name:9s} final-window theta={sum(tail) / len(tail):.4f}")


if __name__ == "__main__":
    main()
