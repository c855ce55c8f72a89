"""Command-line runner: ``fairdyn run | preset | ingest``."""
from __future__ import annotations

import argparse
import csv
import platform
import shutil
import sys
import tempfile
import time
from pathlib import Path
from typing import Optional

import numpy as np
import scipy

from . import __version__
from . import config as cfgmod
from .config import ConfigError, ExperimentConfig
from .harness import rounds_to_band, run_batch, write_summary_csv


def _write_meta(path: Path, cfg: ExperimentConfig, wall: float, instances: int) -> None:
    lines = [
        f"name = {cfg.name}",
        f"base_seed = {cfg.base_seed}",
        f"instances = {instances}",
        f"horizon = {cfg.horizon}",
        f"fairdyn = {__version__}",
        f"python = {platform.python_version()}",
        f"numpy = {np.__version__}",
        f"scipy = {scipy.__version__}",
        f"wall_seconds = {wall:.3f}",
    ]
    path.write_text("\n".join(lines) + "\n")


def _run_one(cfg: ExperimentConfig, out: Path, workers: int) -> tuple:
    t0 = time.perf_counter()
    summary = run_batch(cfg, workers=workers)
    write_summary_csv(summary, out / "summary.csv")
    (out / "config.resolved").write_text(cfgmod.dumps(cfg))
    _write_meta(out / "meta.txt", cfg, time.perf_counter() - t0, summary.n_instances)
    return summary


def execute(cfg: ExperimentConfig, out_dir: Optional[Path] = None, workers: int = 1) -> Path:
    """Run a config (or its lambda sweep) and publish outputs atomically.

    Everything is written to a scratch directory first and moved into place
    only when the whole run succeeds, so a failure leaves nothing behind.
    """
    out = Path(out_dir if out_dir is not None else cfg.output_dir)
    out.parent.mkdir(parents=True, exist_ok=True)
    scratch = Path(tempfile.mkdtemp(prefix=f".{out.name}-", dir=out.parent))
    try:
        if cfg.lambda_sweep:
            (scratch / "config.resolved").write_text(cfgmod.dumps(cfg))
            rows = []
            for lam in cfg.lambda_sweep:
                sub = scratch / f"lambda_{lam:g}"
                sub.mkdir()
                summary = _run_one(cfg.with_lambda(lam), sub, workers)
                band = rounds_to_band(summary.mean_theta, cfg.alpha)
                rows.append([repr(float(lam)), repr(summary.equilibrium_estimate),
                             str(summary.converged).lower(), "" if band is None else str(band)])
            with open(scratch / "equilibria.csv", "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["lambda", "equilibrium_theta", "converged", "rounds_to_band"])
                w.writerows(rows)
        else:
            _run_one(cfg, scratch, workers)
        out.mkdir(parents=True, exist_ok=True)
        for item in sorted(scratch.iterdir()):
            dest = out / item.name
            if dest.is_dir():
                shutil.rmtree(dest)
            elif dest.exists():
                dest.unlink()
            shutil.move(str(item), str(dest))
    finally:
        shutil.rmtree(scratch, ignore_errors=True)
    return out


def _cmd_run(args) -> int:
    cfg = cfgmod.load(args.config)
    if args.override:
        data = cfgmod.apply_overrides(cfgmod.to_dict(cfg), args.override)
        cfg = cfgmod.apply_env(cfgmod.from_dict(data, Path(args.config).parent))
    out = execute(cfg, args.out, args.workers)
    print(f"wrote {out}")
    return 0


def _cmd_preset(args) -> int:
    if args.list:
        for name, desc in cfgmod.PRESETS.items():
            print(f"{name:10s} {desc}")
        return 0
    if args.name is None:
        raise ConfigError("preset: a preset name is required (use --list to see them)")
    cfg = cfgmod.apply_env(cfgmod.preset(args.name, args.override))
    if args.dump:
        sys.stdout.write(cfgmod.dumps(cfg))
        return 0
    out = execute(cfg, args.out, args.workers)
    print(f"wrote {out}")
    return 0


def _cmd_ingest(args) -> int:
    from .ingest import IngestConfig, ingest_file

    icfg = IngestConfig.from_file(args.config) if args.config else IngestConfig()
    d0, d1, model = ingest_file(args.input, icfg)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    cfgmod.save_distributions_file((d0, d1), out)
    print(f"group0 mean={d0.mean:.4f} var={d0.variance:.4f}")
    print(f"group1 mean={d1.mean:.4f} var={d1.variance:.4f}")
    print(f"logistic fit: {model.iterations} iterations, gradient norm {model.grad_norm:.2e}")
    print(f"wrote {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fairdyn", description="Fairness dynamics in sequential admissions.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run an experiment from a TOML config")
    r.add_argument("--config", required=True, type=Path)
    r.add_argument("--out", type=Path, default=None, help="output directory (default: output_dir)")
    r.add_argument("--override", action="append", default=[], metavar="KEY=VALUE")
    r.add_argument("--workers", type=int, default=1)
    r.set_defaults(func=_cmd_run)

    s = sub.add_parser("preset", help="run a named figure preset")
    s.add_argument("name", nargs="?")
    s.add_argument("--out", type=Path, default=None)
    s.add_argument("--override", action="append", default=[], metavar="KEY=VALUE")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--list", action="store_true", help="list presets and exit")
    s.add_argument("--dump", action="store_true", help="print the resolved config and exit")
    s.set_defaults(func=_cmd_preset)

    i = sub.add_parser("ingest", help="fit per-group score Gaussians from a CSV table")
    i.add_argument("--input", required=True, type=Path)
    i.add_argument("--config", type=Path, default=None)
    i.add_argument("--out", required=True, type=Path)
    i.set_defaults(func=_cmd_ingest)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
