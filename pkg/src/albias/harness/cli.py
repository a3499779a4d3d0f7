"""Command-line entry point: ``albias {run,preset,validate,histogram,scatter}``."""

from __future__ import annotations

import argparse
import csv
import os
import sys
import time

import numpy as np

from ..exceptions import ALBError, ConfigError
from ..metrics import spearman_permutation_test
from .config import load_config, save_config
from .outputs import write_outputs
from .presets import PRESET_NAMES, preset
from .runner import run_batch

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _run_options(p):
    p.add_argument("--reps", type=_positive_int, help="number of replications")
    p.add_argument("--seed", type=int, help="base seed")
    p.add_argument("--out", help="output directory")
    p.add_argument("--jobs", type=int, default=1, help="parallel workers (-1: all cores)")


def build_parser():
    parser = argparse.ArgumentParser(prog="albias", description=(
        "Simulate Bayesian adaptive design under model misspecification."))
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run an experiment from a JSON config")
    p.add_argument("--config", required=True)
    _run_options(p)

    p = sub.add_parser("preset", help="run (or emit) a named figure preset")
    p.add_argument("--name", required=True, choices=PRESET_NAMES, metavar="NAME",
                   help="one of: " + ", ".join(PRESET_NAMES))
    p.add_argument("--emit-config", metavar="FILE",
                   help="write the config to FILE ('-' for stdout) instead of running")
    _run_options(p)

    p = sub.add_parser("validate", help="check a config file")
    p.add_argument("--config", required=True)

    p = sub.add_parser("histogram", help="print design histograms of a finished run")
    p.add_argument("--run", required=True, help="run output directory")
    p.add_argument("--arm", help="restrict to one arm")
    p.add_argument("--width", type=int, default=50)

    p = sub.add_parser("scatter", help="D_model vs ALB rank correlation of a finished run")
    p.add_argument("--run", required=True, help="run output directory")
    p.add_argument("--permutations", type=_positive_int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    return parser


def _execute(config, args, out):
    overrides = {"replications": args.reps, "base_seed": args.seed, "output_dir": args.out}
    config = config.replace(**overrides)
    out_dir = config.output_dir or os.path.join("runs", config.name)
    start = time.perf_counter()
    summary = run_batch(config, jobs=args.jobs)
    wall = time.perf_counter() - start
    write_outputs(summary, config, out_dir, wall_time=round(wall, 3))
    for arm in summary.arms:
        print(f"{arm}: risk[T]={summary.mean_risk[arm][-1]:.6g} "
              f"(se {summary.stderr[arm][-1]:.3g})", file=out)
    print(f"theta* risk {summary.theta_star_risk:.6g}; wrote {out_dir} in {wall:.1f}s", file=out)


def _read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _histogram(args, out):
    rows = _read_csv(os.path.join(args.run, "designs_hist.csv"))
    arms = sorted({r["arm"] for r in rows}, key=[r["arm"] for r in rows].index)
    if args.arm:
        if args.arm not in arms:
            raise ALBError(f"arm {args.arm!r} not in run (have {', '.join(arms)})")
        arms = [args.arm]
    for arm in arms:
        sel = [r for r in rows if r["arm"] == arm]
        counts = np.array([int(r["count"]) for r in sel])
        top = max(int(counts.max()), 1)
        print(f"# {arm}: {int(counts.sum())} designs, {int(np.count_nonzero(counts))} occupied bins",
              file=out)
        for r, c in zip(sel, counts):
            if c:
                bar = "#" * max(1, round(args.width * c / top))
                print(f"[{float(r['bin_lo']):9.4g}, {float(r['bin_hi']):9.4g}) {c:8d} {bar}",
                      file=out)


def _scatter(args, out):
    rows = _read_csv(os.path.join(args.run, "alb_scatter.csv"))
    dm = np.array([float(r["d_model"]) for r in rows])
    ab = np.array([float(r["alb"]) for r in rows])
    rho, p = spearman_permutation_test(dm, ab, n_permutations=args.permutations, seed=args.seed)
    print(f"n={len(rows)} spearman={rho:.4f} one-sided p={p:.4g} "
          f"mean ALB={ab.mean():.4g} max D_model={dm.max():.4g}", file=out)


def main(argv=None, out=None):
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        if args.command == "validate":
            cfg = load_config(args.config)
            print(f"ok: {cfg.name} ({len(cfg.arms)} arms, R={cfg.replications}, "
                  f"T={cfg.horizon})", file=out)
        elif args.command == "run":
            _execute(load_config(args.config), args, out)
        elif args.command == "preset":
            cfg = preset(args.name)
            if args.emit_config:
                cfg = cfg.replace(replications=args.reps, base_seed=args.seed,
                                  output_dir=args.out)
                if args.emit_config == "-":
                    out.write(cfg.to_json())
                else:
                    save_config(cfg, args.emit_config)
            else:
                _execute(cfg, args, out)
        elif args.command == "histogram":
            _histogram(args, out)
        else:
            _scatter(args, out)
    except ConfigError as exc:
        print(f"albias: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ALBError, OSError, ValueError) as exc:
        print(f"albias: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
