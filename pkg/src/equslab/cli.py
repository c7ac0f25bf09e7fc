"""Command-line entry point: ``equslab {run,ablate,nfe-sweep,schedule,degrade}``."""

import argparse
import json
import logging
import os
import sys
from dataclasses import replace

import numpy as np
import yaml

from .harness.config import ABLATION_METHODS, load_spec, resolve_method
from .harness.pnm import read_pnm, write_pnm
from .harness.runner import (
    SWEEP_FIELDS,
    ablation_report,
    all_ok,
    nfe_sweep_table,
    run_experiment,
    write_table,
)
from .operators import TASKS, build_task
from .samplers import SCHEDULES, make_subsequence


def _load(args):
    spec = load_spec(args.spec)
    out = args.output or spec.output
    return spec, out


def cmd_run(args):
    spec, out = _load(args)
    rows = run_experiment(spec, out, workers=args.workers)
    print(f"{len(rows)} cells -> {os.path.join(out, 'metrics.csv')}")
    return 0 if all_ok(rows) else 1


def cmd_ablate(args):
    spec, out = _load(args)
    modes = sorted({m["guidance"] for m in spec.methods})
    if modes != ["pinv"]:
        print(f"ablate uses pinv guidance; ignoring modes {modes}", file=sys.stderr)
    spec = replace(spec, methods=[resolve_method(m) for m in ABLATION_METHODS])
    rows = run_experiment(spec, out, workers=args.workers)
    ok = all_ok(rows)
    if ok:
        report = ablation_report(rows, metric=args.metric, alpha=args.alpha)
        with open(os.path.join(out, "ablation_report.json"), "w") as fh:
            json.dump(report, fh, indent=1)
        print("\n".join(report["summary"]))
    return 0 if ok else 1


def cmd_nfe_sweep(args):
    spec, out = _load(args)
    if args.nfe:
        spec = replace(spec, nfe=[int(v) for v in args.nfe.split(",")])
    rows = run_experiment(spec, out, workers=args.workers)
    table = nfe_sweep_table(rows)
    write_table(os.path.join(out, "nfe_sweep.csv"), table, SWEEP_FIELDS)
    for entry in table:
        print(f"nfe={entry['nfe']:>4} {entry['method']:<14} mse={entry['mse']:.6g} psnr={entry['psnr']:.4g}")
    return 0 if all_ok(rows) else 1


def cmd_schedule(args):
    print(" ".join(str(t) for t in make_subsequence(args.T, args.N, args.kind)))
    return 0


def _params(items):
    params = {}
    for item in items or []:
        key, _, value = item.partition("=")
        params[key] = yaml.safe_load(value)
    return params


def cmd_degrade(args):
    img = read_pnm(args.image)
    A, sigma_y = build_task(args.task, img.shape, _params(args.param), seed=args.seed)
    y = A.apply(img)
    if sigma_y > 0:
        y = y + sigma_y * np.random.default_rng(args.seed).standard_normal(A.m)
    os.makedirs(args.out_dir, exist_ok=True)
    stem = os.path.join(args.out_dir, os.path.splitext(os.path.basename(args.image))[0] + "_" + args.task)
    np.save(stem + "_y.npy", y)
    write_pnm(stem + "_pinv.pnm", A.pinv(y), bits=args.bits)
    if hasattr(A, "out_shape"):
        write_pnm(stem + "_y.pnm", y.reshape(A.out_shape), bits=args.bits)
    elif A.m == A.n:
        write_pnm(stem + "_y.pnm", y.reshape(A.in_shape), bits=args.bits)
    elif args.task == "colorize":
        write_pnm(stem + "_y.pnm", y.reshape(A.in_shape[0], A.in_shape[1], 1), bits=args.bits)
    print(f"{args.task}: n={A.n} m={A.m} sigma_y={sigma_y:g} -> {stem}_*")
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="equslab", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def grid(name, fn, help):
        sp = sub.add_parser(name, help=help)
        sp.add_argument("spec", help="experiment spec (YAML)")
        sp.add_argument("-o", "--output", help="output directory (overrides the spec file)")
        sp.add_argument("-w", "--workers", type=int, default=None, help="worker processes (default: $EQUSLAB_WORKERS or 1)")
        sp.set_defaults(func=fn)
        return sp

    grid("run", cmd_run, "run every cell of a spec")
    sp = grid("ablate", cmd_ablate, "run the equivariant-sampling x schedule ablation and test its ordering")
    sp.add_argument("--metric", default="mse")
    sp.add_argument("--alpha", type=float, default=0.05)
    sp = grid("nfe-sweep", cmd_nfe_sweep, "run a spec across several NFE budgets")
    sp.add_argument("--nfe", help="comma-separated NFE list (overrides the spec file)")

    sp = sub.add_parser("schedule", help="print a timestep sub-sequence")
    sp.add_argument("T", type=int)
    sp.add_argument("N", type=int)
    sp.add_argument("kind", choices=SCHEDULES)
    sp.set_defaults(func=cmd_schedule)

    sp = sub.add_parser("degrade", help="apply a task operator and its pseudo-inverse to an image")
    sp.add_argument("task", choices=TASKS)
    sp.add_argument("image", help="input PGM/PPM")
    sp.add_argument("-p", "--param", action="append", help="task parameter key=value (repeatable)")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--bits", type=int, choices=(8, 16), default=16)
    sp.add_argument("--out-dir", default=".")
    sp.set_defaults(func=cmd_degrade)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (OSError, ValueError) as exc:
        print(f"equslab: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
