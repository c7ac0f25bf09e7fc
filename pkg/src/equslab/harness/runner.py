"""Grid runner: task x noise level x NFE x seed x method, one CSV row per cell."""

import csv
import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict
from functools import lru_cache

import numpy as np

from ..operators import build_task
from ..samplers import sample
from . import metrics
from .config import (
    ExperimentSpec,
    build_noise_schedule,
    build_prior,
    dump_spec,
    method_name,
    sampler_config,
)
from .pnm import write_pnm
from .stats import sign_test_less

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
CSV_FIELDS = [
    "schema",
    "experiment",
    "cell",
    "task",
    "method",
    "equivariant",
    "schedule",
    "guidance",
    "nfe",
    "sigma_y",
    "seed",
    "psnr",
    "ssim",
    "cons",
    "mse",
    "tas_objective",
    "nfe_used",
    "guidance_weight",
    "wall_time",
    "status",
]
#: Columns excluded when checking that two runs agree.
NONDETERMINISTIC_FIELDS = ("wall_time",)
WORKERS_ENV = "EQUSLAB_WORKERS"


def task_label(task):
    return task.get("label", task["name"])


def fmt(v):
    """Shortest round-trip text for floats; plain ``str`` otherwise."""
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    return str(v)


def enumerate_cells(spec: ExperimentSpec):
    """Cells in a fixed order; paired methods are adjacent."""
    cells = []
    for ti, task in enumerate(spec.tasks):
        for si, sigma in enumerate(spec.sigma_y):
            for nfe in spec.nfe:
                for seed in spec.seeds:
                    for method in spec.methods:
                        cells.append(
                            {
                                "index": len(cells),
                                "task_index": ti,
                                "task": task,
                                "sigma_y": sigma,
                                "nfe": nfe,
                                "seed": seed,
                                "method": method,
                            }
                        )
    return cells


@lru_cache(maxsize=8)
def _resources(prior_json, schedule_json):
    prior, denoiser = build_prior(json.loads(prior_json))
    return prior, denoiser, build_noise_schedule(json.loads(schedule_json))


def make_problem(spec, cell):
    """Ground truth, operator and measurement for a cell; independent of the method."""
    prior, denoiser, sched = _resources(json.dumps(spec.prior, sort_keys=True), json.dumps(spec.schedule, sort_keys=True))
    task = cell["task"]
    A, _ = build_task(task["name"], prior.shape, task.get("params", {}), seed=spec.task_seed)
    seed, ti = int(cell["seed"]), int(cell["task_index"])
    x_true = prior.sample(np.random.default_rng([seed, ti, 0]))
    y = A.apply(x_true)
    if cell["sigma_y"] > 0:
        y = y + cell["sigma_y"] * np.random.default_rng([seed, ti, 1]).standard_normal(A.m)
    return x_true, A, y, denoiser, sched


def cell_stem(cell):
    return (
        f"{task_label(cell['task'])}_sy{cell['sigma_y']:g}_n{cell['nfe']}_"
        f"{method_name(cell['method'])}_seed{cell['seed']}".replace("+", "-")
    )


def run_cell(spec: ExperimentSpec, cell, out_dir):
    method = cell["method"]
    row = {
        "schema": SCHEMA_VERSION,
        "experiment": spec.name,
        "cell": cell["index"],
        "task": task_label(cell["task"]),
        "method": method_name(method),
        "equivariant": bool(method["equivariant"]),
        "schedule": method["schedule"],
        "guidance": method["guidance"],
        "nfe": cell["nfe"],
        "sigma_y": float(cell["sigma_y"]),
        "seed": cell["seed"],
    }
    start = time.perf_counter()
    try:
        x_true, A, y, denoiser, sched = make_problem(spec, cell)
        cfg = sampler_config(method, cell["nfe"], cell["sigma_y"], cell["seed"], spec.group)
        report = sample(y, A, denoiser, sched, cfg)
        row.update(
            psnr=metrics.psnr(report.x0, x_true),
            ssim=metrics.ssim(report.x0, x_true),
            cons=metrics.cons(y, A, report.x0),
            mse=metrics.mse(report.x0, x_true),
            tas_objective=report.tas_objective,
            nfe_used=report.nfe_used,
            guidance_weight=report.guidance_weight,
        )
        if out_dir is not None:
            stem = os.path.join(out_dir, "cells", cell_stem(cell))
            if spec.save_images and report.x0.shape[2] in (1, 3):
                write_pnm(stem + ".pnm", report.x0, bits=16)
            with open(stem + ".json", "w") as fh:
                json.dump(
                    {
                        "row": {k: fmt(v) for k, v in row.items()},
                        "steps": report.steps,
                        "diagnostics": [asdict(d) for d in report.diagnostics],
                    },
                    fh,
                    indent=1,
                )
        row["status"] = "ok"
    except Exception as exc:  # a failed cell must not abort the grid
        log.exception("cell %s failed", cell["index"])
        for k in CSV_FIELDS:
            row.setdefault(k, "")
        row["status"] = f"error: {type(exc).__name__}: {exc}".replace("\n", " ")
    row["wall_time"] = time.perf_counter() - start
    return row


def _run_cell_star(args):
    return run_cell(*args)


def resolve_workers(workers=None):
    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV, "1"))
    return max(1, int(workers))


def run_experiment(spec: ExperimentSpec, out_dir=None, workers=None, csv_name="metrics.csv"):
    """Run every cell of ``spec``; returns the list of row dicts in cell order.

    When ``out_dir`` is given, the resolved spec, one CSV row per cell and
    per-cell images and diagnostics are written there. Rows are appended
    whole, in cell order, by this process only.
    """
    cells = enumerate_cells(spec)
    workers = resolve_workers(workers)
    csv_fh = writer = None
    if out_dir is not None:
        os.makedirs(os.path.join(out_dir, "cells"), exist_ok=True)
        dump_spec(spec, os.path.join(out_dir, "resolved_spec.yaml"))
        csv_fh = open(os.path.join(out_dir, csv_name), "w", newline="")
        writer = csv.DictWriter(csv_fh, fieldnames=CSV_FIELDS, lineterminator="\n")
        writer.writeheader()
    log.info("experiment %s: %d cells on %d worker(s)", spec.name, len(cells), workers)
    rows = []
    try:
        jobs = [(spec, c, out_dir) for c in cells]
        if workers == 1:
            results = map(_run_cell_star, jobs)
            pool = None
        else:
            pool = ProcessPoolExecutor(max_workers=workers)
            results = pool.map(_run_cell_star, jobs, chunksize=max(1, len(jobs) // (4 * workers)))
        for row in results:
            rows.append(row)
            if writer is not None:
                writer.writerow({k: fmt(row.get(k, "")) for k in CSV_FIELDS})
                csv_fh.flush()
        if pool is not None:
            pool.shutdown()
    finally:
        if csv_fh is not None:
            csv_fh.close()
    return rows


def all_ok(rows):
    return all(r["status"] == "ok" for r in rows)


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def comparable(row):
    return {k: fmt(v) for k, v in row.items() if k not in NONDETERMINISTIC_FIELDS}


# ---------------------------------------------------------------------------
# Summaries
# ---------------------------------------------------------------------------


def paired_values(rows, method, metric="mse"):
    """``{(task, sigma_y, nfe, seed): value}`` for one method."""
    return {
        (r["task"], r["sigma_y"], r["nfe"], r["seed"]): float(r[metric])
        for r in rows
        if r["method"] == method and r["status"] == "ok"
    }


def compare(rows, method_a, method_b, metric="mse", where=None):
    """Paired sign test that ``method_a`` has lower ``metric`` than ``method_b``."""
    a = paired_values(rows, method_a, metric)
    b = paired_values(rows, method_b, metric)
    keys = sorted(k for k in a.keys() & b.keys() if where is None or where(k))
    if not keys:
        raise ValueError(f"no paired cells for {method_a} vs {method_b}")
    return sign_test_less([a[k] for k in keys], [b[k] for k in keys], label=f"{method_a} < {method_b} ({metric})")


ABLATION_COMPARISONS = [
    ("equs+tas", "equs"),
    ("equs+tas", "baseline+tas"),
    ("equs", "baseline"),
    ("baseline+tas", "baseline"),
]


def ablation_report(rows, metric="mse", alpha=0.05):
    """Sign tests for the ablation ordering, one per comparison, with paired deltas."""
    tests = [compare(rows, a, b, metric) for a, b in ABLATION_COMPARISONS]
    return {
        "metric": metric,
        "alpha": alpha,
        "comparisons": [t.to_dict() | {"significant": t.significant(alpha)} for t in tests],
        "summary": [t.summary(alpha) for t in tests],
    }


def method_means(rows, metric="mse", by=("nfe", "method")):
    """Mean of ``metric`` over seeds, grouped by the ``by`` columns."""
    groups = {}
    for r in rows:
        if r["status"] != "ok":
            continue
        groups.setdefault(tuple(r[k] for k in by), []).append(float(r[metric]))
    return {k: float(np.mean(v)) for k, v in sorted(groups.items(), key=lambda kv: tuple(str(x) for x in kv[0]))}


SWEEP_FIELDS = ["nfe", "method", "count", "mse", "psnr", "ssim", "cons", "tas_objective"]


def nfe_sweep_table(rows):
    out = []
    keys = sorted({(int(r["nfe"]), r["method"]) for r in rows if r["status"] == "ok"})
    for nfe, method in keys:
        sel = [r for r in rows if r["status"] == "ok" and int(r["nfe"]) == nfe and r["method"] == method]
        entry = {"nfe": nfe, "method": method, "count": len(sel)}
        for m in ("mse", "psnr", "ssim", "cons", "tas_objective"):
            entry[m] = float(np.mean([float(r[m]) for r in sel]))
        out.append(entry)
    return out


def write_table(path, table, fields):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        for entry in table:
            w.writerow({k: fmt(entry[k]) for k in fields})
