"""CSV and manifest writers for batch results."""

from __future__ import annotations

import csv
import json
import os
import platform
import time

import numpy as np

OUTPUT_FILES = ("trajectories.csv", "summary.csv", "designs_hist.csv", "alb_scatter.csv",
                "meta.json")


def fmt(v):
    """Shortest round-trip text for a number; identical bits give identical text."""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _write(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def trajectory_rows(summary):
    """One row per (arm, replication, t). Gamble designs are written as their index."""
    for res in summary.results:
        for arm in summary.arms:
            tr = res.trajectories[arm]
            gamble = tr.designs.ndim == 2
            for t in range(len(tr)):
                design = tr.indices[t] if gamble else tr.designs[t]
                yield (summary.experiment, arm, res.replication, t + 1, fmt(design),
                       fmt(tr.risks[t]))


def write_outputs(summary, config, out_dir, wall_time=None, extra_meta=None):
    """Write every declared file into ``out_dir``; returns their paths."""
    if summary.results is None:
        raise ValueError("summary was built without per-replication results")
    os.makedirs(out_dir, exist_ok=True)
    name = summary.experiment
    paths = {f: os.path.join(out_dir, f) for f in OUTPUT_FILES}

    _write(paths["trajectories.csv"], ["experiment", "arm", "replication", "t", "design", "risk"],
           trajectory_rows(summary))
    _write(paths["summary.csv"], ["experiment", "arm", "t", "mean_risk", "stderr", "theta_star_risk"],
           ((name, arm, t + 1, fmt(summary.mean_risk[arm][t]), fmt(summary.stderr[arm][t]),
             fmt(summary.theta_star_risk))
            for arm in summary.arms for t in range(summary.horizon)))
    _write(paths["designs_hist.csv"], ["experiment", "arm", "bin_lo", "bin_hi", "count"],
           ((name, arm, fmt(lo), fmt(hi), int(c))
            for arm in summary.arms for lo, hi, c in zip(*summary.histograms[arm])))
    _write(paths["alb_scatter.csv"], ["experiment", "replication", "d_model", "alb"],
           ((name, r.replication, fmt(r.d_model), fmt(r.alb)) for r in summary.alb_records))

    meta = {
        "experiment": name,
        "base_seed": config.base_seed,
        "replications": summary.n_replications,
        "code_version": _version(),
        "python": platform.python_version(),
        "numpy": np.__version__,
        "created": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        "wall_time_seconds": wall_time,
        "true_risk_mean": summary.true_risk,
        "theta_star_risk_mean": summary.theta_star_risk,
        "files": list(OUTPUT_FILES[:-1]),
        "config": config.to_dict(),
    }
    if extra_meta:
        meta.update(extra_meta)
    with open(paths["meta.json"], "w") as fh:
        json.dump(meta, fh, indent=2)
        fh.write("\n")
    return paths


def _version():
    from .. import __version__
    return __version__
