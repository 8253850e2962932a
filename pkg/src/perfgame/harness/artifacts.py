"""CSV / JSON / SVG output for experiment runs."""

from __future__ import annotations

import csv
import json
import logging
from pathlib import Path

import numpy as np

log = logging.getLogger(__name__)


def run_label(traj):
    return traj.config.get("label") or traj.solver


def aggregate_errors(trajectories):
    """Per label: ``(iters, mean, std)`` of squared error over seeds (ddof 0).

    Seeds are reduced in sorted order so the result does not depend on the
    order trajectories were produced in. Truncated runs drop out of the
    statistics after their last recorded step.
    """
    groups = {}
    for tr in trajectories:
        if tr.error_sq is None:
            continue
        groups.setdefault(run_label(tr), []).append(tr)
    out = {}
    for label in sorted(groups):
        trs = sorted(groups[label], key=lambda t: t.seed)
        T = max(t.error_sq.size for t in trs)
        M = np.full((len(trs), T), np.nan)
        for k, t in enumerate(trs):
            M[k, : t.error_sq.size] = t.error_sq
        with np.errstate(invalid="ignore"):
            mean = np.nanmean(M, axis=0)
            std = np.nanstd(M, axis=0)
        out[label] = (np.arange(1, T + 1), mean, std)
    return out


def _open(path):
    try:
        return open(path, "w", newline="")
    except OSError as e:
        raise OSError(f"cannot write {path}: {e.strerror}") from e


def write_trajectory_csv(traj, path):
    n = traj.losses.shape[1] if traj.losses is not None else 0
    T = traj.iterations
    with _open(path) as fh:
        w = csv.writer(fh)
        w.writerow(["iter", "error_sq"] + [f"loss_{i + 1}" for i in range(n)])
        for t in range(T):
            e = traj.error_sq[t] if traj.error_sq is not None and t < traj.error_sq.size else np.nan
            row = [t + 1, repr(float(e))]
            if n:
                row += [repr(float(v)) for v in traj.losses[t]]
            w.writerow(row)


def write_aggregate_csv(agg, path):
    with _open(path) as fh:
        w = csv.writer(fh)
        w.writerow(["solver", "iter", "mean", "std"])
        for label, (iters, mean, std) in agg.items():
            for t, m, s in zip(iters, mean, std):
                w.writerow([label, int(t), repr(float(m)), repr(float(s))])


def read_aggregate_csv(path):
    out = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            it, m, s = out.setdefault(row["solver"], ([], [], []))
            it.append(int(row["iter"]))
            m.append(float(row["mean"]))
            s.append(float(row["std"]))
    return {k: tuple(np.array(v) for v in vals) for k, vals in out.items()}


def read_trajectory_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    data = np.array([[float(v) for v in r] for r in body]) if body else np.empty((0, len(header)))
    return header, data


def _svg(agg, path):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "perfgame"

    fig, ax = plt.subplots(figsize=(6, 4))
    for label, (iters, mean, std) in agg.items():
        ax.loglog(iters, mean, label=label)
        lo = np.clip(mean - std, np.min(mean[mean > 0]) if np.any(mean > 0) else 1e-300, None)
        ax.fill_between(iters, lo, mean + std, alpha=0.2)
    ax.set_xlabel("iteration")
    ax.set_ylabel("squared error")
    ax.legend()
    # fixed metadata so reruns write identical bytes
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def emit_artifacts(trajectories, reports, outdir, svg=False):
    """Write one CSV per trajectory, ``aggregate.csv`` and ``report.json``.

    Returns the list of written paths.
    """
    outdir = Path(outdir)
    try:
        outdir.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise OSError(f"cannot create {outdir}: {e.strerror}") from e
    written = []
    for tr in sorted(trajectories, key=lambda t: (run_label(t), t.seed)):
        p = outdir / f"{run_label(tr)}_seed{tr.seed}.csv"
        write_trajectory_csv(tr, p)
        written.append(p)
    agg = aggregate_errors(trajectories)
    p = outdir / "aggregate.csv"
    write_aggregate_csv(agg, p)
    written.append(p)

    p = outdir / "report.json"
    try:
        p.write_text(json.dumps(reports, sort_keys=True, indent=1) + "\n")
    except OSError as e:
        raise OSError(f"cannot write {p}: {e.strerror}") from e
    written.append(p)

    if svg and agg:
        try:
            p = outdir / "error_curves.svg"
            _svg(agg, p)
            written.append(p)
        except ImportError:
            log.warning("matplotlib not installed; skipping SVG")
    return written
