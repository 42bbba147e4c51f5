"""Summary tables and figures built from finished run directories."""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np

from cleas.errors import ConfigError
from cleas.orchestrator import SUMMARY_COLUMNS, csv_line

COMPARE_COLUMNS = ("run", "mode", "seed", "tasks", "mean_test_acc", "mean_params", "mean_reused_old", "mean_new",
                   "total_seconds")
ALLOCATION_COLUMNS = ("task", "layer", "used", "reused_old", "new", "filter_size")


def _load(run_dir) -> tuple[dict, dict]:
    run_dir = Path(run_dir)
    if not (run_dir / "summary.json").exists():
        raise ConfigError(f"{run_dir} is not a completed run directory")
    summary = json.loads((run_dir / "summary.json").read_text())
    records = json.loads((run_dir / "net.json").read_text())["records"]
    return summary, {int(t): r for t, r in records.items()}


def summary_csv(run_dir) -> str:
    summary, records = _load(run_dir)
    out = io.StringIO()
    out.write(",".join(SUMMARY_COLUMNS) + "\n")
    for row in summary["tasks"]:
        rec = records[row["task"]]
        out.write(csv_line([row["task"], rec["test_acc"], rec["param_count"], rec["reused_old"], rec["new"],
                            row["seconds"]]))
    return out.getvalue()


def allocation_csv(run_dir) -> str:
    """Per task and layer: used slots split into reused-old and new."""
    _, records = _load(run_dir)
    out = io.StringIO()
    out.write(",".join(ALLOCATION_COLUMNS) + "\n")
    for t in sorted(records):
        rec = records[t]
        for i, (used, new) in enumerate(zip(rec["used_slots"], rec["new_slots"])):
            out.write(csv_line([t, i, len(used), len(used) - len(new), len(new), rec["filter_sizes"][i]]))
    return out.getvalue()


def compare_csv(run_dirs) -> str:
    out = io.StringIO()
    out.write(",".join(COMPARE_COLUMNS) + "\n")
    for run_dir in run_dirs:
        summary, records = _load(run_dir)
        recs = [records[r["task"]] for r in summary["tasks"]]
        out.write(",".join([
            Path(run_dir).name, summary["mode"], str(summary["seed"]), str(len(recs)),
            repr(float(np.mean([r["test_acc"] for r in recs]))),
            repr(float(np.mean([r["param_count"] for r in recs]))),
            repr(float(np.mean([r["reused_old"] for r in recs]))),
            repr(float(np.mean([r["new"] for r in recs]))),
            repr(float(summary["total_seconds"])),
        ]) + "\n")
    return out.getvalue()


def _read_csv(text: str) -> list[dict]:
    return list(csv.DictReader(io.StringIO(text)))


def render_figures(run_dirs, out_dir) -> list[Path]:
    """Accuracy, parameter count, neuron allocation and reward traces as PNG files."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    run_dirs = [Path(r) for r in run_dirs]
    tables = {r: _read_csv(summary_csv(r)) for r in run_dirs}
    labels = {r: f"{json.loads((r / 'summary.json').read_text())['mode']} ({r.name})" for r in run_dirs}
    written = []

    for column, ylabel, name in (("test_acc", "test accuracy", "accuracy.png"),
                                 ("params", "parameters", "params.png"),
                                 ("seconds", "seconds", "time.png")):
        fig, ax = plt.subplots(figsize=(6, 4))
        for r, rows in tables.items():
            ax.plot([int(x["task"]) for x in rows], [float(x[column]) for x in rows], marker="o", label=labels[r])
        ax.set_xlabel("task")
        ax.set_ylabel(ylabel)
        ax.legend(fontsize="small")
        fig.tight_layout()
        fig.savefig(out_dir / name, dpi=100)
        plt.close(fig)
        written.append(out_dir / name)

    fig, ax = plt.subplots(figsize=(6, 4))
    width = 0.8 / len(run_dirs)
    for k, (r, rows) in enumerate(tables.items()):
        tasks = np.array([int(x["task"]) for x in rows], dtype=float) + (k - (len(run_dirs) - 1) / 2) * width
        reused = np.array([int(x["reused_old"]) for x in rows])
        new = np.array([int(x["new"]) for x in rows])
        ax.bar(tasks, reused, width, label=f"reused: {labels[r]}")
        ax.bar(tasks, new, width, bottom=reused, label=f"new: {labels[r]}", hatch="//", alpha=0.7)
    ax.set_xlabel("task")
    ax.set_ylabel("neurons")
    ax.legend(fontsize="x-small")
    fig.tight_layout()
    fig.savefig(out_dir / "allocation.png", dpi=100)
    plt.close(fig)
    written.append(out_dir / "allocation.png")

    fig, ax = plt.subplots(figsize=(6, 4))
    for r in run_dirs:
        rows = [x for x in _read_csv((r / "iterations.csv").read_text()) if int(x["task"]) > 1]
        if rows:
            ax.plot(np.arange(len(rows)), [float(x["reward"]) for x in rows], label=labels[r], lw=1)
    ax.set_xlabel("candidate (tasks 2..T in order)")
    ax.set_ylabel("reward")
    ax.legend(fontsize="small")
    fig.tight_layout()
    fig.savefig(out_dir / "rewards.png", dpi=100)
    plt.close(fig)
    written.append(out_dir / "rewards.png")
    return written
