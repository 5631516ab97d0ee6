"""Aggregate run directories into one CSV table and training-curve figures."""

import json
import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .experiments import HISTORY_COLUMNS, read_history_csv


def load_run(run_dir):
    history = read_history_csv(os.path.join(run_dir, "history.csv"))
    with open(os.path.join(run_dir, "summary.json")) as fh:
        summary = json.load(fh)
    return history, summary


def write_aggregate_csv(runs, path):
    """One row per eval point per run; `runs` maps run name -> RunHistory."""
    with open(path, "w") as fh:
        fh.write("run," + ",".join(HISTORY_COLUMNS) + "\n")
        for name, history in runs.items():
            for r in history.records:
                fields = [str(r.iteration)] + [
                    format(getattr(r, c), ".17g") for c in HISTORY_COLUMNS[1:]]
                fh.write(name + "," + ",".join(fields) + "\n")


def plot_recall_curves(runs, path):
    """Seen / unseen Recall@1 vs iteration, one panel each, saved as SVG."""
    fig, axes = plt.subplots(2, 1, figsize=(7, 7), sharex=True)
    for name, history in runs.items():
        its = [r.iteration for r in history.records]
        axes[0].plot(its, [r.seen_r1 for r in history.records], label=name)
        axes[1].plot(its, [r.unseen_r1 for r in history.records], label=name)
    axes[0].set_ylabel("seen Recall@1")
    axes[1].set_ylabel("unseen Recall@1")
    axes[1].set_xlabel("iteration")
    for ax in axes:
        ax.set_ylim(0, 1.02)
        ax.grid(True, alpha=0.3)
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def write_report(run_dirs, out_dir):
    """Read every run directory and emit recall_curves.svg + runs.csv."""
    os.makedirs(out_dir, exist_ok=True)
    runs = {}
    for rd in run_dirs:
        name = os.path.basename(os.path.normpath(rd))
        runs[name], _ = load_run(rd)
    csv_path = os.path.join(out_dir, "runs.csv")
    svg_path = os.path.join(out_dir, "recall_curves.svg")
    write_aggregate_csv(runs, csv_path)
    plot_recall_curves(runs, svg_path)
    return csv_path, svg_path
