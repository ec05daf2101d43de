"""Summary tables across completed runs: variant rows, mean +/- std of the
last-10-epoch test accuracy over seeds."""

from __future__ import annotations

import csv
import io
import json
import os

import numpy as np

from .ioutils import atomic_write_text


def collect_summaries(run_dirs: list[str]) -> tuple[list[dict], list[str]]:
    """Load summary.json from each run dir; returns (summaries, missing)."""
    summaries, missing = [], []
    for run_dir in run_dirs:
        path = os.path.join(run_dir, "summary.json")
        if not os.path.isfile(path):
            missing.append(path)
            continue
        with open(path) as fh:
            payload = json.load(fh)
        payload["_dir"] = run_dir
        summaries.append(payload)
    return summaries, missing


def group_rows(summaries: list[dict]) -> list[dict]:
    """One row per (variant, noise kind, closed rate), aggregated over seeds."""
    groups: dict[tuple, list[dict]] = {}
    for s in summaries:
        cfg = s["config"]
        key = (cfg["variant"], cfg["noise_kind"], cfg["closed_rate"])
        groups.setdefault(key, []).append(s)
    rows = []
    for (variant, kind, rate), members in sorted(groups.items()):
        scores = np.array([m["score"] for m in members])
        seeds = sorted(m["config"]["seed"] for m in members)
        rows.append(
            {
                "variant": variant,
                "noise_kind": kind,
                "closed_rate": rate,
                "seeds": ";".join(str(s) for s in seeds),
                "n_runs": len(members),
                "mean_acc": float(scores.mean()),
                "std_acc": float(scores.std()),
            }
        )
    return rows


def emit_report(run_dirs: list[str], out_stem: str) -> list[dict]:
    """Write <out_stem>.csv and <out_stem>.md; returns the table rows.

    Raises ValueError listing any run directory without a summary.
    """
    summaries, missing = collect_summaries(run_dirs)
    if missing:
        raise ValueError("missing run artifacts:\n" + "\n".join(missing))
    if not summaries:
        raise ValueError("no completed runs given")
    rows = group_rows(summaries)

    columns = ["variant", "noise_kind", "closed_rate", "seeds", "n_runs",
               "mean_acc", "std_acc"]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([row[c] for c in columns])
    atomic_write_text(out_stem + ".csv", buf.getvalue())

    lines = [
        "| variant | noise | rate | seeds | acc (last-10 mean ± std) |",
        "|---|---|---|---|---|",
    ]
    for row in rows:
        acc = f"{100 * row['mean_acc']:.2f} ± {100 * row['std_acc']:.2f}"
        lines.append(
            f"| {row['variant']} | {row['noise_kind']} | {row['closed_rate']} "
            f"| {row['seeds']} | {acc} |"
        )
    atomic_write_text(out_stem + ".md", "\n".join(lines) + "\n")
    return rows
