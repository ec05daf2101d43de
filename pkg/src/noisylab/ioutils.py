"""Atomic file output and the run artifact formats (CSV metrics, JSONL
per-sample dumps, JSON summaries).

Every writer goes through a temp file in the destination directory followed
by os.replace, so interrupted runs never leave truncated artifacts.
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile

import numpy as np

METRICS_COLUMNS = [
    "epoch",
    "lr",
    "|Clean|",
    "|ID-High|",
    "|ID-Rest|",
    "|OOD|",
    "L_c",
    "L_n",
    "L_cons",
    "L_total",
    "train_acc",
    "test_acc",
    "clean_precision",
    "clean_recall",
    "ood_precision",
    "ood_recall",
]


def atomic_write_bytes(path: str, payload: bytes) -> None:
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path: str, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def atomic_savez(path: str, **arrays) -> None:
    buf = io.BytesIO()
    np.savez(buf, **arrays)
    atomic_write_bytes(path, buf.getvalue())


def write_json(path: str, payload: dict) -> None:
    atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_metrics_csv(path: str, rows: list[dict]) -> None:
    """Metrics table with the fixed column order; None renders as empty."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(METRICS_COLUMNS)
    for row in rows:
        writer.writerow([_format_cell(row.get(col)) for col in METRICS_COLUMNS])
    atomic_write_text(path, buf.getvalue())


def read_metrics_csv(path: str) -> list[dict]:
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            parsed = {}
            for key, raw in row.items():
                if raw == "" or raw is None:
                    parsed[key] = None
                else:
                    try:
                        parsed[key] = int(raw)
                    except ValueError:
                        try:
                            parsed[key] = float(raw)
                        except ValueError:
                            parsed[key] = raw
            out.append(parsed)
    return out


def write_jsonl(path: str, records: list[dict]) -> None:
    lines = [json.dumps(rec, sort_keys=True) for rec in records]
    atomic_write_text(path, "\n".join(lines) + ("\n" if lines else ""))


def read_jsonl(path: str) -> list[dict]:
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]
