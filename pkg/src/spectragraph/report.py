"""Run reports: JSON persistence, CSV tables and a plain-text rendering."""

from __future__ import annotations

import csv
import json
import os
import tempfile
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import __version__


@dataclass
class Metrics:
    accuracy: float
    specificity: float
    sensitivity: float
    tp: int
    tn: int
    fp: int
    fn: int

    @classmethod
    def from_counts(cls, tp: int, tn: int, fp: int, fn: int) -> "Metrics":
        total = tp + tn + fp + fn
        if total == 0:
            raise ValueError("empty evaluation set")
        sen = tp / (tp + fn) if tp + fn else 0.0
        spe = tn / (tn + fp) if tn + fp else 0.0
        return cls((tp + tn) / total, spe, sen, tp, tn, fp, fn)


@dataclass
class RunReport:
    task: dict
    config: dict
    model: dict
    seed: int
    curves: list = field(default_factory=list)
    metrics: dict | None = None
    param_table: list = field(default_factory=list)
    param_summary: dict = field(default_factory=dict)
    admm_trace: list = field(default_factory=list)
    graph_stats: dict = field(default_factory=dict)
    status: str = "ok"
    error: str | None = None
    # Every wall-clock quantity lives here so the rest is reproducible.
    timing: dict = field(default_factory=dict)
    tool_version: str = __version__

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RunReport":
        return cls(**d)

    def final_accuracy(self) -> float:
        return self.metrics["accuracy"] if self.metrics else float("nan")


def atomic_write_bytes(path, data: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path, obj) -> None:
    atomic_write_bytes(path, (json.dumps(obj, indent=2, sort_keys=True) + "\n").encode())


def save_report(report: RunReport, path) -> None:
    write_json(path, report.to_dict())


def load_report(path) -> RunReport:
    return RunReport.from_dict(json.loads(Path(path).read_text()))


def write_csv(path, rows: list[dict], fields: list[str] | None = None) -> None:
    fields = fields or (list(rows[0]) if rows else [])
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(f".{path.name}.tmp")
    with open(tmp, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields, extrasaction="ignore")
        writer.writeheader()
        writer.writerows(rows)
    os.replace(tmp, path)


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def format_report(report: RunReport) -> str:
    lines = [f"model {report.model.get('name')}  seed {report.seed}  status {report.status}"]
    if report.error:
        lines.append(f"error: {report.error}")
    task = report.task
    lines.append(f"task  dataset={task.get('dataset')} classes={task.get('classes')} "
                 f"seg_len={task.get('seg_len')} nfr={task.get('near_field_rate')} K={task.get('K')}")
    if report.metrics:
        m = report.metrics
        lines.append(f"acc {m['accuracy']:.4f}  spe {m['specificity']:.4f}  sen {m['sensitivity']:.4f}  "
                     f"(TP {m['tp']} TN {m['tn']} FP {m['fp']} FN {m['fn']})")
    if report.param_table:
        lines.append("")
        lines.append(f"{'layer':<14}{'total':>10}{'budget':>10}{'surviving':>11}")
        for row in report.param_table:
            lines.append(f"{row['layer']:<14}{row['total']:>10}{row.get('budget', '-')!s:>10}"
                         f"{row.get('surviving', '-')!s:>11}")
        s = report.param_summary
        if s:
            lines.append(f"{'non-train':<14}{s['non_train']:>10}{'':>10}"
                         f"{s.get('surviving_non_train', s['non_train']):>11}")
            lines.append(f"{'total':<14}{s['tabulated_total']:>10}{'':>10}"
                         f"{s.get('tabulated_surviving', '-')!s:>11}")
            if s.get("node_scale"):
                kept = s.get("surviving_node_scale", s["node_scale"])
                note = "not pruned" if kept == s["node_scale"] else f"{kept} kept"
                lines.append(f"(plus {s['node_scale']} node-scale entries, {note})")
    if report.graph_stats:
        g = report.graph_stats
        lines.append("")
        lines.append(f"graphs {g.get('graphs')}  K {g.get('K')}  nnz {g.get('nnz')}  bytes {g.get('bytes')}")
    if report.curves:
        last = report.curves[-1]
        lines.append(f"last epoch {last['epoch']} ({last['phase']}): loss {last['loss']:.4g} "
                     f"train acc {last['train_accuracy']:.4f} test acc {last['test_accuracy']:.4f}")
    if report.admm_trace:
        lines.append(f"ADMM records {len(report.admm_trace)}; last lagrangian "
                     f"{report.admm_trace[-1]['lagrangian']:.6g}")
    return "\n".join(lines)
