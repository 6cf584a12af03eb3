"""Writing experiment reports to disk: JSON plus plot-ready CSV tables."""

from __future__ import annotations

import csv
import json
from pathlib import Path

from .experiment import ExperimentReport


def _num(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, int):
        return str(v)
    return f"{float(v):.17g}"


def report_json(report: ExperimentReport) -> str:
    include_timings = bool(report.config.get("record_timings", False))
    return json.dumps(report.to_dict(include_timings=include_timings), indent=2, sort_keys=True, allow_nan=False) + "\n"


def parse_report(text: str) -> ExperimentReport:
    return ExperimentReport.from_dict(json.loads(text))


def _write_rows(path: Path, header: list[str], rows) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def emit_report(report: ExperimentReport, out_dir) -> list[Path]:
    """Write report.json, summary.csv, device_scores.csv and distill_curve.csv.

    Wall-clock timings go into report.json only when the config sets
    ``record_timings``; otherwise the output is byte-reproducible.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = [out / name for name in ("report.json", "summary.csv", "device_scores.csv", "distill_curve.csv")]

    paths[0].write_text(report_json(report), encoding="utf-8")

    summary_rows = []
    for m in report.methods:
        comm = m.comm or {}
        summary_rows.append(
            [
                m.name,
                _num(None if m.summary is None else m.summary.mean_auc),
                _num(m.relative_gain),
                _num(m.fraction_of_ideal),
                _num(comm.get("up_bytes")),
                _num(comm.get("down_bytes")),
            ]
        )
    _write_rows(paths[1], ["method", "mean_auc", "relative_gain", "fraction_of_ideal", "up_bytes", "down_bytes"], summary_rows)

    score_rows = []
    for m in report.methods:
        for t, cards in enumerate(m.cards):
            label = f"{m.name}#{t}" if m.policy == "Random" else m.name
            score_rows.extend([label, c.device_id, _num(c.auc)] for c in cards)
    _write_rows(paths[2], ["method", "device_id", "auc"], score_rows)

    curve_rows = [[p.l, _num(p.teacher.mean_auc), _num(p.distilled.mean_auc)] for p in report.distill_curve]
    _write_rows(paths[3], ["l", "teacher_auc", "distilled_auc"], curve_rows)
    return paths
