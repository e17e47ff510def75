"""Evaluation report emission: structured JSON plus flat CSV files.

Filenames are stable so downstream plotting can rely on them:
framewise.csv, events.csv, report.json, fp_report.json, fp_hist.csv,
runstats.json.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

from .evaluation import EventReport, FPReport, FramewiseReport, confusion_report

FRAMEWISE_COLUMNS = [
    "clip_id", "precision", "recall", "f1", "accuracy", "specificity",
    "bal_accuracy", "error_rate", "tp", "fp", "tn", "fn",
]
EVENT_COLUMNS = [
    "clip_id", "f1", "precision", "recall", "error_rate", "deletion_rate",
    "insertion_rate", "n_ref", "n_pred", "n_correct",
]


def aggregate_framewise_micro(reports: dict[str, FramewiseReport]) -> FramewiseReport:
    """Pool confusion counts across clips, then compute metrics once."""
    tp = sum(r.tp for r in reports.values())
    fp = sum(r.fp for r in reports.values())
    tn = sum(r.tn for r in reports.values())
    fn = sum(r.fn for r in reports.values())
    return confusion_report(tp, fp, tn, fn)


def aggregate_framewise_macro(reports: dict[str, FramewiseReport]) -> dict:
    """Unweighted mean of each per-clip metric."""
    names = ["precision", "recall", "f1", "accuracy", "specificity",
             "balanced_accuracy", "error_rate"]
    n = len(reports)
    return {name: sum(getattr(r, name) for r in reports.values()) / n for name in names}


def aggregate_events_micro(reports: dict[str, EventReport]) -> EventReport:
    """Pool event counts across clips, then compute rates once."""
    n_ref = sum(r.n_ref for r in reports.values())
    n_pred = sum(r.n_pred for r in reports.values())
    n_correct = sum(r.n_correct for r in reports.values())
    precision = n_correct / n_pred if n_pred else 0.0
    if n_ref:
        recall = n_correct / n_ref
        deletion = (n_ref - n_correct) / n_ref
        insertion = (n_pred - n_correct) / n_ref
        error = deletion + insertion
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    else:
        recall = deletion = insertion = error = None
        f1 = 0.0
    return EventReport(
        f1=f1, precision=precision, recall=recall, error_rate=error,
        deletion_rate=deletion, insertion_rate=insertion,
        n_ref=n_ref, n_pred=n_pred, n_correct=n_correct,
    )


def aggregate_events_macro(reports: dict[str, EventReport]) -> dict:
    """Mean of per-clip event rates; clips without reference events are
    skipped for the rate averages (their rates are undefined)."""
    defined = [r for r in reports.values() if r.error_rate is not None]
    out = {
        "f1": _mean([r.f1 for r in reports.values()]),
        "precision": _mean([r.precision for r in reports.values()]),
    }
    for name in ("recall", "error_rate", "deletion_rate", "insertion_rate"):
        out[name] = _mean([getattr(r, name) for r in defined]) if defined else None
    return out


def write_framewise_csv(path: str | Path, reports: dict[str, FramewiseReport]) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(FRAMEWISE_COLUMNS)
        for clip_id in sorted(reports):
            writer.writerow(_framewise_row(clip_id, reports[clip_id]))
        if reports:
            writer.writerow(_framewise_row("MICRO", aggregate_framewise_micro(reports)))
            macro = aggregate_framewise_macro(reports)
            writer.writerow([
                "MACRO", macro["precision"], macro["recall"], macro["f1"],
                macro["accuracy"], macro["specificity"], macro["balanced_accuracy"],
                macro["error_rate"], "", "", "", "",
            ])


def write_events_csv(path: str | Path, reports: dict[str, EventReport]) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(EVENT_COLUMNS)
        for clip_id in sorted(reports):
            writer.writerow(_event_row(clip_id, reports[clip_id]))
        if reports:
            writer.writerow(_event_row("MICRO", aggregate_events_micro(reports)))
            macro = aggregate_events_macro(reports)
            writer.writerow([
                "MACRO", macro["f1"], macro["precision"], _blank(macro["recall"]),
                _blank(macro["error_rate"]), _blank(macro["deletion_rate"]),
                _blank(macro["insertion_rate"]), "", "", "",
            ])


def write_report_json(
    path: str | Path,
    framewise: dict[str, FramewiseReport],
    events: dict[str, EventReport],
) -> None:
    payload = {
        "framewise": {
            "per_clip": {cid: r.to_dict() for cid, r in sorted(framewise.items())},
            "micro": aggregate_framewise_micro(framewise).to_dict() if framewise else None,
            "macro": aggregate_framewise_macro(framewise) if framewise else None,
        },
        "events": {
            "per_clip": {cid: r.to_dict() for cid, r in sorted(events.items())},
            "micro": aggregate_events_micro(events).to_dict() if events else None,
            "macro": aggregate_events_macro(events) if events else None,
        },
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def write_fp_report(path: str | Path, report: FPReport) -> None:
    Path(path).write_text(json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8")


def write_fp_histogram_csv(path: str | Path, report: FPReport) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["run_length", "count", "avg_confidence"])
        for length in sorted(report.duration_histogram):
            bucket = report.duration_histogram[length]
            writer.writerow([length, bucket["count"], bucket["avg_confidence"]])


def write_confident_histogram_csv(
    path: str | Path, per_clip: dict[str, int], buckets: dict[int, int]
) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["confident_frames", "clip_count"])
        for count in sorted(buckets):
            writer.writerow([count, buckets[count]])
        writer.writerow([])
        writer.writerow(["clip_id", "confident_frames"])
        for clip_id in sorted(per_clip):
            writer.writerow([clip_id, per_clip[clip_id]])


def _framewise_row(label: str, r: FramewiseReport) -> list:
    return [label, r.precision, r.recall, r.f1, r.accuracy, r.specificity,
            r.balanced_accuracy, r.error_rate, r.tp, r.fp, r.tn, r.fn]


def _event_row(label: str, r: EventReport) -> list:
    return [label, r.f1, r.precision, _blank(r.recall), _blank(r.error_rate),
            _blank(r.deletion_rate), _blank(r.insertion_rate),
            r.n_ref, r.n_pred, r.n_correct]


def _blank(value):
    return "" if value is None else value


def _mean(values):
    return sum(values) / len(values) if values else 0.0
