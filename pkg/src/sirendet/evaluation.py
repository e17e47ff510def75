"""Offline evaluation of inference logs against annotations.

Variable-length inference frames are discretized onto a fixed-resolution
grid by sampling each cell's center, then scored framewise (confusion-matrix
metrics) and event-based (collar-matched intervals with insertion/deletion
rates). False-positive structure is analyzed over runs of consecutive
over-threshold frames that overlap no annotation.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field

from .types import Annotation, DetectionEvent, InferenceLog


@dataclass
class BinaryGrid:
    """Per-cell probabilities with binary prediction/reference marks."""

    resolution_s: float
    probs: list[float]
    pred: list[int]
    ref: list[int]

    def __len__(self) -> int:
        return len(self.probs)


@dataclass(frozen=True)
class FramewiseReport:
    tp: int
    fp: int
    tn: int
    fn: int
    precision: float
    recall: float
    f1: float
    accuracy: float
    specificity: float
    balanced_accuracy: float
    error_rate: float

    def to_dict(self) -> dict:
        import dataclasses

        return dataclasses.asdict(self)


@dataclass(frozen=True)
class EventReport:
    f1: float
    precision: float
    recall: float | None
    error_rate: float | None
    deletion_rate: float | None
    insertion_rate: float | None
    n_ref: int
    n_pred: int
    n_correct: int

    def to_dict(self) -> dict:
        import dataclasses

        return dataclasses.asdict(self)


@dataclass
class FPReport:
    """Aggregate false-positive structure across a set of logs."""

    fp_fw_afps: float = 0.0   # avg FP frames per sample (clip)
    fp_fw_afpsp: float = 0.0  # avg share of FP frames among a clip's frames
    fp_fw_ac: float = 0.0     # avg confidence over ALL inference frames
    fp_eb_t: int = 0          # total FP events (runs >= fp_run_n)
    fp_eb_ac: float = 0.0     # avg confidence within FP events
    fp_eb_mrl: int = 0        # max run length among FP events
    fp_eb_arl: float = 0.0    # avg run length over FP events
    duration_histogram: dict[int, dict] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "fp_fw_afps": self.fp_fw_afps,
            "fp_fw_afpsp": self.fp_fw_afpsp,
            "fp_fw_ac": self.fp_fw_ac,
            "fp_eb_t": self.fp_eb_t,
            "fp_eb_ac": self.fp_eb_ac,
            "fp_eb_mrl": self.fp_eb_mrl,
            "fp_eb_arl": self.fp_eb_arl,
            "duration_histogram": {
                str(k): dict(v) for k, v in sorted(self.duration_histogram.items())
            },
        }


def discretize(
    log: InferenceLog,
    annotations: list[Annotation],
    resolution_s: float,
    threshold: float,
    clip_duration_s: float | None = None,
) -> BinaryGrid:
    """Sample the log's frame probabilities onto a uniform grid.

    Each cell takes the probability of the unique frame covering the cell's
    center; centers beyond the last frame's end get probability 0. A cell's
    reference mark is 1 iff its center lies inside any annotation interval.

    Raises:
        ValueError: overlapping frames (the log violates the tiling contract).
    """
    if clip_duration_s is None:
        clip_duration_s = log.clip_duration_s or log.consumed_duration_s
    if clip_duration_s <= 0:
        raise ValueError("cannot discretize a log with no covered duration")
    if resolution_s <= 0:
        raise ValueError("resolution must be positive")

    frames = log.frames
    starts = [fr.start_s for fr in frames]
    for prev, cur in zip(frames, frames[1:]):
        if cur.start_s < prev.end_s - 1e-12:
            raise ValueError(
                f"overlapping frames {prev.index} and {cur.index} in log {log.clip_id}"
            )

    n_cells = int(-(-clip_duration_s // resolution_s))  # ceil
    probs: list[float] = []
    for i in range(n_cells):
        center = (i + 0.5) * resolution_s
        k = bisect.bisect_right(starts, center) - 1
        if k >= 0 and center < frames[k].end_s:
            probs.append(frames[k].probability)
        else:
            probs.append(0.0)

    pred = [1 if p >= threshold else 0 for p in probs]
    ref = [0] * n_cells
    for ann in annotations:
        for i in range(n_cells):
            center = (i + 0.5) * resolution_s
            if ann.onset_s <= center < ann.offset_s:
                ref[i] = 1
    return BinaryGrid(resolution_s=resolution_s, probs=probs, pred=pred, ref=ref)


def framewise_metrics(grid: BinaryGrid, error_mode: str = "one_minus_accuracy") -> FramewiseReport:
    """Confusion-matrix metrics over a grid.

    Zero-denominator conventions: precision/recall/specificity are 0 when
    undefined, and f1 is 0 when precision + recall = 0. ``error_mode``
    selects 1 - accuracy (default) or the segment-style (D + I) / n_ref
    alternative.
    """
    if len(grid) == 0:
        raise ValueError("empty grid")
    tp = fp = tn = fn = 0
    for p, r in zip(grid.pred, grid.ref):
        if p and r:
            tp += 1
        elif p and not r:
            fp += 1
        elif not p and r:
            fn += 1
        else:
            tn += 1
    return confusion_report(tp, fp, tn, fn, error_mode=error_mode)


def confusion_report(
    tp: int, fp: int, tn: int, fn: int, error_mode: str = "one_minus_accuracy"
) -> FramewiseReport:
    total = tp + fp + tn + fn
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    specificity = tn / (tn + fp) if tn + fp else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    accuracy = (tp + tn) / total
    if error_mode == "one_minus_accuracy":
        error_rate = 1.0 - accuracy
    elif error_mode == "segment":
        error_rate = (fn + fp) / (tp + fn) if tp + fn else 0.0
    else:
        raise ValueError(f"unknown error_mode {error_mode!r}")
    return FramewiseReport(
        tp=tp, fp=fp, tn=tn, fn=fn,
        precision=precision, recall=recall, f1=f1, accuracy=accuracy,
        specificity=specificity, balanced_accuracy=(recall + specificity) / 2.0,
        error_rate=error_rate,
    )


def events_from_grid(grid: BinaryGrid, min_run: int = 1) -> list[DetectionEvent]:
    """Maximal runs of positive cells, each at least min_run long."""
    events = []
    for start, length in _positive_runs(grid.pred):
        if length < min_run:
            continue
        run_probs = grid.probs[start : start + length]
        events.append(
            DetectionEvent(
                onset_s=start * grid.resolution_s,
                offset_s=(start + length) * grid.resolution_s,
                peak_probability=max(run_probs),
                frame_count=length,
            )
        )
    return events


def events_from_log(
    log: InferenceLog, threshold: float, min_run: int = 1
) -> list[DetectionEvent]:
    """Maximal runs of over-threshold inference frames as events."""
    flags = [1 if fr.probability >= threshold else 0 for fr in log.frames]
    events = []
    for start, length in _positive_runs(flags):
        if length < min_run:
            continue
        run = log.frames[start : start + length]
        events.append(
            DetectionEvent(
                onset_s=run[0].start_s,
                offset_s=run[-1].end_s,
                peak_probability=max(fr.probability for fr in run),
                frame_count=length,
            )
        )
    return events


def event_metrics(
    pred_events: list[DetectionEvent],
    ref_events: list[Annotation] | list[DetectionEvent],
    onset_collar_s: float = 0.2,
    offset_pct: float = 0.5,
) -> EventReport:
    """Collar-based event matching with insertion/deletion error rates.

    A prediction matches a reference when the onset difference is within the
    collar AND the offset difference is within max(collar, offset_pct * ref
    duration). Matching is greedy one-to-one in onset order. With no
    reference events the deletion/error rates are undefined and reported as
    None.
    """
    refs = sorted(ref_events, key=lambda e: _onset(e))
    preds = sorted(pred_events, key=lambda e: _onset(e))
    matched_ref: set[int] = set()
    n_correct = 0
    for p in preds:
        for j, r in enumerate(refs):
            if j in matched_ref:
                continue
            onset_ok = abs(_onset(p) - _onset(r)) <= onset_collar_s
            offset_tol = max(onset_collar_s, offset_pct * (_offset(r) - _onset(r)))
            offset_ok = abs(_offset(p) - _offset(r)) <= offset_tol
            if onset_ok and offset_ok:
                matched_ref.add(j)
                n_correct += 1
                break

    n_ref, n_pred = len(refs), len(preds)
    precision = n_correct / n_pred if n_pred else 0.0
    if n_ref:
        recall = n_correct / n_ref
        deletion = (n_ref - n_correct) / n_ref
        insertion = (n_pred - n_correct) / n_ref
        error = deletion + insertion
        f1 = (
            2 * precision * recall / (precision + recall) if precision + recall else 0.0
        )
    else:
        recall = deletion = insertion = error = None
        f1 = 0.0
    return EventReport(
        f1=f1, precision=precision, recall=recall,
        error_rate=error, deletion_rate=deletion, insertion_rate=insertion,
        n_ref=n_ref, n_pred=n_pred, n_correct=n_correct,
    )


def fp_analysis(
    logs: list[InferenceLog],
    annotations: dict[str, list[Annotation]],
    threshold: float = 0.5,
    fp_run_n: int = 3,
) -> FPReport:
    """False-positive structure over inference frames.

    An FP frame clears the threshold yet has zero temporal overlap with
    every annotation of its clip; an FP event is a maximal contiguous run of
    at least ``fp_run_n`` FP frames. The all-frames average confidence is
    the baseline the FP-event confidence is contrasted against.
    """
    report = FPReport()
    per_clip_fp_counts: list[int] = []
    per_clip_shares: list[float] = []
    all_probs: list[float] = []
    event_probs: list[float] = []
    run_lengths: list[int] = []
    hist: dict[int, list] = {}

    for log_ in logs:
        anns = annotations.get(log_.clip_id, [])
        flags = []
        for fr in log_.frames:
            over = fr.probability >= threshold
            overlaps = any(
                fr.start_s < a.offset_s and a.onset_s < fr.end_s for a in anns
            )
            flags.append(1 if over and not overlaps else 0)
            all_probs.append(fr.probability)
        n_fp = sum(flags)
        per_clip_fp_counts.append(n_fp)
        per_clip_shares.append(n_fp / len(flags) if flags else 0.0)

        for start, length in _positive_runs(flags):
            if length < fp_run_n:
                continue
            probs = [log_.frames[i].probability for i in range(start, start + length)]
            run_lengths.append(length)
            event_probs.extend(probs)
            bucket = hist.setdefault(length, [0, 0.0, 0])
            bucket[0] += 1
            bucket[1] += sum(probs)
            bucket[2] += length

    if per_clip_fp_counts:
        report.fp_fw_afps = sum(per_clip_fp_counts) / len(per_clip_fp_counts)
        report.fp_fw_afpsp = sum(per_clip_shares) / len(per_clip_shares)
    if all_probs:
        report.fp_fw_ac = sum(all_probs) / len(all_probs)
    report.fp_eb_t = len(run_lengths)
    if run_lengths:
        report.fp_eb_ac = sum(event_probs) / len(event_probs)
        report.fp_eb_mrl = max(run_lengths)
        report.fp_eb_arl = sum(run_lengths) / len(run_lengths)
    report.duration_histogram = {
        length: {"count": count, "avg_confidence": prob_sum / frame_total}
        for length, (count, prob_sum, frame_total) in hist.items()
    }
    return report


def confident_frame_histogram(
    logs: list[InferenceLog], threshold: float = 0.5
) -> tuple[dict[str, int], dict[int, int]]:
    """Per-clip count of over-threshold frames, plus the count distribution.

    The zero bucket of the distribution is the audit surface: clips with no
    confident frame at all are candidates for mislabeled positives.
    """
    per_clip: dict[str, int] = {}
    for log_ in logs:
        per_clip[log_.clip_id] = sum(
            1 for fr in log_.frames if fr.probability >= threshold
        )
    buckets: dict[int, int] = {}
    for count in per_clip.values():
        buckets[count] = buckets.get(count, 0) + 1
    return per_clip, buckets


def _positive_runs(flags) -> list[tuple[int, int]]:
    """(start_index, length) of each maximal run of truthy flags."""
    runs = []
    start = None
    for i, flag in enumerate(flags):
        if flag and start is None:
            start = i
        elif not flag and start is not None:
            runs.append((start, i - start))
            start = None
    if start is not None:
        runs.append((start, len(flags) - start))
    return runs


def _onset(e) -> float:
    return e.onset_s


def _offset(e) -> float:
    return e.offset_s
