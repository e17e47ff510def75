"""Run-level statistics computed from an inference log.

Mirrors the live-session summary table of the runtime analysis: real-time
factors, processing-time percentiles, stability counters, resource usage,
and detection rates. The per-frame real-time factor is frame duration over
actual processing time; "normal" aggregates cover minimum-size frames and
"adaptive" the grown ones.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass
from pathlib import Path

from .types import InferenceLog


@dataclass(frozen=True)
class RunStats:
    total_inferences: int
    normal_avg_frame_ms: float | None
    adaptive_avg_frame_ms: float | None
    avg_processing_ms: float
    p95_processing_ms: float
    p99_processing_ms: float
    max_processing_ms: float
    overall_rt_factor: float
    normal_avg_rt_factor: float | None
    adaptive_avg_rt_factor: float | None
    interruptions: int
    avg_fps: float
    avg_cpu_pct: float | None
    peak_cpu_pct: float | None
    avg_mem_pct: float | None
    peak_mem_pct: float | None
    detection_events: int
    detection_rate_per_h: float
    session_hours: float

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def write_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")


def nearest_rank_percentile(values, q: float) -> float:
    """Empirical percentile by the nearest-rank method (exactly reproducible).

    The rank is ceil(q/100 * n) into the sorted values, 1-indexed.
    """
    if not 0 < q <= 100:
        raise ValueError(f"percentile out of (0,100]: {q}")
    ordered = sorted(values)
    if not ordered:
        raise ValueError("no values")
    rank = math.ceil(q / 100.0 * len(ordered))
    return ordered[rank - 1]


def compute_stats(log: InferenceLog, interruptions: int | None = None) -> RunStats:
    """Aggregate a log into RunStats.

    Args:
        log: inference log with at least one frame.
        interruptions: override for the interruption count; defaults to 1 if
            the log carries an error marker, else 0.
    """
    if not log.frames:
        raise ValueError("log has no frames")

    durations_ms = [fr.duration_ms for fr in log.frames]
    processing_ms = [fr.processing_ms for fr in log.frames]
    rt_factors = [d / p for d, p in zip(durations_ms, processing_ms)]

    min_size = log.config.min_frame_samples
    normal = [i for i, fr in enumerate(log.frames) if fr.frame_samples == min_size]
    adaptive = [i for i, fr in enumerate(log.frames) if fr.frame_samples != min_size]

    session_s = log.session_duration_s
    session_h = session_s / 3600.0
    if interruptions is None:
        interruptions = 1 if log.error is not None else 0

    cpu = [rs.cpu_pct for rs in log.resources]
    mem = [rs.mem_pct for rs in log.resources]

    return RunStats(
        total_inferences=len(log.frames),
        normal_avg_frame_ms=_mean_at(durations_ms, normal),
        adaptive_avg_frame_ms=_mean_at(durations_ms, adaptive),
        avg_processing_ms=_mean(processing_ms),
        p95_processing_ms=nearest_rank_percentile(processing_ms, 95),
        p99_processing_ms=nearest_rank_percentile(processing_ms, 99),
        max_processing_ms=max(processing_ms),
        overall_rt_factor=_mean(rt_factors),
        normal_avg_rt_factor=_mean_at(rt_factors, normal),
        adaptive_avg_rt_factor=_mean_at(rt_factors, adaptive),
        interruptions=interruptions,
        avg_fps=len(log.frames) / session_s if session_s > 0 else 0.0,
        avg_cpu_pct=_mean(cpu) if cpu else None,
        peak_cpu_pct=max(cpu) if cpu else None,
        avg_mem_pct=_mean(mem) if mem else None,
        peak_mem_pct=max(mem) if mem else None,
        detection_events=len(log.detections),
        detection_rate_per_h=len(log.detections) / session_h if session_h > 0 else 0.0,
        session_hours=session_h,
    )


def _mean(values) -> float:
    return sum(values) / len(values)


def _mean_at(values, indices) -> float | None:
    if not indices:
        return None
    return sum(values[i] for i in indices) / len(indices)
