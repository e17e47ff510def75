"""Shared domain types: clips, annotations, per-frame results, events, logs."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import EngineConfig


@dataclass
class AudioClip:
    """Mono PCM audio held as float samples in [-1, 1]."""

    clip_id: str
    sample_rate: int
    samples: np.ndarray

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1:
            raise ValueError("samples must be a 1-D mono sequence")
        if self.samples.size == 0:
            raise ValueError("clip has zero samples")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("clip contains non-finite samples")

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate

    def __len__(self) -> int:
        return len(self.samples)


@dataclass(frozen=True)
class Annotation:
    """One ground-truth event interval for a clip."""

    clip_id: str
    onset_s: float
    offset_s: float
    label: str = "siren"

    def __post_init__(self):
        if not (0.0 <= self.onset_s < self.offset_s):
            raise ValueError(
                f"annotation interval invalid: onset={self.onset_s}, offset={self.offset_s}"
            )


@dataclass(frozen=True)
class FrameResult:
    """Outcome of one inference step over a stream-aligned frame."""

    index: int
    start_s: float
    end_s: float
    frame_samples: int
    probability: float
    smoothed_probability: float
    processing_ms: float
    wall_timestamp: float

    @property
    def duration_s(self) -> float:
        return self.end_s - self.start_s

    @property
    def duration_ms(self) -> float:
        return (self.end_s - self.start_s) * 1000.0


@dataclass
class DetectionEvent:
    """A confirmed detection as an (onset, offset) interval."""

    onset_s: float
    offset_s: float
    peak_probability: float
    frame_count: int = 1

    def __post_init__(self):
        if not self.onset_s < self.offset_s:
            raise ValueError(
                f"event interval invalid: onset={self.onset_s}, offset={self.offset_s}"
            )

    @property
    def duration_s(self) -> float:
        return self.offset_s - self.onset_s


@dataclass(frozen=True)
class ResourceSample:
    """One CPU/memory reading from the monitor thread."""

    timestamp: float
    cpu_pct: float
    mem_pct: float


@dataclass(frozen=True)
class ConfigChange:
    """A mid-run configuration change applied at a frame boundary."""

    timestamp: float
    changes: dict


@dataclass
class InferenceLog:
    """Everything recorded during one run; the currency of offline evaluation.

    ``config`` is the snapshot taken at run start and never mutated; live
    reconfiguration is recorded in ``config_changes``.
    """

    clip_id: str
    config: EngineConfig
    sample_rate: int = 32000
    clip_duration_s: float | None = None
    started_at: float = 0.0
    ended_at: float = 0.0
    frames: list[FrameResult] = field(default_factory=list)
    resources: list[ResourceSample] = field(default_factory=list)
    detections: list[DetectionEvent] = field(default_factory=list)
    config_changes: list[ConfigChange] = field(default_factory=list)
    error: str | None = None

    @property
    def consumed_duration_s(self) -> float:
        """Stream time covered by logged frames."""
        return self.frames[-1].end_s if self.frames else 0.0

    @property
    def session_duration_s(self) -> float:
        dur = self.ended_at - self.started_at
        if dur > 0:
            return dur
        return self.consumed_duration_s

    def validate_frame_adjacency(self, tol_s: float | None = None) -> None:
        """Check that frames tile the consumed stream without gaps or overlap."""
        if tol_s is None:
            tol_s = 1.0 / self.sample_rate
        for prev, cur in zip(self.frames, self.frames[1:]):
            if not math.isclose(prev.end_s, cur.start_s, abs_tol=tol_s):
                raise ValueError(
                    f"frames {prev.index} and {cur.index} do not tile: "
                    f"{prev.end_s} vs {cur.start_s}"
                )
