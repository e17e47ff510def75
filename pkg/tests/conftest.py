"""Shared fixtures and log-building helpers."""

from __future__ import annotations

import time

import pytest

from sirendet.config import EngineConfig
from sirendet.types import FrameResult, InferenceLog


def make_log(
    probs,
    frame_s: float = 9919 / 32000,
    clip_id: str = "clip",
    sample_rate: int = 32000,
    config: EngineConfig | None = None,
    processing_ms: float = 10.0,
    frame_durations=None,
    clip_duration_s: float | None = None,
) -> InferenceLog:
    """Build a tiling log from a probability sequence.

    ``frame_durations`` overrides the uniform ``frame_s`` per frame.
    """
    config = config or EngineConfig()
    log = InferenceLog(
        clip_id=clip_id,
        config=config,
        sample_rate=sample_rate,
        clip_duration_s=clip_duration_s,
        started_at=1000.0,
        ended_at=1000.0 + frame_s * len(probs),
    )
    t = 0.0
    for i, p in enumerate(probs):
        dur = frame_durations[i] if frame_durations is not None else frame_s
        n = int(round(dur * sample_rate))
        log.frames.append(
            FrameResult(
                index=i,
                start_s=t,
                end_s=t + n / sample_rate,
                frame_samples=n,
                probability=float(p),
                smoothed_probability=float(p),
                processing_ms=processing_ms,
                wall_timestamp=1000.0 + t,
            )
        )
        t += n / sample_rate
    if clip_duration_s is None:
        log.clip_duration_s = t
    log.ended_at = 1000.0 + t
    return log


@pytest.fixture
def default_config() -> EngineConfig:
    return EngineConfig()


class Stopwatch:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0
