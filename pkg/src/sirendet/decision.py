"""Post-inference decision logic: smoothing and the event state machine.

The raw probability stream is smoothed with a fixed-size moving average,
then fed through a three-phase state machine (IDLE / PENDING / ACTIVE) that
confirms an event only after ``consecutive_k`` over-threshold frames and
releases it only after ``release_m`` consecutive sub-threshold frames.
The frame-growth logic consumes raw probabilities; this machine consumes
smoothed ones — the two mechanisms are deliberately independent.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass

from .types import DetectionEvent, FrameResult


class MovingAverageSmoother:
    """Arithmetic mean over the last W raw probabilities.

    During warm-up (fewer than W inputs seen) the mean runs over whatever
    exists; zero-padding would bias early frames negative. W=1 disables
    smoothing.
    """

    def __init__(self, window: int):
        if window < 1:
            raise ValueError(f"window must be >= 1, got {window}")
        self.window = window
        self._recent: deque[float] = deque(maxlen=window)

    def update(self, p: float) -> float:
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"probability out of [0,1]: {p}")
        self._recent.append(p)
        return sum(self._recent) / len(self._recent)

    def reconfigure(self, window: int) -> None:
        """Change the window size, keeping the most recent history."""
        if window < 1:
            raise ValueError(f"window must be >= 1, got {window}")
        kept = list(self._recent)[-window:]
        self.window = window
        self._recent = deque(kept, maxlen=window)

    def reset(self) -> None:
        self._recent.clear()


class Phase(enum.Enum):
    IDLE = "IDLE"
    PENDING = "PENDING"
    ACTIVE = "ACTIVE"


@dataclass
class StateSnapshot:
    """Immutable copy of the machine state published to telemetry."""

    phase: str
    positive_run: int
    negative_run: int
    last_smoothed: float


class DecisionStateMachine:
    """Turns the smoothed probability stream into confirmed detection events.

    Transition rules (positive = smoothed_p >= threshold):

    * IDLE    + positive -> PENDING with the onset candidate at this frame's
      start; reaching ``consecutive_k`` positives confirms the event, with
      the onset backdated to the first frame of the run.
    * PENDING + negative -> IDLE (a single negative resets the count).
    * ACTIVE  + positive -> event extended to this frame's end.
    * ACTIVE  + negative -> after ``release_m`` consecutive negatives the
      event closes at the end of the last positive frame.
    """

    def __init__(self, threshold: float, consecutive_k: int, release_m: int):
        if consecutive_k < 1 or release_m < 1:
            raise ValueError("consecutive_k and release_m must be >= 1")
        self.threshold = threshold
        self.consecutive_k = consecutive_k
        self.release_m = release_m
        self.phase = Phase.IDLE
        self.positive_run = 0
        self.negative_run = 0
        self.pending_onset_s: float | None = None
        self._pending_peak = 0.0
        self.active_event: DetectionEvent | None = None
        self.last_smoothed = 0.0

    def step(
        self, smoothed_p: float, frame: FrameResult
    ) -> tuple[DetectionEvent | None, DetectionEvent | None]:
        """Advance one frame; returns (opened_event, closed_event)."""
        positive = smoothed_p >= self.threshold
        opened = closed = None
        self.last_smoothed = smoothed_p

        if self.phase == Phase.IDLE:
            if positive:
                self.phase = Phase.PENDING
                self.positive_run = 1
                self.pending_onset_s = frame.start_s
                self._pending_peak = smoothed_p
                opened = self._maybe_confirm(frame)
        elif self.phase == Phase.PENDING:
            if positive:
                self.positive_run += 1
                self._pending_peak = max(self._pending_peak, smoothed_p)
                opened = self._maybe_confirm(frame)
            else:
                self._to_idle()
        elif self.phase == Phase.ACTIVE:
            if positive:
                self.negative_run = 0
                ev = self.active_event
                ev.offset_s = frame.end_s
                ev.peak_probability = max(ev.peak_probability, smoothed_p)
                ev.frame_count += 1
            else:
                self.negative_run += 1
                if self.negative_run >= self.release_m:
                    closed = self._close()
        return opened, closed

    def finish(self) -> DetectionEvent | None:
        """Close any in-progress event at end of stream."""
        if self.phase == Phase.ACTIVE:
            return self._close()
        self._to_idle()
        return None

    def snapshot(self) -> StateSnapshot:
        return StateSnapshot(
            phase=self.phase.value,
            positive_run=self.positive_run,
            negative_run=self.negative_run,
            last_smoothed=self.last_smoothed,
        )

    def reconfigure(
        self,
        threshold: float | None = None,
        consecutive_k: int | None = None,
        release_m: int | None = None,
    ) -> None:
        if threshold is not None:
            self.threshold = threshold
        if consecutive_k is not None:
            if consecutive_k < 1:
                raise ValueError("consecutive_k must be >= 1")
            self.consecutive_k = consecutive_k
        if release_m is not None:
            if release_m < 1:
                raise ValueError("release_m must be >= 1")
            self.release_m = release_m

    def _maybe_confirm(self, frame: FrameResult) -> DetectionEvent | None:
        if self.positive_run < self.consecutive_k:
            return None
        self.phase = Phase.ACTIVE
        self.negative_run = 0
        self.active_event = DetectionEvent(
            onset_s=self.pending_onset_s,
            offset_s=frame.end_s,
            peak_probability=self._pending_peak,
            frame_count=self.positive_run,
        )
        return self.active_event

    def _close(self) -> DetectionEvent:
        event = self.active_event
        self._to_idle()
        return event

    def _to_idle(self) -> None:
        self.phase = Phase.IDLE
        self.positive_run = 0
        self.negative_run = 0
        self.pending_onset_s = None
        self._pending_peak = 0.0
        self.active_event = None
