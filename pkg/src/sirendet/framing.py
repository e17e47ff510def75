"""Adaptive frame-width control for the inference loop.

The sizer proposes the length of each successive frame: it starts at the
minimum valid input size, grows proportionally while confidence stays over
threshold, and snaps back to the minimum on any sub-threshold result.
"""

from __future__ import annotations


class FrameSizer:
    """Tracks the current frame duration between inference steps.

    Growth is proportional to classified-audio time: one over-threshold
    frame of duration d extends the next frame by ``increment_rate * d``
    seconds, capped at ``max_frame_s``. The duration state is kept in
    continuous seconds; quantization to whole samples happens only in
    :meth:`next_frame_samples`, so the duration sequence under sustained
    positives follows d_k = d_0 * (1 + rate)^k exactly.
    """

    def __init__(
        self,
        sample_rate: int,
        min_frame_samples: int,
        max_frame_s: float,
        increment_rate: float,
        threshold: float,
    ):
        if sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        if min_frame_samples < 1:
            raise ValueError("min_frame_samples must be >= 1")
        self.sample_rate = sample_rate
        self.min_frame_samples = min_frame_samples
        self.min_frame_s = min_frame_samples / sample_rate
        self.max_frame_s = max_frame_s
        self.increment_rate = increment_rate
        self.threshold = threshold
        if self.min_frame_s > max_frame_s:
            raise ValueError(
                f"minimum frame {self.min_frame_s:.4f}s exceeds max_frame_s {max_frame_s}s"
            )
        self.current_frame_s = self.min_frame_s

    def next_frame_samples(self) -> int:
        """Sample count for the next frame (never below the valid minimum)."""
        return max(self.min_frame_samples, round(self.current_frame_s * self.sample_rate))

    def report(self, probability: float, frame_duration_s: float | None = None) -> None:
        """Feed back the result of the frame just classified.

        Args:
            probability: raw model output for the frame.
            frame_duration_s: duration credited for growth; defaults to the
                sizer's own continuous duration for the frame it proposed,
                which keeps the growth sequence exactly geometric.
        """
        if frame_duration_s is None:
            frame_duration_s = self.current_frame_s
        if probability >= self.threshold:
            self.current_frame_s = min(
                self.max_frame_s,
                self.current_frame_s + self.increment_rate * frame_duration_s,
            )
        else:
            self.current_frame_s = self.min_frame_s

    def reconfigure(
        self,
        max_frame_s: float | None = None,
        increment_rate: float | None = None,
        threshold: float | None = None,
    ) -> None:
        """Apply a runtime tuning change; the current duration is re-clamped."""
        if max_frame_s is not None:
            if max_frame_s < self.min_frame_s:
                raise ValueError("max_frame_s below the minimum frame duration")
            self.max_frame_s = max_frame_s
        if increment_rate is not None:
            if increment_rate < 0:
                raise ValueError("increment_rate must be >= 0")
            self.increment_rate = increment_rate
        if threshold is not None:
            self.threshold = threshold
        self.current_frame_s = min(self.current_frame_s, self.max_frame_s)

    def reset(self) -> None:
        self.current_frame_s = self.min_frame_s
