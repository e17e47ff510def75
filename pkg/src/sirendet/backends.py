"""Frame-to-probability classifier backends and input-size discovery.

Every backend maps a sample frame to a probability of the target (siren)
class. The neural model the engine was built around stays out of process;
these bundled backends keep the pipeline exercisable without model weights:

* :class:`ScriptedBackend` replays a deterministic probability schedule.
* :class:`HeuristicSirenBackend` scores band energy and pitch modulation.
* :class:`FixedMinBackend` is a probing target with a hidden minimum size.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod

import numpy as np


class FrameTooShort(Exception):
    """Frame below the backend's minimum valid input size."""


class BackendContractViolation(Exception):
    """Backend accepted some length but rejected a longer one."""


class DetectorBackend(ABC):
    """Uniform interface over any frame classifier.

    ``infer`` must be a pure function of the frame contents for bundled
    backends; implementations must not retain references to the frame.
    """

    name: str = "backend"
    min_input_samples: int = 1
    declared_sample_rate: int = 32000

    @abstractmethod
    def infer(self, frame: np.ndarray) -> float:
        """Probability of the siren class for this frame, in [0, 1]."""

    def reset(self) -> None:
        """Clear any per-run state (stream clocks etc.). Default no-op."""

    def close(self) -> None:
        """Release external resources. Default no-op."""

    def _check_length(self, frame) -> None:
        if len(frame) < self.min_input_samples:
            raise FrameTooShort(
                f"{self.name}: frame of {len(frame)} samples is below the "
                f"minimum {self.min_input_samples}"
            )


class ScriptedBackend(DetectorBackend):
    """Deterministic replay backend driven by a (until_time, probability) schedule.

    The probability is looked up at the END time of each frame, tracked by a
    stream-sample clock that advances with every inference (frames are
    assumed to tile the stream, which is how the engine feeds it). The last
    schedule entry may be open-ended (until=None).
    """

    name = "scripted"

    def __init__(self, schedule, sample_rate: int = 32000, min_input_samples: int = 1):
        entries = []
        prev = -math.inf
        for until, prob in schedule:
            until = math.inf if until is None else float(until)
            if until <= prev:
                raise ValueError("schedule times must be strictly increasing")
            if not 0.0 <= prob <= 1.0:
                raise ValueError(f"schedule probability out of [0,1]: {prob}")
            entries.append((until, float(prob)))
            prev = until
        if not entries:
            raise ValueError("empty schedule")
        if entries[-1][0] != math.inf:
            entries.append((math.inf, entries[-1][1]))
        self.schedule = entries
        self.declared_sample_rate = sample_rate
        self.min_input_samples = min_input_samples
        self._samples_seen = 0

    def infer(self, frame) -> float:
        self._check_length(frame)
        self._samples_seen += len(frame)
        end_t = self._samples_seen / self.declared_sample_rate
        return self.probability_at(end_t)

    def probability_at(self, t: float) -> float:
        for until, prob in self.schedule:
            if t < until:
                return prob
        return self.schedule[-1][1]

    def reset(self) -> None:
        self._samples_seen = 0

    @classmethod
    def constant(cls, probability: float, sample_rate: int = 32000) -> "ScriptedBackend":
        return cls([(None, probability)], sample_rate=sample_rate)

    @classmethod
    def from_file(cls, path, sample_rate: int = 32000) -> "ScriptedBackend":
        """Load a JSON schedule: a list of [until_seconds_or_null, probability]."""
        import json
        from pathlib import Path

        data = json.loads(Path(path).read_text(encoding="utf-8"))
        if not isinstance(data, list):
            raise ValueError(f"schedule file {path} must hold a JSON list")
        return cls([(entry[0], entry[1]) for entry in data], sample_rate=sample_rate)


class HeuristicSirenBackend(DetectorBackend):
    """Spectral reference detector so the live path runs without model weights.

    Score = logistic of (in-band energy ratio x normalized temporal variance
    of the dominant in-band frequency) over short-time magnitude spectra.
    Sirens concentrate energy in the 500-2000 Hz band AND modulate pitch, so
    both factors are needed; steady tones (variance 0) and broadband noise
    (low band ratio) both score low. Exists for pipeline testing, not for
    accuracy claims.
    """

    name = "heuristic"
    WINDOW = 1024
    HOP = 512
    BAND_LOW_HZ = 500.0
    BAND_HIGH_HZ = 2000.0
    GAIN = 60.0
    BIAS = -4.0
    # Two full analysis windows are required for a variance estimate.
    min_input_samples = WINDOW + HOP

    def __init__(self, sample_rate: int = 32000):
        self.declared_sample_rate = sample_rate
        self._hann = np.hanning(self.WINDOW)
        freqs = np.fft.rfftfreq(self.WINDOW, 1.0 / sample_rate)
        self._band = (freqs >= self.BAND_LOW_HZ) & (freqs <= self.BAND_HIGH_HZ)
        if not self._band.any():
            raise ValueError(f"analysis band empty at sample rate {sample_rate}")
        self._band_freqs = freqs[self._band]

    def infer(self, frame) -> float:
        self._check_length(frame)
        x = np.asarray(frame, dtype=np.float64)
        n_win = 1 + (len(x) - self.WINDOW) // self.HOP
        idx = np.arange(self.WINDOW)[None, :] + self.HOP * np.arange(n_win)[:, None]
        spectra = np.abs(np.fft.rfft(x[idx] * self._hann, axis=1)) ** 2

        total = spectra.sum(axis=1)
        active = total > 1e-10
        if active.sum() < 2:
            feature = 0.0
        else:
            band_spec = spectra[active][:, self._band]
            ratio = float((band_spec.sum(axis=1) / total[active]).mean())
            peaks_hz = self._band_freqs[band_spec.argmax(axis=1)]
            spread = float(peaks_hz.std()) / (self.BAND_HIGH_HZ - self.BAND_LOW_HZ)
            feature = ratio * spread
        return float(1.0 / (1.0 + math.exp(-(self.GAIN * feature + self.BIAS))))


class FixedMinBackend(DetectorBackend):
    """Mock backend rejecting all frames below a hidden minimum size.

    The probing target for minimum-input discovery; returns a fixed
    probability for accepted frames and counts the infer calls it served.
    """

    name = "mock"

    def __init__(self, hidden_min: int, probability: float = 0.5, sample_rate: int = 32000):
        self.min_input_samples = hidden_min
        self.declared_sample_rate = sample_rate
        self.probability = probability
        self.calls = 0

    def infer(self, frame) -> float:
        self.calls += 1
        self._check_length(frame)
        return self.probability


def find_min_input_size(
    backend: DetectorBackend,
    lo: int = 1,
    hi: int = 320000,
    verify: bool = False,
) -> int:
    """Discover the smallest input length the backend accepts, in [lo, hi].

    Assumes monotone validity (everything below some m rejects, everything
    at or above accepts) and m in range, so the search needs exactly
    ceil(log2(hi - lo + 1)) probes. With ``verify=True`` up to two boundary
    probes are added and a :class:`BackendContractViolation` is raised if
    the monotonicity assumption fails at the found boundary.
    """
    if not 1 <= lo <= hi:
        raise ValueError(f"invalid search range [{lo}, {hi}]")

    # One allocation per search; probes are views (backends must not retain
    # frames, so sharing the buffer is safe).
    probe_buffer = np.zeros(hi)

    def accepts(n: int) -> bool:
        try:
            backend.infer(probe_buffer[:n])
        except FrameTooShort:
            return False
        return True

    low, high = lo, hi
    while low < high:
        mid = (low + high) // 2
        if accepts(mid):
            high = mid
        else:
            low = mid + 1

    if verify:
        if not accepts(low):
            raise BackendContractViolation(
                f"{backend.name}: rejected {low} after the search converged on it"
            )
        if low > lo and accepts(low - 1):
            raise BackendContractViolation(
                f"{backend.name}: accepted {low - 1}, below the found minimum {low}"
            )
    return low
