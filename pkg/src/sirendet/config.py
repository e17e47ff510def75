"""Engine configuration: every tunable of the detection pipeline."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path

# Fields a remote operator may change while the engine is running.
RUNTIME_TUNABLE_FIELDS = frozenset(
    {
        "threshold",
        "smoothing_window",
        "consecutive_k",
        "release_m",
        "increment_rate",
        "max_frame_s",
    }
)


@dataclass(frozen=True)
class EngineConfig:
    """Immutable snapshot of all pipeline tunables.

    ``min_frame_samples`` is defined in samples, so at sample rates other
    than 32 kHz the minimum frame duration shifts accordingly.
    """

    threshold: float = 0.5
    min_frame_samples: int = 9919
    max_frame_s: float = 2.0
    increment_rate: float = 0.0
    smoothing_window: int = 5
    consecutive_k: int = 3
    release_m: int = 3
    grid_resolution_s: float = 0.1
    fp_run_n: int = 3
    buffer_capacity_s: float = 10.0
    chunk_samples: int = 1024
    growth_threshold: float | None = None

    def __post_init__(self):
        validate_config_values(dataclasses.asdict(self))

    def min_frame_s(self, sample_rate: int) -> float:
        return self.min_frame_samples / sample_rate

    def effective_growth_threshold(self) -> float:
        return self.threshold if self.growth_threshold is None else self.growth_threshold

    def validate_for_rate(self, sample_rate: int) -> None:
        """Cross-field checks that need a concrete sample rate."""
        min_s = self.min_frame_s(sample_rate)
        if min_s > self.max_frame_s:
            raise ValueError(
                f"min frame ({min_s:.4f}s at {sample_rate} Hz) exceeds max_frame_s "
                f"({self.max_frame_s}s)"
            )
        if self.grid_resolution_s >= min_s:
            raise ValueError(
                f"grid_resolution_s ({self.grid_resolution_s}s) must be shorter than "
                f"the minimum frame ({min_s:.4f}s)"
            )
        if self.buffer_capacity_s < self.max_frame_s:
            raise ValueError("buffer_capacity_s must cover at least one max-size frame")

    def replace(self, **changes) -> "EngineConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "EngineConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_file(cls, path: str | Path, overrides: dict | None = None) -> "EngineConfig":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        if not isinstance(data, dict):
            raise ValueError(f"config file {path} must hold a JSON object")
        if overrides:
            data.update(overrides)
        return cls.from_dict(data)


def validate_config_values(values: dict) -> None:
    """Validate a (possibly partial) set of config fields, raising ValueError."""
    if "threshold" in values and not 0.0 < values["threshold"] < 1.0:
        raise ValueError(f"threshold out of (0,1): {values['threshold']}")
    gt = values.get("growth_threshold")
    if gt is not None and not 0.0 < gt < 1.0:
        raise ValueError(f"growth_threshold out of (0,1): {gt}")
    for name in ("smoothing_window", "consecutive_k", "release_m", "fp_run_n"):
        if name in values:
            v = values[name]
            if not isinstance(v, int) or isinstance(v, bool) or v < 1:
                raise ValueError(f"{name} must be an integer >= 1, got {v!r}")
    for name in ("min_frame_samples", "chunk_samples"):
        if name in values:
            v = values[name]
            if not isinstance(v, int) or isinstance(v, bool) or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v!r}")
    for name in ("max_frame_s", "grid_resolution_s", "buffer_capacity_s"):
        if name in values and not values[name] > 0:
            raise ValueError(f"{name} must be positive, got {values[name]}")
    if "increment_rate" in values and values["increment_rate"] < 0:
        raise ValueError(f"increment_rate must be >= 0, got {values['increment_rate']}")


def validate_control_changes(changes: dict) -> dict:
    """Validate a remote set_config payload against the tunable whitelist.

    Returns the changes dict on success; raises ValueError with a reason
    suitable for an operator-facing rejection otherwise. Unknown fields are
    rejected rather than ignored.
    """
    if not changes:
        raise ValueError("no config fields given")
    unknown = set(changes) - RUNTIME_TUNABLE_FIELDS
    if unknown:
        raise ValueError(f"unknown or non-tunable fields: {sorted(unknown)}")
    validate_config_values(changes)
    return changes
