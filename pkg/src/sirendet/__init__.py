"""Real-time siren sound-event detection: streaming inference engine,
adaptive frame sizing, decision logic, SED evaluation, and live telemetry."""

from .annotations import load_annotations, load_exclusions
from .audio import load_clip, silence, two_tone_siren, white_noise, write_wav
from .backends import (
    DetectorBackend,
    FixedMinBackend,
    FrameTooShort,
    HeuristicSirenBackend,
    ScriptedBackend,
    find_min_input_size,
)
from .config import EngineConfig
from .decision import DecisionStateMachine, MovingAverageSmoother, Phase
from .engine import RealTimeEngine, RunMode, run
from .evaluation import (
    confident_frame_histogram,
    discretize,
    event_metrics,
    events_from_grid,
    events_from_log,
    fp_analysis,
    framewise_metrics,
)
from .external import ExternalBackend
from .framing import FrameSizer
from .logio import read_log, write_log
from .ringbuffer import CLOSED, RingBuffer
from .stats import RunStats, compute_stats, nearest_rank_percentile
from .types import (
    Annotation,
    AudioClip,
    DetectionEvent,
    FrameResult,
    InferenceLog,
    ResourceSample,
)

__version__ = "0.1.0"

__all__ = [
    "Annotation",
    "AudioClip",
    "CLOSED",
    "DecisionStateMachine",
    "DetectionEvent",
    "DetectorBackend",
    "EngineConfig",
    "ExternalBackend",
    "FixedMinBackend",
    "FrameResult",
    "FrameSizer",
    "FrameTooShort",
    "HeuristicSirenBackend",
    "InferenceLog",
    "MovingAverageSmoother",
    "Phase",
    "RealTimeEngine",
    "ResourceSample",
    "RingBuffer",
    "RunMode",
    "RunStats",
    "ScriptedBackend",
    "compute_stats",
    "confident_frame_histogram",
    "discretize",
    "event_metrics",
    "events_from_grid",
    "events_from_log",
    "find_min_input_size",
    "fp_analysis",
    "framewise_metrics",
    "load_annotations",
    "load_clip",
    "load_exclusions",
    "nearest_rank_percentile",
    "read_log",
    "run",
    "silence",
    "two_tone_siren",
    "white_noise",
    "write_log",
    "write_wav",
]
