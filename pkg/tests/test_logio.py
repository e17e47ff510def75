import random

import pytest

from sirendet.config import EngineConfig
from sirendet.logio import LogFormatError, log_filename, read_log, write_log
from sirendet.types import (
    ConfigChange,
    DetectionEvent,
    FrameResult,
    InferenceLog,
    ResourceSample,
)

from conftest import make_log


def random_log(seed: int) -> InferenceLog:
    rng = random.Random(seed)
    cfg = EngineConfig(
        threshold=rng.uniform(0.1, 0.9),
        increment_rate=rng.choice([0.0, 0.2, 0.4]),
        smoothing_window=rng.randint(1, 8),
    )
    log = InferenceLog(
        clip_id=f"clip{seed}",
        config=cfg,
        sample_rate=32000,
        clip_duration_s=rng.uniform(1, 10),
        started_at=rng.uniform(1e9, 2e9),
        ended_at=rng.uniform(2e9, 3e9),
    )
    t = 0.0
    for i in range(rng.randint(0, 40)):
        n = rng.randint(9919, 64000)
        log.frames.append(
            FrameResult(
                index=i,
                start_s=t,
                end_s=t + n / 32000,
                frame_samples=n,
                probability=rng.random(),
                smoothed_probability=rng.random(),
                processing_ms=rng.uniform(0.01, 400),
                wall_timestamp=rng.uniform(1e9, 2e9),
            )
        )
        t += n / 32000
    for _ in range(rng.randint(0, 10)):
        log.resources.append(
            ResourceSample(rng.uniform(1e9, 2e9), rng.uniform(0, 100), rng.uniform(0, 100))
        )
    for _ in range(rng.randint(0, 5)):
        onset = rng.uniform(0, 5)
        log.detections.append(
            DetectionEvent(onset, onset + rng.uniform(0.1, 3), rng.random(), rng.randint(1, 9))
        )
    for _ in range(rng.randint(0, 3)):
        log.config_changes.append(
            ConfigChange(rng.uniform(1e9, 2e9), {"threshold": rng.uniform(0.1, 0.9)})
        )
    if rng.random() < 0.3:
        log.error = "backend failure: injected"
    return log


def test_empty_log_round_trips(tmp_path):
    log = InferenceLog(clip_id="empty", config=EngineConfig())
    path = tmp_path / log_filename("empty")
    write_log(log, path)
    assert len(path.read_text().splitlines()) == 1
    assert read_log(path) == log


def test_record_counts(tmp_path):
    log = make_log([0.5] * 32)
    log.resources.append(ResourceSample(1000.0, 10.0, 5.0))
    log.resources.append(ResourceSample(1000.1, 11.0, 5.0))
    path = tmp_path / "x.log.jsonl"
    write_log(log, path)
    lines = path.read_text().splitlines()
    assert len(lines) == 1 + 32 + 2


def test_random_round_trip_exact():
    import tempfile
    from pathlib import Path

    with tempfile.TemporaryDirectory() as tmp:
        for seed in range(50):
            log = random_log(seed)
            path = Path(tmp) / f"{seed}.log.jsonl"
            write_log(log, path)
            assert read_log(path) == log, f"seed {seed} did not round-trip"


def test_version_mismatch(tmp_path):
    log = InferenceLog(clip_id="v", config=EngineConfig())
    path = tmp_path / "v.log.jsonl"
    write_log(log, path)
    text = path.read_text().replace('"version": 1', '"version": 99')
    path.write_text(text)
    with pytest.raises(LogFormatError, match="version"):
        read_log(path)


def test_truncated_file(tmp_path):
    log = make_log([0.5] * 5)
    path = tmp_path / "t.log.jsonl"
    write_log(log, path)
    data = path.read_bytes()
    path.write_bytes(data[:-10])  # chop mid-record
    with pytest.raises(LogFormatError, match="truncat"):
        read_log(path)


def test_missing_header(tmp_path):
    path = tmp_path / "h.log.jsonl"
    path.write_text('{"type":"frame","index":0}\n')
    with pytest.raises(LogFormatError, match="header"):
        read_log(path)


def test_empty_file(tmp_path):
    path = tmp_path / "e.log.jsonl"
    path.write_text("")
    with pytest.raises(LogFormatError):
        read_log(path)
