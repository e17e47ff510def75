"""Inference-log persistence as line-delimited JSON.

First line is a header record carrying the config snapshot; every following
line is a self-describing record (frame, resource, detection, config_change,
error). Floats are serialized at full precision so read(write(x)) == x.
"""

from __future__ import annotations

import dataclasses
import json
from pathlib import Path

from .config import EngineConfig
from .types import ConfigChange, DetectionEvent, FrameResult, InferenceLog, ResourceSample

LOG_VERSION = 1


class LogFormatError(Exception):
    """Version mismatch, truncation, or malformed record."""


def write_log(log: InferenceLog, path: str | Path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        header = {
            "type": "header",
            "version": LOG_VERSION,
            "clip_id": log.clip_id,
            "config": log.config.to_dict(),
            "sample_rate": log.sample_rate,
            "clip_duration_s": log.clip_duration_s,
            "started_at": log.started_at,
            "ended_at": log.ended_at,
        }
        fh.write(json.dumps(header) + "\n")
        for fr in log.frames:
            fh.write(json.dumps({"type": "frame", **dataclasses.asdict(fr)}) + "\n")
        for rs in log.resources:
            fh.write(json.dumps({"type": "resource", **dataclasses.asdict(rs)}) + "\n")
        for ev in log.detections:
            fh.write(json.dumps({"type": "detection", **dataclasses.asdict(ev)}) + "\n")
        for cc in log.config_changes:
            fh.write(json.dumps({"type": "config_change", **dataclasses.asdict(cc)}) + "\n")
        if log.error is not None:
            fh.write(json.dumps({"type": "error", "message": log.error}) + "\n")


def read_log(path: str | Path) -> InferenceLog:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if not text:
        raise LogFormatError(f"{path}: empty file")
    if not text.endswith("\n"):
        raise LogFormatError(f"{path}: truncated file (unterminated final record)")

    lines = text.splitlines()
    header = _parse_record(path, 1, lines[0])
    if header.get("type") != "header":
        raise LogFormatError(f"{path}: first record is not a header")
    version = header.get("version")
    if version != LOG_VERSION:
        raise LogFormatError(f"{path}: unsupported log version {version!r}")

    log = InferenceLog(
        clip_id=header["clip_id"],
        config=EngineConfig.from_dict(header["config"]),
        sample_rate=int(header.get("sample_rate", 32000)),
        clip_duration_s=header.get("clip_duration_s"),
        started_at=float(header.get("started_at", 0.0)),
        ended_at=float(header.get("ended_at", 0.0)),
    )

    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        rec = _parse_record(path, lineno, line)
        kind = rec.pop("type", None)
        try:
            if kind == "frame":
                log.frames.append(FrameResult(**rec))
            elif kind == "resource":
                log.resources.append(ResourceSample(**rec))
            elif kind == "detection":
                log.detections.append(DetectionEvent(**rec))
            elif kind == "config_change":
                log.config_changes.append(ConfigChange(**rec))
            elif kind == "error":
                log.error = rec.get("message", "unknown error")
            elif kind == "header":
                raise LogFormatError(f"{path}: duplicate header at line {lineno}")
            else:
                raise LogFormatError(f"{path}: unknown record type {kind!r} at line {lineno}")
        except TypeError as exc:
            raise LogFormatError(f"{path}: bad {kind} record at line {lineno}: {exc}") from None
    return log


def read_log_dir(directory: str | Path, pattern: str = "*.log.jsonl") -> list[InferenceLog]:
    """Read every log in a directory, sorted by filename."""
    paths = sorted(Path(directory).glob(pattern))
    return [read_log(p) for p in paths]


def log_filename(clip_id: str) -> str:
    return f"{clip_id}.log.jsonl"


def _parse_record(path: Path, lineno: int, line: str) -> dict:
    try:
        rec = json.loads(line)
    except json.JSONDecodeError as exc:
        raise LogFormatError(f"{path}: truncated or corrupt record at line {lineno}: {exc}") from None
    if not isinstance(rec, dict):
        raise LogFormatError(f"{path}: record at line {lineno} is not an object")
    return rec
