"""Ground-truth annotation loading (TSV or JSONL) with audit-list filtering."""

from __future__ import annotations

import json
from pathlib import Path

from .types import Annotation


class AnnotationFormatError(Exception):
    """Malformed annotation input; message carries the offending line number."""


def load_exclusions(path: str | Path) -> set[str]:
    """Read an exclusion list: one clip_id per line, '#' comments ignored."""
    ids: set[str] = set()
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            ids.add(line)
    return ids


def load_annotations(
    path: str | Path,
    exclusion_list: str | Path | None = None,
    exclusion_mode: str = "exclude",
) -> dict[str, list[Annotation]]:
    """Load per-clip annotations keyed by clip_id, sorted by onset.

    The file is tab-separated with columns clip_id, onset_s, offset_s, label;
    lines starting with '#' are comments. Files ending in .jsonl are parsed as
    one JSON object per line with the same field names.

    Args:
        path: annotation file.
        exclusion_list: optional file naming audited clip_ids.
        exclusion_mode: "exclude" drops listed clips from the result entirely;
            "negative" keeps them with an empty annotation list, treating the
            clip as containing no events.

    Raises:
        AnnotationFormatError: malformed row or onset >= offset, with the
            1-based line number.
    """
    if exclusion_mode not in ("exclude", "negative"):
        raise ValueError(f"unknown exclusion_mode {exclusion_mode!r}")
    path = Path(path)
    parse = _parse_jsonl_line if path.suffix.lower() == ".jsonl" else _parse_tsv_line

    per_clip: dict[str, list[Annotation]] = {}
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        ann = parse(line, lineno)
        per_clip.setdefault(ann.clip_id, []).append(ann)

    if exclusion_list is not None:
        excluded = load_exclusions(exclusion_list)
        if exclusion_mode == "exclude":
            per_clip = {cid: anns for cid, anns in per_clip.items() if cid not in excluded}
        else:
            for cid in excluded:
                if cid in per_clip:
                    per_clip[cid] = []

    for anns in per_clip.values():
        anns.sort(key=lambda a: (a.onset_s, a.offset_s))
    return per_clip


def _parse_tsv_line(line: str, lineno: int) -> Annotation:
    parts = line.split("\t")
    if len(parts) != 4:
        raise AnnotationFormatError(
            f"line {lineno}: expected 4 tab-separated fields, got {len(parts)}"
        )
    clip_id, onset_str, offset_str, label = (p.strip() for p in parts)
    try:
        onset, offset = float(onset_str), float(offset_str)
    except ValueError:
        raise AnnotationFormatError(f"line {lineno}: non-numeric onset/offset") from None
    return _build(clip_id, onset, offset, label, lineno)


def _parse_jsonl_line(line: str, lineno: int) -> Annotation:
    try:
        obj = json.loads(line)
        clip_id = obj["clip_id"]
        onset = float(obj["onset_s"])
        offset = float(obj["offset_s"])
        label = str(obj.get("label", "siren"))
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise AnnotationFormatError(f"line {lineno}: {exc}") from None
    return _build(clip_id, onset, offset, label, lineno)


def _build(clip_id: str, onset: float, offset: float, label: str, lineno: int) -> Annotation:
    if not clip_id:
        raise AnnotationFormatError(f"line {lineno}: empty clip_id")
    try:
        return Annotation(clip_id=clip_id, onset_s=onset, offset_s=offset, label=label)
    except ValueError as exc:
        raise AnnotationFormatError(f"line {lineno}: {exc}") from None
