"""Command-line entry point for the detection engine workflows.

Subcommands: min-input (input-size discovery), simulate (per-clip
simulated-real-time inference), evaluate (framewise + event metrics),
fp-report (false-positive analysis), live (device capture with telemetry).

Backend specs: ``heuristic``, ``scripted:<schedule.json>``, ``const:<p>``,
``mock:<min_samples>``, ``exec:<command>``, ``tcp:<host:port>``.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import telemetry
from .annotations import load_annotations, load_exclusions
from .audio import load_clip
from .backends import (
    DetectorBackend,
    FixedMinBackend,
    HeuristicSirenBackend,
    ScriptedBackend,
    find_min_input_size,
)
from .config import EngineConfig
from .engine import CaptureDeviceSource, ClipSource, RealTimeEngine, RunMode
from .evaluation import (
    confident_frame_histogram,
    discretize,
    event_metrics,
    events_from_grid,
    fp_analysis,
    framewise_metrics,
)
from .external import ExternalBackend
from .logio import log_filename, read_log_dir, write_log
from .reports import (
    write_confident_histogram_csv,
    write_events_csv,
    write_fp_histogram_csv,
    write_fp_report,
    write_framewise_csv,
    write_report_json,
)
from .stats import compute_stats

log = logging.getLogger(__name__)


def parse_backend_spec(spec: str, sample_rate: int, min_samples: int = 1) -> DetectorBackend:
    kind, _, arg = spec.partition(":")
    if kind == "heuristic":
        return HeuristicSirenBackend(sample_rate=sample_rate)
    if kind == "scripted":
        return ScriptedBackend.from_file(arg, sample_rate=sample_rate)
    if kind == "const":
        return ScriptedBackend.constant(float(arg), sample_rate=sample_rate)
    if kind == "mock":
        return FixedMinBackend(int(arg), sample_rate=sample_rate)
    if kind == "exec":
        return ExternalBackend.spawn(arg, sample_rate=sample_rate, min_input_samples=min_samples)
    if kind == "tcp":
        host, _, port = arg.rpartition(":")
        return ExternalBackend.connect(
            host, int(port), sample_rate=sample_rate, min_input_samples=min_samples
        )
    raise ValueError(f"unknown backend spec {spec!r}")


def parse_duration(text: str) -> float:
    text = text.strip().lower()
    factor = 1.0
    for suffix, mult in (("h", 3600.0), ("m", 60.0), ("s", 1.0)):
        if text.endswith(suffix):
            text, factor = text[:-1], mult
            break
    return float(text) * factor


class ArtifactTracker:
    """Removes this invocation's outputs if it fails partway."""

    def __init__(self):
        self.paths: list[Path] = []

    def track(self, path: Path) -> Path:
        self.paths.append(Path(path))
        return Path(path)

    def cleanup(self) -> None:
        for path in self.paths:
            try:
                path.unlink(missing_ok=True)
            except OSError:
                pass


def _resolve_config(args) -> EngineConfig:
    overrides = {}
    for field in (
        "threshold", "min_frame_samples", "max_frame_s", "increment_rate",
        "smoothing_window", "consecutive_k", "release_m", "grid_resolution_s",
        "fp_run_n", "buffer_capacity_s", "chunk_samples",
    ):
        value = getattr(args, field, None)
        if value is not None:
            overrides[field] = value
    if getattr(args, "config", None):
        cfg = EngineConfig.from_file(args.config, overrides)
    else:
        cfg = EngineConfig().replace(**overrides)
    print("effective config:", json.dumps(cfg.to_dict()))
    return cfg


def _add_config_flags(parser, rate_flag: bool = True) -> None:
    parser.add_argument("--config", help="JSON config file with EngineConfig field names")
    parser.add_argument("--threshold", type=float)
    parser.add_argument("--smoothing-window", dest="smoothing_window", type=int)
    parser.add_argument("--consecutive-k", dest="consecutive_k", type=int)
    parser.add_argument("--release-m", dest="release_m", type=int)
    parser.add_argument("--max-frame-s", dest="max_frame_s", type=float)
    parser.add_argument("--min-frame-samples", dest="min_frame_samples", type=int)
    parser.add_argument("--chunk-samples", dest="chunk_samples", type=int)
    parser.add_argument("--buffer-capacity-s", dest="buffer_capacity_s", type=float)
    if rate_flag:
        parser.add_argument("--rate", dest="increment_rate", type=float,
                            help="frame growth rate in seconds per second (0 = constant)")
    parser.add_argument("--sample-rate", type=int, default=32000)


def cmd_min_input(args) -> int:
    backend = parse_backend_spec(args.backend, args.sample_rate)
    try:
        minimum = find_min_input_size(backend, lo=args.lo, hi=args.hi, verify=args.verify)
    finally:
        backend.close()
    print(minimum)
    return 0


def cmd_simulate(args) -> int:
    cfg = _resolve_config(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    excluded: set[str] = set()
    if args.exclusions:
        excluded = load_exclusions(args.exclusions)

    wavs = sorted(Path(args.clips).glob("*.wav"))
    if not wavs:
        print(f"no .wav clips found in {args.clips}", file=sys.stderr)
        return 1

    mode = RunMode.OFFLINE_FAST if args.fast else RunMode.SIMULATED_RT
    tracker = ArtifactTracker()
    backend = parse_backend_spec(args.backend, args.sample_rate, args.backend_min_samples)
    try:
        for wav in wavs:
            clip = load_clip(wav)
            if clip.clip_id in excluded:
                print(f"skipping excluded clip {clip.clip_id}")
                continue
            engine = RealTimeEngine(cfg, backend, sample_rate=clip.sample_rate)
            run_log = engine.run(clip, mode)
            path = tracker.track(out_dir / log_filename(clip.clip_id))
            write_log(run_log, path)
            print(f"{clip.clip_id}: {len(run_log.frames)} frames, "
                  f"{len(run_log.detections)} events -> {path}")
    except Exception as exc:
        tracker.cleanup()
        print(f"simulate failed: {exc}", file=sys.stderr)
        return 1
    finally:
        backend.close()
    return 0


def cmd_evaluate(args) -> int:
    logs = read_log_dir(args.logs)
    if not logs:
        print(f"no inference logs found in {args.logs}", file=sys.stderr)
        return 1
    annotations = load_annotations(args.annotations) if args.annotations else {}
    excluded = load_exclusions(args.exclusions) if args.exclusions else set()
    if args.exclusion_mode == "exclude":
        logs = [lg for lg in logs if lg.clip_id not in excluded]
    else:
        annotations = {
            cid: ([] if cid in excluded else anns) for cid, anns in annotations.items()
        }

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    tracker = ArtifactTracker()
    try:
        framewise = {}
        events = {}
        for lg in logs:
            anns = annotations.get(lg.clip_id, [])
            grid = discretize(lg, anns, args.resolution, args.threshold)
            framewise[lg.clip_id] = framewise_metrics(grid, error_mode=args.error_mode)
            pred = events_from_grid(grid, min_run=args.min_run)
            events[lg.clip_id] = event_metrics(pred, anns, onset_collar_s=args.collar)
        write_framewise_csv(tracker.track(out_dir / "framewise.csv"), framewise)
        write_events_csv(tracker.track(out_dir / "events.csv"), events)
        write_report_json(tracker.track(out_dir / "report.json"), framewise, events)
    except Exception as exc:
        tracker.cleanup()
        print(f"evaluate failed: {exc}", file=sys.stderr)
        return 1
    print(f"evaluated {len(logs)} logs -> {out_dir}")
    return 0


def cmd_fp_report(args) -> int:
    logs = read_log_dir(args.logs)
    if not logs:
        print(f"no inference logs found in {args.logs}", file=sys.stderr)
        return 1
    annotations = load_annotations(args.annotations) if args.annotations else {}
    if args.exclusions:
        excluded = load_exclusions(args.exclusions)
        logs = [lg for lg in logs if lg.clip_id not in excluded]

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    tracker = ArtifactTracker()
    try:
        report = fp_analysis(logs, annotations, threshold=args.threshold, fp_run_n=args.run_n)
        per_clip, buckets = confident_frame_histogram(logs, threshold=args.threshold)
        write_fp_report(tracker.track(out_dir / "fp_report.json"), report)
        write_fp_histogram_csv(tracker.track(out_dir / "fp_hist.csv"), report)
        write_confident_histogram_csv(
            tracker.track(out_dir / "confident_hist.csv"), per_clip, buckets
        )
    except Exception as exc:
        tracker.cleanup()
        print(f"fp-report failed: {exc}", file=sys.stderr)
        return 1
    print(f"analyzed {len(logs)} logs -> {out_dir}")
    return 0


def cmd_live(args) -> int:
    cfg = _resolve_config(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    backend = parse_backend_spec(args.backend, args.sample_rate, args.backend_min_samples)
    if args.device.startswith("file:"):
        clip = load_clip(args.device[len("file:"):])
        source = ClipSource(clip, loop=True)
        sample_rate = clip.sample_rate
    else:
        source = CaptureDeviceSource(args.device, args.sample_rate)
        sample_rate = args.sample_rate

    engine = RealTimeEngine(cfg, backend, sample_rate=sample_rate)
    server = None
    if args.serve:
        static_dir = _dashboard_dir()
        server = telemetry.serve(engine, args.serve, static_dir=static_dir)
        print(f"telemetry at {server.ws_url}"
              + (f" (dashboard from {static_dir})" if static_dir else ""))

    duration = parse_duration(args.duration) if args.duration else None
    tracker = ArtifactTracker()
    try:
        try:
            run_log = engine.run(source, RunMode.LIVE, duration_s=duration, clip_id="live")
        except KeyboardInterrupt:
            engine.stop()
            raise
        stats = compute_stats(run_log, interruptions=engine.interruptions)
        write_log(run_log, tracker.track(out_dir / log_filename("live")))
        stats.write_json(tracker.track(out_dir / "runstats.json"))
        print(json.dumps(stats.to_dict(), indent=2))
    except KeyboardInterrupt:
        print("interrupted", file=sys.stderr)
        tracker.cleanup()
        return 130
    except Exception as exc:
        tracker.cleanup()
        print(f"live run failed: {exc}", file=sys.stderr)
        return 1
    finally:
        if server is not None:
            server.stop()
        backend.close()
    return 0


def _dashboard_dir() -> Path | None:
    candidate = Path(__file__).resolve().parents[2] / "frontend" / "dist"
    return candidate if candidate.is_dir() else None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sirendet", description="Real-time siren sound-event-detection engine"
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("min-input", help="discover a backend's minimum valid input size")
    p.add_argument("--backend", required=True)
    p.add_argument("--lo", type=int, default=1)
    p.add_argument("--hi", type=int, default=320000)
    p.add_argument("--verify", action="store_true",
                   help="spend up to two extra probes checking the boundary")
    p.add_argument("--sample-rate", type=int, default=32000)
    p.set_defaults(func=cmd_min_input)

    p = sub.add_parser("simulate", help="simulated real-time inference over a clip directory")
    p.add_argument("--clips", required=True)
    p.add_argument("--annotations")
    p.add_argument("--exclusions")
    p.add_argument("--backend", required=True)
    p.add_argument("--backend-min-samples", type=int, default=1)
    p.add_argument("--out", required=True)
    p.add_argument("--fast", action="store_true",
                   help="write audio as fast as the consumer drains it")
    _add_config_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("evaluate", help="framewise and event-based metrics over logs")
    p.add_argument("--logs", required=True)
    p.add_argument("--annotations", required=True)
    p.add_argument("--exclusions")
    p.add_argument("--exclusion-mode", choices=["exclude", "negative"], default="exclude")
    p.add_argument("--resolution", type=float, default=0.1)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--collar", type=float, default=0.2)
    p.add_argument("--min-run", type=int, default=1)
    p.add_argument("--error-mode", choices=["one_minus_accuracy", "segment"],
                   default="one_minus_accuracy")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("fp-report", help="false-positive run analysis over logs")
    p.add_argument("--logs", required=True)
    p.add_argument("--annotations", required=True)
    p.add_argument("--exclusions")
    p.add_argument("--run-n", type=int, default=3)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fp_report)

    p = sub.add_parser("live", help="run live capture with optional telemetry service")
    p.add_argument("--device", required=True,
                   help="capture device name, or file:<path> to loop a WAV")
    p.add_argument("--backend", required=True)
    p.add_argument("--backend-min-samples", type=int, default=1)
    p.add_argument("--serve", help="host:port for the WebSocket telemetry service")
    p.add_argument("--duration", help="run length, e.g. 60s, 5m, 1h")
    p.add_argument("--out", required=True)
    _add_config_flags(p)
    p.set_defaults(func=cmd_live)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
