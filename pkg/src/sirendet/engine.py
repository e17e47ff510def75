"""Real-time inference engine: threads, profiling, and resource monitoring.

Three threads cooperate over the ring buffer: a producer writes audio
chunks (paced to the wall clock in simulated-real-time and live modes), a
consumer drives frame sizing -> inference -> smoothing -> decision stepping,
and a monitor samples process CPU/memory every ~100 ms and watches for
stalls. The consumer is the only thread touching the backend, the sizer,
the smoother, and the decision state.
"""

from __future__ import annotations

import dataclasses
import enum
import logging
import queue
import threading
import time
from dataclasses import dataclass

import numpy as np
import psutil

from .backends import DetectorBackend
from .config import EngineConfig, validate_control_changes
from .decision import DecisionStateMachine, MovingAverageSmoother
from .framing import FrameSizer
from .ringbuffer import CLOSED, BufferClosed, RingBuffer
from .types import AudioClip, ConfigChange, FrameResult, InferenceLog, ResourceSample

log = logging.getLogger(__name__)

MONITOR_PERIOD_S = 0.1
STALL_THRESHOLD_S = 2.0


class RunMode(enum.Enum):
    SIMULATED_RT = "simulated-rt"
    OFFLINE_FAST = "offline-fast"
    LIVE = "live"


@dataclass(frozen=True)
class EngineStatus:
    """Composite snapshot published to telemetry; safe to share (immutable)."""

    running: bool
    phase: str
    frames_done: int
    last_probability: float
    last_smoothed: float
    last_frame_ms: float
    last_infer_ms: float
    rt_factor: float
    fps: float
    cpu_pct: float
    mem_pct: float
    dropped_samples: int


class ClipSource:
    """Producer source replaying a clip's samples."""

    def __init__(self, clip: AudioClip, loop: bool = False):
        self.clip = clip
        self.loop = loop
        self.sample_rate = clip.sample_rate

    def chunks(self, chunk_samples: int):
        samples = self.clip.samples
        while True:
            for start in range(0, len(samples), chunk_samples):
                yield samples[start : start + chunk_samples]
            if not self.loop:
                return


class CaptureDeviceSource:
    """Producer source reading an audio capture device (needs sounddevice)."""

    def __init__(self, device: str, sample_rate: int):
        try:
            import sounddevice
        except ImportError as exc:
            raise RuntimeError(
                "live capture needs the 'sounddevice' package; use a file-as-device "
                "source (device spec 'file:<path>') where no capture stack exists"
            ) from exc
        self._sd = sounddevice
        self.device = device
        self.sample_rate = sample_rate

    def stream(self, chunk_samples: int):
        return self._sd.InputStream(
            device=self.device,
            samplerate=self.sample_rate,
            channels=1,
            blocksize=chunk_samples,
            dtype="float32",
        )


class RealTimeEngine:
    """One run of the streaming pipeline over a clip or a live source.

    Callbacks (all optional, called from the consumer thread; they must not
    block): ``on_frame(frame_result, phase)``, ``on_detection(kind, event)``
    with kind "open"/"close", ``on_config(config)`` after an applied change.
    """

    def __init__(
        self,
        cfg: EngineConfig,
        backend: DetectorBackend,
        sample_rate: int = 32000,
        on_frame=None,
        on_detection=None,
        on_config=None,
    ):
        cfg.validate_for_rate(sample_rate)
        if backend.min_input_samples > cfg.min_frame_samples:
            raise ValueError(
                f"backend needs {backend.min_input_samples} samples but the configured "
                f"minimum frame is {cfg.min_frame_samples}"
            )
        if backend.declared_sample_rate != sample_rate:
            log.warning(
                "backend declares %d Hz but the stream runs at %d Hz",
                backend.declared_sample_rate,
                sample_rate,
            )
        self.cfg = cfg
        self.backend = backend
        self.sample_rate = sample_rate
        self.on_frame = on_frame
        self.on_detection = on_detection
        self.on_config = on_config

        self._stop = threading.Event()
        self._control_queue: queue.SimpleQueue = queue.SimpleQueue()
        self._status: EngineStatus = EngineStatus(
            running=False, phase="IDLE", frames_done=0, last_probability=0.0,
            last_smoothed=0.0, last_frame_ms=0.0, last_infer_ms=0.0, rt_factor=0.0,
            fps=0.0, cpu_pct=0.0, mem_pct=0.0, dropped_samples=0,
        )
        self._resource_part = (0.0, 0.0)
        self._infer_started_mono: float | None = None
        self._interruptions = 0

    # ------------------------------------------------------------------ API

    def run(
        self,
        source,
        mode: RunMode,
        duration_s: float | None = None,
        clip_id: str | None = None,
    ) -> InferenceLog:
        """Execute the pipeline until end of input, duration, or stop().

        ``source`` is an AudioClip (SIMULATED_RT / OFFLINE_FAST) or a
        ClipSource / CaptureDeviceSource (LIVE).
        """
        if isinstance(source, AudioClip):
            source = ClipSource(source, loop=(mode is RunMode.LIVE))
        if source.sample_rate != self.sample_rate:
            raise ValueError(
                f"source rate {source.sample_rate} != engine rate {self.sample_rate}"
            )

        clip_duration = None
        if isinstance(source, ClipSource):
            clip_id = clip_id or source.clip.clip_id
            if mode is not RunMode.LIVE:
                clip_duration = source.clip.duration_s
        clip_id = clip_id or "live"

        run_log = InferenceLog(
            clip_id=clip_id,
            config=self.cfg,
            sample_rate=self.sample_rate,
            clip_duration_s=clip_duration,
            started_at=time.time(),
        )

        capacity = int(round(self.cfg.buffer_capacity_s * self.sample_rate))
        buffer = RingBuffer(capacity)
        self._stop.clear()
        self._interruptions = 0
        self.backend.reset()

        producer = threading.Thread(
            target=self._produce, args=(buffer, source, mode, duration_s),
            name="sirendet-producer", daemon=True,
        )
        monitor = threading.Thread(
            target=self._monitor, args=(run_log,), name="sirendet-monitor", daemon=True,
        )
        producer.start()
        monitor.start()
        try:
            self._consume(buffer, run_log)
        finally:
            self._stop.set()
            buffer.close()
            producer.join(timeout=5.0)
            monitor.join(timeout=5.0)
            run_log.ended_at = time.time()
            self._set_status(running=False)
        return run_log

    def stop(self) -> None:
        self._stop.set()

    def request_config_change(self, changes: dict) -> dict:
        """Queue validated tunable changes; applied at the next frame boundary."""
        validate_control_changes(changes)
        self._control_queue.put(dict(changes))
        return changes

    def snapshot(self) -> EngineStatus:
        cpu, mem = self._resource_part
        return dataclasses.replace(self._status, cpu_pct=cpu, mem_pct=mem)

    @property
    def interruptions(self) -> int:
        return self._interruptions

    # -------------------------------------------------------------- threads

    def _produce(self, buffer: RingBuffer, source, mode: RunMode, duration_s):
        chunk_samples = self.cfg.chunk_samples
        deadline_samples = (
            None if duration_s is None else int(round(duration_s * self.sample_rate))
        )
        try:
            if isinstance(source, CaptureDeviceSource):
                self._produce_capture(buffer, source, chunk_samples, deadline_samples)
            elif mode is RunMode.OFFLINE_FAST:
                self._produce_fast(buffer, source, chunk_samples, deadline_samples)
            else:
                self._produce_paced(buffer, source, chunk_samples, deadline_samples)
        except BufferClosed:
            pass
        except Exception:
            log.exception("producer failed")
        finally:
            buffer.close()

    def _produce_paced(self, buffer, source, chunk_samples, deadline_samples):
        t0 = time.perf_counter()
        written = 0
        for chunk in source.chunks(chunk_samples):
            if self._stop.is_set():
                return
            if deadline_samples is not None and written >= deadline_samples:
                return
            # A chunk becomes available when its last sample has "occurred".
            target = t0 + (written + len(chunk)) / self.sample_rate
            delay = target - time.perf_counter()
            if delay > 0 and self._stop.wait(timeout=delay):
                return
            buffer.write(chunk)
            written += len(chunk)

    def _produce_fast(self, buffer, source, chunk_samples, deadline_samples):
        written = 0
        for chunk in source.chunks(chunk_samples):
            if self._stop.is_set():
                return
            if deadline_samples is not None and written >= deadline_samples:
                return
            while not buffer.wait_for_space(len(chunk), timeout=0.1):
                if self._stop.is_set() or buffer.closed:
                    return
            buffer.write(chunk)
            written += len(chunk)

    def _produce_capture(self, buffer, source, chunk_samples, deadline_samples):
        written = 0
        with source.stream(chunk_samples) as stream:
            while not self._stop.is_set():
                if deadline_samples is not None and written >= deadline_samples:
                    return
                data, overflowed = stream.read(chunk_samples)
                if overflowed:
                    log.warning("capture overflow at sample %d", written)
                buffer.write(np.asarray(data)[:, 0])
                written += len(data)

    def _consume(self, buffer: RingBuffer, run_log: InferenceLog) -> None:
        cfg = self.cfg
        sizer = FrameSizer(
            sample_rate=self.sample_rate,
            min_frame_samples=cfg.min_frame_samples,
            max_frame_s=cfg.max_frame_s,
            increment_rate=cfg.increment_rate,
            threshold=cfg.effective_growth_threshold(),
        )
        smoother = MovingAverageSmoother(cfg.smoothing_window)
        machine = DecisionStateMachine(cfg.threshold, cfg.consecutive_k, cfg.release_m)

        start_mono = time.perf_counter()
        index = 0
        dropped_seen = 0
        self._set_status(running=True)
        try:
            while not self._stop.is_set():
                self._apply_pending_config(run_log, sizer, smoother, machine)

                n = sizer.next_frame_samples()
                frame = buffer.read_frame(n)
                if frame is CLOSED:
                    break

                dropped = buffer.dropped_samples
                if dropped != dropped_seen:
                    log.warning(
                        "buffer overrun: %d samples dropped so far", dropped
                    )
                    dropped_seen = dropped

                end_sample = buffer.read_head
                start_sample = end_sample - n

                self._infer_started_mono = time.perf_counter()
                probability = min(max(float(self.backend.infer(frame)), 0.0), 1.0)
                infer_done = time.perf_counter()
                processing_ms = (infer_done - self._infer_started_mono) * 1000.0
                self._infer_started_mono = None

                smoothed = smoother.update(probability)
                result = FrameResult(
                    index=index,
                    start_s=start_sample / self.sample_rate,
                    end_s=end_sample / self.sample_rate,
                    frame_samples=n,
                    probability=probability,
                    smoothed_probability=smoothed,
                    processing_ms=processing_ms,
                    wall_timestamp=time.time(),
                )
                opened, closed = machine.step(smoothed, result)
                sizer.report(probability)
                run_log.frames.append(result)
                index += 1

                if closed is not None:
                    run_log.detections.append(closed)
                elapsed = time.perf_counter() - start_mono
                self._set_status(
                    running=True,
                    phase=machine.phase.value,
                    frames_done=index,
                    last_probability=probability,
                    last_smoothed=smoothed,
                    last_frame_ms=result.duration_ms,
                    last_infer_ms=processing_ms,
                    rt_factor=result.duration_ms / processing_ms if processing_ms > 0 else 0.0,
                    fps=index / elapsed if elapsed > 0 else 0.0,
                    dropped_samples=dropped_seen,
                )
                if self.on_detection is not None:
                    if opened is not None:
                        self.on_detection("open", opened)
                    if closed is not None:
                        self.on_detection("close", closed)
                if self.on_frame is not None:
                    self.on_frame(result, machine.phase.value)
        except Exception as exc:
            run_log.error = f"backend failure: {exc}"
            self._interruptions += 1
            log.exception("consumer aborted")
            self._stop.set()
            buffer.close()
        finally:
            self._infer_started_mono = None
            final = machine.finish()
            if final is not None:
                run_log.detections.append(final)

    def _apply_pending_config(self, run_log, sizer, smoother, machine) -> None:
        while True:
            try:
                changes = self._control_queue.get_nowait()
            except queue.Empty:
                return
            try:
                new_cfg = self.cfg.replace(**changes)
                new_cfg.validate_for_rate(self.sample_rate)
            except ValueError as exc:
                log.warning("config change rejected at apply time: %s", exc)
                continue
            self.cfg = new_cfg
            if "threshold" in changes or "growth_threshold" in changes:
                machine.reconfigure(threshold=new_cfg.threshold)
                sizer.reconfigure(threshold=new_cfg.effective_growth_threshold())
            if "consecutive_k" in changes:
                machine.reconfigure(consecutive_k=new_cfg.consecutive_k)
            if "release_m" in changes:
                machine.reconfigure(release_m=new_cfg.release_m)
            if "smoothing_window" in changes:
                smoother.reconfigure(new_cfg.smoothing_window)
            if "increment_rate" in changes or "max_frame_s" in changes:
                sizer.reconfigure(
                    max_frame_s=new_cfg.max_frame_s,
                    increment_rate=new_cfg.increment_rate,
                )
            run_log.config_changes.append(ConfigChange(time.time(), dict(changes)))
            if self.on_config is not None:
                self.on_config(new_cfg)

    def _monitor(self, run_log: InferenceLog) -> None:
        proc = psutil.Process()
        ncpu = psutil.cpu_count() or 1
        proc.cpu_percent(None)  # prime the delta-based counter
        next_tick = time.monotonic() + MONITOR_PERIOD_S
        stall_flagged = False
        while not self._stop.wait(timeout=max(0.0, next_tick - time.monotonic())):
            next_tick += MONITOR_PERIOD_S
            cpu = min(100.0, proc.cpu_percent(None) / ncpu)
            mem = float(proc.memory_percent("rss"))
            self._resource_part = (cpu, mem)
            run_log.resources.append(ResourceSample(time.time(), cpu, mem))

            started = self._infer_started_mono
            if started is not None and time.monotonic() - started > STALL_THRESHOLD_S:
                if not stall_flagged:
                    self._interruptions += 1
                    stall_flagged = True
                    log.warning("consumer stalled in inference for > %.0fs", STALL_THRESHOLD_S)
            else:
                stall_flagged = False

    def _set_status(self, **updates) -> None:
        self._status = dataclasses.replace(self._status, **updates)


def run(
    clip_or_source,
    cfg: EngineConfig,
    backend: DetectorBackend,
    mode: RunMode = RunMode.SIMULATED_RT,
    duration_s: float | None = None,
) -> InferenceLog:
    """One-shot convenience wrapper around :class:`RealTimeEngine`."""
    engine = RealTimeEngine(cfg, backend, sample_rate=_source_rate(clip_or_source))
    return engine.run(clip_or_source, mode, duration_s=duration_s)


def _source_rate(source) -> int:
    return source.sample_rate
