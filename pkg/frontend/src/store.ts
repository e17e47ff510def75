/**
 * Dashboard state: everything the view renders, fed by parsed messages.
 *
 * Sequence numbers dedup replays across reconnects: a message at or below
 * the high-water seq is dropped, and a config snapshot with a LOWER seq
 * means the server restarted, so the session state is rebuilt from it.
 * The displayed config is always the last one the server broadcast, never
 * an optimistic local value.
 */

import { BoundedRing } from "./ring.js";
import type {
  ConfigMsg,
  DetectionMsg,
  EngineConfig,
  FrameMsg,
  ParseResult,
  StatsMsg,
} from "./protocol.js";

export const FRAME_RING_CAPACITY = 600;
export const DEBUG_RING_CAPACITY = 50;
export const DETECTION_LIST_LIMIT = 200;

export type ConnectionStatus = "connecting" | "open" | "closed";

export interface FramePoint {
  t: number;
  prob: number;
  smoothed: number;
  frameMs: number;
  inferMs: number;
  state: FrameMsg["state"];
}

export interface DetectionRecord {
  onset: number;
  offset: number | null;
  peak: number;
}

export interface UiState {
  connection: ConnectionStatus;
  config: EngineConfig | null;
  frames: BoundedRing<FramePoint>;
  detections: DetectionRecord[];
  stats: StatsMsg | null;
  engineState: FrameMsg["state"];
  debug: BoundedRing<string>;
  lastSeq: number;
  droppedDuplicates: number;
}

export type StoreListener = (state: UiState) => void;

export class DashboardStore {
  readonly state: UiState = {
    connection: "connecting",
    config: null,
    frames: new BoundedRing<FramePoint>(FRAME_RING_CAPACITY),
    detections: [],
    stats: null,
    engineState: "IDLE",
    debug: new BoundedRing<string>(DEBUG_RING_CAPACITY),
    lastSeq: 0,
    droppedDuplicates: 0,
  };

  private listeners: StoreListener[] = [];

  subscribe(listener: StoreListener): void {
    this.listeners.push(listener);
  }

  setConnection(status: ConnectionStatus): void {
    this.state.connection = status;
    this.notify();
  }

  /** Apply one parsed inbound message (acks are handled by ControlChannel). */
  apply(parsed: ParseResult): void {
    if (!parsed.ok) {
      this.state.debug.push(`${parsed.error}: ${truncate(parsed.raw)}`);
      this.notify();
      return;
    }
    const msg = parsed.msg;
    if (msg.type === "ack") {
      return; // routed separately
    }

    if (msg.type === "config" && msg.seq < this.state.lastSeq) {
      // Lower seq on a snapshot: new server session; rebuild from it.
      this.resetSession();
    } else if (msg.seq <= this.state.lastSeq) {
      this.state.droppedDuplicates += 1;
      return; // duplicate or replay
    }
    this.state.lastSeq = msg.seq;

    switch (msg.type) {
      case "frame":
        this.applyFrame(msg);
        break;
      case "detection":
        this.applyDetection(msg);
        break;
      case "stats":
        this.state.stats = msg;
        break;
      case "config":
        this.state.config = msg.config;
        break;
    }
    this.notify();
  }

  private applyFrame(msg: FrameMsg): void {
    this.state.frames.push({
      t: msg.t,
      prob: msg.prob,
      smoothed: msg.smoothed,
      frameMs: msg.frame_ms,
      inferMs: msg.infer_ms,
      state: msg.state,
    });
    this.state.engineState = msg.state;
  }

  private applyDetection(msg: DetectionMsg): void {
    const list = this.state.detections;
    if (msg.event === "open") {
      list.push({ onset: msg.onset, offset: null, peak: msg.peak });
    } else {
      const open = [...list].reverse().find(
        (d) => d.offset === null && d.onset === msg.onset,
      );
      if (open) {
        open.offset = msg.offset;
        open.peak = msg.peak;
      } else {
        list.push({ onset: msg.onset, offset: msg.offset, peak: msg.peak });
      }
    }
    if (list.length > DETECTION_LIST_LIMIT) {
      list.splice(0, list.length - DETECTION_LIST_LIMIT);
    }
  }

  private resetSession(): void {
    this.state.lastSeq = 0;
    this.state.frames.clear();
    this.state.stats = null;
    this.state.engineState = "IDLE";
    // Detections are observations, not session state: keep the history.
  }

  private notify(): void {
    for (const listener of this.listeners) {
      listener(this.state);
    }
  }
}

function truncate(text: string, limit = 200): string {
  return text.length <= limit ? text : text.slice(0, limit) + "…";
}
