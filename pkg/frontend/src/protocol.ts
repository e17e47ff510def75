/**
 * Telemetry wire protocol: message shapes and strict parsing.
 *
 * Every inbound frame is validated before it reaches the store; anything
 * that fails validation is surfaced as a raw debug entry instead of
 * crashing the console.
 */

export interface EngineConfig {
  threshold: number;
  smoothing_window: number;
  consecutive_k: number;
  release_m: number;
  increment_rate: number;
  max_frame_s: number;
  [key: string]: unknown;
}

export interface FrameMsg {
  type: "frame";
  seq: number;
  t: number;
  prob: number;
  smoothed: number;
  frame_ms: number;
  infer_ms: number;
  state: "IDLE" | "PENDING" | "ACTIVE";
}

export interface DetectionMsg {
  type: "detection";
  seq: number;
  event: "open" | "close";
  onset: number;
  offset: number | null;
  peak: number;
}

export interface StatsMsg {
  type: "stats";
  seq: number;
  cpu_pct: number;
  mem_pct: number;
  rt_factor: number;
  fps: number;
}

export interface ConfigMsg {
  type: "config";
  seq: number;
  config: EngineConfig;
}

export interface AckMsg {
  type: "ack";
  ok: boolean;
  reason: string | null;
}

export type ServerMessage = FrameMsg | DetectionMsg | StatsMsg | ConfigMsg | AckMsg;

export interface SetConfigMsg {
  type: "set_config";
  [field: string]: unknown;
}

export type ParseResult =
  | { ok: true; msg: ServerMessage }
  | { ok: false; raw: string; error: string };

const ENGINE_STATES = new Set(["IDLE", "PENDING", "ACTIVE"]);

function isFiniteNumber(v: unknown): v is number {
  return typeof v === "number" && Number.isFinite(v);
}

function fail(raw: string, error: string): ParseResult {
  return { ok: false, raw, error };
}

export function parseServerMessage(text: string): ParseResult {
  let data: unknown;
  try {
    data = JSON.parse(text);
  } catch (err) {
    return fail(text, `not JSON: ${String(err)}`);
  }
  if (typeof data !== "object" || data === null || Array.isArray(data)) {
    return fail(text, "not an object");
  }
  const obj = data as Record<string, unknown>;

  switch (obj.type) {
    case "frame": {
      if (!isFiniteNumber(obj.seq)) return fail(text, "frame: bad seq");
      for (const field of ["t", "prob", "smoothed", "frame_ms", "infer_ms"]) {
        if (!isFiniteNumber(obj[field])) return fail(text, `frame: bad ${field}`);
      }
      if (typeof obj.state !== "string" || !ENGINE_STATES.has(obj.state)) {
        return fail(text, "frame: bad state");
      }
      const prob = obj.prob as number;
      const smoothed = obj.smoothed as number;
      if (prob < 0 || prob > 1 || smoothed < 0 || smoothed > 1) {
        return fail(text, "frame: probability out of [0,1]");
      }
      return { ok: true, msg: obj as unknown as FrameMsg };
    }
    case "detection": {
      if (!isFiniteNumber(obj.seq)) return fail(text, "detection: bad seq");
      if (obj.event !== "open" && obj.event !== "close") {
        return fail(text, "detection: bad event");
      }
      if (!isFiniteNumber(obj.onset)) return fail(text, "detection: bad onset");
      if (obj.offset !== null && !isFiniteNumber(obj.offset)) {
        return fail(text, "detection: bad offset");
      }
      if (!isFiniteNumber(obj.peak)) return fail(text, "detection: bad peak");
      return { ok: true, msg: obj as unknown as DetectionMsg };
    }
    case "stats": {
      if (!isFiniteNumber(obj.seq)) return fail(text, "stats: bad seq");
      for (const field of ["cpu_pct", "mem_pct", "rt_factor", "fps"]) {
        if (!isFiniteNumber(obj[field])) return fail(text, `stats: bad ${field}`);
      }
      return { ok: true, msg: obj as unknown as StatsMsg };
    }
    case "config": {
      if (!isFiniteNumber(obj.seq)) return fail(text, "config: bad seq");
      const cfg = obj.config;
      if (typeof cfg !== "object" || cfg === null) {
        return fail(text, "config: missing config object");
      }
      const c = cfg as Record<string, unknown>;
      for (const field of [
        "threshold", "smoothing_window", "consecutive_k",
        "release_m", "increment_rate", "max_frame_s",
      ]) {
        if (!isFiniteNumber(c[field])) return fail(text, `config: bad ${field}`);
      }
      return { ok: true, msg: obj as unknown as ConfigMsg };
    }
    case "ack": {
      if (typeof obj.ok !== "boolean") return fail(text, "ack: bad ok");
      if (obj.reason !== null && obj.reason !== undefined && typeof obj.reason !== "string") {
        return fail(text, "ack: bad reason");
      }
      return {
        ok: true,
        msg: { type: "ack", ok: obj.ok, reason: (obj.reason as string | null) ?? null },
      };
    }
    default:
      return fail(text, `unknown message type: ${String(obj.type)}`);
  }
}

export function encodeSetConfig(changes: Record<string, number>): string {
  return JSON.stringify({ type: "set_config", ...changes });
}
