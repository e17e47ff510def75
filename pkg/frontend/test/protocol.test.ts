import { describe, expect, it } from "vitest";

import { encodeSetConfig, parseServerMessage } from "../src/protocol.js";

const frame = {
  type: "frame", seq: 3, t: 1.24, prob: 0.8, smoothed: 0.7,
  frame_ms: 310.0, infer_ms: 12.5, state: "PENDING",
};

describe("parseServerMessage", () => {
  it("accepts well-formed frame messages", () => {
    const result = parseServerMessage(JSON.stringify(frame));
    expect(result.ok).toBe(true);
    if (result.ok && result.msg.type === "frame") {
      expect(result.msg.prob).toBe(0.8);
      expect(result.msg.state).toBe("PENDING");
    }
  });

  it("rejects out-of-range probabilities", () => {
    const bad = { ...frame, prob: 1.4 };
    const result = parseServerMessage(JSON.stringify(bad));
    expect(result.ok).toBe(false);
  });

  it("rejects bad engine states", () => {
    const bad = { ...frame, state: "WARming" };
    expect(parseServerMessage(JSON.stringify(bad)).ok).toBe(false);
  });

  it("accepts detection open with null offset", () => {
    const msg = {
      type: "detection", seq: 9, event: "open", onset: 4.5, offset: null, peak: 0.9,
    };
    const result = parseServerMessage(JSON.stringify(msg));
    expect(result.ok).toBe(true);
  });

  it("accepts stats and config", () => {
    const stats = { type: "stats", seq: 2, cpu_pct: 20, mem_pct: 10, rt_factor: 1.3, fps: 3.1 };
    expect(parseServerMessage(JSON.stringify(stats)).ok).toBe(true);
    const config = {
      type: "config", seq: 1,
      config: {
        threshold: 0.5, smoothing_window: 5, consecutive_k: 3,
        release_m: 3, increment_rate: 0.0, max_frame_s: 2.0,
        min_frame_samples: 9919,
      },
    };
    expect(parseServerMessage(JSON.stringify(config)).ok).toBe(true);
  });

  it("accepts acks with and without a reason", () => {
    expect(parseServerMessage('{"type":"ack","ok":true,"reason":null}').ok).toBe(true);
    const nack = parseServerMessage('{"type":"ack","ok":false,"reason":"threshold out of (0,1)"}');
    expect(nack.ok).toBe(true);
    if (nack.ok && nack.msg.type === "ack") {
      expect(nack.msg.ok).toBe(false);
      expect(nack.msg.reason).toContain("threshold");
    }
  });

  it("flags unknown types without throwing", () => {
    const result = parseServerMessage('{"type":"audio_chunk","seq":1}');
    expect(result.ok).toBe(false);
    if (!result.ok) expect(result.error).toContain("unknown message type");
  });

  it("flags non-JSON and non-object payloads", () => {
    expect(parseServerMessage("not json{").ok).toBe(false);
    expect(parseServerMessage("[1,2]").ok).toBe(false);
    expect(parseServerMessage('"str"').ok).toBe(false);
  });

  it("round-trips through encodeSetConfig", () => {
    const text = encodeSetConfig({ threshold: 0.7, release_m: 2 });
    const obj = JSON.parse(text);
    expect(obj).toEqual({ type: "set_config", threshold: 0.7, release_m: 2 });
  });
});
