/**
 * Single-in-flight control channel.
 *
 * The UI never sends a second set_config while one is unacked; rapid
 * slider movement coalesces into one pending "latest wins" payload that
 * goes out when the ack (or a timeout) arrives.
 */

import { encodeSetConfig } from "./protocol.js";

export interface ControlOutcome {
  ok: boolean;
  reason: string | null;
  changes: Record<string, number>;
}

type SendFn = (text: string) => boolean;
type OutcomeFn = (outcome: ControlOutcome) => void;

export class ControlChannel {
  private inflight: Record<string, number> | null = null;
  private pending: Record<string, number> | null = null;
  private timer: ReturnType<typeof setTimeout> | null = null;

  constructor(
    private readonly send: SendFn,
    private readonly onOutcome: OutcomeFn,
    private readonly ackTimeoutMs = 5000,
    private readonly setTimer: typeof setTimeout = setTimeout,
    private readonly clearTimer: typeof clearTimeout = clearTimeout,
  ) {}

  get busy(): boolean {
    return this.inflight !== null;
  }

  request(changes: Record<string, number>): void {
    if (this.inflight !== null) {
      this.pending = { ...(this.pending ?? {}), ...changes };
      return;
    }
    this.dispatch(changes);
  }

  handleAck(ok: boolean, reason: string | null): void {
    if (this.inflight === null) return; // stray ack
    const changes = this.inflight;
    this.inflight = null;
    if (this.timer !== null) {
      this.clearTimer(this.timer);
      this.timer = null;
    }
    this.onOutcome({ ok, reason, changes });
    this.flushPending();
  }

  /** Connection dropped: the in-flight command will never be acked. */
  handleDisconnect(): void {
    if (this.timer !== null) {
      this.clearTimer(this.timer);
      this.timer = null;
    }
    if (this.inflight !== null) {
      const changes = this.inflight;
      this.inflight = null;
      this.onOutcome({ ok: false, reason: "connection lost", changes });
    }
    this.pending = null;
  }

  private dispatch(changes: Record<string, number>): void {
    if (!this.send(encodeSetConfig(changes))) {
      this.onOutcome({ ok: false, reason: "not connected", changes });
      return;
    }
    this.inflight = changes;
    this.timer = this.setTimer(() => {
      this.timer = null;
      if (this.inflight === null) return;
      const lost = this.inflight;
      this.inflight = null;
      this.onOutcome({ ok: false, reason: "ack timeout", changes: lost });
      this.flushPending();
    }, this.ackTimeoutMs);
  }

  private flushPending(): void {
    if (this.pending !== null && this.inflight === null) {
      const next = this.pending;
      this.pending = null;
      this.dispatch(next);
    }
  }
}
