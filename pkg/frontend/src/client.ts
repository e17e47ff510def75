/**
 * Reconnecting WebSocket wrapper with injectable socket factory and timers,
 * so the reconnect behavior is testable without a browser or a network.
 */

import { ExponentialBackoff } from "./backoff.js";

// Handler parameter types stay loose so both the browser WebSocket and
// test fakes satisfy the shape.
export interface SocketLike {
  onopen: ((ev?: any) => void) | null;
  onclose: ((ev?: any) => void) | null;
  onerror: ((ev?: any) => void) | null;
  onmessage: ((ev: any) => void) | null;
  readyState: number;
  send(data: string): void;
  close(): void;
}

export type SocketFactory = (url: string) => SocketLike;

export interface ClientHandlers {
  onMessage: (text: string) => void;
  onStatus: (status: "connecting" | "open" | "closed") => void;
}

const OPEN = 1;

export class ReconnectingClient {
  private socket: SocketLike | null = null;
  private stopped = false;
  private reconnectTimer: ReturnType<typeof setTimeout> | null = null;

  constructor(
    private readonly url: string,
    private readonly handlers: ClientHandlers,
    private readonly factory: SocketFactory,
    private readonly backoff = new ExponentialBackoff(),
    private readonly setTimer: typeof setTimeout = setTimeout,
  ) {}

  connect(): void {
    if (this.stopped) return;
    this.handlers.onStatus("connecting");
    let socket: SocketLike;
    try {
      socket = this.factory(this.url);
    } catch {
      this.scheduleReconnect();
      return;
    }
    this.socket = socket;
    socket.onopen = () => {
      this.backoff.reset();
      this.handlers.onStatus("open");
    };
    socket.onmessage = (ev) => {
      if (typeof ev.data === "string") this.handlers.onMessage(ev.data);
    };
    socket.onerror = () => {
      // close always follows; nothing to do here
    };
    socket.onclose = () => {
      this.socket = null;
      this.handlers.onStatus("closed");
      this.scheduleReconnect();
    };
  }

  /** Returns false when there is no open connection to send on. */
  send(text: string): boolean {
    if (this.socket === null || this.socket.readyState !== OPEN) return false;
    try {
      this.socket.send(text);
      return true;
    } catch {
      return false;
    }
  }

  close(): void {
    this.stopped = true;
    if (this.reconnectTimer !== null) clearTimeout(this.reconnectTimer);
    this.socket?.close();
    this.socket = null;
  }

  private scheduleReconnect(): void {
    if (this.stopped || this.reconnectTimer !== null) return;
    const delay = this.backoff.nextDelayMs();
    this.reconnectTimer = this.setTimer(() => {
      this.reconnectTimer = null;
      this.connect();
    }, delay);
  }
}
