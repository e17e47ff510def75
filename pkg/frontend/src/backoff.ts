/** Exponential backoff for reconnect attempts: base * 2^n, capped. */
export class ExponentialBackoff {
  private attempt = 0;

  constructor(
    readonly baseMs = 500,
    readonly maxMs = 30_000,
  ) {}

  nextDelayMs(): number {
    const delay = Math.min(this.maxMs, this.baseMs * 2 ** this.attempt);
    this.attempt += 1;
    return delay;
  }

  reset(): void {
    this.attempt = 0;
  }

  get attempts(): number {
    return this.attempt;
  }
}
