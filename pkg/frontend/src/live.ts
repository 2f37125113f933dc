/**
 * Live refresh loop. Runs one tick at a time (ticks never overlap), backs
 * off exponentially while the server is unreachable, and flips a stale flag
 * so the UI can say the data on screen is old. First success after an
 * outage clears the flag.
 */

export class Poller {
  private timer: ReturnType<typeof setTimeout> | null = null;
  private running = false;
  private ticking = false;
  private failures = 0;

  constructor(
    private tick: () => Promise<void>,
    private periodMs: number,
    private onStale?: (stale: boolean) => void,
    private maxBackoffMs = 15_000,
  ) {}

  start(): void {
    if (this.running) return;
    this.running = true;
    this.schedule(this.periodMs);
  }

  stop(): void {
    this.running = false;
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
  }

  get stale(): boolean {
    return this.failures > 0;
  }

  private delay(): number {
    if (this.failures === 0) return this.periodMs;
    return Math.min(this.periodMs * 2 ** this.failures, this.maxBackoffMs);
  }

  private schedule(ms: number): void {
    if (this.timer !== null) clearTimeout(this.timer); // single timer slot
    this.timer = setTimeout(() => void this.run(), ms);
  }

  private async run(): Promise<void> {
    if (this.ticking) {
      // previous tick still in flight (stop/start race), keep the loop alive
      if (this.running) this.schedule(this.periodMs);
      return;
    }
    this.ticking = true;
    try {
      await this.tick();
      if (this.failures > 0) {
        this.failures = 0;
        this.onStale?.(false);
      }
    } catch {
      this.failures += 1;
      if (this.failures === 1) this.onStale?.(true);
    } finally {
      this.ticking = false;
      if (this.running) this.schedule(this.delay());
    }
  }
}
