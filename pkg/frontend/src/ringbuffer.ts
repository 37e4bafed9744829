/**
 * Bounded time-series buffer for the live plots: keeps the most recent
 * span of (t, position, velocity) samples per axis. Pushes with
 * non-increasing timestamps are ignored so a reconnect replaying the
 * tail of the stream cannot duplicate points.
 */

export interface Sample {
  t: number;
  position: number;
  velocity: number;
}

export class TelemetryRing {
  private samples: Sample[] = [];

  constructor(
    readonly spanSeconds: number = 30,
    readonly maxSamples: number = 4096,
  ) {}

  get length(): number {
    return this.samples.length;
  }

  lastTime(): number | null {
    return this.samples.length ? this.samples[this.samples.length - 1].t : null;
  }

  push(t: number, position: number, velocity: number): boolean {
    const last = this.lastTime();
    if (last !== null && t <= last) return false;
    this.samples.push({ t, position, velocity });
    const cutoff = t - this.spanSeconds;
    let drop = 0;
    while (
      drop < this.samples.length - 1 &&
      (this.samples[drop].t < cutoff ||
        this.samples.length - drop > this.maxSamples)
    ) {
      drop++;
    }
    if (drop > 0) this.samples = this.samples.slice(drop);
    return true;
  }

  /** Snapshot of the retained samples, oldest first. */
  series(): readonly Sample[] {
    return this.samples;
  }

  clear(): void {
    this.samples = [];
  }
}
