/**
 * Panel state: a single store fed exclusively by server messages and
 * connection events. Every number the console displays comes from a
 * TelemetryFrame or an echoed command reply held in this store; the
 * store never invents values.
 */

import { TelemetryRing } from "./ringbuffer.js";
import type { ServerMessage, TelemetryFrame } from "./protocol.js";

export type Connection = "connected" | "reconnecting" | "down";

export interface PendingCommand {
  id: string;
  verb: string;
  axisId: number | null;
  done: boolean;
  ok: boolean | null;
  error: string | null;
}

export type Listener = () => void;

export class PanelStore {
  connection: Connection = "down";
  axes: number[] = [];
  selectedAxis = 0;
  live = new Map<number, TelemetryFrame>();
  buffers = new Map<number, TelemetryRing>();
  pending = new Map<string, PendingCommand>();
  lastError: string | null = null;
  estopAt: number | null = null;

  private listeners = new Set<Listener>();

  constructor(readonly plotSpanSeconds: number = 30) {}

  subscribe(fn: Listener): () => void {
    this.listeners.add(fn);
    return () => this.listeners.delete(fn);
  }

  private notify(): void {
    for (const fn of this.listeners) fn();
  }

  setConnection(state: Connection): void {
    this.connection = state;
    this.notify();
  }

  get motionAllowed(): boolean {
    // Invariant: motion can only be issued while connected.
    return this.connection === "connected";
  }

  selectAxis(axis: number): void {
    if (this.axes.includes(axis)) {
      this.selectedAxis = axis;
      this.notify();
    }
  }

  /** Pending motion commands for an axis (the server queues them FIFO). */
  queueDepth(axis: number): number {
    let n = 0;
    for (const cmd of this.pending.values()) {
      if (!cmd.done && cmd.axisId === axis) n++;
    }
    return n;
  }

  track(id: string, verb: string, axisId: number | null): void {
    this.pending.set(id, { id, verb, axisId, done: false, ok: null, error: null });
    this.notify();
  }

  apply(msg: ServerMessage): void {
    switch (msg.type) {
      case "hello": {
        this.axes = msg.axes.slice();
        if (!this.axes.includes(this.selectedAxis) && this.axes.length) {
          this.selectedAxis = this.axes[0];
        }
        break;
      }
      case "telemetry": {
        this.live.set(msg.axis_id, msg);
        let ring = this.buffers.get(msg.axis_id);
        if (!ring) {
          ring = new TelemetryRing(this.plotSpanSeconds);
          this.buffers.set(msg.axis_id, ring);
        }
        ring.push(msg.t, msg.actual_position, msg.velocity);
        break;
      }
      case "ack": {
        break; // queued; nothing to show yet beyond the pending entry
      }
      case "result": {
        const key = msg.id === null ? null : String(msg.id);
        if (key !== null && this.pending.has(key)) {
          const cmd = this.pending.get(key)!;
          cmd.done = true;
          cmd.ok = true;
          if (msg.estopped) this.estopAt = Date.now();
        }
        break;
      }
      case "error": {
        const key = msg.id === null ? null : String(msg.id);
        if (key !== null && this.pending.has(key)) {
          const cmd = this.pending.get(key)!;
          cmd.done = true;
          cmd.ok = false;
          cmd.error = msg.error;
        } else {
          this.lastError = msg.error;
        }
        break;
      }
    }
    this.notify();
  }

  /** True once the given command has a result and its axis reports done. */
  moveCompleted(id: string): boolean {
    const cmd = this.pending.get(id);
    if (!cmd || !cmd.done || cmd.ok !== true || cmd.axisId === null) return false;
    const frame = this.live.get(cmd.axisId);
    return frame !== undefined && frame.move_complete;
  }
}
