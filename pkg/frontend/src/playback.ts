/**
 * Recorded-telemetry playback: feeds a JSONL log of server messages
 * into a PanelStore, optionally paced. Lets the console render real
 * sessions for demos and UI tests with no service running.
 */

import { parseServerMessage } from "./protocol.js";
import type { PanelStore } from "./state.js";

export function loadLog(text: string): string[] {
  return text
    .split("\n")
    .map((line) => line.trim())
    .filter((line) => line.length > 0);
}

/** Apply every message immediately; returns how many lines were usable. */
export function playLog(store: PanelStore, lines: string[]): number {
  let applied = 0;
  for (const line of lines) {
    const msg = parseServerMessage(line);
    if (msg) {
      store.apply(msg);
      applied++;
    }
  }
  return applied;
}

/** Paced playback for demos: sim-time deltas scaled by `speed`. */
export async function playLogPaced(
  store: PanelStore,
  lines: string[],
  speed = 1,
  sleep: (ms: number) => Promise<void> = (ms) =>
    new Promise((resolve) => setTimeout(resolve, ms)),
): Promise<void> {
  let lastT: number | null = null;
  for (const line of lines) {
    const msg = parseServerMessage(line);
    if (!msg) continue;
    if (msg.type === "telemetry") {
      if (lastT !== null && msg.t > lastT) {
        await sleep(((msg.t - lastT) * 1000) / speed);
      }
      lastT = msg.t;
    }
    store.apply(msg);
  }
}
