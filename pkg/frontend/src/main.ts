/**
 * DOM wiring for the operator panel. All state flows through
 * PanelStore; this module only reads form inputs, dispatches actions,
 * and paints whatever the store holds.
 */

import { ServiceClient } from "./client.js";
import { emergencyStop, stopAxis, submitExercise, submitMove } from "./panel.js";
import { loadLog, playLogPaced } from "./playback.js";
import { drawStrip } from "./plot.js";
import { PanelStore } from "./state.js";
import type { MoveForm, ExerciseForm } from "./validate.js";

const store = new PanelStore();

const params = new URLSearchParams(location.search);
const wsUrl =
  params.get("service") ?? `ws://${location.hostname || "127.0.0.1"}:8787/ws/v1`;

const client = new ServiceClient(wsUrl, {
  onMessage: (msg) => store.apply(msg),
  onState: (state) => store.setConnection(state),
});

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function num(id: string): number {
  return Number(el<HTMLInputElement>(id).value);
}

let pendingMoveId: string | null = null;

function readMoveForm(): MoveForm {
  const jerk = num("move-jerk");
  return {
    target: num("move-target"),
    mode: el<HTMLSelectElement>("move-mode").value as MoveForm["mode"],
    profile: el<HTMLSelectElement>("move-profile").value as MoveForm["profile"],
    v_max: num("move-vmax"),
    a_max: num("move-accel"),
    d_max: num("move-decel"),
    j_max: Number.isFinite(jerk) && jerk > 0 ? jerk : null,
  };
}

function readExerciseForm(): ExerciseForm {
  return {
    n_steps: num("ex-steps"),
    cycle_duration: num("ex-cycle"),
    hold_duration: num("ex-hold"),
    repetitions: num("ex-reps"),
  };
}

function showErrors(prefix: string, errors: Record<string, string>): void {
  for (const node of document.querySelectorAll(`.error[data-form="${prefix}"]`)) {
    node.textContent = "";
  }
  for (const [field, message] of Object.entries(errors)) {
    const slot = document.querySelector(
      `.error[data-form="${prefix}"][data-field="${field}"]`,
    );
    if (slot) slot.textContent = message;
    else el<HTMLElement>(`${prefix}-form-error`).textContent = message;
  }
}

function render(): void {
  const connected = store.connection === "connected";
  el<HTMLElement>("conn-banner").dataset.state = store.connection;
  el<HTMLElement>("conn-banner").textContent =
    store.connection === "connected"
      ? `connected to ${wsUrl}`
      : store.connection === "reconnecting"
        ? "reconnecting..."
        : "service unreachable";

  const selector = el<HTMLSelectElement>("axis-select");
  if (selector.options.length !== store.axes.length) {
    selector.innerHTML = "";
    for (const axis of store.axes) {
      const opt = document.createElement("option");
      opt.value = String(axis);
      opt.textContent = `axis ${axis}`;
      selector.appendChild(opt);
    }
  }
  selector.value = String(store.selectedAxis);

  for (const button of document.querySelectorAll<HTMLButtonElement>(".needs-conn")) {
    button.disabled = !connected;
  }

  const frame = store.live.get(store.selectedAxis);
  el<HTMLElement>("pos-readout").textContent = frame
    ? `${frame.actual_position} steps (commanded ${frame.commanded_position})`
    : "-";
  el<HTMLElement>("vel-readout").textContent = frame
    ? `${frame.velocity.toFixed(2)} steps/s`
    : "-";
  el<HTMLElement>("homed-readout").textContent = frame
    ? frame.homed
      ? "homed"
      : "not homed"
    : "-";

  const fault = frame?.fault ?? null;
  const badge = el<HTMLElement>("fault-badge");
  badge.textContent = fault ?? "no fault";
  badge.dataset.fault = fault ?? "";

  const done = el<HTMLElement>("move-indicator");
  if (pendingMoveId === null) {
    done.textContent = "";
  } else if (store.moveCompleted(pendingMoveId)) {
    done.textContent = "target reached - task completed";
    done.dataset.state = "done";
  } else {
    const cmd = store.pending.get(pendingMoveId);
    if (cmd?.done && cmd.ok === false) {
      done.textContent = `rejected: ${cmd.error}`;
      done.dataset.state = "error";
    } else {
      const depth = store.queueDepth(store.selectedAxis);
      done.textContent = depth > 1 ? `pending (queue depth ${depth})` : "pending...";
      done.dataset.state = "pending";
    }
  }

  const tiles = el<HTMLElement>("axis-tiles");
  if (tiles.children.length !== store.axes.length) {
    tiles.innerHTML = "";
    for (const axis of store.axes) {
      const tile = document.createElement("div");
      tile.className = "tile";
      tile.id = `tile-${axis}`;
      tiles.appendChild(tile);
    }
  }
  for (const axis of store.axes) {
    const tile = document.getElementById(`tile-${axis}`);
    const f = store.live.get(axis);
    if (tile) {
      tile.textContent = f
        ? `axis ${axis}: ${f.actual_position} steps ${f.fault ? `[${f.fault}]` : ""}`
        : `axis ${axis}: -`;
      tile.dataset.fault = f?.fault ?? "";
    }
  }

  const ring = store.buffers.get(store.selectedAxis);
  const samples = ring ? ring.series() : [];
  const posCanvas = el<HTMLCanvasElement>("plot-position");
  const velCanvas = el<HTMLCanvasElement>("plot-velocity");
  const posCtx = posCanvas.getContext("2d");
  const velCtx = velCanvas.getContext("2d");
  if (posCtx && velCtx) {
    drawStrip(posCtx, samples, (s) => s.position, posCanvas.width, posCanvas.height, "#3b82f6");
    drawStrip(velCtx, samples, (s) => s.velocity, velCanvas.width, velCanvas.height, "#f59e0b");
  }
}

function wire(): void {
  el<HTMLSelectElement>("axis-select").addEventListener("change", (ev) => {
    store.selectAxis(Number((ev.target as HTMLSelectElement).value));
  });
  el<HTMLButtonElement>("move-submit").addEventListener("click", () => {
    const outcome = submitMove(store, client, readMoveForm());
    showErrors("move", outcome.errors);
    if (outcome.id) pendingMoveId = outcome.id;
    render();
  });
  el<HTMLButtonElement>("ex-submit").addEventListener("click", () => {
    const outcome = submitExercise(store, client, readExerciseForm());
    showErrors("ex", outcome.errors);
    if (outcome.id) pendingMoveId = outcome.id;
    render();
  });
  el<HTMLButtonElement>("stop-btn").addEventListener("click", () => {
    stopAxis(store, client, "decelerating");
  });
  el<HTMLButtonElement>("estop-btn").addEventListener("click", () => {
    emergencyStop(store, client);
  });
  el<HTMLInputElement>("playback-file").addEventListener("change", async (ev) => {
    const input = ev.target as HTMLInputElement;
    const file = input.files?.[0];
    if (!file) return;
    client.close();
    store.setConnection("down");
    await playLogPaced(store, loadLog(await file.text()), 10);
  });
}

store.subscribe(render);
wire();
render();
client.connect();
