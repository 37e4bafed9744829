/**
 * Panel actions: the single path between the form state and the wire.
 * Validation mirrors the server rules; the send itself goes through
 * ServiceClient.send, which refuses when disconnected. All state shown
 * by the UI comes back through the store.
 */

import type { ServiceClient } from "./client.js";
import type { PanelStore } from "./state.js";
import { validateExercise, validateMove } from "./validate.js";
import type { ExerciseForm, FieldErrors, MoveForm } from "./validate.js";

export interface SubmitOutcome {
  id: string | null;
  errors: FieldErrors;
}

export function submitMove(
  store: PanelStore,
  client: ServiceClient,
  form: MoveForm,
): SubmitOutcome {
  if (!store.motionAllowed) {
    return { id: null, errors: { _connection: "not connected" } };
  }
  const errors = validateMove(form);
  if (Object.keys(errors).length > 0) {
    return { id: null, errors };
  }
  const id = client.nextId("mv");
  client.send({
    id,
    verb: "straight_move",
    axis_id: store.selectedAxis,
    target: form.target,
    mode: form.mode,
    profile: form.profile,
    constraints: {
      v_max: form.v_max,
      a_max: form.a_max,
      d_max: form.d_max,
      j_max: form.j_max,
    },
  });
  store.track(id, "straight_move", store.selectedAxis);
  return { id, errors: {} };
}

export function submitExercise(
  store: PanelStore,
  client: ServiceClient,
  form: ExerciseForm,
): SubmitOutcome {
  if (!store.motionAllowed) {
    return { id: null, errors: { _connection: "not connected" } };
  }
  const errors = validateExercise(form);
  if (Object.keys(errors).length > 0) {
    return { id: null, errors };
  }
  const id = client.nextId("ex");
  client.send({
    id,
    verb: "exercise",
    axis_id: store.selectedAxis,
    n_steps: form.n_steps,
    cycle_duration: form.cycle_duration,
    hold_duration: form.hold_duration,
    repetitions: form.repetitions,
  });
  store.track(id, "exercise", store.selectedAxis);
  return { id, errors: {} };
}

/** Big red control: kill everything. Idempotent on the server side. */
export function emergencyStop(store: PanelStore, client: ServiceClient): string | null {
  if (!store.motionAllowed) return null;
  const id = client.nextId("estop");
  client.send({ id, verb: "estop_all" });
  store.track(id, "estop_all", null);
  return id;
}

export function stopAxis(
  store: PanelStore,
  client: ServiceClient,
  kind: "decelerating" | "kill",
): string | null {
  if (!store.motionAllowed) return null;
  const id = client.nextId("stop");
  client.send({ id, verb: "stop", axis_id: store.selectedAxis, kind });
  store.track(id, "stop", store.selectedAxis);
  return id;
}
