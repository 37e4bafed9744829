/**
 * Client-side validation mirroring the server's rules. The server stays
 * authoritative; this only blocks requests that are certain to be
 * rejected, so the operator gets inline feedback instead of a round
 * trip.
 */

export interface MoveForm {
  target: number;
  mode: "absolute" | "relative";
  profile: "trapezoid" | "scurve";
  v_max: number;
  a_max: number;
  d_max: number;
  j_max: number | null;
}

export interface ExerciseForm {
  n_steps: number;
  cycle_duration: number;
  hold_duration: number;
  repetitions: number;
}

export type FieldErrors = Record<string, string>;

export function validateMove(form: MoveForm): FieldErrors {
  const errors: FieldErrors = {};
  if (!Number.isFinite(form.target) || !Number.isInteger(form.target)) {
    errors.target = "target must be a whole number of steps";
  }
  for (const key of ["v_max", "a_max", "d_max"] as const) {
    if (!(form[key] > 0)) errors[key] = `${key} must be > 0`;
  }
  if (form.profile === "scurve" && !(form.j_max !== null && form.j_max > 0)) {
    errors.j_max = "S-curve moves need a positive jerk limit";
  }
  return errors;
}

export function validateExercise(form: ExerciseForm): FieldErrors {
  const errors: FieldErrors = {};
  if (!Number.isInteger(form.n_steps) || form.n_steps < 1) {
    errors.n_steps = "need at least one step";
  }
  if (!(form.cycle_duration > 0)) {
    errors.cycle_duration = "cycle duration must be > 0";
  }
  if (!(form.hold_duration >= 0)) {
    errors.hold_duration = "hold duration must be >= 0";
  } else if (form.hold_duration >= form.cycle_duration) {
    errors.hold_duration = "hold must be shorter than the cycle";
  }
  if (!Number.isInteger(form.repetitions) || form.repetitions < 1) {
    errors.repetitions = "need at least one repetition";
  }
  return errors;
}
