import { describe, expect, it } from "vitest";

import { validateExercise, validateMove } from "../src/validate.js";
import type { ExerciseForm, MoveForm } from "../src/validate.js";

const goodMove: MoveForm = {
  target: 20,
  mode: "relative",
  profile: "trapezoid",
  v_max: 40,
  a_max: 80,
  d_max: 80,
  j_max: 800,
};

const goodExercise: ExerciseForm = {
  n_steps: 20,
  cycle_duration: 5,
  hold_duration: 1,
  repetitions: 3,
};

describe("validateMove", () => {
  it("accepts a sane form", () => {
    expect(validateMove(goodMove)).toEqual({});
  });

  it("rejects fractional targets", () => {
    expect(validateMove({ ...goodMove, target: 1.5 })).toHaveProperty("target");
  });

  it("rejects non-positive kinematic limits", () => {
    expect(validateMove({ ...goodMove, v_max: 0 })).toHaveProperty("v_max");
    expect(validateMove({ ...goodMove, a_max: -3 })).toHaveProperty("a_max");
  });

  it("requires jerk for s-curve moves only", () => {
    expect(validateMove({ ...goodMove, profile: "scurve", j_max: null })).toHaveProperty(
      "j_max",
    );
    expect(validateMove({ ...goodMove, profile: "trapezoid", j_max: null })).toEqual({});
  });
});

describe("validateExercise", () => {
  it("accepts a sane form", () => {
    expect(validateExercise(goodExercise)).toEqual({});
  });

  it("mirrors the server rule hold < cycle", () => {
    expect(
      validateExercise({ ...goodExercise, hold_duration: 5 }),
    ).toHaveProperty("hold_duration");
    expect(
      validateExercise({ ...goodExercise, hold_duration: 6 }),
    ).toHaveProperty("hold_duration");
  });

  it("requires at least one step and one repetition", () => {
    expect(validateExercise({ ...goodExercise, n_steps: 0 })).toHaveProperty("n_steps");
    expect(validateExercise({ ...goodExercise, repetitions: 0 })).toHaveProperty(
      "repetitions",
    );
  });
});
