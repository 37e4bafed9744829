/**
 * Wire protocol of the control service: one JSON document per
 * WebSocket text message. Field names here are the wire schema and
 * must not be renamed.
 */

export interface TelemetryFrame {
  type: "telemetry";
  t: number;
  axis_id: number;
  commanded_position: number;
  actual_position: number;
  velocity: number;
  move_complete: boolean;
  fault: string | null;
  homed: boolean;
}

export interface HelloMessage {
  type: "hello";
  axes: number[];
}

export interface AckMessage {
  type: "ack";
  id: string | number | null;
}

export interface ResultMessage {
  type: "result";
  id: string | number | null;
  axis_id?: number;
  estopped?: boolean;
  status?: {
    commanded_position: number;
    actual_position: number;
    velocity: number;
    move_complete: boolean;
    fault: string | null;
    homed: boolean;
  };
}

export interface ErrorMessage {
  type: "error";
  id: string | number | null;
  error: string;
}

export type ServerMessage =
  | TelemetryFrame
  | HelloMessage
  | AckMessage
  | ResultMessage
  | ErrorMessage;

export interface MoveConstraintsWire {
  v_max: number;
  a_max: number;
  d_max: number;
  j_max?: number | null;
}

export interface StraightMoveCommand {
  id: string;
  verb: "straight_move";
  axis_id: number;
  target: number;
  mode: "absolute" | "relative";
  profile?: "trapezoid" | "scurve";
  constraints?: MoveConstraintsWire;
}

export interface ExerciseCommand {
  id: string;
  verb: "exercise";
  axis_id: number;
  n_steps: number;
  cycle_duration: number;
  hold_duration: number;
  repetitions: number;
}

export interface HomeCommand {
  id: string;
  verb: "home";
  axis_id: number;
  search_velocity?: number;
  approach_velocity?: number;
}

export interface StopCommand {
  id: string;
  verb: "stop";
  axis_id: number;
  kind: "decelerating" | "kill";
}

export interface EstopCommand {
  id: string;
  verb: "estop_all";
}

export type Command =
  | StraightMoveCommand
  | ExerciseCommand
  | HomeCommand
  | StopCommand
  | EstopCommand;

/** Parse one wire message; returns null for anything malformed. */
export function parseServerMessage(raw: string): ServerMessage | null {
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof data !== "object" || data === null) return null;
  const msg = data as Record<string, unknown>;
  switch (msg.type) {
    case "telemetry":
      if (typeof msg.t !== "number" || typeof msg.axis_id !== "number") return null;
      return msg as unknown as TelemetryFrame;
    case "hello":
      if (!Array.isArray(msg.axes)) return null;
      return msg as unknown as HelloMessage;
    case "ack":
    case "result":
    case "error":
      return msg as unknown as ServerMessage;
    default:
      return null;
  }
}

export function encodeCommand(cmd: Command): string {
  return JSON.stringify(cmd);
}
