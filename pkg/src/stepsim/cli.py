"""Command-line entry points.

Three subcommands:

* ``run <scenario>`` executes a scenario file, writes the trace CSV and
  prints a one-line summary (exit 0 on fault-free completion, 2 when
  the run faulted, 1 on config/validation problems);
* ``profile <kind> ...`` emits a profile CSV without touching the plant;
* ``serve`` hosts the axes behind the live control service.

Angles print in radians with the degree conversion confined to the
summary line; summary angles are displacements from the settled start
of the run, which is what the shaft actually swept.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

from .axis import AxisConfig, AxisController, ExerciseSpec, SwitchConfig
from .drive import DriveConfig, step_clock
from .errors import StepSimError
from .files import (
    data_dir,
    homing_from_params,
    load_axes_config,
    load_motor_spec,
    load_scenario,
    write_profile_csv,
    write_trace_csv,
)
from .plant import params_from_spec
from .profiles import MoveConstraints, plan_contour, plan_scurve, plan_trapezoid
from .sim import SimConfig, simulate

USAGE_EXIT = 64


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(USAGE_EXIT, f"{self.prog}: error: {message}\n")


def build_parser() -> _Parser:
    parser = _Parser(prog="stepsim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command")

    run_p = sub.add_parser("run", help="execute a scenario file")
    run_p.add_argument("scenario", help="scenario file (searched in $STEPSIM_DATA_DIR)")
    run_p.add_argument("--out", default=".", help="output directory for CSV files")

    prof_p = sub.add_parser("profile", help="emit a motion profile CSV")
    prof_p.add_argument("kind", choices=["trapezoid", "scurve", "contour"])
    prof_p.add_argument("--distance", type=int, default=0, help="steps, signed")
    prof_p.add_argument("--vmax", type=float, default=40.0)
    prof_p.add_argument("--accel", type=float, default=80.0)
    prof_p.add_argument("--decel", type=float, default=80.0)
    prof_p.add_argument("--jerk", type=float, default=None)
    prof_p.add_argument(
        "--waypoints",
        default=None,
        help="contour waypoints as t:pos,t:pos,... (seconds:steps)",
    )
    prof_p.add_argument("--out", default=None, help="output CSV path")
    prof_p.add_argument("--sample-dt", type=float, default=0.01)

    serve_p = sub.add_parser("serve", help="host simulated axes over WebSocket")
    serve_p.add_argument("--port", type=int, default=8787)
    serve_p.add_argument("--host", default="127.0.0.1")
    serve_p.add_argument("--config", default=None, help="axis configuration file")
    serve_p.add_argument(
        "--time-factor",
        type=float,
        default=1.0,
        help="sim seconds per wall second; 0 runs commands to completion unpaced",
    )
    return parser


def parse_args(argv: list[str]) -> argparse.Namespace:
    parser = build_parser()
    if not argv:
        parser.print_usage(sys.stderr)
        parser.exit(USAGE_EXIT)
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        parser.exit(USAGE_EXIT)
    return args


def _resolve_scenario(name: str) -> Path:
    direct = Path(name)
    if direct.exists():
        return direct
    candidate = data_dir() / name
    if candidate.exists():
        return candidate
    raise StepSimError(f"scenario file not found: {name} (also looked in {data_dir()})")


def _default_axis() -> AxisConfig:
    return AxisConfig(
        axis_id=0,
        default_constraints=MoveConstraints(v_max=40.0, a_max=80.0, d_max=80.0, j_max=800.0),
        fwd_limit=SwitchConfig(position=3.0),
        rev_limit=SwitchConfig(position=-3.0),
        home=SwitchConfig(position=0.35, width=0.08),
    )


def run_scenario(path: str | Path, out_dir: str | Path = ".") -> int:
    """Execute one scenario; returns the process exit code."""
    scenario = load_scenario(_resolve_scenario(str(path)))
    spec = load_motor_spec(scenario.motor_path)
    params = params_from_spec(
        spec,
        B=scenario.damping,
        load_inertia=scenario.load_inertia,
        load_torque=scenario.load_torque,
    )
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    trace_path = out / f"{scenario.name}_trace.csv"
    ap = scenario.action_params

    if scenario.action == "raw_schedule":
        rate = float(ap.get("rate", 10.0))
        n_steps = int(ap.get("n_steps", 0))
        direction = 1 if ap.get("direction", "forward") == "forward" else -1
        duration = float(ap.get("duration", n_steps / rate + 1.0))
        schedule = step_clock(
            rate, n_steps, direction=direction, max_step_rate=spec.max_step_rate
        )
        cfg = SimConfig(dt=scenario.dt, duration=duration, record_stride=scenario.record_stride)
        trace = simulate(params, DriveConfig(), schedule, cfg)
        theta0 = trace.frames[0].theta if trace.frames else 0.0
        final_theta = trace.final_state.theta
        steps_issued = n_steps
        fault = None
    else:
        if scenario.axes_path is not None:
            entries = load_axes_config(scenario.axes_path)
            by_id = {e.config.axis_id: e.config for e in entries}
            if scenario.axis_id not in by_id:
                raise StepSimError(
                    f"axis {scenario.axis_id} not defined in {scenario.axes_path}"
                )
            axis_cfg = by_id[scenario.axis_id]
        else:
            axis_cfg = _default_axis()
        controller = AxisController(
            axis_cfg,
            spec,
            params=params,
            dt=scenario.dt,
            record_stride=scenario.record_stride,
        )
        theta0 = controller.run.state.theta
        if scenario.action == "straight_move":
            constraints = None
            if "v_max" in ap:
                constraints = MoveConstraints(
                    v_max=float(ap["v_max"]),
                    a_max=float(ap.get("a_max", ap["v_max"])),
                    d_max=float(ap.get("d_max", ap.get("a_max", ap["v_max"]))),
                    j_max=float(ap["j_max"]) if "j_max" in ap else None,
                )
            status, trace = controller.execute_straight_move(
                target=int(ap.get("target", 0)),
                mode=ap.get("mode", "relative"),
                constraints=constraints,
                profile_kind=ap.get("profile", "trapezoid"),
            )
        elif scenario.action == "exercise":
            exercise = ExerciseSpec(
                n_steps=int(ap.get("n_steps", 20)),
                cycle_duration=float(ap.get("cycle_duration", 5.0)),
                hold_duration=float(ap.get("hold_duration", 1.0)),
                repetitions=int(ap.get("repetitions", 1)),
            )
            status, trace = controller.run_exercise_cycle(exercise)
        else:  # homing
            mark = len(controller.run.trace.frames)
            status = controller.find_reference(homing_from_params(ap))
            trace = controller._trace_since(mark)
        final_theta = controller.run.state.theta
        steps_issued = controller.run.trigger_count
        fault = status.fault

    write_trace_csv(trace, trace_path)
    moved = final_theta - theta0
    print(
        f"{scenario.name}: final theta {moved:.6f} rad ({math.degrees(moved):.4f} deg) "
        f"from start; steps issued {steps_issued}; "
        f"fault {fault.value if fault else 'none'}; trace {trace_path}"
    )
    return 0 if fault is None else 2


def run_profile_command(args: argparse.Namespace) -> int:
    if args.kind == "contour":
        if not args.waypoints:
            raise StepSimError("contour profiles need --waypoints t:pos,t:pos,...")
        pts = []
        for chunk in args.waypoints.split(","):
            t_text, _, p_text = chunk.partition(":")
            pts.append((float(t_text), float(p_text)))
        profile = plan_contour(pts)
    else:
        constraints = MoveConstraints(
            v_max=args.vmax, a_max=args.accel, d_max=args.decel, j_max=args.jerk
        )
        planner = plan_trapezoid if args.kind == "trapezoid" else plan_scurve
        profile = planner(args.distance, constraints)
    out = args.out or f"{args.kind}_profile.csv"
    write_profile_csv(profile, out, sample_dt=args.sample_dt)
    durations = ",".join(format(s.duration, ".6g") for s in profile.segments)
    print(
        f"{args.kind}: {profile.total_steps} steps in {profile.total_time:.6g} s "
        f"(segment durations {durations or 'none'}); profile {out}"
    )
    return 0


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    try:
        args = parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else USAGE_EXIT
    try:
        if args.command == "run":
            return run_scenario(args.scenario, args.out)
        if args.command == "profile":
            return run_profile_command(args)
        if args.command == "serve":
            from .service import serve

            serve(
                host=args.host,
                port=args.port,
                config=args.config,
                time_factor=args.time_factor,
            )
            return 0
    except StepSimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return USAGE_EXIT


if __name__ == "__main__":
    sys.exit(main())
