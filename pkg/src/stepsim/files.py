"""Config-file parsing and CSV export.

Three text formats live here:

* motor parameter files: flat ``name = value`` lines, SI units;
* axis config files: INI-style ``[axis.N]`` sections whose keys mirror
  the AxisConfig field names (nested records use dotted keys such as
  ``home.position``);
* scenario files: ``[scenario]`` / ``[action]`` / ``[sim]`` sections
  binding a motor, an axis and one action into a reproducible run.

CSV exports use 9-significant-digit decimal formatting with fixed
column orders so repeated runs of the same scenario are byte-identical.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, fields
from pathlib import Path

from .axis import AxisConfig, HomingConfig, SwitchConfig
from .drive import StepSchedule
from .errors import ConfigError
from .plant import MotorSpec
from .profiles import MotionProfile, MoveConstraints
from .sim import Trace

PACKAGED_DATA_DIR = Path(__file__).parent / "data"


def data_dir() -> Path:
    """Scenario directory: $STEPSIM_DATA_DIR when set, else the packaged one."""
    override = os.environ.get("STEPSIM_DATA_DIR")
    if override:
        return Path(override)
    return PACKAGED_DATA_DIR


def _fmt(x: float) -> str:
    return format(x, ".9g")


# ----------------------------------------------------------------------
# motor parameter files

_MOTOR_FIELDS = {f.name: f for f in fields(MotorSpec)}


def load_motor_spec(path: str | Path) -> MotorSpec:
    """Parse a flat ``name = value`` motor parameter file."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"motor parameter file not found: {path}")
    values: dict[str, float] = {}
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'name = value', got '{raw}'")
        name, _, text = line.partition("=")
        name = name.strip()
        if name not in _MOTOR_FIELDS:
            raise ConfigError(f"{path}:{lineno}: unknown motor field '{name}'")
        try:
            values[name] = float(text.strip())
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: bad number '{text.strip()}'") from exc
    missing = [
        n for n in _MOTOR_FIELDS
        if n not in values and n != "angular_accuracy_pct"
    ]
    if missing:
        raise ConfigError(f"{path}: missing motor fields: {', '.join(sorted(missing))}")
    values["steps_per_rev"] = int(values["steps_per_rev"])
    return MotorSpec(**values)


# ----------------------------------------------------------------------
# axis config files

def _read_ini(path: Path) -> configparser.ConfigParser:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        parser.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return parser


def _get_bool(section, key: str, default: bool) -> bool:
    text = section.get(key)
    if text is None:
        return default
    if text.lower() in ("true", "yes", "1", "on"):
        return True
    if text.lower() in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"bad boolean '{text}' for {key}")


def _switch_from(section, prefix: str, default_pos: float) -> SwitchConfig:
    return SwitchConfig(
        position=float(section.get(f"{prefix}.position", default_pos)),
        width=float(section.get(f"{prefix}.width", 0.0)),
        active_state=section.get(f"{prefix}.active_state", "active_high"),
        enabled=_get_bool(section, f"{prefix}.enabled", True),
    )


def _constraints_from(section) -> MoveConstraints:
    jerk = section.get("default_constraints.j_max")
    return MoveConstraints(
        v_max=float(section.get("default_constraints.v_max", 40.0)),
        a_max=float(section.get("default_constraints.a_max", 80.0)),
        d_max=float(section.get("default_constraints.d_max", 80.0)),
        j_max=float(jerk) if jerk is not None else None,
    )


@dataclass(frozen=True)
class AxisFileEntry:
    """One axis section plus its motor file reference."""

    config: AxisConfig
    motor_file: str


def load_axes_config(path: str | Path) -> list[AxisFileEntry]:
    """Parse an ``[axis.N]`` sectioned axis configuration file."""
    path = Path(path)
    parser = _read_ini(path)
    entries: list[AxisFileEntry] = []
    for name in parser.sections():
        if not name.startswith("axis."):
            continue
        try:
            axis_id = int(name.split(".", 1)[1])
        except ValueError as exc:
            raise ConfigError(f"{path}: bad axis section '[{name}]'") from exc
        sec = parser[name]
        try:
            cfg = AxisConfig(
                axis_id=axis_id,
                axis_type=sec.get("axis_type", "stepper"),
                enabled=_get_bool(sec, "enabled", True),
                steps_per_rev=int(sec.get("steps_per_rev", 200)),
                microstep_resolution=int(sec.get("microstep_resolution", 1)),
                loop_mode=sec.get("loop_mode", "open"),
                step_polarity=sec.get("step_polarity", "active_high"),
                output_mode=sec.get("output_mode", "step_direction"),
                default_constraints=_constraints_from(sec),
                fwd_limit=_switch_from(sec, "fwd_limit", 3.0),
                rev_limit=_switch_from(sec, "rev_limit", -3.0),
                home=_switch_from(sec, "home", 0.35),
                following_error_limit=int(sec.get("following_error_limit", 4)),
            )
        except (ValueError, ConfigError) as exc:
            raise ConfigError(f"{path} [{name}]: {exc}") from exc
        entries.append(AxisFileEntry(config=cfg, motor_file=sec.get("motor", "table1.params")))
    if not entries:
        raise ConfigError(f"{path}: no [axis.N] sections found")
    entries.sort(key=lambda e: e.config.axis_id)
    return entries


# ----------------------------------------------------------------------
# scenario files

@dataclass(frozen=True)
class Scenario:
    """A scripted run: motor + axis + one action + integration settings."""

    name: str
    motor_path: Path
    axes_path: Path | None
    axis_id: int
    action: str                     # straight_move | exercise | homing | raw_schedule
    action_params: dict[str, str]
    dt: float
    record_stride: int
    damping: float                  # viscous B the run uses
    load_torque: float
    load_inertia: float


def load_scenario(path: str | Path) -> Scenario:
    """Parse a scenario file, resolving referenced files next to it."""
    path = Path(path)
    parser = _read_ini(path)
    if "scenario" not in parser:
        raise ConfigError(f"{path}: missing [scenario] section")
    if "action" not in parser:
        raise ConfigError(f"{path}: missing [action] section")
    sc = parser["scenario"]
    action = parser["action"]
    sim = parser["sim"] if "sim" in parser else {}
    base = path.parent
    motor_file = sc.get("motor")
    if motor_file is None:
        raise ConfigError(f"{path}: [scenario] needs a 'motor' file reference")
    motor_path = (base / motor_file).resolve()
    axes_file = sc.get("axes")
    axes_path = (base / axes_file).resolve() if axes_file else None
    act_type = action.get("type")
    if act_type not in ("straight_move", "exercise", "homing", "raw_schedule"):
        raise ConfigError(f"{path}: unknown action type '{act_type}'")
    params = {k: v for k, v in action.items() if k != "type"}
    try:
        return Scenario(
            name=sc.get("name", path.stem),
            motor_path=motor_path,
            axes_path=axes_path,
            axis_id=int(sc.get("axis_id", 0)),
            action=act_type,
            action_params=params,
            dt=float(sim.get("dt", 1e-5)),
            record_stride=int(sim.get("record_stride", 20)),
            damping=float(sc.get("damping", 1e-3)),
            load_torque=float(sc.get("load_torque", 0.0)),
            load_inertia=float(sc.get("load_inertia", 0.0)),
        )
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def homing_from_params(params: dict[str, str]) -> HomingConfig:
    kwargs = {}
    for key in (
        "initial_search_direction",
        "final_approach_direction",
        "stop_edge",
    ):
        if key in params:
            kwargs[key] = params[key]
    for key in ("search_velocity", "approach_velocity"):
        if key in params:
            kwargs[key] = float(params[key])
    for key in ("offset_steps", "reset_position"):
        if key in params:
            kwargs[key] = int(params[key])
    return HomingConfig(**kwargs)


# ----------------------------------------------------------------------
# CSV export

TRACE_HEADER = "t,theta_rad,omega_rad_s,i_a,i_b,v_a,v_b,torque_nm,ena,rev,home,fwd_lim,rev_lim"


def write_trace_csv(trace: Trace, path: str | Path) -> None:
    """One row per recorded frame, 9-significant-digit decimal text."""
    path = Path(path)
    rows = [TRACE_HEADER]
    for f in trace.frames:
        rows.append(
            ",".join(
                (
                    _fmt(f.t),
                    _fmt(f.theta),
                    _fmt(f.omega),
                    _fmt(f.i_a),
                    _fmt(f.i_b),
                    _fmt(f.v_a),
                    _fmt(f.v_b),
                    _fmt(f.torque),
                    _fmt(f.ena),
                    _fmt(f.rev),
                    str(int(f.home)),
                    str(int(f.fwd_lim)),
                    str(int(f.rev_lim)),
                )
            )
        )
    try:
        path.write_text("\n".join(rows) + "\n")
    except OSError as exc:
        raise ConfigError(f"cannot write trace CSV {path}: {exc}") from exc


PROFILE_HEADER = "t,pos_steps,vel_steps_s,acc_steps_s2"


def write_profile_csv(profile: MotionProfile, path: str | Path, sample_dt: float = 0.01) -> None:
    """Sampled profile kinematics for plotting and golden tests."""
    path = Path(path)
    rows = [PROFILE_HEADER]
    n = int(round(profile.total_time / sample_dt))
    for i in range(n + 1):
        t = min(i * sample_dt, profile.total_time)
        p, v, a = profile.sample(t)
        rows.append(",".join((_fmt(t), _fmt(p), _fmt(v), _fmt(a))))
    try:
        path.write_text("\n".join(rows) + "\n")
    except OSError as exc:
        raise ConfigError(f"cannot write profile CSV {path}: {exc}") from exc


SCHEDULE_HEADER = "t,ena,rev"


def write_schedule_csv(schedule: StepSchedule, path: str | Path) -> None:
    """Edge-event listing: one row per ENA transition."""
    path = Path(path)
    rows = [SCHEDULE_HEADER]
    for pulse in schedule.pulses:
        rows.append(",".join((_fmt(pulse.t), "1", _fmt(pulse.rev_level))))
        rows.append(",".join((_fmt(pulse.t + pulse.width), "0", _fmt(pulse.rev_level))))
    try:
        path.write_text("\n".join(rows) + "\n")
    except OSError as exc:
        raise ConfigError(f"cannot write schedule CSV {path}: {exc}") from exc
