"""stepsim: deterministic two-phase stepper drive-train simulator.

A hardware-free model of a rehabilitation-device axis: the stepper
plant as an ODE, an edge-triggered quadrature drive stage, trajectory
planners, a motion controller with homing and exercise cycles, CSV
tooling and a live WebSocket control service.
"""

from .axis import (
    AxisConfig,
    AxisController,
    AxisStatus,
    ExerciseSpec,
    Fault,
    HomingConfig,
    SwitchConfig,
)
from .drive import (
    FORWARD,
    REVERSE,
    DriveConfig,
    DriveState,
    StepPulse,
    StepSchedule,
    decode_direction,
    drive_function,
    equilibrium_angle,
    on_ena_sample,
    phase_voltages,
    settled_state,
    step_clock,
)
from .errors import (
    ConfigError,
    ConstraintError,
    DomainError,
    IntegrationBlowupError,
    ScheduleError,
    StepSimError,
)
from .plant import (
    TABLE1,
    MotorParams,
    MotorSpec,
    MotorState,
    PhaseVoltages,
    back_emf,
    electrical_torque,
    params_from_spec,
    state_derivative,
    step_size,
    torque_constant,
)
from .profiles import (
    MotionProfile,
    MoveConstraints,
    plan_contour,
    plan_scurve,
    plan_trapezoid,
    profile_to_steps,
)
from .sim import SimConfig, SimRun, Trace, TraceFrame, euler_oracle, rk4_step, simulate

__version__ = "0.1.0"

__all__ = [
    "AxisConfig",
    "AxisController",
    "AxisStatus",
    "ConfigError",
    "ConstraintError",
    "DomainError",
    "DriveConfig",
    "DriveState",
    "ExerciseSpec",
    "Fault",
    "FORWARD",
    "HomingConfig",
    "IntegrationBlowupError",
    "MotionProfile",
    "MotorParams",
    "MotorSpec",
    "MotorState",
    "MoveConstraints",
    "PhaseVoltages",
    "REVERSE",
    "ScheduleError",
    "SimConfig",
    "SimRun",
    "StepPulse",
    "StepSchedule",
    "StepSimError",
    "SwitchConfig",
    "TABLE1",
    "Trace",
    "TraceFrame",
    "back_emf",
    "decode_direction",
    "drive_function",
    "electrical_torque",
    "equilibrium_angle",
    "euler_oracle",
    "on_ena_sample",
    "params_from_spec",
    "phase_voltages",
    "plan_contour",
    "plan_scurve",
    "plan_trapezoid",
    "profile_to_steps",
    "rk4_step",
    "settled_state",
    "simulate",
    "state_derivative",
    "step_clock",
    "step_size",
    "torque_constant",
]
