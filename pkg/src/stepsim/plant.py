"""Two-phase hybrid stepper motor model.

Electromechanical model of a bipolar two-phase stepper with winding
back-EMF, detent torque and a lumped rotational load:

    e_A = -K_m w sin(N_r th)
    e_B =  K_m w cos(N_r th)
    di_A/dt = (v_A - R i_A - e_A) / L
    di_B/dt = (v_B - R i_B - e_B) / L
    T_e = -K_m i_A sin(N_r th) + K_m i_B cos(N_r th) - T_d sin(4 N_r th)
    J dw/dt = T_e - B w - T_load
    dth/dt = w

The magnetizing-resistance leakage path is taken in its large-resistance
limit, so no such parameter appears here.  All functions are pure and
operate on plain value types; integration lives in :mod:`stepsim.sim`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

from .errors import ConfigError, DomainError


@dataclass(frozen=True)
class MotorSpec:
    """Datasheet record for a two-phase stepper motor (SI units).

    ``angular_accuracy_pct`` is metadata only: it is the vendor's
    positioning tolerance and is used as an error budget by tests, not
    as a modeled noise source.
    """

    step_angle_deg: float       # degrees per full step
    steps_per_rev: int
    holding_torque: float       # N.m, max torque before slipping when energized
    rated_current: float        # A per phase
    phase_resistance: float     # ohm
    phase_inductance: float     # H
    detent_torque: float        # N.m, de-energized residual torque amplitude
    rotor_inertia: float        # kg.m^2
    max_rpm: float
    angular_accuracy_pct: float = 0.0

    def __post_init__(self):
        if self.step_angle_deg * self.steps_per_rev != 360.0:
            raise ConfigError(
                "step_angle_deg * steps_per_rev must equal 360, got "
                f"{self.step_angle_deg} * {self.steps_per_rev}"
            )
        for name in (
            "step_angle_deg",
            "holding_torque",
            "rated_current",
            "phase_resistance",
            "phase_inductance",
            "detent_torque",
            "rotor_inertia",
            "max_rpm",
        ):
            if getattr(self, name) <= 0:
                raise ConfigError(f"MotorSpec.{name} must be > 0")
        if self.steps_per_rev <= 0:
            raise ConfigError("MotorSpec.steps_per_rev must be > 0")
        if self.angular_accuracy_pct < 0:
            raise ConfigError("MotorSpec.angular_accuracy_pct must be >= 0")

    @property
    def max_step_rate(self) -> float:
        """Steps/s ceiling implied by the rated maximum shaft speed."""
        return self.max_rpm * self.steps_per_rev / 60.0


@dataclass(frozen=True)
class MotorParams:
    """Model constants consumed by the derivative function.

    ``J`` is the rotor inertia plus any lumped load inertia;
    ``load_torque`` is a constant external torque on the shaft.
    Viscous damping ``B`` is not a datasheet figure; the default of
    1e-3 N.m.s/rad lets the unloaded step response settle without
    sustained oscillation and every test states the value it uses.
    """

    K_m: float                  # N.m/A torque constant
    N_r: int                    # rotor teeth per pole
    R: float                    # ohm
    L: float                    # H
    B: float = 1e-3             # N.m.s/rad
    J: float = 0.4e-3           # kg.m^2
    T_d: float = 0.0            # N.m
    load_torque: float = 0.0    # N.m

    def __post_init__(self):
        if self.N_r < 1 or int(self.N_r) != self.N_r:
            raise ConfigError("MotorParams.N_r must be a positive integer")
        for name in ("J", "L", "R"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"MotorParams.{name} must be > 0")
        for name in ("B", "T_d"):
            if getattr(self, name) < 0:
                raise ConfigError(f"MotorParams.{name} must be >= 0")


class MotorState(NamedTuple):
    """Integrated state vector."""

    theta: float    # rad
    omega: float    # rad/s
    i_a: float      # A
    i_b: float      # A


class MotorStateDerivative(NamedTuple):
    d_theta: float
    d_omega: float
    d_i_a: float
    d_i_b: float


class PhaseVoltages(NamedTuple):
    v_a: float      # V
    v_b: float      # V


def torque_constant(holding_torque: float, rated_current: float) -> float:
    """Torque constant (N.m/A) from holding torque and stator current."""
    if rated_current <= 0:
        raise DomainError(f"rated current must be > 0, got {rated_current}")
    return holding_torque / rated_current


def rotor_teeth(step_angle_deg: float) -> int:
    """Rotor tooth count for a two-phase motor with the given step angle."""
    n = 90.0 / step_angle_deg
    if n < 1 or abs(n - round(n)) > 1e-9:
        raise ConfigError(
            f"step angle {step_angle_deg} deg does not give an integer tooth count"
        )
    return int(round(n))


def step_size(p: MotorParams) -> float:
    """Mechanical angle of one full step, (pi/2)/N_r, in rad."""
    return (math.pi / 2.0) / p.N_r


def params_from_spec(
    spec: MotorSpec,
    B: float = 1e-3,
    load_inertia: float = 0.0,
    load_torque: float = 0.0,
) -> MotorParams:
    """Build model constants from a datasheet record plus load lumping."""
    return MotorParams(
        K_m=torque_constant(spec.holding_torque, spec.rated_current),
        N_r=rotor_teeth(spec.step_angle_deg),
        R=spec.phase_resistance,
        L=spec.phase_inductance,
        B=B,
        J=spec.rotor_inertia + load_inertia,
        T_d=spec.detent_torque,
        load_torque=load_torque,
    )


def back_emf(p: MotorParams, theta: float, omega: float) -> tuple[float, float]:
    """Winding back-EMFs (e_A, e_B) in volts at the given rotor state."""
    return (
        -p.K_m * omega * math.sin(p.N_r * theta),
        p.K_m * omega * math.cos(p.N_r * theta),
    )


def electrical_torque(p: MotorParams, s: MotorState) -> float:
    """Shaft torque (N.m) from winding currents plus the detent harmonic."""
    nt = p.N_r * s.theta
    return (
        -p.K_m * s.i_a * math.sin(nt)
        + p.K_m * s.i_b * math.cos(nt)
        - p.T_d * math.sin(4.0 * nt)
    )


def state_derivative(p: MotorParams, s: MotorState, v: PhaseVoltages) -> MotorStateDerivative:
    """Time derivative of the full state under the given phase voltages."""
    e_a, e_b = back_emf(p, s.theta, s.omega)
    t_e = electrical_torque(p, s)
    return MotorStateDerivative(
        d_theta=s.omega,
        d_omega=(t_e - p.B * s.omega - p.load_torque) / p.J,
        d_i_a=(v.v_a - p.R * s.i_a - e_a) / p.L,
        d_i_b=(v.v_b - p.R * s.i_b - e_b) / p.L,
    )


# Datasheet values for the reference motor shipped in data/table1.params.
TABLE1 = MotorSpec(
    step_angle_deg=1.8,
    steps_per_rev=200,
    holding_torque=12.08,
    rated_current=1.24,
    phase_resistance=13.0,
    phase_inductance=0.144,
    detent_torque=0.381,
    rotor_inertia=0.4e-3,
    max_rpm=1800.0,
    angular_accuracy_pct=3.0,
)
