"""Step-clock / direction drive stage.

The driver watches two TTL lines.  A step is initiated each time the
ENA line rises through the enable threshold; the REV line level at that
instant selects the direction (at or below the reverse threshold the
pulse-A train leads pulse B and the motor turns forward, above it the
lead order and the rotation reverse).  The phase counter feeds a
full-step, two-phase-on winding sequence: both windings are always
energized and each counter change advances the stable rotor equilibrium
by exactly one step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

from .errors import ConstraintError
from .plant import MotorParams, MotorState, PhaseVoltages

FORWARD = 1
REVERSE = -1

# Winding sign pattern per phase_index mod 4, two-phase-on.
_SEQUENCE = ((1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0))


@dataclass(frozen=True)
class DriveConfig:
    """Drive-stage electrical configuration (TTL levels and supply).

    The 16.12 V default supply equals rated current times winding
    resistance of the reference motor, so the steady winding current
    settles at the rated 1.24 A.
    """

    enable_threshold: float = 2.5   # V
    reverse_threshold: float = 2.5  # V
    logic_high: float = 5.0         # V
    logic_low: float = 0.0          # V
    supply_voltage: float = 16.12   # V applied to each winding

    def __post_init__(self):
        if not (self.logic_low < self.enable_threshold < self.logic_high):
            raise ConstraintError("enable threshold must lie between logic levels")
        if not (self.logic_low < self.reverse_threshold < self.logic_high):
            raise ConstraintError("reverse threshold must lie between logic levels")
        if self.supply_voltage <= 0:
            raise ConstraintError("supply voltage must be > 0")


@dataclass(frozen=True)
class DriveState:
    """Phase counter plus the previous ENA sample for edge detection."""

    phase_index: int = 0
    ena_prev: float = 0.0


def decode_direction(rev_v: float, cfg: DriveConfig) -> int:
    """FORWARD when REV is at or below the reverse threshold, else REVERSE."""
    return FORWARD if rev_v <= cfg.reverse_threshold else REVERSE


def on_ena_sample(ds: DriveState, ena_v: float, direction: int, cfg: DriveConfig) -> DriveState:
    """Advance the phase counter on a rising threshold crossing of ENA.

    Level-holding does not retrigger: the counter moves only when the
    previous sample was at or below the threshold and the new one is
    above it.
    """
    k = ds.phase_index
    if ds.ena_prev <= cfg.enable_threshold < ena_v:
        k += direction
    return DriveState(phase_index=k, ena_prev=ena_v)


def phase_voltages(ds: DriveState, cfg: DriveConfig) -> PhaseVoltages:
    """Winding voltages for the current phase counter (period 4)."""
    sa, sb = _SEQUENCE[ds.phase_index % 4]
    return PhaseVoltages(sa * cfg.supply_voltage, sb * cfg.supply_voltage)


def winding_signs(phase_index: int) -> tuple[float, float]:
    """Sign pattern (A, B) of the two-phase-on sequence at a counter value."""
    return _SEQUENCE[phase_index % 4]


class StepPulse(NamedTuple):
    """One ENA pulse: rising edge at ``t``, high for ``width`` seconds."""

    t: float            # s, rising edge
    width: float        # s, high interval
    rev_level: float    # V on the REV line, latched at the edge


@dataclass(frozen=True)
class StepSchedule:
    """A timestamped train of ENA pulses with per-pulse REV levels."""

    pulses: tuple[StepPulse, ...]

    def __len__(self) -> int:
        return len(self.pulses)

    @property
    def end_time(self) -> float:
        """Fall time of the last pulse, 0.0 for an empty schedule."""
        if not self.pulses:
            return 0.0
        last = self.pulses[-1]
        return last.t + last.width

    def shifted(self, dt: float) -> "StepSchedule":
        """The same pulse train displaced by ``dt`` seconds."""
        return StepSchedule(tuple(p._replace(t=p.t + dt) for p in self.pulses))


def step_clock(
    rate: float,
    n_steps: int,
    start: float = 0.0,
    direction: int = FORWARD,
    cfg: DriveConfig | None = None,
    max_step_rate: float = 6000.0,
) -> StepSchedule:
    """Constant-rate pulse train: ``n_steps`` rising edges at ``start + k/rate``.

    Pulse width is half the step period and the REV level is constant
    across the schedule.  Rates above ``max_step_rate`` (6000 steps/s for
    the reference motor: 1800 rpm at 200 steps/rev) are rejected outright
    rather than left to de-synchronize the plant.
    """
    cfg = cfg or DriveConfig()
    if rate <= 0:
        raise ConstraintError(f"step rate must be > 0, got {rate}")
    if rate > max_step_rate:
        raise ConstraintError(
            f"step rate {rate} steps/s exceeds the {max_step_rate} steps/s ceiling"
        )
    if n_steps < 0:
        raise ConstraintError("step count must be >= 0")
    period = 1.0 / rate
    rev = cfg.logic_low if direction == FORWARD else cfg.logic_high
    pulses = tuple(
        StepPulse(t=start + k * period, width=period / 2.0, rev_level=rev)
        for k in range(n_steps)
    )
    return StepSchedule(pulses)


def equilibrium_angle(p: MotorParams, phase_index: int) -> float:
    """Stable rest angle of the two-phase-on state ``phase_index`` (rad).

    Equilibria sit on the lattice N_r*theta = pi/4 + k*pi/2; the detent
    harmonic sin(4 N_r theta) vanishes exactly on that lattice, so the
    settled positions are closed-form regardless of detent amplitude.
    """
    return (math.pi / 4.0 + phase_index * math.pi / 2.0) / p.N_r


def settled_state(p: MotorParams, cfg: DriveConfig, phase_index: int = 0) -> MotorState:
    """Plant state at rest in the given drive state with steady currents.

    This is the natural aligned initial condition for a run: the rotor
    parked on the energized equilibrium, winding currents at +-V/R.
    Note the two-phase-on lattice is offset half a step from the
    single-winding alignment angle theta = 0.
    """
    sa, sb = winding_signs(phase_index)
    i_ss = cfg.supply_voltage / p.R
    return MotorState(
        theta=equilibrium_angle(p, phase_index),
        omega=0.0,
        i_a=sa * i_ss,
        i_b=sb * i_ss,
    )


def drive_function(schedule: StepSchedule, cfg: DriveConfig, initial_phase: int = 0):
    """Continuous-time drive: t -> PhaseVoltages implied by the pulse train.

    The phase counter counts rising edges at or before t (half-open
    switching, the new voltages apply from the edge instant).  Used by
    reference integrators that do not snap switching to a grid; calls
    with non-decreasing t advance an internal cursor, arbitrary t falls
    back to a rescan.
    """
    edges = [(p.t, decode_direction(p.rev_level, cfg)) for p in schedule.pulses]
    cursor = [0, initial_phase, -math.inf]  # next edge index, phase, last t

    def volts(t: float) -> PhaseVoltages:
        i, k, last_t = cursor
        if t < last_t:
            i, k = 0, initial_phase
        while i < len(edges) and edges[i][0] <= t:
            k += edges[i][1]
            i += 1
        cursor[0], cursor[1], cursor[2] = i, k, t
        return phase_voltages(DriveState(phase_index=k), cfg)

    return volts
