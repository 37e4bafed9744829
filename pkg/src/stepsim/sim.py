"""Fixed-step integration of the motor plant under a pulse-train drive.

The integrator is classical RK4 on a fixed grid.  Drive voltages are
held constant across each step (zero-order hold) and all switching
instants are snapped to the grid, so a run is a pure function of its
inputs: identical parameters, schedule and config produce bit-identical
traces.  ``euler_oracle`` is a deliberately naive forward-Euler
integrator, coded independently of the RK4 path, used by tests as a
cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

from .drive import (
    DriveConfig,
    StepSchedule,
    decode_direction,
    settled_state,
    winding_signs,
)
from .errors import IntegrationBlowupError, ScheduleError
from .plant import (
    MotorParams,
    MotorState,
    PhaseVoltages,
    electrical_torque,
    state_derivative,
)

SwitchPoller = Callable[[float], tuple[bool, bool, bool]]


@dataclass(frozen=True)
class SimConfig:
    """Integration grid: main step, total span, and recording decimation.

    The default dt of 10 us resolves the winding time constant
    (L/R = 11 ms for the reference motor) by three orders of magnitude.
    The integrator always runs at dt; ``record_stride`` only thins the
    recorded frames.
    """

    dt: float = 1e-5            # s
    duration: float = 1.0       # s
    record_stride: int = 20

    def __post_init__(self):
        if self.dt <= 0:
            raise ScheduleError("dt must be > 0")
        if self.duration < 0:
            raise ScheduleError("duration must be >= 0")
        if self.record_stride < 1:
            raise ScheduleError("record_stride must be >= 1")


class TraceFrame(NamedTuple):
    """One recorded sample of the run."""

    t: float
    theta: float        # rad
    omega: float        # rad/s
    i_a: float          # A
    i_b: float          # A
    v_a: float          # V
    v_b: float          # V
    torque: float       # N.m, electrical torque at this state
    ena: float          # V, ENA line level
    rev: float          # V, REV line level
    home: bool
    fwd_lim: bool
    rev_lim: bool

    @property
    def state(self) -> MotorState:
        return MotorState(self.theta, self.omega, self.i_a, self.i_b)

    @property
    def volts(self) -> PhaseVoltages:
        return PhaseVoltages(self.v_a, self.v_b)


@dataclass
class Trace:
    """Recorded frames plus the exact final integrated state."""

    params: MotorParams
    cfg: SimConfig
    frames: list[TraceFrame] = field(default_factory=list)
    final_state: MotorState | None = None

    def thetas(self) -> list[float]:
        return [f.theta for f in self.frames]

    def times(self) -> list[float]:
        return [f.t for f in self.frames]


def rk4_step(p: MotorParams, s: MotorState, v: PhaseVoltages, dt: float) -> MotorState:
    """One classical RK4 advance with ``v`` held constant over the step."""
    if dt <= 0:
        raise ScheduleError("dt must be > 0")
    try:
        out = _rk4_step_inner(p, s, v, dt)
    except (ValueError, OverflowError):
        # trig/arithmetic overflow mid-stage: the state has diverged
        raise _blowup_from(s, 0.0) from None
    _check_finite(out, 0.0)
    return out


def _rk4_step_inner(p: MotorParams, s: MotorState, v: PhaseVoltages, dt: float) -> MotorState:
    h2 = 0.5 * dt
    k1 = state_derivative(p, s, v)
    s2 = MotorState(
        s.theta + h2 * k1.d_theta,
        s.omega + h2 * k1.d_omega,
        s.i_a + h2 * k1.d_i_a,
        s.i_b + h2 * k1.d_i_b,
    )
    k2 = state_derivative(p, s2, v)
    s3 = MotorState(
        s.theta + h2 * k2.d_theta,
        s.omega + h2 * k2.d_omega,
        s.i_a + h2 * k2.d_i_a,
        s.i_b + h2 * k2.d_i_b,
    )
    k3 = state_derivative(p, s3, v)
    s4 = MotorState(
        s.theta + dt * k3.d_theta,
        s.omega + dt * k3.d_omega,
        s.i_a + dt * k3.d_i_a,
        s.i_b + dt * k3.d_i_b,
    )
    k4 = state_derivative(p, s4, v)
    h6 = dt / 6.0
    return MotorState(
        s.theta + h6 * (k1.d_theta + 2.0 * k2.d_theta + 2.0 * k3.d_theta + k4.d_theta),
        s.omega + h6 * (k1.d_omega + 2.0 * k2.d_omega + 2.0 * k3.d_omega + k4.d_omega),
        s.i_a + h6 * (k1.d_i_a + 2.0 * k2.d_i_a + 2.0 * k3.d_i_a + k4.d_i_a),
        s.i_b + h6 * (k1.d_i_b + 2.0 * k2.d_i_b + 2.0 * k3.d_i_b + k4.d_i_b),
    )


def _check_finite(s: MotorState, t: float) -> None:
    for name, value in zip(("theta", "omega", "i_a", "i_b"), s):
        if not math.isfinite(value):
            raise IntegrationBlowupError(name, t)


def _blowup_from(s: MotorState, t: float) -> IntegrationBlowupError:
    """Name the offending field: the first non-finite one, else the largest."""
    _check_finite(s, t)
    worst = max(
        zip(("theta", "omega", "i_a", "i_b"), s), key=lambda kv: abs(kv[1])
    )
    return IntegrationBlowupError(worst[0], t)


def _rk4_span(
    p: MotorParams,
    th: float,
    om: float,
    ia: float,
    ib: float,
    va: float,
    vb: float,
    dt: float,
    n: int,
) -> tuple[float, float, float, float]:
    """Advance ``n`` RK4 steps under constant voltages.

    Hot path: the derivative is expanded inline but the arithmetic
    mirrors ``rk4_step`` operation for operation, so composing this
    span equals composing ``rk4_step`` bit for bit (asserted in tests).
    """
    sin = math.sin
    cos = math.cos
    K_m = p.K_m
    N_r = p.N_r
    R = p.R
    L = p.L
    B = p.B
    J = p.J
    T_d = p.T_d
    load = p.load_torque
    h2 = 0.5 * dt
    h6 = dt / 6.0
    for _ in range(n):
        nt = N_r * th
        s1 = sin(nt)
        c1 = cos(nt)
        dth1 = om
        dom1 = ((-K_m * ia * s1 + K_m * ib * c1 - T_d * sin(4.0 * nt)) - B * om - load) / J
        dia1 = (va - R * ia - (-K_m * om * s1)) / L
        dib1 = (vb - R * ib - (K_m * om * c1)) / L

        th2 = th + h2 * dth1
        om2 = om + h2 * dom1
        ia2 = ia + h2 * dia1
        ib2 = ib + h2 * dib1
        nt = N_r * th2
        s2 = sin(nt)
        c2 = cos(nt)
        dth2 = om2
        dom2 = ((-K_m * ia2 * s2 + K_m * ib2 * c2 - T_d * sin(4.0 * nt)) - B * om2 - load) / J
        dia2 = (va - R * ia2 - (-K_m * om2 * s2)) / L
        dib2 = (vb - R * ib2 - (K_m * om2 * c2)) / L

        th3 = th + h2 * dth2
        om3 = om + h2 * dom2
        ia3 = ia + h2 * dia2
        ib3 = ib + h2 * dib2
        nt = N_r * th3
        s3 = sin(nt)
        c3 = cos(nt)
        dth3 = om3
        dom3 = ((-K_m * ia3 * s3 + K_m * ib3 * c3 - T_d * sin(4.0 * nt)) - B * om3 - load) / J
        dia3 = (va - R * ia3 - (-K_m * om3 * s3)) / L
        dib3 = (vb - R * ib3 - (K_m * om3 * c3)) / L

        th4 = th + dt * dth3
        om4 = om + dt * dom3
        ia4 = ia + dt * dia3
        ib4 = ib + dt * dib3
        nt = N_r * th4
        s4 = sin(nt)
        c4 = cos(nt)
        dth4 = om4
        dom4 = ((-K_m * ia4 * s4 + K_m * ib4 * c4 - T_d * sin(4.0 * nt)) - B * om4 - load) / J
        dia4 = (va - R * ia4 - (-K_m * om4 * s4)) / L
        dib4 = (vb - R * ib4 - (K_m * om4 * c4)) / L

        th = th + h6 * (dth1 + 2.0 * dth2 + 2.0 * dth3 + dth4)
        om = om + h6 * (dom1 + 2.0 * dom2 + 2.0 * dom3 + dom4)
        ia = ia + h6 * (dia1 + 2.0 * dia2 + 2.0 * dia3 + dia4)
        ib = ib + h6 * (dib1 + 2.0 * dib2 + 2.0 * dib3 + dib4)
    return th, om, ia, ib


class _Event(NamedTuple):
    idx: int                    # grid index the event applies at
    ena_level: float            # ENA line level from this index on
    rev_level: float | None     # REV line level change, None = unchanged
    trigger: int                # +-1 phase-counter advance, 0 = none


class SimRun:
    """Incremental simulation engine owned by a single caller.

    Pulses are materialized onto the integration grid as level-change
    events; a rising threshold crossing of the materialized ENA waveform
    advances the phase counter by the direction latched from the REV
    level of the pulse.  The engine advances in spans between events and
    recording points, so supervisory code can interleave polling with
    integration at any granularity without perturbing the trajectory.
    """

    def __init__(
        self,
        params: MotorParams,
        drive_cfg: DriveConfig,
        cfg: SimConfig,
        initial_state: MotorState | None = None,
        initial_phase: int = 0,
        switch_poller: SwitchPoller | None = None,
        step_active_low: bool = False,
        record: bool = True,
        energized: bool = True,
    ):
        self.p = params
        self.drive_cfg = drive_cfg
        self.cfg = cfg
        self.phase_index = initial_phase
        self.state = initial_state if initial_state is not None else settled_state(
            params, drive_cfg, initial_phase
        )
        self.switch_poller = switch_poller
        self.step_active_low = step_active_low
        self.record = record
        self._energized = energized
        self.i = 0
        self.steps_emitted = 0      # signed sum of trigger directions
        self.trigger_count = 0
        self._events: list[_Event] = []
        self._ei = 0
        self._pending_trigger_count = 0
        self._idle_level = drive_cfg.logic_high if step_active_low else drive_cfg.logic_low
        self._active_level = drive_cfg.logic_low if step_active_low else drive_cfg.logic_high
        self._ena = self._idle_level
        self._rev = drive_cfg.logic_low
        self._va, self._vb = self._volts(initial_phase)
        self._last_recorded = -1
        self.trace = Trace(params=params, cfg=cfg)

    def _volts(self, phase_index: int) -> PhaseVoltages:
        if not self._energized:
            return PhaseVoltages(0.0, 0.0)
        return phase_voltages_for(phase_index, self.drive_cfg)

    @property
    def t(self) -> float:
        return self.i * self.cfg.dt

    @property
    def n_total(self) -> int:
        return round(self.cfg.duration / self.cfg.dt)

    def load_schedule(self, schedule: StepSchedule) -> None:
        """Materialize a pulse train onto the grid and queue its events.

        Pulses must lie in the future of the current grid index and of
        any already queued event; a pulse whose snapped high interval
        would merge with its neighbour (no low sample in between) is
        rejected since its edge could never be detected.
        """
        if self._ei > 4096:
            # drop the consumed prefix so long feeds stay bounded
            del self._events[: self._ei]
            self._ei = 0
        dt = self.cfg.dt
        last_idx = self._events[-1].idx if self._events else -1
        last_idx = max(last_idx, self.i - 1)
        for pulse in schedule.pulses:
            rise = round(pulse.t / dt)
            fall = round((pulse.t + pulse.width) / dt)
            if fall <= rise:
                fall = rise + 1
            if rise <= last_idx:
                raise ScheduleError(
                    f"pulse at t={pulse.t:.6g} s collides with an earlier pulse "
                    "on the integrator grid"
                )
            direction = decode_direction(pulse.rev_level, self.drive_cfg)
            if self.step_active_low:
                # Idle-high line: the step fires on the return to high.
                self._events.append(_Event(rise, self._active_level, pulse.rev_level, 0))
                self._events.append(_Event(fall, self._idle_level, None, direction))
            else:
                self._events.append(_Event(rise, self._active_level, pulse.rev_level, direction))
                self._events.append(_Event(fall, self._idle_level, None, 0))
            self._pending_trigger_count += 1
            last_idx = fall

    def cancel_pending(self) -> int:
        """Drop all queued events strictly after the current index.

        Returns the number of step triggers cancelled.  If the line is
        mid-pulse it is returned to idle one sample later without a
        phase-counter trigger (a killed pulse never fires).
        """
        keep = self._events[: self._ei]
        dropped = self._events[self._ei :]
        cancelled = sum(1 for e in dropped if e.trigger != 0)
        self._events = keep
        self._pending_trigger_count -= cancelled
        if self._ena != self._idle_level:
            self._events.append(_Event(self.i + 1, self._idle_level, None, 0))
        return cancelled

    def pending_triggers(self) -> int:
        return self._pending_trigger_count

    def pending_events(self) -> int:
        return len(self._events) - self._ei

    def _record_frame(self) -> None:
        s = self.state
        if self.switch_poller is not None:
            home, fwd, rev = self.switch_poller(s.theta)
        else:
            home = fwd = rev = False
        self.trace.frames.append(
            TraceFrame(
                t=self.t,
                theta=s.theta,
                omega=s.omega,
                i_a=s.i_a,
                i_b=s.i_b,
                v_a=self._va,
                v_b=self._vb,
                torque=electrical_torque(self.p, s),
                ena=self._ena,
                rev=self._rev,
                home=home,
                fwd_lim=fwd,
                rev_lim=rev,
            )
        )

    def advance_to(self, t_target: float) -> None:
        """Integrate up to the grid index nearest ``t_target``."""
        self.advance_to_index(round(t_target / self.cfg.dt))

    def advance_to_index(self, until: int) -> None:
        cfg = self.cfg
        until = min(until, self.n_total)
        stride = cfg.record_stride
        dt = cfg.dt
        th, om, ia, ib = self.state
        va, vb = self._volts(self.phase_index)
        self._va, self._vb = va, vb
        while self.i <= until:
            while self._ei < len(self._events) and self._events[self._ei].idx == self.i:
                ev = self._events[self._ei]
                self._ena = ev.ena_level
                if ev.rev_level is not None:
                    self._rev = ev.rev_level
                if ev.trigger:
                    self._energized = True
                    self.phase_index += ev.trigger
                    self.steps_emitted += ev.trigger
                    self.trigger_count += 1
                    self._pending_trigger_count -= 1
                    va, vb = self._volts(self.phase_index)
                    self._va, self._vb = va, vb
                self._ei += 1
            if self.record and self.i % stride == 0 and self.i != self._last_recorded:
                self.state = MotorState(th, om, ia, ib)
                self._record_frame()
                self._last_recorded = self.i
            if self.i == until:
                break
            nxt = until
            if self._ei < len(self._events):
                nxt = min(nxt, self._events[self._ei].idx)
            if self.record:
                nxt = min(nxt, (self.i // stride + 1) * stride)
            n = nxt - self.i
            try:
                th, om, ia, ib = _rk4_span(self.p, th, om, ia, ib, va, vb, dt, n)
            except (ValueError, OverflowError):
                raise _blowup_from(MotorState(th, om, ia, ib), self.t) from None
            self.i = nxt
            if not (math.isfinite(th) and math.isfinite(om) and math.isfinite(ia) and math.isfinite(ib)):
                self.state = MotorState(th, om, ia, ib)
                _check_finite(self.state, self.t)
        self.state = MotorState(th, om, ia, ib)
        self.trace.final_state = self.state

    def run(self) -> Trace:
        self.advance_to_index(self.n_total)
        return self.trace


def phase_voltages_for(phase_index: int, cfg: DriveConfig) -> PhaseVoltages:
    sa, sb = winding_signs(phase_index)
    return PhaseVoltages(sa * cfg.supply_voltage, sb * cfg.supply_voltage)


def simulate(
    p: MotorParams,
    drive_cfg: DriveConfig,
    schedule: StepSchedule,
    cfg: SimConfig,
    initial_state: MotorState | None = None,
    initial_phase: int = 0,
    switch_poller: SwitchPoller | None = None,
    energized: bool = True,
) -> Trace:
    """Run a pulse schedule against the plant and record a trace.

    The plant starts parked at the settled equilibrium of the initial
    drive state unless an explicit initial state is given.  With
    ``energized=False`` the windings stay dead until the first step
    pulse arrives (a de-energized plant at rest stays exactly at rest).
    All pulses must lie within [0, duration].  Deterministic: identical
    inputs produce byte-identical traces.
    """
    for pulse in schedule.pulses:
        if pulse.t < 0 or pulse.t + pulse.width > cfg.duration:
            raise ScheduleError(
                f"pulse at t={pulse.t:.6g} s lies outside the run duration "
                f"{cfg.duration:.6g} s"
            )
    run = SimRun(
        p,
        drive_cfg,
        cfg,
        initial_state=initial_state,
        initial_phase=initial_phase,
        switch_poller=switch_poller,
        energized=energized,
    )
    run.load_schedule(schedule)
    return run.run()


def euler_oracle(
    p: MotorParams,
    s: MotorState,
    drive_fn: Callable[[float], PhaseVoltages],
    duration: float,
    dt: float,
    on_sample: Callable[[float, float], None] | None = None,
    sample_stride: int = 1,
) -> MotorState:
    """Reference integrator: plain forward Euler with a time-varying drive.

    The model equations are transcribed here directly rather than shared
    with the RK4 path, so the two integrators can only agree by both
    being right.  ``on_sample(t, theta)`` is invoked every
    ``sample_stride`` steps when given.  Naive and slow on purpose.
    """
    if dt <= 0:
        raise ScheduleError("dt must be > 0")
    theta = s.theta
    omega = s.omega
    i_a = s.i_a
    i_b = s.i_b
    n = round(duration / dt)
    for step in range(n):
        t = step * dt
        v = drive_fn(t)
        e_a = -p.K_m * omega * math.sin(p.N_r * theta)
        e_b = p.K_m * omega * math.cos(p.N_r * theta)
        torque = (
            -p.K_m * i_a * math.sin(p.N_r * theta)
            + p.K_m * i_b * math.cos(p.N_r * theta)
            - p.T_d * math.sin(4.0 * p.N_r * theta)
        )
        new_theta = theta + dt * omega
        new_omega = omega + dt * (torque - p.B * omega - p.load_torque) / p.J
        new_i_a = i_a + dt * (v.v_a - p.R * i_a - e_a) / p.L
        new_i_b = i_b + dt * (v.v_b - p.R * i_b - e_b) / p.L
        theta, omega, i_a, i_b = new_theta, new_omega, new_i_a, new_i_b
        if not (math.isfinite(theta) and math.isfinite(omega)):
            _check_finite(MotorState(theta, omega, i_a, i_b), t)
        if on_sample is not None and (step + 1) % sample_stride == 0:
            on_sample((step + 1) * dt, theta)
    return MotorState(theta, omega, i_a, i_b)
