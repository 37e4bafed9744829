"""Motion-controller brain for one simulated axis.

An AxisController owns one plant simulation and drives it the way the
hardware controller drives the real axis: straight moves planned as
trapezoid or S-curve profiles, reference (homing) moves against a home
switch, repeated exercise cycles, limit supervision, following-error
supervision in closed loop, and decelerating/kill stops.

Positions are integer steps in the axis register.  The register origin
is the settled rotor position at power-on and is re-anchored by a
reference move; the simulated encoder is an ideal quantizer of the
plant angle against that origin.  Commanded and encoder positions only
ever differ when the rotor physically cannot follow the pulse train.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable

from .drive import (
    FORWARD,
    REVERSE,
    DriveConfig,
    StepPulse,
    StepSchedule,
    step_clock,
)
from .errors import ConfigError, ConstraintError
from .plant import MotorParams, MotorSpec, params_from_spec, step_size
from .profiles import (
    MotionProfile,
    MoveConstraints,
    plan_contour,
    plan_scurve,
    plan_trapezoid,
    profile_to_steps,
    validate_against,
)
from .sim import SimConfig, SimRun, Trace


class Fault(str, Enum):
    LIMIT_HIT = "limit_hit"
    FOLLOWING_ERROR = "following_error"
    STOPPED = "stopped"
    CONFIG_ERROR = "config_error"


@dataclass(frozen=True)
class SwitchConfig:
    """A simulated switch mounted at a shaft angle.

    The home switch asserts inside a symmetric window around
    ``position``; limit switches assert on the half-open range beyond
    their position (``width`` unused).  ``active_state`` selects the
    electrical level that represents assertion; a disabled switch never
    asserts.
    """

    position: float                 # rad
    width: float = 0.0              # rad, home assertion window
    active_state: str = "active_high"
    enabled: bool = True

    def __post_init__(self):
        if self.active_state not in ("active_high", "active_low"):
            raise ConfigError(f"bad switch active_state '{self.active_state}'")


@dataclass(frozen=True)
class HomingConfig:
    """Reference-move recipe: search, approach, offset, register reset."""

    initial_search_direction: str = "forward"   # forward | reverse
    final_approach_direction: str = "forward"
    stop_edge: str = "rising"                   # rising | falling, of the home signal
    search_velocity: float = 50.0               # steps/s
    approach_velocity: float = 20.0             # steps/s
    offset_steps: int = 0
    reset_position: int = 0

    def __post_init__(self):
        for name in ("initial_search_direction", "final_approach_direction"):
            if getattr(self, name) not in ("forward", "reverse"):
                raise ConfigError(f"bad homing direction '{getattr(self, name)}'")
        if self.stop_edge not in ("rising", "falling"):
            raise ConfigError(f"bad stop_edge '{self.stop_edge}'")
        if self.search_velocity <= 0 or self.approach_velocity <= 0:
            raise ConfigError("homing velocities must be > 0")
        if self.approach_velocity > self.search_velocity:
            raise ConfigError("approach velocity must not exceed search velocity")


@dataclass(frozen=True)
class ExerciseSpec:
    """One rehabilitation exercise: out n steps, hold, back n steps."""

    n_steps: int
    cycle_duration: float   # s, full forward+hold+reverse cycle
    hold_duration: float    # s
    repetitions: int = 1

    def __post_init__(self):
        if self.n_steps < 1:
            raise ConstraintError("exercise needs n_steps >= 1")
        if self.repetitions < 1:
            raise ConstraintError("exercise needs repetitions >= 1")
        if not 0 <= self.hold_duration < self.cycle_duration:
            raise ConstraintError("hold duration must satisfy 0 <= hold < cycle")

    @property
    def step_rate(self) -> float:
        """Steps/s so forward and reverse legs split the non-hold time."""
        return self.n_steps / ((self.cycle_duration - self.hold_duration) / 2.0)


@dataclass(frozen=True)
class AxisConfig:
    """Per-axis configuration record.

    ``axis_type`` other than stepper and ``microstep_resolution`` other
    than 1 are accepted here so existing config files load, but are
    rejected when a controller is built on the axis.  ``output_mode``
    selects the wire labelling only; the simulated drive behaves
    identically either way.
    """

    axis_id: int
    default_constraints: MoveConstraints
    fwd_limit: SwitchConfig
    rev_limit: SwitchConfig
    home: SwitchConfig
    axis_type: str = "stepper"
    enabled: bool = True
    steps_per_rev: int = 200
    microstep_resolution: int = 1
    loop_mode: str = "open"                 # open | closed
    step_polarity: str = "active_high"
    output_mode: str = "step_direction"     # step_direction | cw_ccw
    following_error_limit: int = 4          # steps

    def __post_init__(self):
        if self.axis_type not in ("stepper", "servo"):
            raise ConfigError(f"bad axis_type '{self.axis_type}'")
        if self.loop_mode not in ("open", "closed"):
            raise ConfigError(f"bad loop_mode '{self.loop_mode}'")
        if self.step_polarity not in ("active_high", "active_low"):
            raise ConfigError(f"bad step_polarity '{self.step_polarity}'")
        if self.output_mode not in ("step_direction", "cw_ccw"):
            raise ConfigError(f"bad output_mode '{self.output_mode}'")
        if self.following_error_limit < 1:
            raise ConfigError("following_error_limit must be >= 1")
        if self.home.enabled and self.home.width <= 0:
            raise ConfigError("home switch needs a positive window width")
        if self.fwd_limit.enabled and self.rev_limit.enabled and self.home.enabled:
            half = self.home.width / 2.0
            if not (
                self.rev_limit.position
                < self.home.position - half
                <= self.home.position + half
                < self.fwd_limit.position
            ):
                raise ConfigError(
                    "switch geometry must satisfy rev_limit < home window < fwd_limit"
                )


@dataclass(frozen=True)
class AxisStatus:
    """Published snapshot of one axis."""

    commanded_position: int     # steps
    actual_position: int        # steps
    velocity: float             # steps/s
    move_complete: bool
    fault: Fault | None
    homed: bool


def switch_level(asserted: bool, sw: SwitchConfig) -> bool:
    """Electrical line level for a logical assertion state."""
    if sw.active_state == "active_low":
        return not asserted
    return asserted


@dataclass
class _MoveContext:
    profile: MotionProfile | None
    t0: float
    rate: float = 0.0
    direction: int = FORWARD


class AxisController:
    """Single-threaded controller owning one axis simulation.

    The control loop advances the plant one tick (1 ms) at a time and
    polls switches, the settle detector and (in closed loop) the
    following error between ticks.  Supervision only observes the plant,
    so a no-load move produces the identical trajectory in open and
    closed loop.  ``preempt`` may be set to a callable polled every
    tick; returning "kill" or "decelerating" aborts the current motion
    (this is how an external stop reaches a controller busy inside a
    move).
    """

    TICK = 1e-3             # s, supervision cadence
    SETTLE_OMEGA = 0.01     # rad/s
    SETTLE_TIME = 0.05      # s the speed must stay below SETTLE_OMEGA
    SETTLE_TIMEOUT = 5.0    # s, give up waiting (stalled or runaway plant)
    MAX_SIM_TIME = 1e6      # s, lifetime cap of one controller's clock

    def __init__(
        self,
        cfg: AxisConfig,
        motor: MotorSpec,
        params: MotorParams | None = None,
        drive_cfg: DriveConfig | None = None,
        dt: float = 1e-5,
        record_stride: int = 20,
        record: bool = True,
    ):
        if not cfg.enabled:
            raise ConfigError(f"axis {cfg.axis_id} is disabled")
        if cfg.axis_type != "stepper":
            raise ConfigError(
                f"axis {cfg.axis_id}: only stepper axes are runnable, got '{cfg.axis_type}'"
            )
        if cfg.microstep_resolution != 1:
            raise ConfigError(
                f"axis {cfg.axis_id}: only full-step resolution 1 is runnable, "
                f"got {cfg.microstep_resolution}"
            )
        if cfg.steps_per_rev != motor.steps_per_rev:
            raise ConfigError(
                f"axis {cfg.axis_id}: steps_per_rev {cfg.steps_per_rev} does not "
                f"match the motor's {motor.steps_per_rev}"
            )
        self.cfg = cfg
        self.motor = motor
        self.params = params if params is not None else params_from_spec(motor)
        self.drive_cfg = drive_cfg or DriveConfig()
        self.step = step_size(self.params)
        sim_cfg = SimConfig(dt=dt, duration=self.MAX_SIM_TIME, record_stride=record_stride)
        self.run = SimRun(
            self.params,
            self.drive_cfg,
            sim_cfg,
            switch_poller=self._asserted_flags,
            step_active_low=(cfg.step_polarity == "active_low"),
            record=record,
        )
        self._tick_n = max(1, round(self.TICK / dt))
        self.theta_ref = self.run.state.theta
        self._origin = 0            # register value at theta_ref
        self._steps_base = 0
        self._pos_base = 0
        self.homed = False
        self.fault: Fault | None = None
        self.move_complete = False
        self.preempt: Callable[[], str | None] | None = None
        self.on_tick: Callable[[], None] | None = None
        self._move: _MoveContext | None = None
        self._stop_request: str | None = None
        self._feed_t = 0.0
        self._feed_rate = 0.0
        self._feed_dir = FORWARD

    # ------------------------------------------------------------------
    # position bookkeeping

    @property
    def commanded_position(self) -> int:
        return self._pos_base + (self.run.steps_emitted - self._steps_base)

    def encoder_position(self) -> int:
        """Ideal step-resolution quantizer of the plant angle."""
        return self._origin + round((self.run.state.theta - self.theta_ref) / self.step)

    @property
    def actual_position(self) -> int:
        if self.cfg.loop_mode == "closed":
            return self.encoder_position()
        return self.commanded_position

    def status(self) -> AxisStatus:
        return AxisStatus(
            commanded_position=self.commanded_position,
            actual_position=self.actual_position,
            velocity=self._current_velocity(),
            move_complete=self.move_complete,
            fault=self.fault,
            homed=self.homed,
        )

    def _current_velocity(self) -> float:
        mv = self._move
        if mv is None:
            return 0.0
        if mv.profile is not None:
            return mv.profile.velocity(self.run.t - mv.t0)
        return mv.rate * mv.direction

    # ------------------------------------------------------------------
    # switches

    def _asserted_flags(self, theta: float) -> tuple[bool, bool, bool]:
        cfg = self.cfg
        home = (
            cfg.home.enabled
            and abs(theta - cfg.home.position) <= cfg.home.width / 2.0
        )
        fwd = cfg.fwd_limit.enabled and theta >= cfg.fwd_limit.position
        rev = cfg.rev_limit.enabled and theta <= cfg.rev_limit.position
        return home, fwd, rev

    def poll_switches(self, theta: float) -> tuple[bool, bool, bool]:
        """Line levels of (home, fwd_limit, rev_limit) at a shaft angle."""
        home, fwd, rev = self._asserted_flags(theta)
        return (
            switch_level(home, self.cfg.home),
            switch_level(fwd, self.cfg.fwd_limit),
            switch_level(rev, self.cfg.rev_limit),
        )

    def _limit_hit(self, direction: int) -> bool:
        """Limit switch in the direction of travel."""
        _, fwd, rev = self._asserted_flags(self.run.state.theta)
        return fwd if direction == FORWARD else rev

    def _motion_direction(self) -> int:
        mv = self._move
        if mv is None:
            return FORWARD
        if mv.profile is not None:
            v = mv.profile.velocity(self.run.t - mv.t0)
            if v > 0:
                return FORWARD
            if v < 0:
                return REVERSE
        return mv.direction

    # ------------------------------------------------------------------
    # supervision primitives

    def supervise_following_error(self) -> Fault | None:
        """Closed-loop stall detector; kills the pulse train on trip."""
        if self.cfg.loop_mode != "closed":
            return None
        err = self.commanded_position - self.encoder_position()
        if abs(err) > self.cfg.following_error_limit:
            self.fault = Fault.FOLLOWING_ERROR
            self.run.cancel_pending()
            return self.fault
        return None

    def _tick(self) -> None:
        self.run.advance_to_index(self.run.i + self._tick_n)
        if self.preempt is not None and self._stop_request is None:
            req = self.preempt()
            if req is not None:
                self._stop_request = req
        if self.on_tick is not None:
            self.on_tick()

    def _settle(self, timeout: float | None = None) -> bool:
        """Advance until the rotor is quiet (or timed out); True if settled."""
        timeout = self.SETTLE_TIMEOUT if timeout is None else timeout
        quiet = 0.0
        waited = 0.0
        while waited < timeout:
            self._tick()
            if self._consume_stop():
                return False
            waited += self.TICK
            if abs(self.run.state.omega) < self.SETTLE_OMEGA:
                quiet += self.TICK
                if quiet >= self.SETTLE_TIME:
                    return True
            else:
                quiet = 0.0
        return False

    def _consume_stop(self) -> bool:
        if self._stop_request is None:
            return False
        kind = self._stop_request
        self._stop_request = None
        self._apply_stop(kind, Fault.STOPPED)
        return True

    # ------------------------------------------------------------------
    # stops

    def stop(self, kind: str = "decelerating") -> AxisStatus:
        """Abort motion: ramped stop at d_max or immediate pulse kill.

        On an idle axis this only records the stopped fault.  Windings
        stay energized either way, so the rotor holds its lattice
        position.
        """
        if kind not in ("decelerating", "kill"):
            raise ConstraintError(f"unknown stop kind '{kind}'")
        if self._move is None:
            self.fault = Fault.STOPPED
            self.move_complete = False
            return self.status()
        self._stop_request = kind
        return self.status()

    def _apply_stop(self, kind: str, fault: Fault) -> None:
        direction = self._motion_direction()
        velocity = abs(self._current_velocity())
        self.run.cancel_pending()
        if kind == "decelerating" and velocity > 0.0:
            ramp = self._decel_ramp(velocity, direction)
            if ramp is not None:
                self.run.load_schedule(ramp)
        self.fault = fault
        if self._move is not None:
            self._move = _MoveContext(profile=None, t0=self.run.t, rate=0.0)

    def _decel_ramp(self, v0: float, direction: int) -> StepSchedule | None:
        """Step times of a constant-deceleration ramp from v0 to rest."""
        d = self.cfg.default_constraints.d_max
        n = int(v0 * v0 / (2.0 * d))
        if n < 1:
            return None
        rev = (
            self.drive_cfg.logic_low if direction == FORWARD else self.drive_cfg.logic_high
        )
        t_base = self.run.t + 2 * self._tick_n * self.run.cfg.dt
        pulses = []
        prev_t = 0.0
        for k in range(1, n + 1):
            tk = (v0 - math.sqrt(v0 * v0 - 2.0 * d * k)) / d
            width = max((tk - prev_t) / 2.0, 2.0 * self.run.cfg.dt)
            pulses.append(StepPulse(t=t_base + tk, width=width, rev_level=rev))
            prev_t = tk
        return StepSchedule(tuple(pulses))

    # ------------------------------------------------------------------
    # move plumbing

    def _begin_operation(self) -> None:
        # Starting a new operation acknowledges and clears any old fault.
        self.fault = None
        self.move_complete = False
        self._stop_request = None

    def _trace_mark(self) -> int:
        return len(self.run.trace.frames)

    def _trace_since(self, mark: int) -> Trace:
        return Trace(
            params=self.params,
            cfg=self.run.cfg,
            frames=self.run.trace.frames[mark:],
            final_state=self.run.state,
        )

    def _check_rate(self, rate: float) -> None:
        ceiling = self.motor.max_step_rate
        if rate > ceiling:
            raise ConstraintError(
                f"step rate {rate:.6g} steps/s exceeds the motor ceiling {ceiling:.6g}"
            )

    def _lead_time(self) -> float:
        return 2 * self._tick_n * self.run.cfg.dt

    def _supervise_motion(self, limits_fault: bool = True) -> None:
        """Tick until the pulse train is fully out and the line is idle
        (or a fault/stop intervenes)."""
        while self.run.pending_events() > 0:
            self._tick()
            if self._consume_stop():
                continue
            if limits_fault and self.fault is None and self._limit_hit(self._motion_direction()):
                self._apply_stop("decelerating", Fault.LIMIT_HIT)
                continue
            if self.fault is None and self.supervise_following_error() is not None:
                break

    def _finish_move(self, target: int) -> None:
        # A faulted move returns promptly; the caller can idle() to watch
        # the plant come to rest if it wants the tail of the story.
        settled = self._settle() if self.fault is None else False
        self._move = None
        if self.fault is None and settled and self.commanded_position == target:
            self.move_complete = True

    def idle(self, duration: float) -> None:
        """Advance the axis clock with no motion commanded (windings hold)."""
        ticks = max(1, round(duration / self.TICK))
        for _ in range(ticks):
            self._tick()
            self._consume_stop()

    # ------------------------------------------------------------------
    # straight and contour moves

    def execute_straight_move(
        self,
        target: int,
        mode: str = "relative",
        constraints: MoveConstraints | None = None,
        profile_kind: str = "trapezoid",
    ) -> tuple[AxisStatus, Trace]:
        """Point-to-point move; returns final status and the move trace."""
        if mode not in ("absolute", "relative"):
            raise ConstraintError(f"unknown move mode '{mode}'")
        self._begin_operation()
        c = constraints or self.cfg.default_constraints
        self._check_rate(c.v_max)
        delta = target - self.commanded_position if mode == "absolute" else target
        mark = self._trace_mark()
        if delta == 0:
            self.move_complete = True
            return self.status(), self._trace_since(mark)
        if profile_kind == "trapezoid":
            profile = plan_trapezoid(delta, c)
        elif profile_kind == "scurve":
            profile = plan_scurve(delta, c)
        else:
            raise ConstraintError(f"unknown profile kind '{profile_kind}'")
        self._run_profile(profile)
        return self.status(), self._trace_since(mark)

    def execute_contour_move(
        self,
        waypoints: list[tuple[float, float]],
        constraints: MoveConstraints | None = None,
        boundary: str = "clamped",
    ) -> tuple[AxisStatus, Trace]:
        """Splined move through (t, position) waypoints, validated against
        the axis constraints rather than rescaled."""
        self._begin_operation()
        c = constraints or self.cfg.default_constraints
        profile = plan_contour(waypoints, boundary=boundary)
        validate_against(profile, c)
        mark = self._trace_mark()
        if not profile.segments:
            self.move_complete = True
            return self.status(), self._trace_since(mark)
        self._run_profile(profile)
        return self.status(), self._trace_since(mark)

    def _run_profile(self, profile: MotionProfile) -> None:
        t0 = self.run.t + self._lead_time()
        schedule = profile_to_steps(profile, cfg=self.drive_cfg, start=t0)
        target = self.commanded_position + profile.total_steps
        overall = FORWARD if profile.total_steps >= 0 else REVERSE
        self._move = _MoveContext(profile=profile, t0=t0, direction=overall)
        self.run.load_schedule(schedule)
        self._supervise_motion()
        self._finish_move(target)

    # ------------------------------------------------------------------
    # velocity-mode stepping (homing)

    def _feed_start(self, rate: float, direction: int) -> None:
        self._check_rate(rate)
        self._feed_rate = rate
        self._feed_dir = direction
        self._feed_t = self.run.t + self._lead_time()
        self._move = _MoveContext(profile=None, t0=self.run.t, rate=rate, direction=direction)

    def _feed_pulses(self, horizon: float = 0.05) -> None:
        rev = (
            self.drive_cfg.logic_low
            if self._feed_dir == FORWARD
            else self.drive_cfg.logic_high
        )
        period = 1.0 / self._feed_rate
        while self._feed_t < self.run.t + horizon:
            self.run.load_schedule(
                StepSchedule(
                    (StepPulse(t=self._feed_t, width=period / 2.0, rev_level=rev),)
                )
            )
            self._feed_t += period

    def _step_until(self, rate: float, direction: int, condition, max_travel: float) -> str:
        """Step at constant rate until ``condition()`` goes true.

        Returns "ok" when the condition fired, "limit" when the limit
        switch in the direction of travel asserted first, "stopped" on
        an external stop, and raises if the travel guard (two shaft
        revolutions) is exhausted - a sane config never gets that far.
        """
        self._feed_start(rate, direction)
        start_theta = self.run.state.theta
        try:
            while True:
                self._feed_pulses()
                self._tick()
                if self._consume_stop():
                    return "stopped"
                if condition():
                    return "ok"
                if self._limit_hit(direction):
                    return "limit"
                if abs(self.run.state.theta - start_theta) > max_travel:
                    raise ConstraintError(
                        "homing travel guard exhausted before the switch was found"
                    )
        finally:
            self.run.cancel_pending()
            self._move = None

    # ------------------------------------------------------------------
    # reference move

    def find_reference(self, h: HomingConfig) -> AxisStatus:
        """Locate the home switch and re-anchor the position register.

        Search in the configured direction until the home window
        asserts, reversing once if a limit asserts first; back away
        opposite the final approach direction until the window
        deasserts (plus a two-step margin); re-approach slowly and stop
        on the configured edge of the home signal; run the offset move;
        then load ``reset_position`` into the register.
        """
        self._begin_operation()
        if not self.cfg.home.enabled:
            self.fault = Fault.CONFIG_ERROR
            raise ConfigError(f"axis {self.cfg.axis_id}: home switch is disabled")
        max_travel = 2.0 * 2.0 * math.pi
        sdir = FORWARD if h.initial_search_direction == "forward" else REVERSE
        adir = FORWARD if h.final_approach_direction == "forward" else REVERSE

        def home_on() -> bool:
            return self._asserted_flags(self.run.state.theta)[0]

        # 1. search until the home window asserts (skip if already inside)
        if not home_on():
            outcome = self._step_until(h.search_velocity, sdir, home_on, max_travel)
            if outcome == "limit":
                self._settle()
                outcome = self._step_until(h.search_velocity, -sdir, home_on, max_travel)
                if outcome == "limit":
                    self.fault = Fault.LIMIT_HIT
                    return self.status()
            if outcome == "stopped":
                return self.status()
        self._settle()

        # 2. back off opposite the approach direction until clear of the window
        if home_on():
            outcome = self._step_until(
                h.approach_velocity, -adir, lambda: not home_on(), max_travel
            )
            if outcome == "limit":
                self.fault = Fault.LIMIT_HIT
                return self.status()
            if outcome == "stopped":
                return self.status()
            self._settle()
        # margin steps so the approach sees a clean edge from a settled start
        margin = step_clock(
            h.approach_velocity,
            2,
            start=self.run.t + self._lead_time(),
            direction=-adir,
            cfg=self.drive_cfg,
            max_step_rate=self.motor.max_step_rate,
        )
        self._move = _MoveContext(profile=None, t0=self.run.t, rate=h.approach_velocity,
                                  direction=-adir)
        self.run.load_schedule(margin)
        self._supervise_motion(limits_fault=False)
        self._move = None
        self._settle()
        if self.fault is not None:
            return self.status()

        # 3. approach, stopping on the configured edge of the home signal
        prev = home_on()
        want_rising = h.stop_edge == "rising"

        def edge() -> bool:
            nonlocal prev
            cur = home_on()
            hit = (cur and not prev) if want_rising else (prev and not cur)
            prev = cur
            return hit

        outcome = self._step_until(h.approach_velocity, adir, edge, max_travel)
        if outcome == "limit":
            self.fault = Fault.LIMIT_HIT
            return self.status()
        if outcome == "stopped":
            return self.status()
        self._settle()

        # 4. offset move
        if h.offset_steps != 0:
            off = step_clock(
                h.approach_velocity,
                abs(h.offset_steps),
                start=self.run.t + self._lead_time(),
                direction=FORWARD if h.offset_steps > 0 else REVERSE,
                cfg=self.drive_cfg,
                max_step_rate=self.motor.max_step_rate,
            )
            self._move = _MoveContext(
                profile=None, t0=self.run.t, rate=h.approach_velocity,
                direction=FORWARD if h.offset_steps > 0 else REVERSE,
            )
            self.run.load_schedule(off)
            self._supervise_motion(limits_fault=False)
            self._move = None
            self._settle()
            if self.fault is not None:
                return self.status()

        # 5. reset the register
        self._pos_base = h.reset_position
        self._steps_base = self.run.steps_emitted
        self._origin = h.reset_position
        self.theta_ref = self.run.state.theta
        self.homed = True
        self.move_complete = True
        return self.status()

    # ------------------------------------------------------------------
    # exercise cycle

    def run_exercise_cycle(self, e: ExerciseSpec) -> tuple[AxisStatus, Trace]:
        """Repeat: n steps out, hold energized, n steps back.

        The step rate splits the non-hold cycle time evenly between the
        two legs.  The shaft ends each repetition where it started; the
        hold keeps both windings energized so the joint is restrained at
        holding torque, not detent torque.
        """
        self._begin_operation()
        rate = e.step_rate
        self._check_rate(rate)
        span = e.n_steps * self.step
        theta_now = self.run.state.theta
        if self.cfg.fwd_limit.enabled and theta_now + span >= self.cfg.fwd_limit.position:
            raise ConstraintError("exercise span would reach the forward limit")
        mark = self._trace_mark()
        start_position = self.commanded_position
        hold_ticks = round(e.hold_duration / self.TICK)
        for _ in range(e.repetitions):
            for direction in (FORWARD, REVERSE):
                leg = step_clock(
                    rate,
                    e.n_steps,
                    start=self.run.t + self._lead_time(),
                    direction=direction,
                    cfg=self.drive_cfg,
                    max_step_rate=self.motor.max_step_rate,
                )
                self._move = _MoveContext(
                    profile=None, t0=self.run.t, rate=rate, direction=direction
                )
                self.run.load_schedule(leg)
                self._supervise_motion()
                self._move = None
                if self.fault is not None:
                    return self.status(), self._trace_since(mark)
                if direction == FORWARD and hold_ticks > 0:
                    for _ in range(hold_ticks):
                        self._tick()
                        if self._consume_stop():
                            break
                        self.supervise_following_error()
                    if self.fault is not None:
                        return self.status(), self._trace_since(mark)
        self._finish_move(start_position)
        return self.status(), self._trace_since(mark)
