"""Axis controller behaviour: moves, switches, homing, exercise, stops,
and closed-loop supervision."""

import dataclasses

import pytest

from stepsim import (
    AxisConfig,
    AxisController,
    ConfigError,
    ConstraintError,
    DriveConfig,
    ExerciseSpec,
    Fault,
    HomingConfig,
    MoveConstraints,
    SwitchConfig,
    TABLE1,
    equilibrium_angle,
    settled_state,
    step_size,
)

SLOW = MoveConstraints(v_max=20.0, a_max=60.0, d_max=60.0, j_max=600.0)


def start_theta(table1_params):
    return settled_state(table1_params, DriveConfig(), 0).theta


def test_relative_move_twenty_steps(make_controller, table1_params):
    ctl = make_controller()
    theta0 = ctl.run.state.theta
    status, trace = ctl.execute_straight_move(20, "relative")
    assert status.move_complete
    assert status.fault is None
    assert status.commanded_position == 20
    moved = ctl.run.state.theta - theta0
    assert moved == pytest.approx(20 * step_size(table1_params), rel=1e-3)


def test_zero_step_move_completes_immediately(make_controller):
    ctl = make_controller()
    t_before = ctl.run.t
    status, trace = ctl.execute_straight_move(0, "relative")
    assert status.move_complete
    assert ctl.run.t == t_before
    assert len(trace.frames) == 0


def test_absolute_move_to_current_position_is_noop(make_controller):
    ctl = make_controller()
    ctl.execute_straight_move(5, "relative")
    theta_mid = ctl.run.state.theta
    status, _ = ctl.execute_straight_move(5, "absolute")
    assert status.move_complete
    assert status.commanded_position == 5
    assert ctl.run.state.theta == theta_mid


def test_scurve_move_lands_on_target(make_controller, table1_params):
    ctl = make_controller()
    theta0 = ctl.run.state.theta
    status, _ = ctl.execute_straight_move(12, "relative", profile_kind="scurve")
    assert status.move_complete
    assert ctl.run.state.theta - theta0 == pytest.approx(
        12 * step_size(table1_params), rel=1e-3
    )


def test_move_rejects_overspeed_constraints(make_controller):
    ctl = make_controller()
    with pytest.raises(ConstraintError):
        ctl.execute_straight_move(
            10, constraints=MoveConstraints(v_max=6001.0, a_max=10.0, d_max=10.0)
        )


def test_disabled_axis_rejected(axis_cfg, table1_params):
    cfg = dataclasses.replace(axis_cfg, enabled=False)
    with pytest.raises(ConfigError):
        AxisController(cfg, TABLE1, params=table1_params)


def test_servo_axis_rejected_at_activation(axis_cfg, table1_params):
    cfg = dataclasses.replace(axis_cfg, axis_type="servo")
    with pytest.raises(ConfigError):
        AxisController(cfg, TABLE1, params=table1_params)


def test_microstep_resolution_rejected_at_activation(axis_cfg, table1_params):
    cfg = dataclasses.replace(axis_cfg, microstep_resolution=8)
    with pytest.raises(ConfigError):
        AxisController(cfg, TABLE1, params=table1_params)


# ----------------------------------------------------------------------
# switches


def test_poll_switches_center_and_midway(make_controller, axis_cfg):
    ctl = make_controller()
    home, fwd, rev = ctl.poll_switches(axis_cfg.home.position)
    assert home and not fwd and not rev
    home, fwd, rev = ctl.poll_switches(1.5)
    assert not home and not fwd and not rev
    assert ctl.poll_switches(3.2)[1]
    assert ctl.poll_switches(-3.2)[2]


def test_poll_switches_active_low_reports_inverted_level(axis_cfg, table1_params):
    cfg = dataclasses.replace(
        axis_cfg,
        home=SwitchConfig(position=0.35, width=0.08, active_state="active_low"),
    )
    ctl = AxisController(cfg, TABLE1, params=table1_params, record=False)
    level, _, _ = ctl.poll_switches(0.35)
    assert level is False       # asserted, reported low
    level, _, _ = ctl.poll_switches(1.5)
    assert level is True        # deasserted, reported high


def test_disabled_switch_never_asserts(axis_cfg, table1_params):
    cfg = dataclasses.replace(
        axis_cfg, fwd_limit=SwitchConfig(position=3.0, enabled=False)
    )
    ctl = AxisController(cfg, TABLE1, params=table1_params, record=False)
    assert ctl._asserted_flags(5.0) == (False, True, False) or ctl._asserted_flags(
        5.0
    ) == (False, False, False)
    assert not ctl._asserted_flags(5.0)[1]


# ----------------------------------------------------------------------
# limits


def test_limit_hit_mid_move_decelerates_and_faults(axis_cfg, table1_params):
    # Forward limit placed 10 steps out; a 40-step move must fault and
    # overshoot by no more than v^2/(2 d_max) worth of steps.
    cfg = dataclasses.replace(
        axis_cfg,
        fwd_limit=SwitchConfig(position=equilibrium_angle(table1_params, 10)),
        home=SwitchConfig(position=0.1, width=0.05),
    )
    ctl = AxisController(cfg, TABLE1, params=table1_params, record=False)
    status, _ = ctl.execute_straight_move(40, "relative", constraints=SLOW)
    assert status.fault == Fault.LIMIT_HIT
    assert not status.move_complete
    assert status.commanded_position < 40
    worst_overtravel = SLOW.v_max**2 / (2 * SLOW.d_max)  # steps
    limit = cfg.fwd_limit.position
    assert ctl.run.state.theta <= limit + (worst_overtravel + 1) * ctl.step


def test_move_away_from_asserted_limit_is_allowed(axis_cfg, table1_params):
    cfg = dataclasses.replace(
        axis_cfg,
        fwd_limit=SwitchConfig(position=equilibrium_angle(table1_params, 5)),
        home=SwitchConfig(position=0.05, width=0.04),
    )
    ctl = AxisController(cfg, TABLE1, params=table1_params, record=False)
    status, _ = ctl.execute_straight_move(20, "relative", constraints=SLOW)
    assert status.fault == Fault.LIMIT_HIT
    status, _ = ctl.execute_straight_move(-8, "relative", constraints=SLOW)
    assert status.fault is None
    assert status.move_complete


# ----------------------------------------------------------------------
# stops


def test_stop_idle_axis_records_fault_without_motion(make_controller):
    ctl = make_controller()
    theta0 = ctl.run.state.theta
    status = ctl.stop("decelerating")
    assert status.fault == Fault.STOPPED
    assert not status.move_complete
    assert ctl.run.state.theta == theta0


def test_stop_mid_cruise_ramps_down(make_controller):
    ctl = make_controller()
    fired = {"n": 0}

    def preempt():
        fired["n"] += 1
        return "decelerating" if fired["n"] == 2000 else None

    ctl.preempt = preempt
    status, _ = ctl.execute_straight_move(100, "relative", constraints=SLOW)
    assert status.fault == Fault.STOPPED
    assert not status.move_complete
    assert 0 < status.commanded_position < 100
    ctl.idle(0.5)
    assert abs(ctl.run.state.omega) < 0.01


def test_kill_stop_holds_nearest_equilibrium(make_controller, table1_params):
    ctl = make_controller()
    fired = {"n": 0}

    def preempt():
        fired["n"] += 1
        return "kill" if fired["n"] == 1500 else None

    ctl.preempt = preempt
    status, _ = ctl.execute_straight_move(100, "relative", constraints=SLOW)
    assert status.fault == Fault.STOPPED
    ctl.idle(0.6)
    # the rotor parks on the commanded phase-state equilibrium
    final = ctl.run.state.theta
    expected = equilibrium_angle(table1_params, ctl.run.phase_index)
    assert final == pytest.approx(expected, abs=step_size(table1_params))
    assert abs(ctl.run.state.omega) < 0.01


# ----------------------------------------------------------------------
# following error / loop mode


def test_closed_loop_stall_faults(closed_loop_cfg, table1_params):
    p_loaded = dataclasses.replace(table1_params, load_torque=15.0)
    ctl = AxisController(closed_loop_cfg, TABLE1, params=p_loaded, record=False)
    status, _ = ctl.execute_straight_move(
        20, "relative", constraints=MoveConstraints(v_max=10.0, a_max=40.0, d_max=40.0)
    )
    assert status.fault == Fault.FOLLOWING_ERROR
    assert not status.move_complete


def test_closed_loop_no_load_no_fault(closed_loop_cfg, table1_params):
    ctl = AxisController(closed_loop_cfg, TABLE1, params=table1_params, record=False)
    status, _ = ctl.execute_straight_move(
        20, "relative", constraints=MoveConstraints(v_max=10.0, a_max=40.0, d_max=40.0)
    )
    assert status.fault is None
    assert status.move_complete
    assert ctl.encoder_position() == 20


def test_open_loop_stall_diverges_silently(axis_cfg, table1_params):
    p_loaded = dataclasses.replace(table1_params, load_torque=15.0)
    ctl = AxisController(axis_cfg, TABLE1, params=p_loaded, record=False)
    status, _ = ctl.execute_straight_move(
        20, "relative", constraints=MoveConstraints(v_max=10.0, a_max=40.0, d_max=40.0)
    )
    assert status.fault is None
    assert status.commanded_position == 20
    assert ctl.encoder_position() != 20


def test_open_and_closed_loop_traces_identical_no_load(
    axis_cfg, closed_loop_cfg, table1_params
):
    ctl_open = AxisController(axis_cfg, TABLE1, params=table1_params, record=True)
    ctl_closed = AxisController(closed_loop_cfg, TABLE1, params=table1_params, record=True)
    _, tr_open = ctl_open.execute_straight_move(15, "relative", constraints=SLOW)
    _, tr_closed = ctl_closed.execute_straight_move(15, "relative", constraints=SLOW)
    assert tr_open.frames == tr_closed.frames


# ----------------------------------------------------------------------
# homing


def test_homing_from_power_on(make_controller, axis_cfg):
    ctl = make_controller()
    status = ctl.find_reference(HomingConfig())
    assert status.homed
    assert status.fault is None
    assert status.commanded_position == 0
    # final rest angle is inside/near the home window's rising side
    assert abs(ctl.run.state.theta - axis_cfg.home.position) < 0.1


def test_homing_start_inside_window(make_controller, axis_cfg, table1_params):
    ctl = make_controller()
    ctl.find_reference(HomingConfig())
    theta_ref = ctl.run.state.theta
    # second run starts inside the window: back-off then approach again
    status = ctl.find_reference(HomingConfig())
    assert status.homed
    assert ctl.run.state.theta == pytest.approx(theta_ref, abs=1e-6)


def test_homing_idempotent(make_controller):
    ctl = make_controller()
    ctl.find_reference(HomingConfig())
    first = ctl.run.state.theta
    ctl.find_reference(HomingConfig())
    assert ctl.run.state.theta == pytest.approx(first, abs=1e-6)


def test_homing_with_limit_reversal(axis_cfg, table1_params):
    # Home sits behind the start; searching forward first hits the
    # forward limit, reverses once, then succeeds.
    cfg = dataclasses.replace(
        axis_cfg,
        fwd_limit=SwitchConfig(position=0.8),
        rev_limit=SwitchConfig(position=-0.9),
        home=SwitchConfig(position=-0.5, width=0.08),
    )
    ctl = AxisController(cfg, TABLE1, params=table1_params, record=False)
    status = ctl.find_reference(
        HomingConfig(initial_search_direction="forward", final_approach_direction="forward")
    )
    assert status.homed
    assert status.fault is None
    assert abs(ctl.run.state.theta - (-0.5)) < 0.1


def test_homing_disabled_home_switch_is_config_error(axis_cfg, table1_params):
    cfg = dataclasses.replace(
        axis_cfg, home=SwitchConfig(position=0.35, width=0.08, enabled=False)
    )
    ctl = AxisController(cfg, TABLE1, params=table1_params, record=False)
    with pytest.raises(ConfigError):
        ctl.find_reference(HomingConfig())
    assert ctl.fault == Fault.CONFIG_ERROR


def test_homing_offset_and_reset_position(make_controller, table1_params):
    ctl = make_controller()
    h = HomingConfig(offset_steps=-6, reset_position=100)
    status = ctl.find_reference(h)
    assert status.homed
    assert status.commanded_position == 100
    assert ctl.encoder_position() == 100
    # a subsequent absolute move lands relative to the new register
    status, _ = ctl.execute_straight_move(110, "absolute", constraints=SLOW)
    assert status.move_complete
    assert status.commanded_position == 110


def test_homing_respects_stop_edge_falling(make_controller, axis_cfg, table1_params):
    ctl = make_controller()
    rising = ctl.find_reference(HomingConfig(stop_edge="rising"))
    theta_rising = ctl.run.state.theta
    ctl2_factory_cfg = axis_cfg
    ctl2 = AxisController(ctl2_factory_cfg, TABLE1, params=table1_params, record=False)
    falling = ctl2.find_reference(HomingConfig(stop_edge="falling"))
    theta_falling = ctl2.run.state.theta
    assert rising.homed and falling.homed
    # falling edge stops past the window, rising edge at its near side
    assert theta_falling > theta_rising
    half = axis_cfg.home.width / 2
    assert theta_rising <= axis_cfg.home.position + half
    assert theta_falling >= axis_cfg.home.position + half - 1e-9


# ----------------------------------------------------------------------
# exercise cycles


def test_exercise_spec_validation():
    with pytest.raises(ConstraintError):
        ExerciseSpec(n_steps=0, cycle_duration=5.0, hold_duration=1.0)
    with pytest.raises(ConstraintError):
        ExerciseSpec(n_steps=10, cycle_duration=5.0, hold_duration=5.0)
    with pytest.raises(ConstraintError):
        ExerciseSpec(n_steps=10, cycle_duration=5.0, hold_duration=1.0, repetitions=0)


def test_exercise_rate_arithmetic():
    e = ExerciseSpec(n_steps=20, cycle_duration=5.0, hold_duration=1.0)
    assert e.step_rate == pytest.approx(10.0)


def test_exercise_infeasible_rate_rejected(make_controller):
    ctl = make_controller()
    e = ExerciseSpec(n_steps=7000, cycle_duration=2.2, hold_duration=0.2)
    with pytest.raises(ConstraintError):
        ctl.run_exercise_cycle(e)


def test_exercise_single_cycle_closure_and_peak(make_controller, table1_params):
    ctl = make_controller(record=True)
    theta0 = ctl.run.state.theta
    status, trace = ctl.run_exercise_cycle(
        ExerciseSpec(n_steps=20, cycle_duration=5.0, hold_duration=1.0, repetitions=1)
    )
    assert status.move_complete
    assert status.fault is None
    assert abs(ctl.run.state.theta - theta0) <= 1e-3
    peak = max(f.theta for f in trace.frames) - theta0
    assert peak == pytest.approx(20 * step_size(table1_params), rel=0.03)


def test_exercise_hold_keeps_windings_energized(make_controller, drive_cfg):
    ctl = make_controller(record=True)
    status, trace = ctl.run_exercise_cycle(
        ExerciseSpec(n_steps=5, cycle_duration=3.0, hold_duration=1.0, repetitions=1)
    )
    assert status.move_complete
    v = drive_cfg.supply_voltage
    for f in trace.frames:
        assert abs(f.v_a) == pytest.approx(v) and abs(f.v_b) == pytest.approx(v)


def test_exercise_span_must_clear_limits(axis_cfg, table1_params):
    cfg = dataclasses.replace(
        axis_cfg,
        fwd_limit=SwitchConfig(position=equilibrium_angle(table1_params, 10)),
        home=SwitchConfig(position=0.1, width=0.05),
    )
    ctl = AxisController(cfg, TABLE1, params=table1_params, record=False)
    with pytest.raises(ConstraintError):
        ctl.run_exercise_cycle(ExerciseSpec(n_steps=20, cycle_duration=5.0, hold_duration=1.0))


# ----------------------------------------------------------------------
# status consistency


def test_move_complete_implies_exact_target_and_zero_velocity(make_controller):
    ctl = make_controller()
    status, _ = ctl.execute_straight_move(33, "relative", constraints=SLOW)
    assert status.move_complete
    assert status.commanded_position == 33
    assert status.velocity == 0.0


def test_new_operation_clears_previous_fault(make_controller):
    ctl = make_controller()
    ctl.stop("kill")
    assert ctl.fault == Fault.STOPPED
    status, _ = ctl.execute_straight_move(4, "relative", constraints=SLOW)
    assert status.fault is None
    assert status.move_complete


def test_active_low_step_polarity_moves_identically(axis_cfg, table1_params):
    # Inverted ENA line: steps fire on the return to idle-high; the
    # settled displacement matches the active-high axis exactly.
    low_cfg = dataclasses.replace(axis_cfg, step_polarity="active_low")
    hi = AxisController(axis_cfg, TABLE1, params=table1_params, record=False)
    lo = AxisController(low_cfg, TABLE1, params=table1_params, record=False)
    th0_hi, th0_lo = hi.run.state.theta, lo.run.state.theta
    st_hi, _ = hi.execute_straight_move(9, "relative", constraints=SLOW)
    st_lo, _ = lo.execute_straight_move(9, "relative", constraints=SLOW)
    assert st_hi.move_complete and st_lo.move_complete
    d_hi = hi.run.state.theta - th0_hi
    d_lo = lo.run.state.theta - th0_lo
    # same step count; settle residual differs because the inverted
    # line's edges land a pulse-width later
    assert d_lo == pytest.approx(d_hi, abs=1e-4)
    assert st_hi.commanded_position == st_lo.commanded_position == 9
