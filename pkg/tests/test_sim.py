"""Integrator tests.

Independent oracles used here: the closed-form RL discharge for the
electrical subsystem, the naive Euler integrator for full trajectories,
and a literal sample-by-sample edge-detection walk for the event
materialization.
"""

import dataclasses
import math
import random

import pytest

from stepsim import (
    DriveState,
    IntegrationBlowupError,
    MotorParams,
    MotorState,
    PhaseVoltages,
    ScheduleError,
    SimConfig,
    SimRun,
    drive_function,
    equilibrium_angle,
    euler_oracle,
    on_ena_sample,
    phase_voltages,
    rk4_step,
    settled_state,
    simulate,
    step_clock,
    step_size,
)
from stepsim.plant import electrical_torque
from stepsim.sim import _rk4_span


def test_rk4_fixed_point(table1_params):
    p = dataclasses.replace(table1_params, load_torque=0.0)
    s = MotorState(0.0, 0.0, 0.0, 0.0)
    out = rk4_step(p, s, PhaseVoltages(0.0, 0.0), 1e-5)
    assert out == (0.0, 0.0, 0.0, 0.0)


def test_rk4_rl_decay_matches_closed_form(table1_params):
    # Pure electrical decay: theta = 0 where the windings decouple from
    # the rotor, so i_A follows exp(-R t / L) exactly.
    p = table1_params
    dt = 1e-5
    t_total = 0.1
    s = MotorState(0.0, 0.0, 1.0, 0.0)
    v = PhaseVoltages(0.0, 0.0)
    n = round(t_total / dt)
    for _ in range(n):
        s = rk4_step(p, s, v, dt)
    assert s.i_a == pytest.approx(math.exp(-p.R * t_total / p.L), abs=1e-8)
    assert s.theta == 0.0 and s.omega == 0.0


def test_span_matches_rk4_step_bitwise(table1_params):
    # simulate() composes the fused span; it must equal rk4_step exactly.
    p = table1_params
    rng = random.Random(11)
    for _ in range(50):
        s = MotorState(
            rng.uniform(-1, 1), rng.uniform(-30, 30), rng.uniform(-2, 2), rng.uniform(-2, 2)
        )
        v = PhaseVoltages(rng.uniform(-16, 16), rng.uniform(-16, 16))
        stepped = rk4_step(p, s, v, 1e-5)
        spanned = _rk4_span(p, s.theta, s.omega, s.i_a, s.i_b, v.v_a, v.v_b, 1e-5, 1)
        assert stepped == spanned


def test_simulate_empty_schedule_stays_at_zero(table1_params, drive_cfg):
    from stepsim import StepSchedule

    cfg = SimConfig(dt=1e-4, duration=0.05, record_stride=10)
    trace = simulate(
        table1_params,
        drive_cfg,
        StepSchedule(()),
        cfg,
        initial_state=MotorState(0.0, 0.0, 0.0, 0.0),
        energized=False,
    )
    assert all(f.theta == 0.0 for f in trace.frames)
    assert trace.final_state == (0.0, 0.0, 0.0, 0.0)


def test_simulate_twenty_steps_settles_at_twenty_lattice_points(table1_params, drive_cfg):
    sched = step_clock(10.0, 20, cfg=drive_cfg)
    cfg = SimConfig(dt=1e-5, duration=3.0, record_stride=100)
    trace = simulate(table1_params, drive_cfg, sched, cfg)
    displacement = trace.final_state.theta - trace.frames[0].theta
    assert displacement == pytest.approx(20 * step_size(table1_params), rel=1e-5)
    assert abs(trace.final_state.omega) < 1e-6


def test_simulate_is_deterministic(table1_params, drive_cfg):
    sched = step_clock(25.0, 7, cfg=drive_cfg)
    cfg = SimConfig(dt=1e-5, duration=0.6, record_stride=50)
    a = simulate(table1_params, drive_cfg, sched, cfg)
    b = simulate(table1_params, drive_cfg, sched, cfg)
    assert a.frames == b.frames
    assert a.final_state == b.final_state


def test_simulate_rejects_schedule_outside_duration(table1_params, drive_cfg):
    sched = step_clock(10.0, 20, cfg=drive_cfg)  # ends at 1.95 s
    with pytest.raises(ScheduleError):
        simulate(table1_params, drive_cfg, sched, SimConfig(dt=1e-4, duration=1.0))


def test_recorded_torque_rederives_from_frame_state(table1_params, drive_cfg):
    sched = step_clock(20.0, 10, cfg=drive_cfg)
    cfg = SimConfig(dt=1e-5, duration=1.0, record_stride=200)
    trace = simulate(table1_params, drive_cfg, sched, cfg)
    assert len(trace.frames) > 100
    for f in trace.frames:
        assert f.torque == electrical_torque(table1_params, f.state)


def test_frame_count_matches_stride(table1_params, drive_cfg):
    from stepsim import StepSchedule

    cfg = SimConfig(dt=1e-4, duration=0.5, record_stride=10)
    trace = simulate(
        table1_params, drive_cfg, StepSchedule(()), cfg,
        initial_state=MotorState(0.0, 0.0, 0.0, 0.0),
        energized=False,
    )
    assert len(trace.frames) == 1 + math.floor(0.5 / (1e-4 * 10))


def test_blowup_error_names_field():
    # An absurd parameter set that diverges numerically.
    p = MotorParams(K_m=1e9, N_r=50, R=1e-9, L=1e-9, B=0.0, J=1e-12)
    s = MotorState(0.1, 1e6, 1e3, 1e3)
    with pytest.raises(IntegrationBlowupError) as err:
        state = s
        for _ in range(10000):
            state = rk4_step(p, state, PhaseVoltages(16.0, -16.0), 1e-2)
    assert err.value.field in ("theta", "omega", "i_a", "i_b")


def test_euler_zero_drive_stays_zero(table1_params):
    out = euler_oracle(
        table1_params,
        MotorState(0.0, 0.0, 0.0, 0.0),
        lambda t: PhaseVoltages(0.0, 0.0),
        duration=0.01,
        dt=1e-6,
    )
    assert out == (0.0, 0.0, 0.0, 0.0)


def test_euler_rl_decay(table1_params):
    p = table1_params
    t_total = 0.02
    out = euler_oracle(
        p,
        MotorState(0.0, 0.0, 1.0, 0.0),
        lambda t: PhaseVoltages(0.0, 0.0),
        duration=t_total,
        dt=1e-7,
    )
    assert out.i_a == pytest.approx(math.exp(-p.R * t_total / p.L), abs=1e-5)


def test_rk4_agrees_with_euler_on_stepping_run(table1_params, drive_cfg):
    # Sup-norm theta agreement between the two integrators on a short
    # stepping scenario, euler dt = rk4 dt / 100.
    p = table1_params
    rate, n_steps = 20.0, 6
    duration = 0.4
    dt_rk4 = 1e-4
    sched = step_clock(rate, n_steps, cfg=drive_cfg)
    cfg = SimConfig(dt=dt_rk4, duration=duration, record_stride=1)
    trace = simulate(p, drive_cfg, sched, cfg)
    rk4_theta = {round(f.t / dt_rk4): f.theta for f in trace.frames}

    samples = {}
    euler_oracle(
        p,
        settled_state(p, drive_cfg, 0),
        drive_function(sched, drive_cfg),
        duration=duration,
        dt=dt_rk4 / 100.0,
        on_sample=lambda t, th: samples.__setitem__(round(t / dt_rk4), th),
        sample_stride=100,
    )
    common = sorted(set(rk4_theta) & set(samples))
    assert len(common) > 3000
    sup = max(abs(rk4_theta[i] - samples[i]) for i in common)
    assert sup <= 1e-4


def test_rk4_order_check_against_oracle(table1_params, drive_cfg):
    # Halving dt must shrink the endpoint error against a much finer
    # reference by at least 8x on a smooth (no switching) interval.
    p = table1_params
    v = phase_voltages(DriveState(0), drive_cfg)
    s0 = MotorState(
        equilibrium_angle(p, 0) - 0.008, 0.0, 1.24, 1.24
    )
    duration = 0.004

    def endpoint(dt: float) -> float:
        s = s0
        for _ in range(round(duration / dt)):
            s = rk4_step(p, s, v, dt)
        return s.theta

    truth = endpoint(1e-6)
    err_coarse = abs(endpoint(4e-4) - truth)
    err_fine = abs(endpoint(2e-4) - truth)
    assert err_fine > 0
    assert err_coarse / err_fine >= 8.0


def test_event_materialization_matches_naive_edge_walk(table1_params, drive_cfg):
    # The fast event path must agree with literally sampling the ENA
    # waveform on the grid through on_ena_sample.
    rng = random.Random(5)
    dt = 1e-4
    pulses = []
    t = 0.01
    while t < 0.8:
        width = rng.uniform(0.004, 0.02)
        rev = rng.choice([0.0, 5.0])
        pulses.append((t, width, rev))
        t += width + rng.uniform(0.005, 0.03)
    from stepsim import StepPulse, StepSchedule

    sched = StepSchedule(tuple(StepPulse(*p) for p in pulses))
    cfg = SimConfig(dt=dt, duration=1.0, record_stride=1)
    trace = simulate(
        table1_params, drive_cfg, sched, cfg,
        initial_state=settled_state(table1_params, drive_cfg, 0),
    )

    # Naive walk: sample the analog pulse train snapped to the grid.
    def level(i: int) -> float:
        for (start, width, _rev) in pulses:
            rise = round(start / dt)
            fall = max(rise + 1, round((start + width) / dt))
            if rise <= i < fall:
                return 5.0
        return 0.0

    def rev_at(i: int) -> float:
        cur = 0.0
        for (start, width, rev) in pulses:
            if round(start / dt) <= i:
                cur = rev
        return cur

    ds = DriveState()
    ks = []
    for i in range(round(1.0 / dt) + 1):
        direction = 1 if rev_at(i) <= drive_cfg.reverse_threshold else -1
        ds = on_ena_sample(ds, level(i), direction, drive_cfg)
        ks.append(ds.phase_index)
    # Compare the phase the simulator used at each recorded frame: the
    # frame voltages identify k mod 4, and ENA levels match too.
    for f in trace.frames:
        i = round(f.t / dt)
        expected_v = phase_voltages(DriveState(ks[i]), drive_cfg)
        assert (f.v_a, f.v_b) == expected_v
        assert f.ena == level(i)


def test_direction_mirror_symmetry(table1_params, drive_cfg):
    # N forward steps vs N reverse steps from the same settled start are
    # exact mirror images about the starting equilibrium.
    p = table1_params
    cfg = SimConfig(dt=1e-5, duration=1.2, record_stride=20)
    theta0 = equilibrium_angle(p, 0)
    fwd = simulate(p, drive_cfg, step_clock(10.0, 8, cfg=drive_cfg), cfg)
    rev = simulate(
        p, drive_cfg, step_clock(10.0, 8, direction=-1, cfg=drive_cfg), cfg
    )
    sup = max(
        abs((a.theta - theta0) + (b.theta - theta0))
        for a, b in zip(fwd.frames, rev.frames)
    )
    assert sup <= 1e-9


def test_equilibrium_ladder_by_settling(table1_params, drive_cfg):
    # Stable equilibrium under phase k sits one step above k-1, found by
    # settling the plant in each state.
    p = table1_params
    step = step_size(p)
    prev_theta = None
    for k in range(0, 9):
        run = SimRun(
            p,
            drive_cfg,
            SimConfig(dt=2e-5, duration=0.6, record_stride=1000),
            initial_state=settled_state(p, drive_cfg, k),
            initial_phase=k,
        )
        run.advance_to_index(run.n_total)
        theta = run.state.theta
        assert abs(run.state.omega) < 1e-9
        if prev_theta is not None:
            assert theta - prev_theta == pytest.approx(step, rel=1e-9)
        prev_theta = theta


def test_schedule_collision_rejected(table1_params, drive_cfg):
    from stepsim import StepPulse, StepSchedule

    # Two pulses that merge after grid snapping cannot both be detected.
    sched = StepSchedule(
        (StepPulse(0.010, 0.010, 0.0), StepPulse(0.015, 0.010, 0.0))
    )
    with pytest.raises(ScheduleError):
        simulate(table1_params, drive_cfg, sched, SimConfig(dt=1e-3, duration=0.1))
