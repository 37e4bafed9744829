"""Motor model unit tests.

The torque cross-check re-codes the torque expression term by term from
scratch so the production function and the test can only agree by both
matching the model.
"""

import math
import random

import pytest

from stepsim import (
    ConfigError,
    DomainError,
    MotorParams,
    MotorSpec,
    MotorState,
    PhaseVoltages,
    TABLE1,
    back_emf,
    electrical_torque,
    params_from_spec,
    state_derivative,
    step_size,
    torque_constant,
)


def test_torque_constant_reference_motor():
    # 12.08 N.m holding torque at 1.24 A per phase
    assert torque_constant(12.08, 1.24) == pytest.approx(9.7419, abs=5e-4)


def test_torque_constant_trivial_cases():
    assert torque_constant(0.0, 1.0) == 0.0
    assert torque_constant(1.0, 1.0) == 1.0


def test_torque_constant_rejects_nonpositive_current():
    with pytest.raises(DomainError):
        torque_constant(12.08, 0.0)
    with pytest.raises(DomainError):
        torque_constant(12.08, -1.0)


def test_back_emf_zero_speed(table1_params):
    for theta in (-1.0, 0.0, 0.3, 2.7):
        e_a, e_b = back_emf(table1_params, theta, 0.0)
        assert e_a == 0.0 and e_b == 0.0


def test_back_emf_axis_aligned(table1_params):
    e_a, e_b = back_emf(table1_params, 0.0, 1.0)
    assert e_a == pytest.approx(0.0, abs=1e-12)
    assert e_b == pytest.approx(9.7419, abs=5e-4)
    # N_r * theta = pi/2
    theta = (math.pi / 2) / table1_params.N_r
    e_a, e_b = back_emf(table1_params, theta, 2.0)
    assert e_a == pytest.approx(-19.4839, abs=1e-3)
    assert e_b == pytest.approx(0.0, abs=1e-9)


def test_back_emf_magnitude_is_km_omega(table1_params):
    rng = random.Random(7)
    for _ in range(200):
        theta = rng.uniform(-10, 10)
        omega = rng.uniform(-50, 50)
        e_a, e_b = back_emf(table1_params, theta, omega)
        mag = math.hypot(e_a, e_b)
        assert mag == pytest.approx(table1_params.K_m * abs(omega), rel=1e-12)


def test_electrical_torque_trivials(table1_params):
    p = table1_params
    assert electrical_torque(p, MotorState(0.0, 0.0, 0.0, 0.0)) == 0.0
    t = electrical_torque(p, MotorState(0.0, 0.0, 0.0, 1.0))
    assert t == pytest.approx(9.7419, abs=5e-4)


def test_electrical_torque_against_independent_expression(table1_params):
    # Term-by-term re-evaluation, coded independently of the plant module.
    p = table1_params
    rng = random.Random(42)
    for _ in range(1000):
        theta = rng.uniform(-20.0, 20.0)
        i_a = rng.uniform(-3.0, 3.0)
        i_b = rng.uniform(-3.0, 3.0)
        expected = (
            -p.K_m * i_a * math.sin(p.N_r * theta)
            + p.K_m * i_b * math.cos(p.N_r * theta)
            - p.T_d * math.sin(4 * p.N_r * theta)
        )
        got = electrical_torque(p, MotorState(theta, 0.0, i_a, i_b))
        assert got == pytest.approx(expected, rel=1e-12, abs=1e-15)


def test_state_derivative_zero_fixed_point(table1_params):
    d = state_derivative(
        table1_params, MotorState(0.0, 0.0, 0.0, 0.0), PhaseVoltages(0.0, 0.0)
    )
    assert d == (0.0, 0.0, 0.0, 0.0)


def test_state_derivative_voltage_over_inductance(table1_params):
    # di/dt = v/L from rest: 5 V / 0.144 H
    d = state_derivative(
        table1_params, MotorState(0.0, 0.0, 0.0, 0.0), PhaseVoltages(5.0, 0.0)
    )
    assert d.d_i_a == pytest.approx(34.7222, abs=1e-4)
    assert d.d_omega == 0.0
    assert d.d_theta == 0.0
    assert d.d_i_b == 0.0


def test_state_derivative_detent_slope(table1_params):
    # Near theta = 0 with no currents, torque is -T_d * sin(4 N_r eps),
    # so domega/dt ~ -T_d * 4 * N_r * eps / J to first order.
    p = table1_params
    eps = 1e-8
    d = state_derivative(p, MotorState(eps, 0.0, 0.0, 0.0), PhaseVoltages(0.0, 0.0))
    expected = -p.T_d * 4.0 * p.N_r * eps / p.J
    assert d.d_omega == pytest.approx(expected, rel=1e-6)


def test_step_size_values(table1_params):
    assert step_size(table1_params) == pytest.approx(math.radians(1.8), rel=1e-12)
    assert step_size(table1_params) == pytest.approx(0.0314159, abs=1e-7)
    one_tooth = MotorParams(K_m=1.0, N_r=1, R=1.0, L=1.0)
    assert step_size(one_tooth) == math.pi / 2


def test_step_size_consistent_with_steps_per_rev(table1_params):
    assert step_size(table1_params) == pytest.approx(
        2 * math.pi / TABLE1.steps_per_rev, rel=1e-15
    )


def test_motor_spec_validation():
    with pytest.raises(ConfigError):
        MotorSpec(
            step_angle_deg=1.8,
            steps_per_rev=100,  # 1.8 * 100 != 360
            holding_torque=1.0,
            rated_current=1.0,
            phase_resistance=1.0,
            phase_inductance=1.0,
            detent_torque=0.1,
            rotor_inertia=1e-4,
            max_rpm=100,
        )
    with pytest.raises(ConfigError):
        MotorParams(K_m=1.0, N_r=0, R=1.0, L=1.0)
    with pytest.raises(ConfigError):
        MotorParams(K_m=1.0, N_r=50, R=-1.0, L=1.0)


def test_table1_spec_round_numbers():
    assert TABLE1.step_angle_deg * TABLE1.steps_per_rev == 360.0
    assert TABLE1.max_step_rate == pytest.approx(6000.0)
    p = params_from_spec(TABLE1)
    assert p.N_r == 50
    assert p.K_m == pytest.approx(12.08 / 1.24, rel=1e-15)


def _torque_at(p, theta, i_a, i_b):
    return electrical_torque(p, MotorState(theta, 0.0, i_a, i_b))


def test_single_phase_alignment_is_stable_equilibrium(table1_params):
    # (I, 0) at theta = 0: zero torque, restoring slope on both sides.
    p = table1_params
    i = 1.24
    assert _torque_at(p, 0.0, i, 0.0) == 0.0
    eps = 1e-4
    assert _torque_at(p, +eps, i, 0.0) < 0
    assert _torque_at(p, -eps, i, 0.0) > 0


def test_two_phase_equilibrium_lattice(table1_params):
    # With i_A = i_B = I and no detent, torque vanishes exactly at
    # N_r theta = pi/4 + k pi; the pi/4 + 2k pi family is stable.
    p = table1_params
    nodetent = MotorParams(K_m=p.K_m, N_r=p.N_r, R=p.R, L=p.L, B=p.B, J=p.J, T_d=0.0)
    i = 1.24
    for k in range(-3, 4):
        theta = (math.pi / 4 + k * math.pi) / p.N_r
        assert _torque_at(nodetent, theta, i, i) == pytest.approx(0.0, abs=1e-12)
    eps = 1e-5
    theta_stable = (math.pi / 4) / p.N_r
    assert _torque_at(nodetent, theta_stable + eps, i, i) < 0
    assert _torque_at(nodetent, theta_stable - eps, i, i) > 0


def test_detent_lattice(table1_params):
    # De-energized: torque zeros exactly at theta = k pi / (4 N_r).
    p = table1_params
    for k in range(-8, 9):
        theta = k * math.pi / (4 * p.N_r)
        assert _torque_at(p, theta, 0.0, 0.0) == pytest.approx(0.0, abs=1e-13)


def test_phase_lead_advances_equilibrium_by_one_step(table1_params):
    # (I, 0) is stable at 0; (0, I) is stable one step further on.
    p = table1_params
    i = 1.24
    step = step_size(p)
    assert _torque_at(p, step, 0.0, i) == pytest.approx(0.0, abs=1e-12)
    eps = 1e-5
    assert _torque_at(p, step + eps, 0.0, i) < 0
    assert _torque_at(p, step - eps, 0.0, i) > 0
