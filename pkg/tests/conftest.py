import dataclasses

import pytest

from stepsim import (
    AxisConfig,
    AxisController,
    DriveConfig,
    MotorParams,
    MoveConstraints,
    SwitchConfig,
    TABLE1,
    params_from_spec,
)


@pytest.fixture
def table1_params() -> MotorParams:
    # B = 1e-3 N.m.s/rad throughout the suite unless a test says otherwise.
    return params_from_spec(TABLE1, B=1e-3)


@pytest.fixture
def drive_cfg() -> DriveConfig:
    return DriveConfig()


@pytest.fixture
def axis_cfg() -> AxisConfig:
    return AxisConfig(
        axis_id=0,
        default_constraints=MoveConstraints(v_max=40.0, a_max=80.0, d_max=80.0, j_max=800.0),
        fwd_limit=SwitchConfig(position=3.0),
        rev_limit=SwitchConfig(position=-3.0),
        home=SwitchConfig(position=0.35, width=0.08),
    )


@pytest.fixture
def make_controller(axis_cfg, table1_params):
    def factory(cfg: AxisConfig | None = None, params: MotorParams | None = None, **kwargs):
        kwargs.setdefault("record", False)
        return AxisController(
            cfg or axis_cfg,
            TABLE1,
            params=params or table1_params,
            **kwargs,
        )

    return factory


@pytest.fixture
def closed_loop_cfg(axis_cfg) -> AxisConfig:
    return dataclasses.replace(axis_cfg, loop_mode="closed")
