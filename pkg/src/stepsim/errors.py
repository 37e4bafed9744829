"""Exception hierarchy shared across the simulator."""


class StepSimError(Exception):
    """Base class for all stepsim errors."""


class DomainError(StepSimError):
    """An argument is outside the mathematical domain of an operation."""


class ConfigError(StepSimError):
    """A configuration record or file is invalid or unrunnable."""


class ConstraintError(StepSimError):
    """A requested motion violates a kinematic or rate constraint."""


class ScheduleError(StepSimError):
    """A step schedule is malformed or incompatible with the run."""


class IntegrationBlowupError(StepSimError):
    """The integrator produced a non-finite state value."""

    def __init__(self, field: str, t: float):
        self.field = field
        self.t = t
        super().__init__(f"non-finite value in state field '{field}' at t={t:.6g} s")
