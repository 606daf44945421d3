"""Exception hierarchy shared by every alpsim module."""


class AlpSimError(Exception):
    """Base class for all simulator errors."""


class ModelError(AlpSimError):
    """A hypothesis space or hypothesis is structurally unusable."""


class UnknownHypothesisError(AlpSimError, KeyError):
    def __init__(self, h_id):
        super().__init__(h_id)
        self.h_id = h_id

    def __str__(self):
        return f"unknown hypothesis id {self.h_id!r}"


class DegenerateEvidenceError(AlpSimError):
    """Observation has zero (or underflowing) probability under every candidate."""


class EmptyGovernanceError(AlpSimError):
    """The authorized set would be (or is) empty while regulation is active."""


class GovernanceOrderError(AlpSimError):
    """Governance shift time precedes the last logged shift."""


class DimensionError(AlpSimError, ValueError):
    """Array shapes or action indices do not agree with the model."""


class EmptyPolicySetError(AlpSimError):
    pass


class EmptyAdmissiblePolicyError(AlpSimError):
    """Policies exist but none is generated by an authorized hypothesis."""


class StepSizeError(AlpSimError, ValueError):
    pass


class InsufficientDecayError(AlpSimError):
    """Too few post-offset samples above baseline to fit a recovery constant."""


class BatteryMismatchError(AlpSimError):
    pass


class ScenarioError(AlpSimError):
    """Scenario file or Scenario object failed parsing or validation."""

    def __init__(self, message, *, path=None, line=None, column=None):
        super().__init__(message)
        self.path = path
        self.line = line
        self.column = column

    def __str__(self):
        msg = self.args[0]
        if self.line is not None:
            msg = f"line {self.line}, column {self.column}: {msg}"
        if self.path:
            msg = f"{self.path}: {msg}"
        return msg


class ScenarioSyntaxError(ScenarioError):
    pass


class ScenarioVersionError(ScenarioError):
    pass


class SimulationError(AlpSimError):
    """Wraps a module error raised while stepping a scenario."""

    def __init__(self, step, time, cause):
        super().__init__(f"step {step} (t={time:.12g}): {type(cause).__name__}: {cause}")
        self.step = step
        self.time = time
        self.cause = cause
