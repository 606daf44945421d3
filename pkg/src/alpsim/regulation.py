"""Simulated autonomic subsystem.

Arousal follows first-order linear dynamics toward the governing hypothesis's
set-point:

    da/dt = -gain * (a - setpoint_governing) / tau + stress_input

integrated with explicit Euler steps and clamped to [0, 1]. Compensatory
control is a proportional controller that pushes arousal toward the endorsed
hypothesis's set-point while drawing down a finite reservoir.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import StepSizeError
from .governance import GovernanceState
from .inference import PrecisionState
from .model import Hypothesis, HypothesisSpace

DEFAULT_TAU = 2.0
DEFAULT_DT = 0.05


def _clamp01(x: float) -> float:
    return min(1.0, max(0.0, x))


@dataclass(frozen=True)
class AutonomicState:
    arousal: float
    tau: float = DEFAULT_TAU
    control_capacity: float = 1.0
    control_effort: float = 0.0
    relapse_flag: bool = False

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError(f"tau must be > 0, got {self.tau}")
        object.__setattr__(self, "arousal", _clamp01(float(self.arousal)))
        object.__setattr__(self, "control_capacity", _clamp01(float(self.control_capacity)))


@dataclass(frozen=True)
class ControlParams:
    strength: float = 1.0          # k
    depletion_rate: float = 0.05   # rho
    recovery_rate: float = 0.01    # r


@dataclass(frozen=True)
class StressEvent:
    time: float
    magnitude: float  # arousal forcing, 1/s
    duration: float
    context_id: int = 0
    identity_relevant: bool = True
    tag: str = ""

    def __post_init__(self):
        if self.magnitude < 0 or self.duration < 0:
            raise ValueError("stress magnitude and duration must be >= 0")

    @property
    def offset(self) -> float:
        return self.time + self.duration

    def active(self, t: float) -> bool:
        return self.time <= t < self.offset


@dataclass(frozen=True)
class NeuromodulationState:
    gain: float = 1.0

    def __post_init__(self):
        if not self.gain >= 1.0:
            raise ValueError(f"neuromodulation gain must be >= 1, got {self.gain}")


def step_autonomic(state: AutonomicState, governing: Hypothesis, stress_input: float,
                   dt: float, gain: float = 1.0) -> AutonomicState:
    """One Euler step of arousal toward ``governing.autonomic_setpoint``.

    ``gain`` scales the governing hypothesis's pull (effective time constant
    ``tau / gain``); the step must satisfy ``dt <= tau / (10 * gain)``.
    """
    if not dt > 0 or dt > state.tau / (10.0 * gain) * (1 + 1e-12):
        raise StepSizeError(f"dt={dt} outside (0, tau/(10*gain)] = (0, {state.tau / (10 * gain):.6g}]")
    a = state.arousal
    da = -gain * (a - governing.autonomic_setpoint) / state.tau + stress_input
    return replace(state, arousal=_clamp01(a + dt * da))


def compensatory_control(endorsed: int, governing: int, state: AutonomicState,
                         space: HypothesisSpace, dt: float,
                         params: ControlParams = ControlParams()) -> AutonomicState:
    """Apply one step of effortful control toward the endorsed set-point.

    Aligned (endorsed == governing): no effort, reservoir recovers at ``r``.
    Misaligned: effort ``k * max(0, a - setpoint_endorsed)`` lowers arousal
    and drains the reservoir at ``rho * effort``; once the reservoir is empty,
    effort stays at zero and the relapse flag is raised.
    """
    space.get(governing)
    target = space.get(endorsed).autonomic_setpoint
    if endorsed == governing:
        return replace(state, control_effort=0.0, relapse_flag=False,
                       control_capacity=min(1.0, state.control_capacity + params.recovery_rate * dt))
    if state.control_capacity <= 0.0:
        return replace(state, control_effort=0.0, relapse_flag=True)
    effort = params.strength * max(0.0, state.arousal - target)
    capacity = max(0.0, state.control_capacity - params.depletion_rate * effort * dt)
    return replace(state, arousal=_clamp01(state.arousal - effort * dt), control_effort=effort,
                   control_capacity=capacity, relapse_flag=capacity <= 0.0)


def apply_neuromodulation(neuro: NeuromodulationState, precisions: PrecisionState,
                          gov: GovernanceState) -> np.ndarray:
    """Effective precision table: authorized entries times ``gain``, others as stored.

    Returns a fresh array; ``precisions`` itself is never modified.
    """
    if not neuro.gain >= 1.0:
        raise ValueError(f"neuromodulation gain must be >= 1, got {neuro.gain}")
    table = np.array(precisions.precision, dtype=float)
    for h_id in gov.authorized:
        table[h_id] *= neuro.gain
    return table
