"""Canonical scenario templates over a shared h_threat / h_safe space.

Both intervention templates share the stressor battery, seed and parameters:

* pre battery: identity-relevant stressors at 8, 16, 24 s (contexts 0, 1, 2)
* intervention at 30 s
* post battery: stressors at 50, 62, 74 s (contexts 0, 3, 4; 3 and 4 are novel)
* reinstatement: neuromodulation gain 3 from 106 s, stressor at 110 s, gain
  back to 1 at 116 s

They differ only in the intervention. ``governance-intervention`` authorizes
h_safe and deauthorizes h_threat at 30 s. ``precision-intervention`` delivers
15 safety observations (one per second from 30 s, sampled from a safe
environment), which drives h_safe's posterior up and its precision to the
ceiling while leaving the authorized set untouched.
"""
from __future__ import annotations

from dataclasses import replace

import numpy as np

from ..model import Hypothesis, HypothesisSpace, Policy
from ..regulation import StressEvent
from .scenario import (
    GovernanceEvent, InitialConditions, NeuromodulationEvent, ObservationEvent, Scenario,
    SimulationParameters,
)

H_THREAT = 0
H_SAFE = 1
THREAT_CUE, SAFETY_CUE = 0, 1
WITHDRAW, ENGAGE = 0, 1

DEFAULT_SEED = 20240611
HORIZON = 120.0
INTERVENTION_TIME = 30.0
STRESS_MAGNITUDE = 0.5
STRESS_DURATION = 0.4
REINSTATEMENT_GAIN = 3.0

_IDENTITY = np.eye(2)


def two_hypothesis_space() -> HypothesisSpace:
    """h_threat (high set-point, expects danger) vs h_safe (low set-point, expects safety).

    States are (danger, safe); observations are (threat cue, safety cue);
    actions are (withdraw, engage).
    """
    threat = Hypothesis(
        id=H_THREAT, label="h_threat",
        likelihood=[[0.8, 0.2], [0.4, 0.6]],
        transition=[_IDENTITY, [[0.9, 0.1], [0.5, 0.5]]],
        preferences=[0.0, 0.5],
        state_prior=[0.7, 0.3],
        autonomic_setpoint=0.8,
        policy_repertoire=(0, 1),
        stress_appraisal=1.0,
    )
    safe = Hypothesis(
        id=H_SAFE, label="h_safe",
        likelihood=[[0.6, 0.4], [0.1, 0.9]],
        transition=[_IDENTITY, [[0.2, 0.8], [0.0, 1.0]]],
        preferences=[-2.0, 0.0],
        state_prior=[0.3, 0.7],
        autonomic_setpoint=0.1,
        policy_repertoire=(2, 3),
        stress_appraisal=0.4,
    )
    policies = (
        Policy(0, (WITHDRAW, WITHDRAW), H_THREAT),
        Policy(1, (WITHDRAW, ENGAGE), H_THREAT),
        Policy(2, (ENGAGE, ENGAGE), H_SAFE),
        Policy(3, (ENGAGE, WITHDRAW), H_SAFE),
    )
    return HypothesisSpace((threat, safe), policies)


def safe_environment() -> Hypothesis:
    return Hypothesis(
        id=-1, label="environment",
        likelihood=[[0.7, 0.3], [0.05, 0.95]],
        transition=[_IDENTITY, _IDENTITY],
        preferences=[0.0, 0.0],
        state_prior=[0.0, 1.0],
        autonomic_setpoint=0.1,
        policy_repertoire=(),
    )


def _controlled_equilibrium(space, params) -> float:
    # fixed point of set-point pull plus proportional control toward h_safe
    pull = 1.0 / params.tau
    k = params.control_strength
    sp_gov = space[H_THREAT].autonomic_setpoint
    sp_end = space[H_SAFE].autonomic_setpoint
    return (pull * sp_gov + k * sp_end) / (pull + k)


def stress_battery() -> list[StressEvent]:
    pre = [StressEvent(t, STRESS_MAGNITUDE, STRESS_DURATION, ctx, True, "pre")
           for t, ctx in ((8.0, 0), (16.0, 1), (24.0, 2))]
    post = [StressEvent(t, STRESS_MAGNITUDE, STRESS_DURATION, ctx, True, "post")
            for t, ctx in ((50.0, 0), (62.0, 3), (74.0, 4))]
    reinstatement = StressEvent(110.0, STRESS_MAGNITUDE, STRESS_DURATION, 0, True, "reinstatement")
    return pre + post + [reinstatement]


def _base(scenario_id: str, interventions: list, seed: int,
          parameters: SimulationParameters | None) -> Scenario:
    space = two_hypothesis_space()
    params = parameters or SimulationParameters()
    events = stress_battery() + interventions + [
        NeuromodulationEvent(106.0, REINSTATEMENT_GAIN),
        NeuromodulationEvent(116.0, 1.0),
    ]
    # stable sort: same-time events keep their listed order
    events.sort(key=lambda e: e.time)
    return Scenario(
        id=scenario_id,
        space=space,
        initial=InitialConditions(
            hypothesis_prior=(0.5, 0.5),
            precisions=(1.0, 1.0),
            authorized=(H_THREAT,),
            arousal=_controlled_equilibrium(space, params),
        ),
        endorsed=H_SAFE,
        timeline=tuple(events),
        horizon=HORIZON,
        seed=seed,
        parameters=params,
        environment=safe_environment(),
        intervention_time=INTERVENTION_TIME,
    )


def governance_intervention(seed: int = DEFAULT_SEED,
                            parameters: SimulationParameters | None = None) -> Scenario:
    shift = [GovernanceEvent(INTERVENTION_TIME, H_SAFE, "authorize"),
             GovernanceEvent(INTERVENTION_TIME, H_THREAT, "deauthorize")]
    return _base("governance-intervention", shift, seed, parameters)


def precision_intervention(seed: int = DEFAULT_SEED,
                           parameters: SimulationParameters | None = None) -> Scenario:
    confirming = [ObservationEvent(INTERVENTION_TIME + k, true_state=1, context_id=0,
                                   identity_relevant=True) for k in range(15)]
    return _base("precision-intervention", confirming, seed, parameters)


def misaligned_baseline(seed: int = DEFAULT_SEED,
                        parameters: SimulationParameters | None = None) -> Scenario:
    """40 s of sustained misalignment (h_threat governs, h_safe endorsed) with
    four identical stressors; no intervention, no reinstatement."""
    base = _base("misaligned-baseline", [], seed, parameters)
    stress = [StressEvent(t, STRESS_MAGNITUDE, STRESS_DURATION, ctx, True, "pre")
              for t, ctx in ((8.0, 0), (16.0, 1), (24.0, 2), (32.0, 0))]
    return replace(base, timeline=tuple(stress), horizon=40.0, intervention_time=None)


TEMPLATES = {
    "governance-intervention": governance_intervention,
    "precision-intervention": precision_intervention,
    "misaligned-baseline": misaligned_baseline,
}
