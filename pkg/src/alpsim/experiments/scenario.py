"""Scenario definition and the per-tick simulation driver."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from typing import Union

import numpy as np

from ..errors import AlpSimError, ScenarioError, SimulationError
from ..governance import (
    AUTHORIZE, DEAUTHORIZE, GovernanceState, authorize, deauthorize, governing_hypothesis,
    raw_precision_argmax,
)
from ..inference import (
    BeliefState, PrecisionState, evidence_fit, update_hypothesis_posterior, update_precision,
)
from ..model import Hypothesis, HypothesisSpace, Observation, sample_observation, validate_hypothesis, validate_model
from ..policy import ModelEvaluator, PolicySelection, select_policy_alp
from ..regulation import (
    AutonomicState, ControlParams, NeuromodulationState, StressEvent, apply_neuromodulation,
    compensatory_control, step_autonomic,
)

GOVERNANCE_MODES = ("alp", "ablated")
DOMINANCE_MODES = ("product", "posterior")


@dataclass(frozen=True)
class ObservationEvent:
    """Deliver an observation: either a fixed ``index`` or a draw from the
    environment at ``true_state``."""

    time: float
    index: int | None = None
    true_state: int | None = None
    context_id: int = 0
    identity_relevant: bool = False


@dataclass(frozen=True)
class GovernanceEvent:
    time: float
    hypothesis_id: int
    action: str  # "authorize" | "deauthorize"


@dataclass(frozen=True)
class PrecisionEvent:
    """Set a hypothesis's stored precision directly (clamped to bounds)."""

    time: float
    hypothesis_id: int
    value: float


@dataclass(frozen=True)
class NeuromodulationEvent:
    time: float
    gain: float


@dataclass(frozen=True)
class ContextEvent:
    time: float
    context_id: int


Event = Union[ObservationEvent, StressEvent, GovernanceEvent, PrecisionEvent,
              NeuromodulationEvent, ContextEvent]

EVENT_TYPES = {
    "observation": ObservationEvent,
    "stress": StressEvent,
    "governance": GovernanceEvent,
    "precision": PrecisionEvent,
    "neuromodulation": NeuromodulationEvent,
    "context": ContextEvent,
}
EVENT_NAMES = {cls: name for name, cls in EVENT_TYPES.items()}


@dataclass(frozen=True)
class SimulationParameters:
    dt: float = 0.05
    tau: float = 2.0
    control_strength: float = 1.0
    depletion_rate: float = 0.05
    recovery_rate: float = 0.01
    precision_rate: float = 0.5
    pi_min: float = 0.0
    pi_max: float = 8.0
    policy_gamma: float | None = None
    governance_mode: str = "alp"
    dominance: str = "product"

    @property
    def control(self) -> ControlParams:
        return ControlParams(self.control_strength, self.depletion_rate, self.recovery_rate)

    @classmethod
    def field_names(cls) -> tuple[str, ...]:
        return tuple(f.name for f in fields(cls))


@dataclass(frozen=True, eq=False)
class InitialConditions:
    hypothesis_prior: tuple[float, ...]
    precisions: tuple[float, ...]
    authorized: tuple[int, ...]
    arousal: float
    capacity: float = 1.0
    gain: float = 1.0
    context_id: int = 0

    def __post_init__(self):
        object.__setattr__(self, "hypothesis_prior", tuple(float(x) for x in self.hypothesis_prior))
        object.__setattr__(self, "precisions", tuple(float(x) for x in self.precisions))
        object.__setattr__(self, "authorized", tuple(sorted(int(h) for h in self.authorized)))

    def __eq__(self, other):
        if not isinstance(other, InitialConditions):
            return NotImplemented
        return all(getattr(self, f.name) == getattr(other, f.name) for f in fields(self))

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True)
class Scenario:
    id: str
    space: HypothesisSpace
    initial: InitialConditions
    endorsed: int
    timeline: tuple
    horizon: float
    seed: int = 0
    parameters: SimulationParameters = field(default_factory=SimulationParameters)
    environment: Hypothesis | None = None
    intervention_time: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "timeline", tuple(self.timeline))

    @property
    def n_steps(self) -> int:
        return int(round(self.horizon / self.parameters.dt))

    @property
    def stress_events(self) -> tuple[StressEvent, ...]:
        return tuple(e for e in self.timeline if isinstance(e, StressEvent))

    def with_seed(self, seed: int) -> "Scenario":
        return replace(self, seed=int(seed))


def scenario_problems(s: Scenario) -> list[str]:
    """Every reason ``s`` cannot be run; empty when valid."""
    problems = [f"model: {v}" for v in validate_model(s.space)]
    if s.environment is not None:
        env_report = validate_hypothesis(s.environment)
        problems += [f"environment: {v}" for v in env_report if v.invariant != "repertoire"]
        if env_report.ok and s.space.hypotheses and \
                s.environment.likelihood.shape != s.space.hypotheses[0].likelihood.shape:
            problems.append("environment: likelihood shape differs from the hypothesis space")
    if not s.space.policies:
        problems.append("model: no policies defined")
    p = s.parameters
    if not p.dt > 0:
        problems.append(f"parameters.dt must be > 0, got {p.dt}")
    if not p.tau > 0:
        problems.append(f"parameters.tau must be > 0, got {p.tau}")
    for name in ("control_strength", "depletion_rate", "recovery_rate"):
        if getattr(p, name) < 0:
            problems.append(f"parameters.{name} must be >= 0")
    if not p.precision_rate > 0:
        problems.append("parameters.precision_rate must be > 0")
    if not 0 <= p.pi_min <= p.pi_max:
        problems.append(f"parameters: invalid precision bounds [{p.pi_min}, {p.pi_max}]")
    if p.policy_gamma is not None and not p.policy_gamma > 0:
        problems.append("parameters.policy_gamma must be > 0 or null")
    if p.governance_mode not in GOVERNANCE_MODES:
        problems.append(f"parameters.governance_mode must be one of {GOVERNANCE_MODES}")
    if p.dominance not in DOMINANCE_MODES:
        problems.append(f"parameters.dominance must be one of {DOMINANCE_MODES}")
    if not s.horizon > 0:
        problems.append("horizon must be > 0")
    elif p.dt > 0 and abs(s.horizon / p.dt - round(s.horizon / p.dt)) > 1e-6:
        problems.append(f"horizon {s.horizon} is not a whole number of dt={p.dt} steps")

    n = len(s.space)
    ids = set(range(n))
    ini = s.initial
    if len(ini.hypothesis_prior) != n:
        problems.append(f"initial.hypothesis_prior has {len(ini.hypothesis_prior)} entries, expected {n}")
    elif any(x < 0 for x in ini.hypothesis_prior) or abs(sum(ini.hypothesis_prior) - 1) > 1e-9:
        problems.append(f"initial.hypothesis_prior is not a distribution (sum {sum(ini.hypothesis_prior):.12g})")
    if len(ini.precisions) != n:
        problems.append(f"initial.precisions has {len(ini.precisions)} entries, expected {n}")
    elif any(not p.pi_min <= x <= p.pi_max for x in ini.precisions):
        problems.append(f"initial.precisions outside [{p.pi_min}, {p.pi_max}]")
    if not ini.authorized:
        problems.append("initial.authorized is empty")
    elif not set(ini.authorized) <= ids:
        problems.append(f"initial.authorized contains unknown ids {sorted(set(ini.authorized) - ids)}")
    if s.endorsed not in ids:
        problems.append(f"endorsed hypothesis {s.endorsed} unknown")
    if not 0 <= ini.arousal <= 1:
        problems.append("initial.arousal outside [0, 1]")
    if not 0 <= ini.capacity <= 1:
        problems.append("initial.capacity outside [0, 1]")
    if not ini.gain >= 1:
        problems.append("initial.gain must be >= 1")

    gains = [ini.gain]
    last = -math.inf
    for i, e in enumerate(s.timeline):
        where = f"timeline[{i}]"
        if e.time < last:
            problems.append(f"{where}: time {e.time} precedes previous event at {last}")
        last = max(last, e.time)
        if e.time < 0 or e.time > s.horizon:
            problems.append(f"{where}: time {e.time} outside [0, horizon={s.horizon}]")
        if isinstance(e, StressEvent) and e.offset > s.horizon:
            problems.append(f"{where}: stress ends at {e.offset} after horizon")
        if isinstance(e, (GovernanceEvent, PrecisionEvent)) and e.hypothesis_id not in ids:
            problems.append(f"{where}: unknown hypothesis id {e.hypothesis_id}")
        if isinstance(e, GovernanceEvent) and e.action not in (AUTHORIZE, DEAUTHORIZE):
            problems.append(f"{where}: action must be 'authorize' or 'deauthorize'")
        if isinstance(e, NeuromodulationEvent):
            if not e.gain >= 1:
                problems.append(f"{where}: gain must be >= 1")
            gains.append(e.gain)
        if isinstance(e, ObservationEvent):
            if (e.index is None) == (e.true_state is None):
                problems.append(f"{where}: give exactly one of index / true_state")
            elif e.index is not None and n and not 0 <= e.index < s.space.n_obs:
                problems.append(f"{where}: observation index {e.index} out of range")
            elif e.true_state is not None:
                if s.environment is None:
                    problems.append(f"{where}: true_state needs an environment")
                elif not 0 <= e.true_state < s.environment.n_states:
                    problems.append(f"{where}: true_state {e.true_state} out of range")
    if p.dt > 0 and p.tau > 0 and p.dt > p.tau / (10 * max(gains)) * (1 + 1e-12):
        problems.append(f"parameters.dt={p.dt} exceeds tau/(10*max gain)={p.tau / (10 * max(gains)):.6g}")
    return problems


def validate_scenario(s: Scenario) -> Scenario:
    problems = scenario_problems(s)
    if problems:
        raise ScenarioError("; ".join(problems))
    return s


@dataclass(frozen=True)
class StepRecord:
    step: int
    time: float
    context_id: int
    arousal: float
    setpoint: float
    governing: int
    endorsed: int
    effort: float
    capacity: float
    relapse: bool
    gain: float
    stress_input: float
    selected_policy: int
    authorized: tuple[int, ...]
    posterior: tuple[float, ...]
    precision: tuple[float, ...]
    evaluations: tuple  # PolicyEvaluation rows


REGULATION_COLUMNS = ("time", "arousal", "governing", "endorsed", "effort", "capacity",
                      "relapse", "gain", "stress_input")


@dataclass(frozen=True)
class RunTrace:
    """Per-step record of one run plus provenance metadata.

    Each record's ``time`` is the end of its step, i.e. state columns hold the
    values at ``(step + 1) * dt``.
    """

    scenario_id: str
    seed: int
    parameter_hash: str
    dt: float
    records: tuple[StepRecord, ...]
    shift_log: tuple = ()
    tau: float = 2.0

    def __len__(self):
        return len(self.records)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])

    @property
    def time(self) -> np.ndarray:
        return self.column("time")

    @property
    def arousal(self) -> np.ndarray:
        return self.column("arousal")

    def regulation_rows(self) -> list[tuple]:
        return [tuple(getattr(r, c) for c in REGULATION_COLUMNS) + (r.selected_policy,)
                for r in self.records]


def _step_of(time: float, dt: float) -> int:
    return int(math.floor(time / dt + 1e-9))


def run_scenario(s: Scenario, *, validate: bool = True) -> RunTrace:
    """Simulate ``s`` deterministically from its seed.

    Per tick: observations -> belief/precision updates -> precision
    interventions -> governance shifts -> gain events -> governing hypothesis
    (with neuromodulation) -> ALP policy selection -> autonomic step and
    compensatory control -> record.
    """
    from ..scenario_io import parameter_hash  # local: scenario_io imports this module

    if validate:
        validate_scenario(s)
    p = s.parameters
    dt = p.dt
    space = s.space
    rng = np.random.default_rng(s.seed)
    resolve = governing_hypothesis if p.governance_mode == "alp" else raw_precision_argmax

    beliefs = BeliefState.from_space(space, s.initial.hypothesis_prior)
    precisions = PrecisionState(np.array(s.initial.precisions), p.pi_min, p.pi_max)
    gov = GovernanceState.create(s.initial.authorized, space.ids)
    neuro = NeuromodulationState(s.initial.gain)
    auto = AutonomicState(s.initial.arousal, p.tau, s.initial.capacity)
    context = s.initial.context_id
    control = p.control

    by_step: dict[int, list] = {}
    for e in s.timeline:
        if not isinstance(e, StressEvent):
            by_step.setdefault(_step_of(e.time, dt), []).append(e)
    stress = s.stress_events
    stress_windows = [(_step_of(e.time, dt), _step_of(e.offset, dt), e) for e in stress]

    records = []
    for i in range(s.n_steps):
        t = i * dt
        try:
            events = by_step.get(i, ())
            for e in events:
                if isinstance(e, ObservationEvent):
                    if e.index is not None:
                        obs = Observation(e.index, e.context_id, e.identity_relevant)
                    else:
                        obs = sample_observation(e.true_state, s.environment, rng,
                                                 e.context_id, e.identity_relevant)
                    fits = evidence_fit(beliefs, obs, space)
                    beliefs = update_hypothesis_posterior(beliefs, obs, space, precisions)
                    for h_id in space.ids:
                        precisions = update_precision(precisions, h_id, float(fits[h_id]),
                                                      p.precision_rate)
                    context = e.context_id
                elif isinstance(e, PrecisionEvent):
                    precisions = precisions.with_value(e.hypothesis_id, e.value)
                elif isinstance(e, ContextEvent):
                    context = e.context_id
            for e in events:
                if isinstance(e, GovernanceEvent):
                    if e.action == AUTHORIZE:
                        gov = authorize(gov, e.hypothesis_id, e.time)
                    else:
                        gov = deauthorize(gov, e.hypothesis_id, e.time, regulation_active=True)
                elif isinstance(e, NeuromodulationEvent):
                    neuro = NeuromodulationState(e.gain)

            effective = apply_neuromodulation(neuro, precisions, gov)
            governing = resolve(gov, beliefs, effective, p.dominance)
            governor = space.get(governing)
            selection: PolicySelection = select_policy_alp(
                space.policies, gov, ModelEvaluator(space, beliefs), p.policy_gamma, rng)

            stress_input = 0.0
            for start, stop, e in stress_windows:
                if start <= i < stop:
                    stress_input += e.magnitude * (governor.stress_appraisal if e.identity_relevant else 1.0)
                    context = e.context_id

            auto = step_autonomic(auto, governor, stress_input, dt, neuro.gain)
            auto = compensatory_control(s.endorsed, governing, auto, space, dt, control)
        except AlpSimError as exc:
            raise SimulationError(i, t, exc) from exc

        records.append(StepRecord(
            step=i, time=(i + 1) * dt, context_id=context, arousal=auto.arousal,
            setpoint=governor.autonomic_setpoint, governing=governing, endorsed=s.endorsed,
            effort=auto.control_effort, capacity=auto.control_capacity,
            relapse=auto.relapse_flag, gain=neuro.gain, stress_input=stress_input,
            selected_policy=selection.selected.id, authorized=tuple(sorted(gov.authorized)),
            posterior=tuple(beliefs.hypothesis_posterior.tolist()),
            precision=tuple(precisions.precision.tolist()),
            evaluations=selection.table,
        ))
    return RunTrace(s.id, s.seed, parameter_hash(s), dt, tuple(records), gov.shift_log, p.tau)
