"""Hypothesis space and the discrete generative model each hypothesis induces.

Array conventions (all float64, read-only once constructed):

* ``likelihood``  shape ``(n_states, n_obs)``; row ``s`` is P(o | s).
* ``transition``  shape ``(n_actions, n_states, n_states)``; ``transition[u, s]``
  is P(s' | s, u).
* ``preferences`` shape ``(n_obs,)``; log-preferences over observations.
* ``state_prior`` shape ``(n_states,)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionError, ModelError, UnknownHypothesisError

STOCHASTIC_TOL = 1e-9


def _frozen(values, ndim: int | None = None) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if ndim is not None and arr.ndim != ndim:
        raise ModelError(f"expected a {ndim}-d array, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Policy:
    """A fixed action sequence tagged with the hypothesis that generates it."""

    id: int
    actions: tuple[int, ...]
    generated_by: int

    def __post_init__(self):
        object.__setattr__(self, "actions", tuple(int(a) for a in self.actions))


@dataclass(frozen=True, eq=False)
class Hypothesis:
    """One identity-level hypothesis with its own full POMDP parameterization.

    ``stress_appraisal`` scales identity-relevant stress forcing while this
    hypothesis governs regulation (1.0 = forcing passes through unchanged).
    """

    id: int
    label: str
    likelihood: np.ndarray
    transition: np.ndarray
    preferences: np.ndarray
    state_prior: np.ndarray
    autonomic_setpoint: float
    policy_repertoire: tuple[int, ...]
    stress_appraisal: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "likelihood", _frozen(self.likelihood, 2))
        object.__setattr__(self, "transition", _frozen(self.transition, 3))
        object.__setattr__(self, "preferences", _frozen(self.preferences, 1))
        object.__setattr__(self, "state_prior", _frozen(self.state_prior, 1))
        object.__setattr__(self, "autonomic_setpoint", float(self.autonomic_setpoint))
        object.__setattr__(self, "stress_appraisal", float(self.stress_appraisal))
        object.__setattr__(self, "policy_repertoire", tuple(int(p) for p in self.policy_repertoire))

    @property
    def n_states(self) -> int:
        return self.likelihood.shape[0]

    @property
    def n_obs(self) -> int:
        return self.likelihood.shape[1]

    @property
    def n_actions(self) -> int:
        return self.transition.shape[0]

    def __eq__(self, other):
        if not isinstance(other, Hypothesis):
            return NotImplemented
        return (
            self.id == other.id
            and self.label == other.label
            and self.autonomic_setpoint == other.autonomic_setpoint
            and self.stress_appraisal == other.stress_appraisal
            and self.policy_repertoire == other.policy_repertoire
            and all(
                np.array_equal(getattr(self, name), getattr(other, name))
                for name in ("likelihood", "transition", "preferences", "state_prior")
            )
        )

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True)
class Observation:
    index: int
    context_id: int = 0
    identity_relevant: bool = False


@dataclass(frozen=True)
class HypothesisSpace:
    """Ordered hypotheses plus the policy set they generate.

    Hypothesis ids double as array indices, so they must be ``0..n-1`` in order
    (checked by :func:`validate_model`).
    """

    hypotheses: tuple[Hypothesis, ...]
    policies: tuple[Policy, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "hypotheses", tuple(self.hypotheses))
        object.__setattr__(self, "policies", tuple(self.policies))

    def __len__(self) -> int:
        return len(self.hypotheses)

    def __iter__(self):
        return iter(self.hypotheses)

    def __getitem__(self, h_id: int) -> Hypothesis:
        return self.get(h_id)

    @property
    def ids(self) -> tuple[int, ...]:
        return tuple(h.id for h in self.hypotheses)

    @property
    def n_states(self) -> int:
        return self.hypotheses[0].n_states

    @property
    def n_obs(self) -> int:
        return self.hypotheses[0].n_obs

    @property
    def n_actions(self) -> int:
        return self.hypotheses[0].n_actions

    def get(self, h_id: int) -> Hypothesis:
        if isinstance(h_id, (bool, np.bool_)) or not isinstance(h_id, (int, np.integer)):
            raise UnknownHypothesisError(h_id)
        if 0 <= h_id < len(self.hypotheses) and self.hypotheses[h_id].id == h_id:
            return self.hypotheses[h_id]
        for h in self.hypotheses:
            if h.id == h_id:
                return h
        raise UnknownHypothesisError(h_id)

    def policy(self, p_id: int) -> Policy:
        for p in self.policies:
            if p.id == p_id:
                return p
        raise KeyError(f"unknown policy id {p_id!r}")

    def check_id(self, h_id) -> int:
        self.get(h_id)
        return int(h_id)


@dataclass(frozen=True)
class Violation:
    invariant: str
    message: str
    hypothesis_id: int | None = None
    field: str | None = None
    index: int | None = None
    observed: float | None = None

    def __str__(self):
        where = []
        if self.hypothesis_id is not None:
            where.append(f"hypothesis {self.hypothesis_id}")
        if self.field is not None:
            where.append(self.field if self.index is None else f"{self.field}[{self.index}]")
        prefix = " ".join(where)
        return f"{prefix}: {self.message}" if prefix else self.message


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok

    def __iter__(self):
        return iter(self.violations)

    def __len__(self):
        return len(self.violations)

    def add(self, *args, **kwargs):
        self.violations.append(Violation(*args, **kwargs))


def _check_distribution(report, values, h_id, name, index=None):
    values = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(values)):
        report.add("finite", "non-finite entry", h_id, name, index)
        return
    if np.any(values < 0):
        report.add("non-negative", f"negative entry {values.min():.12g}", h_id, name, index,
                   float(values.min()))
    total = float(values.sum())
    if abs(total - 1.0) > STOCHASTIC_TOL:
        report.add("stochastic", f"sums to {total:.12g}, expected 1", h_id, name, index, total)


def validate_hypothesis(h: Hypothesis, report: ValidationReport | None = None) -> ValidationReport:
    """Check one hypothesis in isolation (shape, stochasticity, set-point)."""
    report = ValidationReport() if report is None else report
    n_states, n_obs = h.likelihood.shape
    if h.transition.shape[1:] != (n_states, n_states):
        report.add("shape", f"transition shape {h.transition.shape} incompatible with "
                   f"{n_states} states", h.id, "transition")
    if h.transition.shape[0] < 1:
        report.add("shape", "no actions", h.id, "transition")
    if h.preferences.shape != (n_obs,):
        report.add("shape", f"preferences shape {h.preferences.shape}, expected ({n_obs},)",
                   h.id, "preferences")
    elif not np.all(np.isfinite(h.preferences)):
        report.add("finite", "non-finite preference", h.id, "preferences")
    if h.state_prior.shape != (n_states,):
        report.add("shape", f"state_prior shape {h.state_prior.shape}, expected ({n_states},)",
                   h.id, "state_prior")
    else:
        _check_distribution(report, h.state_prior, h.id, "state_prior")
    for s in range(n_states):
        _check_distribution(report, h.likelihood[s], h.id, "likelihood", s)
    if h.transition.shape[1:] == (n_states, n_states):
        for u in range(h.transition.shape[0]):
            for s in range(n_states):
                _check_distribution(report, h.transition[u, s], h.id, f"transition[{u}]", s)
    if not 0.0 <= h.autonomic_setpoint <= 1.0:
        report.add("setpoint", f"autonomic_setpoint {h.autonomic_setpoint:.12g} outside [0, 1]",
                   h.id, "autonomic_setpoint", observed=h.autonomic_setpoint)
    if not (np.isfinite(h.stress_appraisal) and h.stress_appraisal >= 0):
        report.add("appraisal", "stress_appraisal must be finite and >= 0", h.id, "stress_appraisal")
    if not h.policy_repertoire:
        report.add("repertoire", "empty repertoire", h.id, "policy_repertoire")
    return report


def validate_model(space: HypothesisSpace) -> ValidationReport:
    """List every violated invariant of ``space``; an empty report means valid."""
    report = ValidationReport()
    hyps = space.hypotheses
    if len(hyps) < 2:
        report.add("size", f"need at least 2 hypotheses, got {len(hyps)}")
    ids = [h.id for h in hyps]
    if len(set(ids)) != len(ids):
        report.add("unique-ids", f"duplicate hypothesis ids {ids}")
    elif ids != list(range(len(ids))):
        report.add("dense-ids", f"hypothesis ids must be 0..{len(ids) - 1} in order, got {ids}")
    for h in hyps:
        validate_hypothesis(h, report)
    if hyps:
        ref = hyps[0]
        for h in hyps[1:]:
            if h.likelihood.shape != ref.likelihood.shape:
                report.add("shape", f"likelihood shape {h.likelihood.shape} differs from "
                           f"{ref.likelihood.shape}", h.id, "likelihood")
            if h.transition.shape != ref.transition.shape:
                report.add("shape", f"transition shape {h.transition.shape} differs from "
                           f"{ref.transition.shape}", h.id, "transition")

    policy_ids = [p.id for p in space.policies]
    if len(set(policy_ids)) != len(policy_ids):
        report.add("unique-policy-ids", f"duplicate policy ids {policy_ids}")
    n_actions = hyps[0].n_actions if hyps else 0
    known = set(ids)
    for p in space.policies:
        if not p.actions:
            report.add("policy", f"policy {p.id} has an empty action sequence", field="policies")
        bad = [a for a in p.actions if not 0 <= a < n_actions]
        if bad:
            report.add("policy", f"policy {p.id} uses unknown actions {bad}", field="policies")
        if p.generated_by not in known:
            report.add("policy", f"policy {p.id} generated_by unknown hypothesis {p.generated_by}",
                       field="policies")
        listing = [h.id for h in hyps if p.id in h.policy_repertoire]
        if listing != [p.generated_by]:
            report.add("policy", f"policy {p.id} (generated_by {p.generated_by}) is listed in "
                       f"repertoires {listing}", field="policies")
    for h in hyps:
        missing = [pid for pid in h.policy_repertoire if pid not in set(policy_ids)]
        if missing and space.policies:
            report.add("repertoire", f"repertoire lists undefined policies {missing}", h.id,
                       "policy_repertoire")
    return report


def sample_observation(
    true_state: int,
    environment: Hypothesis,
    rng: np.random.Generator,
    context_id: int = 0,
    identity_relevant: bool = False,
) -> Observation:
    """Draw one observation from ``environment.likelihood[true_state]``.

    Uses a single uniform draw and inverse-CDF lookup so the stream consumed
    from ``rng`` is one variate per call regardless of the row contents.
    """
    n_states = environment.n_states
    if not 0 <= true_state < n_states:
        raise DimensionError(f"true_state {true_state} outside [0, {n_states})")
    row = environment.likelihood[true_state]
    u = rng.random()
    cdf = np.cumsum(row)
    idx = int(np.searchsorted(cdf, u * cdf[-1], side="right"))
    # guard against u*total landing on the final edge or zero-probability tails
    idx = min(idx, len(row) - 1)
    while row[idx] == 0.0 and idx > 0:
        idx -= 1
    return Observation(idx, context_id, identity_relevant)


def make_space(hypotheses: Iterable[Hypothesis], policies: Sequence[Policy] = ()) -> HypothesisSpace:
    return HypothesisSpace(tuple(hypotheses), tuple(policies))
