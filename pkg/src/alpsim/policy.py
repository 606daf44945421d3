"""Expected free energy and the two policy selectors.

``select_policy_standard`` minimizes G over every policy.
``select_policy_alp`` minimizes G over policies whose generating hypothesis is
authorized; the rest are still scored (for reporting) but never returned.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import DimensionError, EmptyAdmissiblePolicyError, EmptyPolicySetError
from .governance import GovernanceState
from .inference import BeliefState
from .model import Hypothesis, HypothesisSpace, Policy

__all__ = [
    "Policy", "PolicyEvaluation", "PolicySelection", "ModelEvaluator",
    "expected_free_energy", "select_policy_standard", "select_policy_alp", "softmax",
]


@dataclass(frozen=True)
class PolicyEvaluation:
    policy_id: int
    G: float
    risk: float
    ambiguity: float
    admissible: bool = True


@dataclass(frozen=True)
class PolicySelection:
    selected: Policy
    table: tuple[PolicyEvaluation, ...]

    def evaluation(self, policy_id: int) -> PolicyEvaluation:
        for row in self.table:
            if row.policy_id == policy_id:
                return row
        raise KeyError(policy_id)


def softmax(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    z = np.exp(x - x.max())
    return z / z.sum()


def _xlogx_over(p, q):
    # sum p ln(p/q) with the 0 ln 0 = 0 convention
    mask = p > 0
    with np.errstate(divide="ignore"):
        return float(np.sum(p[mask] * (np.log(p[mask]) - np.log(q[mask]))))


def _entropy_rows(matrix) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(matrix > 0, -matrix * np.log(matrix), 0.0)
    return terms.sum(axis=1)


def expected_free_energy(policy: Policy, h: Hypothesis, state_belief) -> PolicyEvaluation:
    """Risk + ambiguity of ``policy`` under hypothesis ``h``, summed over its horizon.

    At each step the state belief is pushed through ``B_h(action)``; risk is
    KL(predicted outcomes || softmax(C_h)) and ambiguity is the expected
    entropy of the likelihood rows under the predicted states.
    """
    qs = np.asarray(state_belief, dtype=float)
    if qs.shape != (h.n_states,):
        raise DimensionError(f"state belief shape {qs.shape}, expected ({h.n_states},)")
    preferred = softmax(h.preferences)
    row_entropy = _entropy_rows(h.likelihood)
    risk = ambiguity = 0.0
    for action in policy.actions:
        if not 0 <= action < h.n_actions:
            raise DimensionError(
                f"policy {policy.id} action {action} outside [0, {h.n_actions}) for hypothesis {h.id}")
        qs = qs @ h.transition[action]
        qo = qs @ h.likelihood
        risk += _xlogx_over(qo, preferred)
        ambiguity += float(qs @ row_entropy)
    risk = max(risk, 0.0)
    return PolicyEvaluation(policy.id, risk + ambiguity, risk, ambiguity)


class ModelEvaluator:
    """Scores each policy under the model and state belief of its generating hypothesis."""

    def __init__(self, space: HypothesisSpace, beliefs: BeliefState):
        self.space = space
        self.beliefs = beliefs

    def __call__(self, policy: Policy) -> PolicyEvaluation:
        h = self.space.get(policy.generated_by)
        return expected_free_energy(policy, h, self.beliefs.state_posteriors[h.id])


Evaluator = Callable[[Policy], PolicyEvaluation]


def _argmin(policies: Sequence[Policy], G: Sequence[float]) -> int:
    best = None
    for i, p in enumerate(policies):
        if best is None or G[i] < G[best] or (G[i] == G[best] and p.id < policies[best].id):
            best = i
    return best


def _choose(candidates, G, gamma, rng) -> int:
    if gamma is None:
        return _argmin(candidates, G)
    if rng is None:
        raise ValueError("stochastic selection needs an rng")
    order = sorted(range(len(candidates)), key=lambda i: candidates[i].id)
    probs = softmax(-gamma * np.asarray([G[i] for i in order]))
    return order[int(rng.choice(len(order), p=probs))]


def select_policy_standard(policies: Iterable[Policy], evaluate: Evaluator,
                           gamma: float | None = None,
                           rng: np.random.Generator | None = None) -> PolicySelection:
    """argmin G over all policies (lowest id on ties), or softmax(-gamma G) sampling."""
    policies = list(policies)
    if not policies:
        raise EmptyPolicySetError("no policies to select from")
    table = [replace(evaluate(p), admissible=True) for p in policies]
    G = [row.G for row in table]
    chosen = _choose(policies, G, gamma, rng)
    return PolicySelection(policies[chosen], tuple(table))


def select_policy_alp(policies: Iterable[Policy], gov: GovernanceState, evaluate: Evaluator,
                      gamma: float | None = None,
                      rng: np.random.Generator | None = None) -> PolicySelection:
    """argmin G restricted to policies generated by authorized hypotheses."""
    policies = list(policies)
    if not policies:
        raise EmptyPolicySetError("no policies to select from")
    table = [replace(evaluate(p), admissible=p.generated_by in gov.authorized) for p in policies]
    admissible = [i for i, row in enumerate(table) if row.admissible]
    if not admissible:
        raise EmptyAdmissiblePolicyError(
            f"none of {len(policies)} policies is generated by an authorized hypothesis "
            f"{sorted(gov.authorized)}")
    candidates = [policies[i] for i in admissible]
    chosen = _choose(candidates, [table[i].G for i in admissible], gamma, rng)
    return PolicySelection(candidates[chosen], tuple(table))
