"""Precision-weighted Bayesian inference over hidden states and hypotheses.

Nothing here reads governance state: belief and precision updating stay
continuous and evidence-driven for every hypothesis in the space.

Precision enters as a likelihood exponent (tempering), so the state update is

    q'(s) ∝ q(s) * A[s, o] ** pi

and the hypothesis-level evidence is the matching tempered marginal
``sum_s q(s) * A[s, o] ** pi``. With these two definitions, sequential
updating over an observation sequence equals one-shot Bayes on the product of
tempered likelihoods.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateEvidenceError, UnknownHypothesisError
from .model import Hypothesis, HypothesisSpace, Observation

PI_MIN = 0.0
PI_MAX = 8.0
LOG_EVIDENCE_FLOOR = math.log(1e-300)


def _readonly(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


def _obs_index(obs) -> int:
    return obs.index if isinstance(obs, Observation) else int(obs)


@dataclass(frozen=True, eq=False)
class BeliefState:
    """Posterior over hypotheses plus one state posterior per hypothesis."""

    hypothesis_posterior: np.ndarray
    state_posteriors: np.ndarray  # (n_hypotheses, n_states)

    def __post_init__(self):
        object.__setattr__(self, "hypothesis_posterior", _readonly(self.hypothesis_posterior))
        object.__setattr__(self, "state_posteriors", _readonly(self.state_posteriors))

    @classmethod
    def from_space(cls, space: HypothesisSpace, hypothesis_prior=None) -> "BeliefState":
        n = len(space)
        prior = np.full(n, 1.0 / n) if hypothesis_prior is None else hypothesis_prior
        return cls(prior, np.stack([h.state_prior for h in space.hypotheses]))

    def __eq__(self, other):
        if not isinstance(other, BeliefState):
            return NotImplemented
        return np.array_equal(self.hypothesis_posterior, other.hypothesis_posterior) and \
            np.array_equal(self.state_posteriors, other.state_posteriors)

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True, eq=False)
class PrecisionState:
    precision: np.ndarray
    pi_min: float = PI_MIN
    pi_max: float = PI_MAX

    def __post_init__(self):
        if self.pi_min < 0 or self.pi_max < self.pi_min:
            raise ValueError(f"invalid precision bounds [{self.pi_min}, {self.pi_max}]")
        object.__setattr__(self, "precision",
                           _readonly(np.clip(self.precision, self.pi_min, self.pi_max)))

    def __len__(self):
        return len(self.precision)

    def __getitem__(self, h_id):
        return float(self.precision[h_id])

    def with_value(self, h_id: int, value: float) -> "PrecisionState":
        if not 0 <= h_id < len(self.precision):
            raise UnknownHypothesisError(h_id)
        new = self.precision.copy()
        new[h_id] = value
        return PrecisionState(new, self.pi_min, self.pi_max)

    def __eq__(self, other):
        if not isinstance(other, PrecisionState):
            return NotImplemented
        return np.array_equal(self.precision, other.precision) and \
            (self.pi_min, self.pi_max) == (other.pi_min, other.pi_max)

    __hash__ = None  # type: ignore[assignment]


def _tempered_log_joint(prior, column, precision):
    with np.errstate(divide="ignore"):
        log_prior = np.log(prior)
        log_lik = np.log(column)
    # 0 * log(0) must stay 0 so that a zero gain leaves the prior untouched
    return log_prior + np.where(log_lik == -np.inf, -np.inf if precision > 0 else 0.0,
                                precision * log_lik)


def infer_states(obs, h: Hypothesis, precision: float, prior) -> np.ndarray:
    """Posterior over hidden states after one observation, likelihood tempered by ``precision``."""
    prior = np.asarray(prior, dtype=float)
    if precision < 0:
        raise ValueError(f"precision must be >= 0, got {precision}")
    if precision == 0:
        return prior.copy()
    o = _obs_index(obs)
    log_joint = _tempered_log_joint(prior, h.likelihood[:, o], precision)
    peak = log_joint.max()
    if peak == -np.inf:
        raise DegenerateEvidenceError(
            f"observation {o} has zero probability under the prior of hypothesis {h.id}")
    post = np.exp(log_joint - peak)
    return post / post.sum()


def log_evidence(obs, h: Hypothesis, precision: float, state_belief) -> float:
    """log sum_s q(s) A[s, o]**precision (0.0 when precision is 0)."""
    if precision == 0:
        return 0.0
    log_joint = _tempered_log_joint(np.asarray(state_belief, float),
                                    h.likelihood[:, _obs_index(obs)], precision)
    peak = log_joint.max()
    if peak == -np.inf:
        return -np.inf
    return float(peak + np.log(np.exp(log_joint - peak).sum()))


def _precision_array(space, precisions):
    if precisions is None:
        return np.ones(len(space))
    if isinstance(precisions, PrecisionState):
        return precisions.precision
    return np.asarray(precisions, dtype=float)


def update_hypothesis_posterior(
    beliefs: BeliefState,
    obs,
    space: HypothesisSpace,
    precisions: PrecisionState | None = None,
) -> BeliefState:
    """Bayes over hypotheses and per-hypothesis state posteriors for one observation.

    ``precisions=None`` means unit precision everywhere (plain Bayes).
    """
    pis = _precision_array(space, precisions)
    log_ev = np.array([
        log_evidence(obs, h, pis[i], beliefs.state_posteriors[i])
        for i, h in enumerate(space.hypotheses)
    ])
    if log_ev.max() < LOG_EVIDENCE_FLOOR:
        raise DegenerateEvidenceError(
            f"observation {_obs_index(obs)} has negligible likelihood under every hypothesis")
    with np.errstate(divide="ignore"):
        log_post = np.log(beliefs.hypothesis_posterior) + log_ev
    peak = log_post.max()
    if peak == -np.inf:
        raise DegenerateEvidenceError("posterior mass vanished for every hypothesis")
    post = np.exp(log_post - peak)
    post /= post.sum()

    states = beliefs.state_posteriors.copy()
    for i, h in enumerate(space.hypotheses):
        # a hypothesis that ruled the observation out keeps its old state belief;
        # its posterior mass is zero anyway
        if log_ev[i] > -np.inf:
            states[i] = infer_states(obs, h, pis[i], beliefs.state_posteriors[i])
    return BeliefState(post, states)


def predictive_probability(obs, h: Hypothesis, state_belief) -> float:
    """P(o | h) under the current (untempered) state belief."""
    return float(np.asarray(state_belief, float) @ h.likelihood[:, _obs_index(obs)])


def evidence_fit(beliefs: BeliefState, obs, space: HypothesisSpace) -> np.ndarray:
    """Per-hypothesis fit in [0, 1]: P(o | h) divided by the hypothesis's own
    most-expected observation probability.

    Each hypothesis is scored against itself so that one hypothesis's beliefs
    never feed into another's precision dynamics.
    """
    o = _obs_index(obs)
    fits = np.empty(len(space))
    for i, h in enumerate(space.hypotheses):
        predictive = beliefs.state_posteriors[i] @ h.likelihood
        top = predictive.max()
        fits[i] = predictive[o] / top if top > 0 else 0.0
    return np.clip(fits, 0.0, 1.0)


def update_precision(
    precisions: PrecisionState, h_id: int, evidence_fit: float, rate: float
) -> PrecisionState:
    """pi_h <- clamp(pi_h * exp(rate * (fit - 0.5))); other entries untouched."""
    if not 0.0 <= evidence_fit <= 1.0:
        raise ValueError(f"evidence_fit must lie in [0, 1], got {evidence_fit}")
    if not rate > 0:
        raise ValueError(f"rate must be > 0, got {rate}")
    if isinstance(h_id, bool) or not 0 <= h_id < len(precisions):
        raise UnknownHypothesisError(h_id)
    value = precisions.precision[h_id] * math.exp(rate * (evidence_fit - 0.5))
    return precisions.with_value(h_id, value)
