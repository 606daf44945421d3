"""Authority layer: which hypotheses may regulate, and which one currently does.

Membership of the authorized set changes only through explicit
:func:`authorize` / :func:`deauthorize` calls. No function in this module
reads a belief or precision value in order to decide membership; those values
only rank hypotheses that are already admissible.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Iterable

import numpy as np

from .errors import EmptyGovernanceError, GovernanceOrderError, UnknownHypothesisError
from .inference import BeliefState, PrecisionState


class Authority(str, enum.Enum):
    AUTHORIZED = "authorized"
    UNAUTHORIZED = "unauthorized"


AUTHORIZE = "authorize"
DEAUTHORIZE = "deauthorize"


@dataclass(frozen=True)
class ShiftEvent:
    time: float
    hypothesis_id: int
    action: str  # AUTHORIZE | DEAUTHORIZE


@dataclass(frozen=True)
class GovernanceState:
    """The authorized subset of a fixed universe of hypothesis ids."""

    authorized: frozenset
    hypothesis_ids: frozenset
    shift_log: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "authorized", frozenset(int(h) for h in self.authorized))
        object.__setattr__(self, "hypothesis_ids", frozenset(int(h) for h in self.hypothesis_ids))
        object.__setattr__(self, "shift_log", tuple(self.shift_log))
        unknown = self.authorized - self.hypothesis_ids
        if unknown:
            raise UnknownHypothesisError(min(unknown))

    @classmethod
    def create(cls, authorized: Iterable[int], hypothesis_ids: Iterable[int]) -> "GovernanceState":
        return cls(frozenset(authorized), frozenset(hypothesis_ids))

    def _check(self, h_id):
        if isinstance(h_id, bool) or h_id not in self.hypothesis_ids:
            raise UnknownHypothesisError(h_id)


def c_auth(gov: GovernanceState, h_id: int) -> Authority:
    gov._check(h_id)
    return Authority.AUTHORIZED if h_id in gov.authorized else Authority.UNAUTHORIZED


def _log(gov: GovernanceState, time: float, h_id: int, action: str) -> tuple:
    if gov.shift_log and time < gov.shift_log[-1].time:
        raise GovernanceOrderError(
            f"shift at t={time} precedes last logged shift at t={gov.shift_log[-1].time}")
    return gov.shift_log + (ShiftEvent(float(time), int(h_id), action),)


def authorize(gov: GovernanceState, h_id: int, time: float) -> GovernanceState:
    gov._check(h_id)
    return replace(gov, authorized=gov.authorized | {h_id},
                   shift_log=_log(gov, time, h_id, AUTHORIZE))


def deauthorize(gov: GovernanceState, h_id: int, time: float,
                regulation_active: bool = True) -> GovernanceState:
    gov._check(h_id)
    remaining = gov.authorized - {h_id}
    if regulation_active and not remaining:
        raise EmptyGovernanceError(
            f"deauthorizing hypothesis {h_id} at t={time} would leave no authorized hypothesis")
    return replace(gov, authorized=remaining, shift_log=_log(gov, time, h_id, DEAUTHORIZE))


def _as_precision_array(precisions) -> np.ndarray:
    if isinstance(precisions, PrecisionState):
        return precisions.precision
    return np.asarray(precisions, dtype=float)


def dominance_scores(beliefs: BeliefState, precisions, mode: str = "product") -> np.ndarray:
    posterior = beliefs.hypothesis_posterior
    if mode == "product":
        return _as_precision_array(precisions) * posterior
    if mode == "posterior":
        return posterior.copy()
    raise ValueError(f"unknown dominance mode {mode!r}")


def governing_hypothesis(gov: GovernanceState, beliefs: BeliefState, precisions,
                         mode: str = "product") -> int:
    """Argmax of precision-weighted posterior over the authorized set only.

    Ties go to the lowest id. ``precisions`` may be a :class:`PrecisionState`
    or an effective-precision table (e.g. after neuromodulation gain).
    """
    if not gov.authorized:
        raise EmptyGovernanceError("no authorized hypothesis can govern")
    scores = dominance_scores(beliefs, precisions, mode)
    best = None
    for h_id in sorted(gov.authorized):
        if best is None or scores[h_id] > scores[best]:
            best = h_id
    return best


def raw_precision_argmax(gov: GovernanceState, beliefs: BeliefState, precisions,
                         mode: str = "product") -> int:
    """Ablated resolver: highest precision over the whole space, authority ignored.

    Exists only as a mutation control for the falsification suite.
    """
    pis = _as_precision_array(precisions)
    return int(np.argmax(pis))
