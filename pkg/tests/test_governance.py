import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from alpsim.errors import EmptyGovernanceError, GovernanceOrderError, UnknownHypothesisError
from alpsim.governance import (
    AUTHORIZE, DEAUTHORIZE, Authority, GovernanceState, authorize, c_auth, deauthorize,
    dominance_scores, governing_hypothesis, raw_precision_argmax,
)
from alpsim.inference import BeliefState, PrecisionState


def beliefs(posterior, n_states=2):
    posterior = np.asarray(posterior, float)
    return BeliefState(posterior, np.full((len(posterior), n_states), 1 / n_states))


def test_c_auth_is_binary():
    gov = GovernanceState.create({0, 2}, range(3))
    assert [c_auth(gov, h) for h in range(3)] == [
        Authority.AUTHORIZED, Authority.UNAUTHORIZED, Authority.AUTHORIZED]
    with pytest.raises(UnknownHypothesisError):
        c_auth(gov, 3)


def test_authorize_then_deauthorize_logs_shifts():
    gov = GovernanceState.create({0}, range(2))
    gov = authorize(gov, 1, 10.0)
    gov = deauthorize(gov, 0, 10.0)
    assert gov.authorized == {1}
    assert [(e.time, e.hypothesis_id, e.action) for e in gov.shift_log] == [
        (10.0, 1, AUTHORIZE), (10.0, 0, DEAUTHORIZE)]


def test_deauthorize_last_member_is_refused():
    gov = GovernanceState.create({0}, range(2))
    with pytest.raises(EmptyGovernanceError):
        deauthorize(gov, 0, 1.0)
    assert deauthorize(gov, 0, 1.0, regulation_active=False).authorized == frozenset()


def test_shift_out_of_order():
    gov = authorize(GovernanceState.create({0}, range(2)), 1, 5.0)
    with pytest.raises(GovernanceOrderError):
        deauthorize(gov, 0, 4.0)


def test_unknown_ids_rejected():
    with pytest.raises(UnknownHypothesisError):
        GovernanceState.create({5}, range(2))
    gov = GovernanceState.create({0}, range(2))
    with pytest.raises(UnknownHypothesisError):
        authorize(gov, 9, 0.0)


def test_governing_worked_example():
    # unauthorized hypothesis has by far the highest pi*P but cannot govern
    gov = GovernanceState.create({0, 1}, range(3))
    b = beliefs([0.2, 0.3, 0.5])
    pis = PrecisionState(np.array([2.0, 1.0, 8.0]))
    assert governing_hypothesis(gov, b, pis) == 0
    assert raw_precision_argmax(gov, b, pis) == 2
    assert governing_hypothesis(gov, b, pis, mode="posterior") == 1


def test_governing_tie_goes_to_lowest_id():
    gov = GovernanceState.create({1, 2}, range(3))
    assert governing_hypothesis(gov, beliefs([0.0, 0.5, 0.5]), np.ones(3)) == 1


def test_governing_accepts_effective_table():
    gov = GovernanceState.create({0, 1}, range(2))
    b = beliefs([0.5, 0.5])
    assert governing_hypothesis(gov, b, np.array([1.0, 3.0])) == 1


def test_empty_governance_cannot_govern():
    gov = GovernanceState(frozenset(), frozenset(range(2)))
    with pytest.raises(EmptyGovernanceError):
        governing_hypothesis(gov, beliefs([0.5, 0.5]), np.ones(2))


def test_dominance_modes():
    b = beliefs([0.25, 0.75])
    assert dominance_scores(b, np.array([2.0, 1.0])) == pytest.approx([0.5, 0.75])
    with pytest.raises(ValueError):
        dominance_scores(b, np.ones(2), mode="max")


@settings(max_examples=300, deadline=None)
@given(st.integers(2, 8).flatmap(lambda n: st.tuples(
    st.just(n),
    st.lists(st.floats(0, 8), min_size=n, max_size=n),
    st.lists(st.floats(0.01, 1), min_size=n, max_size=n),
    st.sets(st.integers(0, n - 1), min_size=1))))
def test_governing_is_authorized_argmax(args):
    n, pis, weights, auth = args
    post = np.array(weights) / sum(weights)
    gov = GovernanceState.create(auth, range(n))
    g = governing_hypothesis(gov, beliefs(post), np.array(pis))
    assert g in auth
    score = np.array(pis) * post
    assert all(score[g] >= score[h] for h in auth)
    # precision values never touch membership
    assert gov.authorized == frozenset(auth)
