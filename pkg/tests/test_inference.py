import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from alpsim.errors import DegenerateEvidenceError, UnknownHypothesisError
from alpsim.inference import (
    BeliefState, PrecisionState, evidence_fit, infer_states, log_evidence,
    predictive_probability, update_hypothesis_posterior, update_precision,
)
from alpsim.model import HypothesisSpace, Observation, Policy

from conftest import random_space, simple_hypothesis


def one_shot_posterior(space, prior, observations, pis):
    """Joint enumeration: P(h, s | o_1..o_T) with static s and tempered likelihoods."""
    n_h = len(space)
    joint_h = np.zeros(n_h)
    state_post = []
    for i, h in enumerate(space.hypotheses):
        weights = h.state_prior.copy()
        for o in observations:
            weights = weights * h.likelihood[:, o] ** pis[i]
        joint_h[i] = prior[i] * weights.sum()
        state_post.append(weights / weights.sum())
    return joint_h / joint_h.sum(), np.array(state_post)


def test_infer_states_worked_example():
    h = simple_hypothesis(likelihood=((0.9, 0.1), (0.3, 0.7)))
    post = infer_states(Observation(0), h, 1.0, [0.5, 0.5])
    assert post == pytest.approx([0.75, 0.25], abs=1e-12)


def test_infer_states_zero_precision_returns_prior():
    h = simple_hypothesis(likelihood=((0.9, 0.1), (0.3, 0.7)))
    prior = np.array([0.2, 0.8])
    post = infer_states(1, h, 0.0, prior)
    assert np.array_equal(post, prior) and post is not prior


def test_infer_states_tempering_sharpens(rng):
    h = simple_hypothesis(likelihood=((0.9, 0.1), (0.3, 0.7)))
    weak = infer_states(0, h, 0.5, [0.5, 0.5])
    strong = infer_states(0, h, 4.0, [0.5, 0.5])
    assert weak[0] < 0.75 < strong[0]
    assert strong == pytest.approx(np.array([0.9**4, 0.3**4]) / (0.9**4 + 0.3**4))


def test_infer_states_degenerate():
    h = simple_hypothesis(likelihood=((1.0, 0.0), (1.0, 0.0)))
    with pytest.raises(DegenerateEvidenceError):
        infer_states(1, h, 1.0, [0.5, 0.5])
    with pytest.raises(ValueError):
        infer_states(0, h, -1.0, [0.5, 0.5])


def test_log_evidence_matches_direct():
    h = simple_hypothesis(likelihood=((0.9, 0.1), (0.3, 0.7)))
    assert log_evidence(0, h, 2.0, [0.4, 0.6]) == pytest.approx(math.log(0.4 * 0.81 + 0.6 * 0.09))
    assert log_evidence(0, h, 0.0, [0.4, 0.6]) == 0.0


def test_posterior_update_plain_bayes(rng):
    for _ in range(50):
        space = random_space(rng)
        prior = rng.dirichlet(np.ones(len(space)))
        beliefs = BeliefState.from_space(space, prior)
        o = int(rng.integers(space.n_obs))
        new = update_hypothesis_posterior(beliefs, Observation(o), space)
        ev = np.array([h.state_prior @ h.likelihood[:, o] for h in space.hypotheses])
        expected = prior * ev / (prior * ev).sum()
        assert np.allclose(new.hypothesis_posterior, expected, atol=1e-12)
        assert new.hypothesis_posterior.sum() == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("tempered", [False, True])
def test_sequential_equals_one_shot_enumeration(tempered):
    rng = np.random.default_rng(7 + tempered)
    for _ in range(200):
        space = random_space(rng, n_h=int(rng.integers(2, 5)), n_states=int(rng.integers(2, 5)),
                             n_obs=int(rng.integers(2, 5)))
        prior = rng.dirichlet(np.ones(len(space)))
        pis = rng.uniform(0.2, 3.0, len(space)) if tempered else np.ones(len(space))
        obs = [int(o) for o in rng.integers(space.n_obs, size=int(rng.integers(1, 4)))]
        beliefs = BeliefState.from_space(space, prior)
        for o in obs:
            beliefs = update_hypothesis_posterior(beliefs, o, space,
                                                  PrecisionState(pis) if tempered else None)
        post, states = one_shot_posterior(space, prior, obs, pis)
        assert np.max(np.abs(beliefs.hypothesis_posterior - post)) <= 1e-9
        assert np.max(np.abs(beliefs.state_posteriors - states)) <= 1e-9


def test_posterior_zero_likelihood_hypothesis_drops_out():
    h0 = simple_hypothesis(0, likelihood=((1.0, 0.0), (1.0, 0.0)))
    h1 = simple_hypothesis(1, repertoire=(1,))
    space = HypothesisSpace((h0, h1), (Policy(0, (0,), 0), Policy(1, (0,), 1)))
    new = update_hypothesis_posterior(BeliefState.from_space(space), 1, space)
    assert new.hypothesis_posterior.tolist() == [0.0, 1.0]


def test_posterior_degenerate_everywhere():
    h0 = simple_hypothesis(0, likelihood=((1.0, 0.0), (1.0, 0.0)))
    h1 = simple_hypothesis(1, likelihood=((1.0, 0.0), (1.0, 0.0)), repertoire=(1,))
    space = HypothesisSpace((h0, h1), (Policy(0, (0,), 0), Policy(1, (0,), 1)))
    with pytest.raises(DegenerateEvidenceError):
        update_hypothesis_posterior(BeliefState.from_space(space), 1, space)


def test_update_does_not_mutate_inputs(rng):
    space = random_space(rng)
    beliefs = BeliefState.from_space(space)
    snapshot = beliefs.hypothesis_posterior.copy()
    update_hypothesis_posterior(beliefs, 0, space)
    assert np.array_equal(beliefs.hypothesis_posterior, snapshot)


def test_update_precision_examples():
    p = PrecisionState(np.array([1.0, 2.0]))
    up = update_precision(p, 0, 1.0, 0.5)
    assert up[0] == pytest.approx(math.exp(0.25)) and up[1] == 2.0
    assert update_precision(p, 1, 0.5, 0.5)[1] == 2.0
    down = update_precision(p, 1, 0.0, 1.0)
    assert down[1] == pytest.approx(2.0 * math.exp(-0.5))


def test_update_precision_clamps():
    p = PrecisionState(np.array([7.9, 0.0]), 0.0, 8.0)
    assert update_precision(p, 0, 1.0, 5.0)[0] == 8.0
    assert update_precision(p, 1, 1.0, 5.0)[1] == 0.0
    assert PrecisionState(np.array([12.0, -1.0]))[0] == 8.0


def test_update_precision_errors():
    p = PrecisionState(np.array([1.0, 1.0]))
    with pytest.raises(ValueError):
        update_precision(p, 0, 1.5, 0.5)
    with pytest.raises(ValueError):
        update_precision(p, 0, 0.5, 0.0)
    with pytest.raises(UnknownHypothesisError):
        update_precision(p, 2, 0.5, 0.5)


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 8), st.floats(0, 1), st.floats(0.01, 5))
def test_update_precision_stays_in_bounds(pi, fit, rate):
    out = update_precision(PrecisionState(np.array([pi, 1.0])), 0, fit, rate)[0]
    assert 0.0 <= out <= 8.0
    if fit > 0.5 and pi > 0:
        assert out >= pi
    if fit < 0.5:
        assert out <= pi


def test_evidence_fit_is_per_hypothesis():
    h0 = simple_hypothesis(0, likelihood=((0.9, 0.1), (0.9, 0.1)))
    h1 = simple_hypothesis(1, likelihood=((0.2, 0.8), (0.2, 0.8)), repertoire=(1,))
    space = HypothesisSpace((h0, h1), (Policy(0, (0,), 0), Policy(1, (0,), 1)))
    beliefs = BeliefState.from_space(space)
    fits = evidence_fit(beliefs, 0, space)
    assert fits == pytest.approx([1.0, 0.25])
    # changing h0's state belief leaves h1's fit unchanged
    other = BeliefState(beliefs.hypothesis_posterior, np.array([[1.0, 0.0], [0.5, 0.5]]))
    assert evidence_fit(other, 0, space)[1] == fits[1]


def test_predictive_probability():
    h = simple_hypothesis(likelihood=((0.9, 0.1), (0.3, 0.7)))
    assert predictive_probability(1, h, [0.5, 0.5]) == pytest.approx(0.4)


def test_belief_state_equality_and_immutability(rng):
    space = random_space(rng)
    a, b = BeliefState.from_space(space), BeliefState.from_space(space)
    assert a == b
    with pytest.raises(ValueError):
        a.hypothesis_posterior[0] = 0.3


def test_exhaustive_small_sequences():
    # every sequence of length <= 3 over 2 observations on a fixed 2x2 model
    h0 = simple_hypothesis(0, likelihood=((0.7, 0.3), (0.4, 0.6)))
    h1 = simple_hypothesis(1, likelihood=((0.1, 0.9), (0.5, 0.5)), repertoire=(1,),
                           prior=np.array([0.3, 0.7]))
    space = HypothesisSpace((h0, h1), (Policy(0, (0,), 0), Policy(1, (0,), 1)))
    for length in range(1, 4):
        for seq in itertools.product(range(2), repeat=length):
            b = BeliefState.from_space(space, np.array([0.6, 0.4]))
            for o in seq:
                b = update_hypothesis_posterior(b, o, space)
            post, _ = one_shot_posterior(space, [0.6, 0.4], seq, [1, 1])
            assert np.allclose(b.hypothesis_posterior, post, atol=1e-12)
