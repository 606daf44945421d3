"""Discrete active-inference simulator with an authority layer over regulation."""

__version__ = "0.1.0"

from .errors import AlpSimError
from .governance import (
    Authority, GovernanceState, authorize, c_auth, deauthorize, governing_hypothesis,
)
from .inference import (
    BeliefState, PrecisionState, evidence_fit, infer_states, update_hypothesis_posterior,
    update_precision,
)
from .model import (
    Hypothesis, HypothesisSpace, Observation, Policy, ValidationReport, sample_observation,
    validate_model,
)
from .policy import (
    PolicyEvaluation, expected_free_energy, select_policy_alp, select_policy_standard,
)
from .regulation import (
    AutonomicState, ControlParams, NeuromodulationState, StressEvent, apply_neuromodulation,
    compensatory_control, step_autonomic,
)
