from .scenario import (
    ContextEvent, GovernanceEvent, InitialConditions, NeuromodulationEvent, ObservationEvent,
    PrecisionEvent, RunTrace, Scenario, SimulationParameters, StepRecord, run_scenario,
    scenario_problems, validate_scenario,
)
from .metrics import (
    ArousalSeries, CovarianceSignature, Metrics, battery_metrics, compute_metrics, covariance_signature,
    fit_decay_constant, fit_recovery_time_constant,
)
