"""Four scenario-pair checks mirroring the construct's disconfirmation criteria.

Each check runs the canonical templates and reports whether the simulator
behaves as the authority-layer account predicts. ``governance_mode="ablated"``
swaps the governing-hypothesis resolver for a raw precision argmax over the
whole space, which should break check 1.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

from ..scenario_io import format_report, parameter_hash
from .metrics import EPSILON_CTX, Metrics, battery_metrics, covariance_signature
from .scenario import RunTrace, Scenario, SimulationParameters, run_scenario
from .templates import DEFAULT_SEED, H_SAFE, governance_intervention, precision_intervention

HOLDS = "prediction holds"
VIOLATED = "prediction violated"
ZERO_EFFORT = 1e-12


@dataclass(frozen=True)
class FalsificationConfig:
    seed: int = DEFAULT_SEED
    parameters: dict = field(default_factory=dict)
    relative_difference: float = 0.10

    def simulation_parameters(self) -> SimulationParameters:
        return replace(SimulationParameters(), **self.parameters)


@dataclass(frozen=True)
class CheckResult:
    number: int
    name: str
    holds: bool
    details: dict

    @property
    def verdict(self) -> str:
        return HOLDS if self.holds else VIOLATED


@dataclass(frozen=True)
class FalsificationReport:
    seed: int
    parameter_hash: str
    checks: tuple[CheckResult, ...]

    @property
    def all_hold(self) -> bool:
        return all(c.holds for c in self.checks)

    def to_text(self) -> str:
        sections = []
        for c in self.checks:
            body = {"verdict": c.verdict}
            body.update(c.details)
            sections.append((f"check_{c.number}.{c.name}", body))
        sections.append(("summary", {"all_hold": self.all_hold}))
        return format_report("alpsim falsification report",
                             {"scenario_id": "falsification-suite", "seed": self.seed,
                              "parameter_hash": self.parameter_hash}, sections)


def _relative_gap(a: float, b: float) -> float:
    scale = max(abs(a), abs(b))
    return 0.0 if scale == 0 else abs(a - b) / scale


def _check_precision_escalation(s: Scenario, trace: RunTrace) -> CheckResult:
    last = trace.records[-1]
    escalated = (last.precision[H_SAFE] > s.initial.precisions[H_SAFE]
                 and last.posterior[H_SAFE] > s.initial.hypothesis_prior[H_SAFE])
    governors = sorted({r.governing for r in trace.records})
    reassigned = any(g not in s.initial.authorized for g in governors)
    return CheckResult(1, "precision_escalation_never_reassigns",
                       escalated and not reassigned, {
                           "escalated": escalated,
                           "final_precision_h_safe": last.precision[H_SAFE],
                           "final_posterior_h_safe": last.posterior[H_SAFE],
                           "governing_ids": governors,
                           "reassigned": reassigned,
                       })


def _check_joint(pre: Metrics, post: Metrics) -> CheckResult:
    sig = covariance_signature(pre, post)
    return CheckResult(2, "covariance_markers_cooccur", sig.joint, sig.as_dict())


def _check_aligned_effort(pre: Metrics, post: Metrics) -> CheckResult:
    sig = covariance_signature(pre, post)
    effortless = post.effort_integral <= ZERO_EFFORT
    return CheckResult(3, "stability_without_compensatory_control",
                       effortless and sig.reduced_reactivity, {
                           "post_effort_integral": post.effort_integral,
                           "pre_effort_integral": pre.effort_integral,
                           "reduced_reactivity": sig.reduced_reactivity,
                       })


def _check_dissociation(gov: tuple[Metrics, Metrics], prec: tuple[Metrics, Metrics],
                        tol: float) -> CheckResult:
    g_post, p_post = gov[1], prec[1]
    differs = {
        "effort_integral": _relative_gap(g_post.effort_integral, p_post.effort_integral) > tol,
        "peak_reactivity": _relative_gap(g_post.peak_reactivity, p_post.peak_reactivity) > tol,
        "cross_context_spread": abs(g_post.cross_context_spread - p_post.cross_context_spread) > EPSILON_CTX,
        "relapse": g_post.relapse != p_post.relapse,
    }
    joint_gov = covariance_signature(*gov).joint
    joint_prec = covariance_signature(*prec).joint
    holds = any(differs.values()) and joint_gov != joint_prec
    details = {f"differs_{k}": v for k, v in differs.items()}
    details.update(joint_governance=joint_gov, joint_precision=joint_prec)
    return CheckResult(4, "interventions_dissociate", holds, details)


def falsification_suite(config: FalsificationConfig = FalsificationConfig()) -> FalsificationReport:
    params = config.simulation_parameters()
    gov_s = governance_intervention(config.seed, params)
    prec_s = precision_intervention(config.seed, params)
    gov_trace, prec_trace = run_scenario(gov_s), run_scenario(prec_s)
    gov_m = battery_metrics(gov_trace, gov_s)
    prec_m = battery_metrics(prec_trace, prec_s)
    checks = (
        _check_precision_escalation(prec_s, prec_trace),
        _check_joint(*gov_m),
        _check_aligned_effort(*gov_m),
        _check_dissociation(gov_m, prec_m, config.relative_difference),
    )
    return FalsificationReport(config.seed, parameter_hash(gov_s), checks)
