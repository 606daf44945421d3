"""Trace metrics: reactivity, recovery constants, effort, cross-context spread."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import BatteryMismatchError, InsufficientDecayError
from ..regulation import StressEvent
from .scenario import RunTrace, Scenario

BASELINE_WINDOW = 2.0       # seconds of pre-onset arousal averaged into the baseline
DECAY_THRESHOLD = 0.01      # samples must sit this far above baseline to enter a fit
MIN_DECAY_SAMPLES = 20
EPSILON_CTX = 0.02


@dataclass(frozen=True)
class ArousalSeries:
    """Bare (time, arousal) samples; accepted wherever a RunTrace is fitted."""

    time: np.ndarray
    arousal: np.ndarray


def fit_decay_constant(times, values, baseline: float, *,
                       threshold: float = DECAY_THRESHOLD,
                       min_samples: int = MIN_DECAY_SAMPLES) -> float:
    """Log-linear least-squares time constant of ``values`` decaying to ``baseline``.

    Uses the leading run of samples whose excursion exceeds ``threshold``;
    returns ``-1 / slope`` of ``ln(value - baseline)`` against time.
    """
    times = np.asarray(times, dtype=float)
    excursion = np.asarray(values, dtype=float) - baseline
    if excursion.size == 0 or excursion[0] <= 0:
        raise InsufficientDecayError("no positive excursion above baseline at stress offset")
    above = excursion > threshold
    n = int(np.argmin(above)) if not above.all() else above.size
    if n < min_samples:
        raise InsufficientDecayError(
            f"only {n} post-offset samples above baseline + {threshold} (need {min_samples})")
    slope, _ = np.polyfit(times[:n], np.log(excursion[:n]), 1)
    if not slope < 0:
        raise InsufficientDecayError(f"excursion does not decay (slope {slope:.6g})")
    return -1.0 / slope


def pre_stress_baseline(trace: RunTrace, onset: float, window: float = BASELINE_WINDOW) -> float:
    t = trace.time
    mask = (t > onset - window - 1e-9) & (t <= onset + 1e-9)
    if not mask.any():
        raise InsufficientDecayError(f"no samples in the {window} s before onset {onset}")
    return float(trace.arousal[mask].mean())


def fit_recovery_time_constant(trace: RunTrace, stress_event: StressEvent,
                               baseline: float | None = None,
                               until: float | None = None) -> float:
    """Recovery time constant after ``stress_event`` ends.

    ``baseline`` defaults to mean arousal over the 2 s before onset; the fit
    window runs from the offset to ``until`` (default: end of trace).
    """
    if baseline is None:
        baseline = pre_stress_baseline(trace, stress_event.time)
    t = trace.time
    stop = math.inf if until is None else until
    mask = (t >= stress_event.offset - 1e-9) & (t < stop)
    return fit_decay_constant(t[mask], trace.arousal[mask], baseline)


@dataclass(frozen=True)
class Metrics:
    peak_reactivity: float
    recovery_tau: tuple[float, ...]
    effort_integral: float
    relapse: bool
    cross_context_spread: float
    performance_proxy: float
    context_deviation: dict = field(default_factory=dict)
    volatility: float = 0.0
    magnitudes: tuple[float, ...] = ()
    excursions: tuple[float, ...] = ()

    @property
    def contexts(self) -> tuple[int, ...]:
        return tuple(sorted(self.context_deviation))

    def as_dict(self) -> dict:
        return {
            "peak_reactivity": self.peak_reactivity,
            "recovery_tau": list(self.recovery_tau),
            "effort_integral": self.effort_integral,
            "relapse": self.relapse,
            "cross_context_spread": self.cross_context_spread,
            "performance_proxy": self.performance_proxy,
            "volatility": self.volatility,
            "contexts": list(self.contexts),
        }


def performance_proxy(trace: RunTrace, start: float = -math.inf, end: float = math.inf) -> float:
    """Fraction of steps whose selected policy is the admissible G-argmin."""
    hits = total = 0
    for r in trace.records:
        if not start < r.time <= end:
            continue
        admissible = [ev for ev in r.evaluations if ev.admissible]
        best = min(admissible, key=lambda ev: (ev.G, ev.policy_id))
        hits += best.policy_id == r.selected_policy
        total += 1
    return hits / total if total else 1.0


def compute_metrics(trace: RunTrace, events, start: float = 0.0, end: float | None = None,
                    settle_time: float | None = None) -> Metrics:
    """Metrics over the stressors ``events`` and the trace window ``(start, end]``.

    A stressor's response window runs from onset to its settle point,
    ``offset + settle_time`` (default 5 tau) or the next onset if sooner. Peak
    excursion is taken over that window; settled arousal for the
    cross-context measure is read at its end.
    """
    events = sorted(events, key=lambda e: e.time)
    t = trace.time
    arousal = trace.arousal
    end = float(t[-1]) if end is None else end
    if settle_time is None:
        settle_time = 5 * trace.tau
    setpoint = trace.column("setpoint")

    excursions, taus, deviation = [], [], {}
    for k, e in enumerate(events):
        next_onset = events[k + 1].time if k + 1 < len(events) else end
        settle_at = min(e.offset + settle_time, next_onset)
        baseline = pre_stress_baseline(trace, e.time)
        resp = (t > e.time) & (t <= settle_at + 1e-9)
        peak = float(arousal[resp].max() - baseline) if resp.any() else 0.0
        excursions.append(max(peak, 0.0))
        try:
            taus.append(fit_recovery_time_constant(trace, e, baseline, until=next_onset))
        except InsufficientDecayError:
            pass
        idx = int(np.searchsorted(t, settle_at + 1e-9, side="right")) - 1
        idx = max(idx, 0)
        dev = abs(float(arousal[idx] - setpoint[idx]))
        deviation[e.context_id] = max(deviation.get(e.context_id, 0.0), dev)

    window = (t > start) & (t <= end + 1e-9)
    effort = float(trace.column("effort")[window].sum() * trace.dt)
    relapse = bool(trace.column("relapse")[window].any())
    return Metrics(
        peak_reactivity=max(excursions, default=0.0),
        recovery_tau=tuple(taus),
        effort_integral=effort,
        relapse=relapse,
        cross_context_spread=max(deviation.values(), default=0.0),
        performance_proxy=performance_proxy(trace, start, end),
        context_deviation=deviation,
        volatility=float(np.var(excursions)) if excursions else 0.0,
        magnitudes=tuple(sorted({e.magnitude for e in events})),
        excursions=tuple(excursions),
    )


def battery_metrics(trace: RunTrace, scenario: Scenario) -> tuple[Metrics, Metrics]:
    """Split a run at ``scenario.intervention_time`` into pre and post batteries."""
    if scenario.intervention_time is None:
        raise ValueError(f"scenario {scenario.id!r} has no intervention_time")
    t_int = scenario.intervention_time
    stress = scenario.stress_events
    settle = 5 * scenario.parameters.tau
    pre = compute_metrics(trace, [e for e in stress if e.time < t_int], 0.0, t_int, settle)
    post = compute_metrics(trace, [e for e in stress if e.time >= t_int], t_int,
                           scenario.horizon, settle)
    return pre, post


@dataclass(frozen=True)
class CovarianceSignature:
    reduced_reactivity: bool
    reduced_control: bool
    cross_context_stable: bool
    reinstatement_resilient: bool

    @property
    def joint(self) -> bool:
        return (self.reduced_reactivity and self.reduced_control
                and self.cross_context_stable and self.reinstatement_resilient)

    def as_dict(self) -> dict:
        return {
            "reduced_reactivity": self.reduced_reactivity,
            "reduced_control": self.reduced_control,
            "cross_context_stable": self.cross_context_stable,
            "reinstatement_resilient": self.reinstatement_resilient,
            "joint": self.joint,
        }


def covariance_signature(pre: Metrics, post: Metrics,
                         epsilon_ctx: float = EPSILON_CTX) -> CovarianceSignature:
    """Compare pre- and post-intervention batteries.

    Cross-context stability is judged only on post contexts absent from the
    pre battery; with no such contexts it is reported as not demonstrated.
    """
    if pre.magnitudes and post.magnitudes and set(pre.magnitudes) != set(post.magnitudes):
        raise BatteryMismatchError(
            f"stress magnitudes differ: pre {pre.magnitudes} vs post {post.magnitudes}")
    novel = [c for c in post.context_deviation if c not in pre.context_deviation]
    return CovarianceSignature(
        reduced_reactivity=post.peak_reactivity < pre.peak_reactivity,
        reduced_control=(post.effort_integral < pre.effort_integral
                         and post.performance_proxy >= pre.performance_proxy),
        cross_context_stable=bool(novel) and all(
            post.context_deviation[c] <= epsilon_ctx for c in novel),
        reinstatement_resilient=not post.relapse,
    )
