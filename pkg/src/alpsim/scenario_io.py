"""Scenario file format, trace CSV export and key-value reports.

Scenario files are JSON documents (``"version": 1``). Floats are written with
Python's shortest round-trip representation, so ``parse(emit(s)) == s``
bit-for-bit. Unknown keys are rejected unless ``strict=False``, in which case
they are reported through :mod:`warnings`.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import tempfile
import warnings
from dataclasses import MISSING, fields
from pathlib import Path

import numpy as np

from .errors import ScenarioError, ScenarioSyntaxError, ScenarioVersionError
from .model import Hypothesis, HypothesisSpace, Policy
from .experiments.scenario import (
    EVENT_NAMES, EVENT_TYPES, InitialConditions, RunTrace, Scenario,
    SimulationParameters, scenario_problems,
)

FORMAT_VERSION = 1

FORMAT_HELP = """\
Scenario file format (JSON, version 1). Keys marked * are required.

  version*            1
  id*                 scenario name, copied into every output
  seed                integer RNG seed (default 0); --seed overrides it
  horizon*            simulated seconds; must be a whole number of dt steps
  intervention_time   seconds or null; splits stressors into pre/post batteries
  endorsed*           id of the consciously endorsed hypothesis
  parameters          dt, tau, control_strength, depletion_rate, recovery_rate,
                      precision_rate, pi_min, pi_max, policy_gamma (null =
                      deterministic argmin), governance_mode ("alp"|"ablated"),
                      dominance ("product"|"posterior")
  hypotheses*         list of {id, label, likelihood [states][obs],
                      transition [actions][states][states], preferences [obs],
                      state_prior [states], autonomic_setpoint, policy_repertoire,
                      stress_appraisal (default 1.0)}
  policies*           list of {id, actions, generated_by}
  environment         null or a hypothesis object (ground truth for sampled
                      observations; policy_repertoire may be empty)
  initial*            {hypothesis_prior, precisions, authorized, arousal,
                       capacity (1.0), gain (1.0), context_id (0)}
  timeline            time-ordered list of events, each with "type" and "time":
                        stress          magnitude, duration, context_id,
                                        identity_relevant, tag
                        observation     index | true_state, context_id,
                                        identity_relevant
                        governance      hypothesis_id, action
                                        ("authorize"|"deauthorize")
                        precision       hypothesis_id, value
                        neuromodulation gain
                        context         context_id
"""


class _Reader:
    def __init__(self, strict: bool, source: str | None):
        self.strict = strict
        self.source = source

    def fail(self, where: str, message: str):
        raise ScenarioError(f"{where}: {message}", path=self.source)

    def keys(self, obj, where, required, optional):
        if not isinstance(obj, dict):
            self.fail(where, f"expected an object, got {type(obj).__name__}")
        for key in required:
            if key not in obj:
                self.fail(where, f"missing required key {key!r}")
        unknown = [k for k in obj if k not in required and k not in optional]
        for key in unknown:
            msg = f"{where}: unknown key {key!r}"
            if self.strict:
                raise ScenarioError(msg, path=self.source)
            warnings.warn(msg, stacklevel=3)

    def number(self, value, where, allow_none=False):
        if value is None and allow_none:
            return None
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            self.fail(where, f"expected a number, got {value!r}")
        return float(value)

    def integer(self, value, where, allow_none=False):
        if value is None and allow_none:
            return None
        if isinstance(value, bool) or not isinstance(value, int):
            self.fail(where, f"expected an integer, got {value!r}")
        return value

    def boolean(self, value, where):
        if not isinstance(value, bool):
            self.fail(where, f"expected true/false, got {value!r}")
        return value

    def string(self, value, where):
        if not isinstance(value, str):
            self.fail(where, f"expected a string, got {value!r}")
        return value

    def array(self, value, where, ndim):
        def check(v, path, depth):
            if depth == 0:
                self.number(v, path)
                return
            if not isinstance(v, list):
                self.fail(path, f"expected a {depth}-d list")
            for i, item in enumerate(v):
                check(item, f"{path}[{i}]", depth - 1)
        check(value, where, ndim)
        arr = np.array(value, dtype=float)
        if arr.ndim != ndim:
            self.fail(where, f"ragged or mis-shaped array (got shape {arr.shape})")
        return arr

    def int_list(self, value, where):
        if not isinstance(value, list):
            self.fail(where, "expected a list of integers")
        return tuple(self.integer(v, f"{where}[{i}]") for i, v in enumerate(value))

    def num_list(self, value, where):
        if not isinstance(value, list):
            self.fail(where, "expected a list of numbers")
        return tuple(self.number(v, f"{where}[{i}]") for i, v in enumerate(value))


_HYP_REQUIRED = ("id", "label", "likelihood", "transition", "preferences", "state_prior",
                 "autonomic_setpoint", "policy_repertoire")


def _hypothesis(r: _Reader, obj, where) -> Hypothesis:
    r.keys(obj, where, _HYP_REQUIRED, ("stress_appraisal",))
    return Hypothesis(
        id=r.integer(obj["id"], f"{where}.id"),
        label=r.string(obj["label"], f"{where}.label"),
        likelihood=r.array(obj["likelihood"], f"{where}.likelihood", 2),
        transition=r.array(obj["transition"], f"{where}.transition", 3),
        preferences=r.array(obj["preferences"], f"{where}.preferences", 1),
        state_prior=r.array(obj["state_prior"], f"{where}.state_prior", 1),
        autonomic_setpoint=r.number(obj["autonomic_setpoint"], f"{where}.autonomic_setpoint"),
        policy_repertoire=r.int_list(obj["policy_repertoire"], f"{where}.policy_repertoire"),
        stress_appraisal=r.number(obj.get("stress_appraisal", 1.0), f"{where}.stress_appraisal"),
    )


_EVENT_FIELD_KIND = {
    "time": "number", "magnitude": "number", "duration": "number", "value": "number",
    "gain": "number", "context_id": "integer", "hypothesis_id": "integer",
    "index": "opt_integer", "true_state": "opt_integer", "identity_relevant": "boolean",
    "action": "string", "tag": "string",
}


def _event(r: _Reader, obj, where):
    if not isinstance(obj, dict):
        r.fail(where, "expected an object")
    kind = obj.get("type")
    if kind not in EVENT_TYPES:
        r.fail(f"{where}.type", f"unknown event type {kind!r}; expected one of {sorted(EVENT_TYPES)}")
    cls = EVENT_TYPES[kind]
    names = [f.name for f in fields(cls)]
    required = [f.name for f in fields(cls)
                if f.default is MISSING and f.default_factory is MISSING]
    r.keys(obj, where, ["type"] + required, names)
    kwargs = {}
    for name in names:
        if name not in obj:
            continue
        kind_ = _EVENT_FIELD_KIND[name]
        path = f"{where}.{name}"
        value = obj[name]
        if kind_ == "number":
            kwargs[name] = r.number(value, path)
        elif kind_ == "integer":
            kwargs[name] = r.integer(value, path)
        elif kind_ == "opt_integer":
            kwargs[name] = r.integer(value, path, allow_none=True)
        elif kind_ == "boolean":
            kwargs[name] = r.boolean(value, path)
        else:
            kwargs[name] = r.string(value, path)
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        r.fail(where, str(exc))


def scenario_from_dict(doc, *, strict: bool = True, source: str | None = None,
                       validate: bool = True) -> Scenario:
    r = _Reader(strict, source)
    r.keys(doc, "<root>", ("version", "id", "horizon", "endorsed", "hypotheses", "policies",
                            "initial"),
           ("seed", "intervention_time", "parameters", "environment", "timeline"))
    version = doc["version"]
    if version != FORMAT_VERSION:
        raise ScenarioVersionError(
            f"unsupported scenario version {version!r} (this build reads {FORMAT_VERSION})",
            path=source)

    param_doc = doc.get("parameters", {})
    names = SimulationParameters.field_names()
    r.keys(param_doc, "parameters", (), names)
    params = {}
    for name in names:
        if name not in param_doc:
            continue
        value = param_doc[name]
        if name in ("governance_mode", "dominance"):
            params[name] = r.string(value, f"parameters.{name}")
        else:
            params[name] = r.number(value, f"parameters.{name}", allow_none=name == "policy_gamma")

    hyps_doc = doc["hypotheses"]
    if not isinstance(hyps_doc, list):
        r.fail("hypotheses", "expected a list")
    hypotheses = [_hypothesis(r, h, f"hypotheses[{i}]") for i, h in enumerate(hyps_doc)]

    pol_doc = doc["policies"]
    if not isinstance(pol_doc, list):
        r.fail("policies", "expected a list")
    policies = []
    for i, p in enumerate(pol_doc):
        where = f"policies[{i}]"
        r.keys(p, where, ("id", "actions", "generated_by"), ())
        policies.append(Policy(r.integer(p["id"], f"{where}.id"),
                               r.int_list(p["actions"], f"{where}.actions"),
                               r.integer(p["generated_by"], f"{where}.generated_by")))

    env_doc = doc.get("environment")
    environment = None if env_doc is None else _hypothesis(r, env_doc, "environment")

    ini = doc["initial"]
    r.keys(ini, "initial", ("hypothesis_prior", "precisions", "authorized", "arousal"),
           ("capacity", "gain", "context_id"))
    initial = InitialConditions(
        hypothesis_prior=r.num_list(ini["hypothesis_prior"], "initial.hypothesis_prior"),
        precisions=r.num_list(ini["precisions"], "initial.precisions"),
        authorized=r.int_list(ini["authorized"], "initial.authorized"),
        arousal=r.number(ini["arousal"], "initial.arousal"),
        capacity=r.number(ini.get("capacity", 1.0), "initial.capacity"),
        gain=r.number(ini.get("gain", 1.0), "initial.gain"),
        context_id=r.integer(ini.get("context_id", 0), "initial.context_id"),
    )

    timeline_doc = doc.get("timeline", [])
    if not isinstance(timeline_doc, list):
        r.fail("timeline", "expected a list")
    timeline = [_event(r, e, f"timeline[{i}]") for i, e in enumerate(timeline_doc)]

    scenario = Scenario(
        id=r.string(doc["id"], "id"),
        space=HypothesisSpace(tuple(hypotheses), tuple(policies)),
        initial=initial,
        endorsed=r.integer(doc["endorsed"], "endorsed"),
        timeline=tuple(timeline),
        horizon=r.number(doc["horizon"], "horizon"),
        seed=r.integer(doc.get("seed", 0), "seed"),
        parameters=SimulationParameters(**params),
        environment=environment,
        intervention_time=r.number(doc.get("intervention_time"), "intervention_time", allow_none=True),
    )
    if validate:
        problems = scenario_problems(scenario)
        if problems:
            raise ScenarioError("invalid scenario: " + "; ".join(_pathify(p) for p in problems),
                                path=source)
    return scenario


def _pathify(problem: str) -> str:
    # "model: hypothesis 1 likelihood[0]: ..." -> "hypotheses[1].likelihood row 0: ..."
    if problem.startswith("model: hypothesis "):
        rest = problem[len("model: hypothesis "):]
        h_id, _, tail = rest.partition(" ")
        fld, _, msg = tail.partition(": ")
        if "[" in fld and fld.endswith("]"):
            name, _, idx = fld[:-1].rpartition("[")
            fld = f"{name} row {idx}"
        return f"hypotheses[{h_id}].{fld}: {msg}"
    return problem


def parse_scenario_text(text: str, *, strict: bool = True, source: str | None = None,
                        validate: bool = True) -> Scenario:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioSyntaxError(exc.msg, path=source, line=exc.lineno, column=exc.colno) from exc
    return scenario_from_dict(doc, strict=strict, source=source, validate=validate)


def parse_scenario(path, *, strict: bool = True, validate: bool = True) -> Scenario:
    """Read and fully validate a scenario file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError(f"cannot read file: {exc.strerror}", path=str(path)) from exc
    return parse_scenario_text(text, strict=strict, source=str(path), validate=validate)


def _hyp_doc(h: Hypothesis) -> dict:
    return {
        "id": h.id,
        "label": h.label,
        "likelihood": h.likelihood.tolist(),
        "transition": h.transition.tolist(),
        "preferences": h.preferences.tolist(),
        "state_prior": h.state_prior.tolist(),
        "autonomic_setpoint": h.autonomic_setpoint,
        "stress_appraisal": h.stress_appraisal,
        "policy_repertoire": list(h.policy_repertoire),
    }


def _event_doc(e) -> dict:
    doc = {"type": EVENT_NAMES[type(e)]}
    for f in fields(e):
        value = getattr(e, f.name)
        doc[f.name] = float(value) if _EVENT_FIELD_KIND[f.name] == "number" else value
    return doc


def scenario_to_dict(s: Scenario) -> dict:
    params = {}
    for name in SimulationParameters.field_names():
        value = getattr(s.parameters, name)
        params[name] = value if isinstance(value, str) or value is None else float(value)
    ini = s.initial
    return {
        "version": FORMAT_VERSION,
        "id": s.id,
        "seed": s.seed,
        "horizon": float(s.horizon),
        "intervention_time": None if s.intervention_time is None else float(s.intervention_time),
        "endorsed": s.endorsed,
        "parameters": params,
        "hypotheses": [_hyp_doc(h) for h in s.space.hypotheses],
        "policies": [{"id": p.id, "actions": list(p.actions), "generated_by": p.generated_by}
                     for p in s.space.policies],
        "environment": None if s.environment is None else _hyp_doc(s.environment),
        "initial": {
            "hypothesis_prior": list(ini.hypothesis_prior),
            "precisions": list(ini.precisions),
            "authorized": list(ini.authorized),
            "arousal": float(ini.arousal),
            "capacity": float(ini.capacity),
            "gain": float(ini.gain),
            "context_id": ini.context_id,
        },
        "timeline": [_event_doc(e) for e in s.timeline],
    }


def emit_scenario(s: Scenario) -> str:
    return json.dumps(scenario_to_dict(s), indent=2, allow_nan=False) + "\n"


def parameter_hash(s: Scenario) -> str:
    """Digest of everything that defines a run except the seed."""
    doc = scenario_to_dict(s)
    doc.pop("seed")
    blob = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def fmt(value) -> str:
    """Fixed output formatting: 12 significant digits, lowercase booleans."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        if math.isnan(value):
            return "nan"
        return format(float(value), ".12g")
    if isinstance(value, (list, tuple)):
        return ",".join(fmt(v) for v in value)
    if value is None:
        return "null"
    return str(value)


def trace_header(trace: RunTrace) -> list[str]:
    first = trace.records[0] if trace.records else None
    n_h = len(first.posterior) if first else 0
    policy_ids = [row.policy_id for row in first.evaluations] if first else []
    header = ["step", "time", "context", "arousal", "setpoint", "governing", "endorsed",
              "effort", "capacity", "relapse", "gain", "stress_input", "selected_policy",
              "authorized"]
    header += [f"posterior_h{i}" for i in range(n_h)]
    header += [f"precision_h{i}" for i in range(n_h)]
    for pid in policy_ids:
        header += [f"G_p{pid}", f"risk_p{pid}", f"ambiguity_p{pid}", f"admissible_p{pid}",
                   f"selected_p{pid}"]
    return header


def trace_to_csv(trace: RunTrace) -> str:
    buf = io.StringIO()
    buf.write(f"# scenario_id: {trace.scenario_id}\n# seed: {trace.seed}\n"
              f"# parameter_hash: {trace.parameter_hash}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(trace_header(trace))
    for r in trace.records:
        row = [r.step, fmt(r.time), r.context_id, fmt(r.arousal), fmt(r.setpoint), r.governing,
               r.endorsed, fmt(r.effort), fmt(r.capacity), fmt(r.relapse), fmt(r.gain),
               fmt(r.stress_input), r.selected_policy, ";".join(str(h) for h in r.authorized)]
        row += [fmt(x) for x in r.posterior]
        row += [fmt(x) for x in r.precision]
        for ev in r.evaluations:
            row += [fmt(ev.G), fmt(ev.risk), fmt(ev.ambiguity), fmt(ev.admissible),
                    fmt(ev.policy_id == r.selected_policy)]
        writer.writerow(row)
    return buf.getvalue()


def format_report(title: str, provenance: dict, sections: list[tuple[str, dict]]) -> str:
    """Key-value text document: ``key: value`` lines grouped under ``[section]``."""
    lines = [f"# {title}"]
    lines += [f"{k}: {fmt(v)}" for k, v in provenance.items()]
    for name, body in sections:
        lines.append("")
        lines.append(f"[{name}]")
        lines += [f"{k}: {fmt(v)}" for k, v in body.items()]
    return "\n".join(lines) + "\n"


def parse_report(text: str) -> dict:
    """Inverse of :func:`format_report` (values kept as strings)."""
    out: dict = {}
    section = out
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            section = out.setdefault(line[1:-1], {})
            continue
        key, _, value = line.partition(": ")
        section[key] = value
    return out


def write_atomic(path, text: str) -> Path:
    """Write via a temp file in the target directory, then rename into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path
