import json
import os

import numpy as np
import pytest

from alpsim.errors import ScenarioError, ScenarioSyntaxError, ScenarioVersionError
from alpsim.experiments.scenario import run_scenario
from alpsim.experiments.templates import TEMPLATES, governance_intervention
from alpsim.scenario_io import (
    emit_scenario, fmt, format_report, parameter_hash, parse_report, parse_scenario,
    parse_scenario_text, scenario_to_dict, trace_to_csv, write_atomic,
)

from conftest import random_scenario


def doc():
    return scenario_to_dict(governance_intervention())


def parse(d, **kw):
    return parse_scenario_text(json.dumps(d), **kw)


@pytest.mark.parametrize("name", sorted(TEMPLATES))
def test_template_round_trip(name):
    s = TEMPLATES[name]()
    back = parse_scenario_text(emit_scenario(s))
    assert back == s
    assert emit_scenario(back) == emit_scenario(s)


def test_random_round_trip_is_exact(rng):
    for _ in range(10):
        s = random_scenario(rng)
        assert parse_scenario_text(emit_scenario(s)) == s


def test_round_trip_gives_identical_run(rng):
    s = random_scenario(rng)
    a = run_scenario(s)
    b = run_scenario(parse_scenario_text(emit_scenario(s)))
    assert trace_to_csv(a) == trace_to_csv(b)


def test_syntax_error_has_position():
    with pytest.raises(ScenarioSyntaxError) as info:
        parse_scenario_text('{\n  "version": 1,\n  "id": }', source="x.json")
    err = info.value
    assert err.line == 3 and err.column is not None
    assert str(err).startswith("x.json: line 3")


def test_version_mismatch():
    d = doc()
    d["version"] = 2
    with pytest.raises(ScenarioVersionError):
        parse(d)


def test_missing_required_key():
    d = doc()
    del d["initial"]
    with pytest.raises(ScenarioError, match="missing required key 'initial'"):
        parse(d)


def test_unknown_key_strict_vs_lenient():
    d = doc()
    d["parameters"]["colour"] = "blue"
    with pytest.raises(ScenarioError, match="parameters: unknown key 'colour'"):
        parse(d)
    with pytest.warns(UserWarning, match="colour"):
        s = parse(d, strict=False)
    assert s == governance_intervention()


def test_type_errors_name_the_path():
    d = doc()
    d["hypotheses"][1]["autonomic_setpoint"] = "low"
    with pytest.raises(ScenarioError, match=r"hypotheses\[1\]\.autonomic_setpoint"):
        parse(d)
    d = doc()
    d["timeline"][0]["magnitude"] = True
    with pytest.raises(ScenarioError, match=r"timeline\[0\]"):
        parse(d)


def test_non_stochastic_row_names_hypothesis_and_row():
    d = doc()
    d["hypotheses"][1]["likelihood"][0] = [0.5, 0.4]
    with pytest.raises(ScenarioError) as info:
        parse(d)
    assert "hypotheses[1].likelihood row 0" in str(info.value)
    assert "0.9" in str(info.value)


def test_semantic_validation_can_be_deferred():
    d = doc()
    d["initial"]["authorized"] = []
    with pytest.raises(ScenarioError, match="authorized is empty"):
        parse(d)
    assert parse(d, validate=False).initial.authorized == ()


def test_unknown_event_type():
    d = doc()
    d["timeline"][0]["type"] = "earthquake"
    with pytest.raises(ScenarioError, match="earthquake"):
        parse(d)


def test_parse_scenario_missing_file(tmp_path):
    with pytest.raises(ScenarioError, match="cannot read"):
        parse_scenario(tmp_path / "nope.json")


def test_parameter_hash_ignores_seed_only():
    s = governance_intervention()
    assert parameter_hash(s) == parameter_hash(s.with_seed(1))
    assert len(parameter_hash(s)) == 16
    other = TEMPLATES["precision-intervention"]()
    assert parameter_hash(other) != parameter_hash(s)


def test_fmt():
    assert fmt(1 / 3) == "0.333333333333"
    assert fmt(True) == "true" and fmt(np.bool_(False)) == "false"
    assert fmt(None) == "null" and fmt(3) == "3"
    assert fmt((0.5, 2)) == "0.5,2"


def test_report_round_trip():
    text = format_report("t", {"seed": 1}, [("a", {"x": 0.25, "y": True})])
    assert parse_report(text) == {"seed": "1", "a": {"x": "0.25", "y": "true"}}


def test_trace_csv_has_provenance_and_policy_columns():
    s = TEMPLATES["misaligned-baseline"]()
    csv_text = trace_to_csv(run_scenario(s))
    lines = csv_text.splitlines()
    assert lines[0] == f"# scenario_id: {s.id}"
    assert lines[1] == f"# seed: {s.seed}"
    assert lines[2] == f"# parameter_hash: {parameter_hash(s)}"
    header = lines[3].split(",")
    for p in s.space.policies:
        assert f"G_p{p.id}" in header and f"admissible_p{p.id}" in header
    assert len(lines) == 4 + s.n_steps


def test_write_atomic_leaves_no_temp_files(tmp_path):
    target = tmp_path / "sub" / "out.txt"
    write_atomic(target, "hello\n")
    assert target.read_text() == "hello\n"
    assert os.listdir(target.parent) == ["out.txt"]
