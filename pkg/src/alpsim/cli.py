"""Command-line front end.

Exit codes: 0 success, 1 scenario error, 2 runtime error, 3 falsification
prediction violated. Diagnostics go to stderr, data to stdout.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import warnings
from pathlib import Path

from . import __version__
from .errors import AlpSimError, ScenarioError
from .experiments.falsification import FalsificationConfig, falsification_suite
from .experiments.metrics import battery_metrics, compute_metrics, covariance_signature
from .experiments.scenario import SimulationParameters, run_scenario
from .experiments.sweep import sweep
from .experiments.templates import TEMPLATES
from .scenario_io import (
    FORMAT_HELP, emit_scenario, fmt, format_report, parse_scenario, trace_to_csv, write_atomic,
)

EXIT_OK, EXIT_SCENARIO, EXIT_RUNTIME, EXIT_FALSIFIED = 0, 1, 2, 3
OUTPUT_DIR_ENV = "ALPSIM_OUTPUT_DIR"

GRID_HELP = """\
Grid file (JSON): either {"name": [v1, v2, ...], ...} for a cartesian product,
or {"points": [{"name": v, ...}, ...]}. Names are any key of the scenario's
"parameters" block, or gain / arousal / capacity (initial conditions).
Row i runs with seed (--seed or the file seed) + i.
"""

PARAMS_HELP = """\
Params file (JSON object) for falsify: optional "seed", optional
"relative_difference", plus any key of the scenario "parameters" block, e.g.
{"governance_mode": "ablated"} to route regulation by raw precision argmax.
"""


def _out_path(path: str) -> Path:
    p = Path(path)
    base = os.environ.get(OUTPUT_DIR_ENV)
    return p if p.is_absolute() or not base else Path(base) / p


def _emit(path: str | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        write_atomic(_out_path(path), text)


def _load(args):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        scenario = parse_scenario(args.file, strict=not args.lenient)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    if getattr(args, "seed", None) is not None:
        scenario = scenario.with_seed(args.seed)
    return scenario


def cmd_validate(args) -> int:
    s = _load(args)
    print(f"ok: {s.id} ({len(s.space)} hypotheses, {len(s.space.policies)} policies, "
          f"{len(s.timeline)} events, {s.n_steps} steps)")
    return EXIT_OK


def run_report(scenario, trace) -> str:
    sections = [("run", {"steps": len(trace), "dt": scenario.parameters.dt,
                         "horizon": scenario.horizon, "endorsed": scenario.endorsed,
                         "final_arousal": trace.records[-1].arousal,
                         "final_governing": trace.records[-1].governing})]
    shifts = {f"shift_{i}": f"{fmt(e.time)} {e.hypothesis_id} {e.action}"
              for i, e in enumerate(trace.shift_log)}
    sections.append(("shift_log", shifts))
    whole = compute_metrics(trace, scenario.stress_events, 0.0, scenario.horizon,
                            5 * scenario.parameters.tau)
    sections.append(("metrics", whole.as_dict()))
    if scenario.intervention_time is not None:
        pre, post = battery_metrics(trace, scenario)
        sections.append(("metrics_pre", pre.as_dict()))
        sections.append(("metrics_post", post.as_dict()))
        sections.append(("covariance_signature", covariance_signature(pre, post).as_dict()))
    provenance = {"scenario_id": trace.scenario_id, "seed": trace.seed,
                  "parameter_hash": trace.parameter_hash}
    return format_report("alpsim run report", provenance, sections)


def cmd_run(args) -> int:
    s = _load(args)
    trace = run_scenario(s)
    report = run_report(s, trace)
    # build everything before writing so a failure leaves no partial outputs
    if args.trace:
        _emit(args.trace, trace_to_csv(trace))
    if args.report or not args.trace:
        _emit(args.report, report)
    return EXIT_OK


def _read_json(path: str, what: str):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ScenarioError(f"cannot read {what}: {exc.strerror}", path=path) from exc
    except json.JSONDecodeError as exc:
        raise ScenarioError(exc.msg, path=path, line=exc.lineno, column=exc.colno) from exc


def sweep_table(rows) -> str:
    names = []
    for r in rows:
        names += [k for k in r.parameters if k not in names]
    header = ["index", "seed"] + names + [
        "peak_reactivity", "effort_integral", "relapse", "cross_context_spread",
        "performance_proxy", "volatility", "mean_recovery_tau", "error"]
    lines = [",".join(header)]
    for r in rows:
        cells = [str(r.index), str(r.seed)] + [fmt(r.parameters.get(n)) for n in names]
        if r.metrics is None:
            cells += [""] * 7
        else:
            m = r.metrics
            taus = m.recovery_tau
            cells += [fmt(m.peak_reactivity), fmt(m.effort_integral), fmt(m.relapse),
                      fmt(m.cross_context_spread), fmt(m.performance_proxy), fmt(m.volatility),
                      fmt(sum(taus) / len(taus)) if taus else ""]
        cells.append("" if r.error is None else '"' + r.error.replace('"', "'") + '"')
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def cmd_sweep(args) -> int:
    s = _load(args)
    grid = _read_json(args.grid, "grid file")
    if not grid:
        raise ScenarioError("grid is empty", path=args.grid)
    rows = sweep(grid, s, base_seed=s.seed, jobs=args.jobs)
    for r in rows:
        if r.error:
            print(f"warning: grid row {r.index}: {r.error}", file=sys.stderr)
    _emit(args.out, sweep_table(rows))
    return EXIT_OK


def cmd_falsify(args) -> int:
    doc = {} if args.params is None else _read_json(args.params, "params file")
    if not isinstance(doc, dict):
        raise ScenarioError("params file must hold a JSON object", path=args.params)
    allowed = set(SimulationParameters.field_names()) | {"seed", "relative_difference"}
    unknown = sorted(set(doc) - allowed)
    if unknown:
        raise ScenarioError(f"unknown key(s) {unknown}", path=args.params)
    params = {k: v for k, v in doc.items() if k in SimulationParameters.field_names()}
    config = FalsificationConfig(parameters=params)
    if "seed" in doc:
        config = FalsificationConfig(seed=doc["seed"], parameters=params)
    if args.seed is not None:
        config = FalsificationConfig(seed=args.seed, parameters=params)
    if "relative_difference" in doc:
        config = FalsificationConfig(config.seed, params, float(doc["relative_difference"]))
    try:
        config.simulation_parameters()
    except TypeError as exc:
        raise ScenarioError(str(exc), path=args.params) from exc
    report = falsification_suite(config)
    _emit(args.report, report.to_text())
    for c in report.checks:
        if not c.holds:
            print(f"check {c.number} ({c.name}): {c.verdict}", file=sys.stderr)
    return EXIT_OK if report.all_hold else EXIT_FALSIFIED


def cmd_template(args) -> int:
    scenario = TEMPLATES[args.name]()
    if args.seed is not None:
        scenario = scenario.with_seed(args.seed)
    _emit(args.out, emit_scenario(scenario))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="alpsim",
        description="Discrete active-inference agent with an authority layer over "
                    "regulatory control. Relative output paths resolve against "
                    f"${OUTPUT_DIR_ENV} when it is set.",
        epilog=FORMAT_HELP, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=f"alpsim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def scenario_cmd(name, help_text, **kw):
        p = sub.add_parser(name, help=help_text, epilog=FORMAT_HELP,
                           formatter_class=argparse.RawDescriptionHelpFormatter, **kw)
        p.add_argument("file", help="scenario file (JSON)")
        p.add_argument("--lenient", action="store_true", help="warn on unknown keys instead of failing")
        return p

    p = scenario_cmd("validate", "parse and validate a scenario file")
    p.set_defaults(func=cmd_validate)

    p = scenario_cmd("run", "run a scenario; write trace CSV and/or report")
    p.add_argument("--trace", help="trace CSV output path")
    p.add_argument("--report", help="report output path (default: stdout)")
    p.add_argument("--seed", type=int, help="override the file seed")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="run a parameter grid over a scenario",
                       epilog=GRID_HELP, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("file", help="scenario file (JSON)")
    p.add_argument("--grid", required=True, help="grid file (JSON)")
    p.add_argument("--out", help="table CSV output path (default: stdout)")
    p.add_argument("--seed", type=int, help="base seed (default: file seed)")
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p.add_argument("--lenient", action="store_true")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("falsify", help="run the four-check falsification suite",
                       epilog=PARAMS_HELP, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--params", help="params file (JSON)")
    p.add_argument("--report", help="report output path (default: stdout)")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_falsify)

    p = sub.add_parser("template", help="emit a built-in scenario template")
    p.add_argument("name", choices=sorted(TEMPLATES))
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_template)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCENARIO
    except (AlpSimError, OSError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
