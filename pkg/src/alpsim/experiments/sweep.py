"""Parameter sweeps over a scenario template, one isolated run per grid point."""
from __future__ import annotations

import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

from ..errors import AlpSimError
from .metrics import Metrics, compute_metrics
from .scenario import Scenario, SimulationParameters, run_scenario, validate_scenario

INITIAL_KEYS = {"gain", "arousal", "capacity"}


def expand_grid(grid) -> list[dict]:
    """``{"a": [1, 2], "b": [3]}`` -> cartesian product; a list of dicts passes through."""
    if isinstance(grid, dict):
        if "points" in grid:
            return [dict(p) for p in grid["points"]]
        names = list(grid)
        return [dict(zip(names, combo)) for combo in itertools.product(*(grid[n] for n in names))]
    return [dict(p) for p in grid]


def apply_overrides(s: Scenario, overrides: dict) -> Scenario:
    params = {k: v for k, v in overrides.items() if k in SimulationParameters.field_names()}
    initial = {k: v for k, v in overrides.items() if k in INITIAL_KEYS}
    unknown = set(overrides) - set(params) - set(initial)
    if unknown:
        raise ValueError(f"unknown sweep parameter(s) {sorted(unknown)}")
    return replace(s, parameters=replace(s.parameters, **params),
                   initial=replace(s.initial, **initial))


@dataclass(frozen=True)
class SweepRow:
    index: int
    parameters: dict
    seed: int
    metrics: Metrics | None = None
    error: str | None = None


def _run_point(args) -> SweepRow:
    index, template, point, seed = args
    try:
        s = validate_scenario(apply_overrides(template, point).with_seed(seed))
        trace = run_scenario(s, validate=False)
        metrics = compute_metrics(trace, s.stress_events, 0.0, s.horizon, 5 * s.parameters.tau)
        return SweepRow(index, point, seed, metrics)
    except (AlpSimError, ValueError, TypeError) as exc:
        return SweepRow(index, point, seed, error=f"{type(exc).__name__}: {exc}")


def sweep(grid, template: Scenario, base_seed: int | None = None, jobs: int = 1) -> list[SweepRow]:
    """Run ``template`` once per grid point; seed of row ``i`` is ``base_seed + i``.

    A failing point yields a row with ``error`` set; other rows still run.
    """
    points = expand_grid(grid)
    if not points:
        raise ValueError("sweep grid is empty")
    base = template.seed if base_seed is None else base_seed
    tasks = [(i, template, p, base + i) for i, p in enumerate(points)]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_run_point, tasks))
    else:
        rows = [_run_point(t) for t in tasks]
    return sorted(rows, key=lambda r: r.index)
