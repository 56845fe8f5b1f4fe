"""Parameter sweeps over solved instances, with CSV output.

A sweep solves the same scene across a range of one parameter - panel
edge size (m0), candidate budget (s), or active user count (k) - in all
requested modes, and emits one CSV row per (value, mode) cell. Output
is deterministic for equal inputs except the wall-time column.
"""
from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

from .oracle import verify_solution
from .scene import (
    ConfigError,
    Scene,
    SolverMode,
    SystemConfig,
    resolved_config_dict,
    restrict_users,
)
from .selection import NoPathError, solve_multi_user, solve_single_user
from .splitting import InfeasibleError

SWEEP_PARAMS = ("m0", "s", "k")
CSV_COLUMNS = (
    "value",
    "mode",
    "objective_linear",
    "objective_db",
    "paths_selected",
    "max_hops",
    "clique_count",
    "wall_ms",
    "oracle_rel_err",
    "infeasible",
)
_MODE_ORDER = (SolverMode.STAR_ES, SolverMode.STAR_MS, SolverMode.REFLECT_ONLY)


@dataclass(frozen=True)
class SweepRow:
    """One solved (value, mode) cell; numeric fields are None when infeasible."""

    value: int
    mode: str
    objective_linear: float | None
    objective_db: float | None
    paths_selected: int | None
    max_hops: int | None
    clique_count: int | None
    wall_ms: float | None
    oracle_rel_err: float | None
    infeasible: str


def parse_values(text: str) -> tuple[int, ...]:
    """Sweep values from 'start:step:stop' (inclusive) or 'a,b,c'."""
    text = text.strip()
    if not text:
        raise ConfigError("sweep values must not be empty")
    try:
        if ":" in text:
            parts = [int(p) for p in text.split(":")]
            if len(parts) != 3:
                raise ValueError
            start, step, stop = parts
            if step <= 0 or stop < start:
                raise ValueError
            values = list(range(start, stop + 1, step))
        else:
            values = [int(p) for p in text.split(",")]
    except ValueError:
        raise ConfigError(
            f"cannot parse sweep values {text!r}; use 'start:step:stop' or 'a,b,c'"
        ) from None
    if any(v <= 0 for v in values):
        raise ConfigError(f"sweep values must be positive, got {values}")
    if len(set(values)) != len(values):
        raise ConfigError(f"sweep values must be distinct, got {values}")
    return tuple(sorted(values))


def apply_sweep_value(
    scene: Scene, config: SystemConfig, param: str, value: int
) -> tuple[Scene, SystemConfig]:
    """The (scene, config) variant one sweep cell solves."""
    if param == "m0":
        return scene, replace(config, m0=value)
    if param == "s":
        return scene, replace(config, candidates_per_user=value)
    if param == "k":
        return restrict_users(scene, value), config
    raise ConfigError(f"unknown sweep parameter {param!r}; expected one of {SWEEP_PARAMS}")


def solve_cell(
    scene: Scene,
    config: SystemConfig,
    param: str,
    value: int,
    mode: SolverMode,
    oracle: bool = True,
) -> SweepRow:
    """Solve one sweep cell and flatten the outcome into a row."""
    cell_scene, cell_config = apply_sweep_value(scene, config, param, value)
    cell_config = replace(cell_config, mode=mode)
    try:
        if cell_scene.n_users == 1:
            solution = solve_single_user(cell_scene, cell_config)
        else:
            solution = solve_multi_user(cell_scene, cell_config)
    except NoPathError:
        return _dead_row(value, mode, "no_path")
    except InfeasibleError:
        return _dead_row(value, mode, "infeasible")
    rel_err = None
    if oracle:
        isolated, _ = verify_solution(cell_scene, cell_config, solution.forest)
        rel_err = isolated.relative_error
    return SweepRow(
        value=value,
        mode=mode.value,
        objective_linear=solution.objective,
        objective_db=10.0 * math.log10(solution.objective),
        paths_selected=len(solution.forest.paths),
        max_hops=max(p.n_hops for p in solution.forest.paths),
        clique_count=solution.clique_count,
        wall_ms=solution.wall_ms,
        oracle_rel_err=rel_err,
        infeasible="",
    )


def _dead_row(value: int, mode: SolverMode, reason: str) -> SweepRow:
    return SweepRow(
        value=value,
        mode=mode.value,
        objective_linear=None,
        objective_db=None,
        paths_selected=None,
        max_hops=None,
        clique_count=None,
        wall_ms=None,
        oracle_rel_err=None,
        infeasible=reason,
    )


def _cell_args(args):
    return solve_cell(*args)


def run_sweep(
    scene: Scene,
    config: SystemConfig,
    param: str,
    values: Sequence[int],
    modes: Sequence[SolverMode] = _MODE_ORDER,
    workers: int = 1,
    oracle: bool = True,
) -> list[SweepRow]:
    """All (value, mode) rows, ordered by value then mode."""
    if param not in SWEEP_PARAMS:
        raise ConfigError(f"unknown sweep parameter {param!r}; expected one of {SWEEP_PARAMS}")
    if param == "k":
        bad = [v for v in values if v > scene.n_users]
        if bad:
            raise ConfigError(
                f"cannot sweep k over {bad}: the scene has {scene.n_users} users"
            )
    tasks = [
        (scene, config, param, value, mode, oracle)
        for value in sorted(values)
        for mode in modes
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_cell_args, tasks))
    return [solve_cell(*task) for task in tasks]


def _cell_text(field) -> str:
    if field is None:
        return ""
    if isinstance(field, float):
        return repr(field)
    return str(field)


def write_csv(rows: Sequence[SweepRow], out_path: str | Path) -> Path:
    """Delimited sweep output; one row per solved cell, stable ordering."""
    out_path = Path(out_path)
    with out_path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            writer.writerow(
                [
                    row.value,
                    row.mode,
                    _cell_text(row.objective_linear),
                    _cell_text(row.objective_db),
                    _cell_text(row.paths_selected),
                    _cell_text(row.max_hops),
                    _cell_text(row.clique_count),
                    "" if row.wall_ms is None else f"{row.wall_ms:.3f}",
                    _cell_text(row.oracle_rel_err),
                    row.infeasible,
                ]
            )
    return out_path


def _plateau(rows: Sequence[SweepRow], mode: str) -> int | None:
    """Smallest swept value whose objective already equals the final one."""
    line = [r for r in rows if r.mode == mode]
    if not line or line[-1].objective_linear is None:
        return None
    final = line[-1].objective_linear
    start = None
    for row in line:
        if row.objective_linear == final:
            if start is None:
                start = row.value
        else:
            start = None
    return start


def sweep_meta(
    scene: Scene,
    config: SystemConfig,
    param: str,
    values: Sequence[int],
    rows: Sequence[SweepRow],
) -> dict:
    """Sidecar metadata documenting how the CSV was produced."""
    modes = []
    for row in rows:
        if row.mode not in modes:
            modes.append(row.mode)
    meta: dict = {
        "kind": "starroute-sweep",
        "version": 1,
        "param": param,
        "values": list(sorted(values)),
        "modes": modes,
        "scene": {
            "panels": scene.n_panels,
            "users": scene.n_users,
            "los_pairs": len(scene.los_pairs),
        },
        "config": resolved_config_dict(config),
        "infeasible_cells": sum(1 for r in rows if r.infeasible),
        "columns": list(CSV_COLUMNS),
    }
    if param == "s":
        meta["candidate_budget_plateau"] = {m: _plateau(rows, m) for m in modes}
    return meta


def write_meta(meta: dict, out_path: str | Path) -> Path:
    out_path = Path(out_path)
    out_path.write_text(json.dumps(meta, indent=2, allow_nan=False) + "\n")
    return out_path
