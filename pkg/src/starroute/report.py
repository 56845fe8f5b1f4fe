"""Structured solution reports.

A report is a deterministic JSON document describing one solved
instance: the selected routes, every closed-form design quantity, the
predicted received powers, and (when requested) the matrix-level oracle
comparison. Equal inputs produce byte-identical reports except for the
wall-clock timing field.
"""
from __future__ import annotations

import json
import math
from typing import Mapping

from .oracle import ClosedFormCheck, OracleReport
from .scene import Scene, SystemConfig, resolved_config_dict
from .selection import Solution

REPORT_KIND = "starroute-solution"
REPORT_VERSION = 1


def to_db(linear: float) -> float | None:
    """Decibel form of a linear power ratio; None when undefined."""
    if linear <= 0.0:
        return None
    return 10.0 * math.log10(linear)


def _path_entry(solution: Solution, index: int) -> dict:
    path = solution.forest.paths[index]
    owner = solution.forest.owners[index]
    realized = path.peak_gain
    for panel, face in zip(path.ris_sequence, path.hop_surfaces):
        realized *= solution.amplitudes.fraction(panel, face)
    return {
        "user": owner,
        "nodes": list(path.nodes),
        "surfaces": [
            {"panel": panel, "face": face.value}
            for panel, face in zip(path.ris_sequence, path.hop_surfaces)
        ],
        "hop_distances_m": list(path.hop_distances),
        "total_distance_m": path.total_distance,
        "peak_gain": path.peak_gain,
        "peak_gain_db": to_db(path.peak_gain),
        "realized_gain": realized,
    }


def oracle_section(
    isolated: OracleReport,
    composite: OracleReport | None = None,
    closed_form: ClosedFormCheck | None = None,
) -> dict:
    """Report fragment summarizing matrix-level verification results."""
    section: dict = {
        "isolated_relative_error": isolated.relative_error,
        "isolated_ok": isolated.ok,
        "per_user": {
            str(user): {"predicted": want, "simulated": got, "relative_error": rel}
            for user, (want, got, rel) in sorted(isolated.per_user.items())
        },
    }
    if composite is not None:
        section["composite_leakage_power"] = composite.leakage_power
        section["composite_relative_error"] = composite.relative_error
    if closed_form is not None:
        section["closed_form"] = {
            "equality_error": closed_form.equality_error,
            "worst_draw_margin": closed_form.worst_draw_margin,
            "draws": closed_form.draws,
            "ok": closed_form.ok,
        }
    return section


def solution_report(
    scene: Scene,
    config: SystemConfig,
    solution: Solution,
    oracle: Mapping | None = None,
) -> dict:
    """Complete report document for one solved instance."""
    beams = [
        {
            "user": beam.user,
            "first_panel": beam.first_panel,
            "paths": list(beam.path_indices),
            "power_fraction": solution.allocation.absolute(beam.user, beam.first_panel),
        }
        for beam in solution.forest.beams
    ]
    return {
        "kind": REPORT_KIND,
        "version": REPORT_VERSION,
        "mode": solution.mode.value,
        "users": list(solution.users),
        "objective": {
            "linear": solution.objective,
            "db": to_db(solution.objective),
        },
        "received_power_per_user": {
            str(user): {"linear": power, "db": to_db(power)}
            for user, power in sorted(solution.user_powers.items())
        },
        "paths": [_path_entry(solution, i) for i in range(len(solution.forest.paths))],
        "beams": beams,
        "amplitude_splits": {
            str(panel): {"reflect": r, "transmit": t}
            for panel, (r, t) in sorted(solution.amplitudes.splits.items())
        },
        "user_power_fractions": {
            str(user): fraction
            for user, fraction in sorted(solution.allocation.user_fractions.items())
        },
        "search": {
            "candidate_limit": solution.candidate_limit,
            "candidate_counts": {
                str(u): n for u, n in sorted(solution.candidate_counts.items())
            },
            "candidate_limit_binding": solution.candidate_limit_binding,
            "clique_count": solution.clique_count,
            "wall_ms": round(solution.wall_ms, 3),
        },
        "scene": {
            "panels": scene.n_panels,
            "users": scene.n_users,
            "los_pairs": len(scene.los_pairs),
        },
        "config": resolved_config_dict(config),
        "oracle": dict(oracle) if oracle is not None else None,
    }


def render_report(report: Mapping) -> str:
    """Serialize a report document; stable ordering, trailing newline."""
    return json.dumps(report, indent=2, allow_nan=False) + "\n"
