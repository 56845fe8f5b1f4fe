"""Figure rendering for solve and sweep outputs.

Figures are optional sidecars: every number they show is also in the
JSON report or the CSV, so skipping them (--no-figures) loses no data.
Rendering uses the Agg backend only and never opens a window.
"""
from __future__ import annotations

import math
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .scene import Scene
from .selection import Solution

_PANEL_HALF_WIDTH = 0.12
_BEAM_COLORS = ("#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
_MODE_COLORS = {"star_es": "#d62728", "star_ms": "#1f77b4", "reflect_only": "#2ca02c"}
_MODE_LABELS = {
    "star_es": "full split",
    "star_ms": "single face",
    "reflect_only": "reflect only",
}


def _panel_span(scene: Scene) -> float:
    """Half-width used to draw a panel, scaled to the scene extent."""
    xs = [abs(float(n.position[0])) for n in scene.nodes]
    ys = [abs(float(n.position[1])) for n in scene.nodes]
    extent = max(max(xs), max(ys), 1.0)
    return _PANEL_HALF_WIDTH * extent / 2.0


def solution_figure(scene: Scene, solution: Solution, out_path: str | Path) -> Path:
    """Top-down (x-y) view of the scene with the selected routes drawn."""
    out_path = Path(out_path)
    fig, ax = plt.subplots(figsize=(7.0, 5.6), dpi=130)

    for a, b in sorted(scene.los_pairs):
        pa, pb = scene.node(a).position, scene.node(b).position
        ax.plot(
            [pa[0], pb[0]], [pa[1], pb[1]],
            color="0.82", lw=0.8, ls=":", zorder=1,
        )

    span = _panel_span(scene)
    for j in scene.panel_ids:
        pos = scene.node(j).position
        ax.plot(
            [pos[0] - span, pos[0] + span], [pos[1], pos[1]],
            color="0.25", lw=3.0, solid_capstyle="butt", zorder=3,
        )
        normal = scene.node(j).normal
        ax.annotate(
            "",
            xy=(pos[0] + 0.6 * span * normal[0], pos[1] + 0.6 * span * normal[1]),
            xytext=(pos[0], pos[1]),
            arrowprops=dict(arrowstyle="-|>", color="0.45", lw=0.9),
            zorder=3,
        )
        ax.annotate(
            str(j), (pos[0], pos[1]),
            textcoords="offset points", xytext=(5, 5), fontsize=8, color="0.25",
        )

    bs = scene.node(0).position
    ax.plot([bs[0]], [bs[1]], marker="s", ms=10, color="black", zorder=4)
    ax.annotate("BS", (bs[0], bs[1]), textcoords="offset points", xytext=(6, -10), fontsize=9)
    for u in scene.user_ids:
        pos = scene.node(u).position
        ax.plot([pos[0]], [pos[1]], marker="o", ms=8, mfc="white", mec="black", zorder=4)
        ax.annotate(
            f"user {u}", (pos[0], pos[1]),
            textcoords="offset points", xytext=(6, -10), fontsize=8,
        )

    for idx, beam in enumerate(solution.forest.beams):
        color = _BEAM_COLORS[idx % len(_BEAM_COLORS)]
        share = solution.allocation.absolute(beam.user, beam.first_panel)
        for path_index in beam.path_indices:
            path = solution.forest.paths[path_index]
            nodes = path.nodes
            for i, j in zip(nodes, nodes[1:]):
                pa, pb = scene.node(i).position, scene.node(j).position
                ax.annotate(
                    "",
                    xy=(pb[0], pb[1]), xytext=(pa[0], pa[1]),
                    arrowprops=dict(
                        arrowstyle="-|>", color=color, lw=1.8, alpha=0.9,
                        shrinkA=4, shrinkB=4,
                    ),
                    zorder=2,
                )
        ax.plot(
            [], [], color=color, lw=1.8,
            label=f"user {beam.user} via panel {beam.first_panel} "
            f"({share:.0%} power, {len(beam.path_indices)} path"
            f"{'s' if len(beam.path_indices) != 1 else ''})",
        )

    objective_db = 10.0 * math.log10(solution.objective) if solution.objective > 0 else float("nan")
    ax.set_title(
        f"{_MODE_LABELS[solution.mode.value]} | received power {objective_db:.2f} dB",
        fontsize=11,
    )
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_aspect("equal", adjustable="datalim")
    ax.legend(loc="best", fontsize=8, framealpha=0.9)
    ax.grid(True, lw=0.3, alpha=0.4)
    fig.tight_layout()
    fig.savefig(out_path)
    plt.close(fig)
    return out_path


def sweep_figure(
    rows: Sequence, param: str, out_path: str | Path, title: str | None = None
) -> Path:
    """Objective-vs-value curves per mode; infeasible points are omitted."""
    out_path = Path(out_path)
    fig, ax = plt.subplots(figsize=(6.4, 4.4), dpi=130)
    modes = []
    for row in rows:
        if row.mode not in modes:
            modes.append(row.mode)
    for mode in modes:
        xs = [row.value for row in rows if row.mode == mode and not row.infeasible]
        ys = [
            row.objective_db
            for row in rows
            if row.mode == mode and not row.infeasible
        ]
        ax.plot(
            xs, ys,
            marker="o", ms=4, lw=1.5,
            color=_MODE_COLORS.get(mode, "0.4"),
            label=_MODE_LABELS.get(mode, mode),
        )
        dead = [row.value for row in rows if row.mode == mode and row.infeasible]
        if dead:
            y0 = min((row.objective_db for row in rows if not row.infeasible), default=0.0)
            ax.plot(
                dead, [y0] * len(dead),
                marker="x", ms=7, lw=0, color=_MODE_COLORS.get(mode, "0.4"),
                alpha=0.6,
            )

    labels = {"m0": "elements per panel edge", "s": "candidate paths per user", "k": "active users"}
    ax.set_xlabel(labels.get(param, param))
    ax.set_ylabel("received power [dB]")
    values = sorted({row.value for row in rows})
    ax.set_xticks(values)
    if title:
        ax.set_title(title, fontsize=11)
    ax.legend(loc="best", fontsize=8)
    ax.grid(True, lw=0.3, alpha=0.4)
    fig.tight_layout()
    fig.savefig(out_path)
    plt.close(fig)
    return out_path
