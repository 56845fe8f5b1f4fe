"""Random feasible scene generation for self-checks and property tests.

Scenes follow the package's geometry conventions: BS at the origin,
square panels parallel to the x-z plane with normals facing the BS
side, users scattered on both sides of the panel planes so reflect and
transmit hops both occur. Every generated scene is connected (each user
reachable from the BS), free of grazing incidences along its LoS pairs,
and has strictly distinct BS-to-panel distances so the outward routing
order is stable.
"""
from __future__ import annotations

import numpy as np

from .routing import build_los_graph
from .scene import Node, NodeKind, Scene, SystemConfig, build_scene, side_cosine

SIDE_COSINE_MARGIN = 1e-3
DISTANCE_MARGIN = 1e-3


def make_scene(positions, pairs, axis=(1.0, 0.0, 0.0)) -> Scene:
    """Build a scene from (kind, position[, normal]) tuples, ids implicit."""
    nodes = []
    for i, spec in enumerate(positions):
        kind = NodeKind(spec[0])
        pos = np.array(spec[1], dtype=float)
        normal = np.array(spec[2], dtype=float) if len(spec) > 2 else None
        nodes.append(Node(id=i, kind=kind, position=pos, normal=normal))
    return build_scene(nodes, pairs, np.array(axis, dtype=float))


def _bs_reachable(scene: Scene, config: SystemConfig) -> set[int]:
    graph = build_los_graph(scene, config)
    seen = {0}
    frontier = [0]
    while frontier:
        node = frontier.pop()
        for edge in graph.adjacency.get(node, ()):
            if edge.target not in seen:
                seen.add(edge.target)
                frontier.append(edge.target)
    return seen


def random_scene(
    rng: np.random.Generator,
    n_panels_range: tuple[int, int] = (2, 8),
    n_users_range: tuple[int, int] = (1, 3),
    max_tries: int = 200,
) -> Scene:
    """A connected, grazing-free random scene.

    Raises RuntimeError if no valid scene is found in ``max_tries``
    attempts (practically unreachable with the default ranges).
    """
    probe = SystemConfig.with_defaults(
        n_bs_antennas=2, m0=2, carrier_hz=5e9, candidates_per_user=1, mode="star_es"
    )
    for _ in range(max_tries):
        n_panels = int(rng.integers(n_panels_range[0], n_panels_range[1] + 1))
        n_users = int(rng.integers(n_users_range[0], n_users_range[1] + 1))
        panel_pos: list[np.ndarray] = []
        bs_dists: list[float] = []
        ok = True
        for _ in range(n_panels):
            placed = False
            for _ in range(50):
                pos = np.array(
                    [rng.uniform(-4.0, 4.0), rng.uniform(0.5, 6.0), rng.uniform(-1.0, 1.0)]
                )
                d = float(np.linalg.norm(pos))
                if all(abs(d - other) >= DISTANCE_MARGIN for other in bs_dists):
                    panel_pos.append(pos)
                    bs_dists.append(d)
                    placed = True
                    break
            if not placed:
                ok = False
                break
        if not ok:
            continue
        order = sorted(range(n_panels), key=lambda i: bs_dists[i])
        panel_pos = [panel_pos[i] for i in order]

        user_pos = [
            np.array([rng.uniform(-5.0, 5.0), rng.uniform(0.2, 7.0), rng.uniform(-1.0, 1.0)])
            for _ in range(n_users)
        ]

        specs = [("bs", (0.0, 0.0, 0.0))]
        specs += [("star_ris", tuple(p), (0.0, 1.0, 0.0)) for p in panel_pos]
        specs += [("user", tuple(p)) for p in user_pos]

        pairs: list[tuple[int, int]] = []
        panel_ids = range(1, n_panels + 1)
        user_ids = range(n_panels + 1, n_panels + n_users + 1)

        def clear(node_idx: int, panel_idx: int, scene_nodes=specs) -> bool:
            a = np.array(scene_nodes[node_idx][1])
            b = np.array(scene_nodes[panel_idx][1])
            delta = b - a
            norm = float(np.linalg.norm(delta))
            if norm < DISTANCE_MARGIN:
                return False
            return abs(float(delta[1]) / norm) >= SIDE_COSINE_MARGIN

        for j in panel_ids:
            if rng.uniform() < 0.8 and clear(0, j):
                pairs.append((0, j))
        for i in panel_ids:
            for j in panel_ids:
                if i < j and rng.uniform() < 0.45 and clear(i, j) and clear(j, i):
                    pairs.append((i, j))
        for u in user_ids:
            for j in panel_ids:
                if rng.uniform() < 0.55 and clear(u, j):
                    pairs.append((u, j))

        if not any(p[0] == 0 for p in pairs):
            continue
        try:
            scene = make_scene(specs, pairs)
        except ValueError:
            continue
        reachable = _bs_reachable(scene, probe)
        if all(u in reachable for u in scene.user_ids):
            return scene
    raise RuntimeError("could not generate a valid random scene")


def random_config(
    rng: np.random.Generator,
    mode: str | None = None,
    m0_range: tuple[int, int] = (2, 8),
    n_bs_range: tuple[int, int] = (1, 8),
    candidates_range: tuple[int, int] = (2, 5),
) -> SystemConfig:
    """A random system configuration within the small self-check ranges."""
    modes = ("star_es", "star_ms", "reflect_only")
    return SystemConfig.with_defaults(
        n_bs_antennas=int(rng.integers(n_bs_range[0], n_bs_range[1] + 1)),
        m0=int(rng.integers(m0_range[0], m0_range[1] + 1)),
        carrier_hz=float(rng.choice([2.4e9, 5e9, 28e9])),
        candidates_per_user=int(rng.integers(candidates_range[0], candidates_range[1] + 1)),
        mode=mode if mode is not None else str(rng.choice(modes)),
    )


def scene_has_grazing_free_pairs(scene: Scene) -> bool:
    """True when every LoS incidence at a panel clears the safety margin."""
    for a, b in scene.los_pairs:
        for node, panel in ((a, b), (b, a)):
            if scene.is_panel(panel) and node != panel:
                if abs(side_cosine(scene, node, panel)) < SIDE_COSINE_MARGIN:
                    return False
    return True
