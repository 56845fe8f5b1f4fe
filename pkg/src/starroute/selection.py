"""Path compatibility, clique enumeration and the routing solvers.

Feasible path sets are exactly the cliques of a pairwise-compatibility
graph over the candidate paths, so the solver enumerates maximal
cliques (Bron-Kerbosch with pivoting, deterministic order) and ranks
them by the received-power objective. Pairwise compatibility is
sufficient: three pairwise-compatible paths cannot overload a panel,
because three successors would need pairwise-opposite sides, which is
impossible with two sides.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Mapping, Sequence

from .channel import CandidatePath, GrazingIncidenceError, path_metrics
from .routing import LosGraph, build_los_graph, yen_k_shortest
from .scene import Scene, SolverMode, SystemConfig, side_cosine
from .splitting import (
    AmplitudeAssignment,
    BeamForest,
    DesignBundle,
    InfeasibleError,
    PowerAllocation,
    assemble_designs,
    beam_power_allocation,
    build_forest,
    optimal_amplitudes,
    predicted_powers,
    user_gains,
)

__all__ = [
    "NoPathError",
    "InfeasibleError",
    "PathGraph",
    "Solution",
    "SolverMode",
    "admissible_path",
    "compatible",
    "build_path_graph",
    "bron_kerbosch",
    "candidate_paths",
    "selection_rank_key",
    "selection_power",
    "solve_single_user",
    "solve_multi_user",
]


class NoPathError(ValueError):
    """A user has no admissible candidate path."""

    def __init__(self, user: int):
        self.user = user
        super().__init__(f"no admissible path reaches user {user}")


def admissible_path(path: CandidatePath, mode: SolverMode, scene: Scene) -> bool:
    """Whether a single path is usable under the given mode.

    Reflect-only service demands every hop be a front-side reflection:
    both neighbors of every traversed panel on the positive-side-cosine
    side. The other modes accept any path.
    """
    if mode is not SolverMode.REFLECT_ONLY:
        return True
    nodes = path.nodes
    for l, panel in enumerate(path.ris_sequence):
        if side_cosine(scene, nodes[l], panel) <= 0.0:
            return False
        if side_cosine(scene, nodes[l + 2], panel) <= 0.0:
            return False
    return True


def _hop_map(path: CandidatePath) -> dict[int, tuple[int, int]]:
    nodes = path.nodes
    return {panel: (nodes[l], nodes[l + 2]) for l, panel in enumerate(path.ris_sequence)}


def compatible(
    a: CandidatePath,
    b: CandidatePath,
    mode: SolverMode,
    same_user: bool,
    scene: Scene,
) -> bool:
    """Whether two candidate paths may be selected together.

    Different users must be panel-disjoint in every mode, and so must
    same-user paths outside full splitting. Under full splitting,
    same-user paths may share panels when each shared panel keeps a
    single feed (identical predecessors) and its two ways out sit on
    opposite sides; shared prefixes then coincide automatically.
    """
    shared = set(a.ris_sequence) & set(b.ris_sequence)
    if not shared:
        return True
    if not same_user or mode is not SolverMode.STAR_ES:
        return False
    hops_a, hops_b = _hop_map(a), _hop_map(b)
    for panel in shared:
        prev_a, next_a = hops_a[panel]
        prev_b, next_b = hops_b[panel]
        if prev_a != prev_b:
            return False
        if next_a != next_b:
            if not side_cosine(scene, next_a, panel) * side_cosine(scene, next_b, panel) < 0.0:
                return False
    # Identical feeds at every shared panel force the prefixes to coincide.
    for panel in shared:
        cut_a = a.nodes.index(panel)
        cut_b = b.nodes.index(panel)
        assert a.nodes[: cut_a + 1] == b.nodes[: cut_b + 1], (
            f"shared panel {panel} with equal feeds but diverging prefixes"
        )
    return True


@dataclass(frozen=True, eq=False)
class PathGraph:
    """Compatibility graph over (user, candidate path) vertices."""

    entries: tuple[tuple[int, CandidatePath], ...]
    neighbors: tuple[frozenset[int], ...]
    mode: SolverMode

    @property
    def n_edges(self) -> int:
        return sum(len(n) for n in self.neighbors) // 2


def build_path_graph(
    candidates: Mapping[int, Sequence[CandidatePath]],
    mode: SolverMode,
    scene: Scene,
) -> PathGraph:
    """Compatibility graph over all users' admissible candidates.

    Vertices are ordered by user then candidate rank, so vertex indices
    are deterministic.
    """
    entries: list[tuple[int, CandidatePath]] = []
    for user in sorted(candidates):
        for path in candidates[user]:
            entries.append((user, path))
    n = len(entries)
    neighbors: list[set[int]] = [set() for _ in range(n)]
    for i in range(n):
        user_i, path_i = entries[i]
        for j in range(i + 1, n):
            user_j, path_j = entries[j]
            if compatible(path_i, path_j, mode, user_i == user_j, scene):
                neighbors[i].add(j)
                neighbors[j].add(i)
    return PathGraph(
        entries=tuple(entries),
        neighbors=tuple(frozenset(s) for s in neighbors),
        mode=mode,
    )


def bron_kerbosch(graph: PathGraph) -> list[tuple[int, ...]]:
    """Maximal cliques in deterministic order (pivoting, ascending vertices)."""
    neighbors = graph.neighbors
    cliques: list[tuple[int, ...]] = []

    def expand(clique: list[int], allowed: set[int], seen: set[int]) -> None:
        if not allowed and not seen:
            cliques.append(tuple(clique))
            return
        pivot = max(
            sorted(allowed | seen),
            key=lambda u: len(allowed & neighbors[u]),
        )
        for v in sorted(allowed - neighbors[pivot]):
            expand(
                clique + [v],
                allowed & neighbors[v],
                seen & neighbors[v],
            )
            allowed.discard(v)
            seen.add(v)

    expand([], set(range(len(graph.entries))), set())
    return cliques


def _clique_paths(
    graph: PathGraph, clique: Sequence[int]
) -> tuple[tuple[int, CandidatePath], ...]:
    return tuple(sorted((graph.entries[v] for v in clique), key=lambda e: (e[0], e[1].nodes)))


def selection_power(selected: Sequence[tuple[int, CandidatePath]]) -> float:
    """Received-power objective of a selected (user, path) set.

    One user: the sum of its peak gains. Several users: the equalized
    per-user power 1 / sum_k(1/G_k).
    """
    by_user: dict[int, list[float]] = {}
    for user, path in selected:
        by_user.setdefault(user, []).append(path.peak_gain)
    sums = {user: math.fsum(values) for user, values in sorted(by_user.items())}
    if len(sums) == 1:
        return next(iter(sums.values()))
    return 1.0 / math.fsum(1.0 / g for _, g in sorted(sums.items()))


def selection_rank_key(
    selected: Sequence[tuple[int, CandidatePath]],
) -> tuple[float, int, tuple[tuple[int, tuple[int, ...]], ...]]:
    """Total-order key minimized by the best selection.

    Primary: the (sign-adjusted) power objective; then fewer total hops;
    then lexicographic (user, node sequence) order. The same key ranks
    solver cliques and brute-force subsets, so both searches agree
    bitwise.
    """
    canonical = tuple(sorted(((u, p.nodes) for u, p in selected)))
    hops = sum(p.n_hops for _, p in selected)
    by_user: dict[int, list[float]] = {}
    for user, path in selected:
        by_user.setdefault(user, []).append(path.peak_gain)
    sums = {user: math.fsum(values) for user, values in sorted(by_user.items())}
    if len(sums) == 1:
        primary = -next(iter(sums.values()))
    else:
        primary = math.fsum(1.0 / g for _, g in sorted(sums.items()))
    return (primary, hops, canonical)


def _ranked_candidates(
    scene: Scene,
    config: SystemConfig,
    graph: LosGraph,
    user: int,
    mode: SolverMode,
) -> tuple[list[CandidatePath], bool]:
    others = [u for u in scene.user_ids if u != user]
    sequences = yen_k_shortest(graph, 0, user, config.candidates_per_user, banned=others)
    kept = []
    for seq in sequences:
        try:
            path = path_metrics(scene, config, seq[1:-1], user)
        except GrazingIncidenceError:
            continue
        if admissible_path(path, mode, scene):
            kept.append(path)
    return kept, len(sequences) == config.candidates_per_user


def candidate_paths(
    scene: Scene,
    config: SystemConfig,
    graph: LosGraph,
    user: int,
    mode: SolverMode | None = None,
) -> list[CandidatePath]:
    """Ranked candidate list for one user: top-S by weight, then filtered.

    Grazing-incidence paths are refused and, under reflect-only
    service, inadmissible paths dropped; filtering happens after
    truncation so every mode draws from the same ranked pool.
    """
    kept, _ = _ranked_candidates(
        scene, config, graph, user, config.mode if mode is None else mode
    )
    return kept


@dataclass(eq=False)
class Solution:
    """A solved routing instance with every closed-form design attached."""

    mode: SolverMode
    candidate_limit: int
    users: tuple[int, ...]
    forest: BeamForest
    amplitudes: AmplitudeAssignment
    allocation: PowerAllocation
    designs: DesignBundle
    user_powers: dict[int, float]
    objective: float
    clique_count: int
    wall_ms: float
    candidate_counts: dict[int, int]
    candidate_limit_binding: bool


def _solve(
    scene: Scene,
    config: SystemConfig,
    users: Sequence[int],
    mode: SolverMode,
) -> Solution:
    start = time.perf_counter()
    graph = build_los_graph(scene, config)
    candidates: dict[int, list[CandidatePath]] = {}
    truncated: dict[int, bool] = {}
    for user in users:
        candidates[user], truncated[user] = _ranked_candidates(scene, config, graph, user, mode)
    uncovered = [u for u in users if not candidates[u]]
    if uncovered:
        if len(users) == 1:
            raise NoPathError(users[0])
        raise InfeasibleError(uncovered)

    path_graph = build_path_graph(candidates, mode, scene)
    cliques = bron_kerbosch(path_graph)
    needed = set(users)
    best_key = None
    best_clique = None
    best_coverage: tuple[int, tuple[int, ...]] | None = None
    for clique in cliques:
        covered = {path_graph.entries[v][0] for v in clique}
        coverage = (-len(covered), tuple(sorted(needed - covered)))
        if best_coverage is None or coverage < best_coverage:
            best_coverage = coverage
        if covered != needed:
            continue
        key = selection_rank_key(_clique_paths(path_graph, clique))
        if best_key is None or key < best_key:
            best_key = key
            best_clique = clique
    if best_clique is None:
        assert best_coverage is not None
        missing = best_coverage[1]
        raise InfeasibleError(missing if missing else tuple(users))

    selected = _clique_paths(path_graph, best_clique)
    forest = build_forest(scene, [p for _, p in selected], [u for u, _ in selected])
    amplitudes = optimal_amplitudes(forest)
    allocation = beam_power_allocation(forest)
    designs = assemble_designs(scene, config, forest)
    powers = predicted_powers(forest)
    objective = selection_power(selected)
    # Hint that the candidate limit may bind: the pool was truncated and the
    # incumbent still uses its lowest-ranked survivor.
    binding = any(
        truncated[user] and candidates[user] and path == candidates[user][-1]
        for user, path in selected
    )
    wall_ms = (time.perf_counter() - start) * 1e3
    return Solution(
        mode=mode,
        candidate_limit=config.candidates_per_user,
        users=tuple(users),
        forest=forest,
        amplitudes=amplitudes,
        allocation=allocation,
        designs=designs,
        user_powers=powers,
        objective=objective,
        clique_count=len(cliques),
        wall_ms=wall_ms,
        candidate_counts={u: len(candidates[u]) for u in users},
        candidate_limit_binding=binding,
    )


def solve_single_user(
    scene: Scene, config: SystemConfig, user: int | None = None
) -> Solution:
    """Best path set, splits and designs for one user.

    Defaults to the scene's only user; raises NoPathError when no
    admissible candidate exists.
    """
    if user is None:
        if scene.n_users != 1:
            raise ValueError("scene has several users; pass the user id to solve for")
        user = scene.n_panels + 1
    if not scene.is_user(user):
        raise ValueError(f"node {user} is not a user")
    return _solve(scene, config, [user], config.mode)


def solve_multi_user(scene: Scene, config: SystemConfig) -> Solution:
    """Best joint path sets for every user in the scene.

    Every user must be covered by one clique of mutually compatible
    paths; otherwise InfeasibleError names the users left out of the
    best coverage achievable.
    """
    return _solve(scene, config, list(scene.user_ids), config.mode)
