"""LoS routing graph and k-shortest-path candidate generation.

The graph is directed: BS -> panels, panels -> panels strictly outward
(increasing BS distance), panels -> users. The panel subgraph is
therefore acyclic, so shortest paths are computed by relaxation in
topological order, which also tolerates the negative edge weights
ln(d/M) produces whenever d < M. All orderings are deterministic: equal
weight sums are broken lexicographically by node sequence.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .scene import Scene, SystemConfig, distance, is_routing_edge


class RoutingError(ValueError):
    """Invalid routing request (unknown endpoint, bad parameters)."""


@dataclass(frozen=True)
class WeightedEdge:
    source: int
    target: int
    distance: float
    weight: float


@dataclass(frozen=True, eq=False)
class LosGraph:
    n_nodes: int
    user_ids: frozenset[int]
    edges: tuple[WeightedEdge, ...]
    adjacency: dict[int, tuple[WeightedEdge, ...]]
    weight_of: dict[tuple[int, int], float]
    topo_order: tuple[int, ...]


def edge_weight(hop_distance: float, elements_per_panel: int) -> float:
    """Edge weight ln(d/M); negative whenever a hop's aperture gain wins."""
    if hop_distance <= 0.0:
        raise RoutingError(f"hop distance must be positive, got {hop_distance!r}")
    if elements_per_panel <= 0:
        raise RoutingError(f"element count must be positive, got {elements_per_panel!r}")
    return math.log(hop_distance / elements_per_panel)


def build_los_graph(scene: Scene, config: SystemConfig) -> LosGraph:
    """Directed routing graph over the scene's LoS pairs."""
    m = config.elements_per_panel
    edges = []
    for a, b in sorted(scene.los_pairs):
        for i, j in ((a, b), (b, a)):
            if is_routing_edge(scene, i, j):
                d = distance(scene, i, j)
                edges.append(WeightedEdge(source=i, target=j, distance=d, weight=edge_weight(d, m)))
    edges.sort(key=lambda e: (e.source, e.target))
    adjacency: dict[int, list[WeightedEdge]] = {}
    for edge in edges:
        adjacency.setdefault(edge.source, []).append(edge)
    panels = sorted(scene.panel_ids, key=lambda j: (distance(scene, 0, j), j))
    topo = (0, *panels, *scene.user_ids)
    return LosGraph(
        n_nodes=len(scene.nodes),
        user_ids=frozenset(scene.user_ids),
        edges=tuple(edges),
        adjacency={k: tuple(v) for k, v in adjacency.items()},
        weight_of={(e.source, e.target): e.weight for e in edges},
        topo_order=topo,
    )


def path_weight(graph: LosGraph, nodes: Sequence[int]) -> float:
    """Sum of edge weights along a node sequence."""
    try:
        return math.fsum(graph.weight_of[(i, j)] for i, j in zip(nodes, nodes[1:]))
    except KeyError as exc:
        raise RoutingError(f"sequence {tuple(nodes)} uses a non-edge {exc.args[0]}") from None


def _shortest(
    graph: LosGraph,
    source: int,
    target: int,
    removed_nodes: frozenset[int],
    removed_edges: frozenset[tuple[int, int]],
) -> tuple[float, tuple[int, ...]] | None:
    """Minimum-(weight, node-sequence) path by relaxation in topological order."""
    best: dict[int, tuple[float, tuple[int, ...]]] = {source: (0.0, (source,))}
    for node in graph.topo_order:
        state = best.get(node)
        if state is None or node == target:
            continue
        cost, path = state
        for edge in graph.adjacency.get(node, ()):
            if (
                edge.target in removed_nodes
                or (node, edge.target) in removed_edges
                or (edge.target in graph.user_ids and edge.target != target)
            ):
                continue
            candidate = (cost + edge.weight, path + (edge.target,))
            incumbent = best.get(edge.target)
            if incumbent is None or candidate < incumbent:
                best[edge.target] = candidate
    return best.get(target)


def yen_k_shortest(
    graph: LosGraph, source: int, target: int, count: int, banned: Iterable[int] = ()
) -> list[tuple[int, ...]]:
    """Up to ``count`` loopless shortest paths in deterministic order.

    Paths come out in nondecreasing weight order with exact ties broken
    lexicographically by node sequence. ``banned`` vertices are excluded
    outright (the solver masks other users' nodes, a no-op since users
    have no out-edges).
    """
    if count < 1:
        raise RoutingError(f"count must be >= 1, got {count}")
    if source == target:
        raise RoutingError("source and target must differ")
    banned_set = frozenset(banned)
    if source in banned_set or target in banned_set:
        raise RoutingError("source/target may not be banned")

    first = _shortest(graph, source, target, banned_set, frozenset())
    if first is None:
        return []
    accepted: list[tuple[float, tuple[int, ...]]] = [first]
    pool: dict[tuple[int, ...], float] = {}
    while len(accepted) < count:
        _, last_path = accepted[-1]
        for i in range(len(last_path) - 1):
            root = last_path[: i + 1]
            spur = last_path[i]
            removed_edges = {
                (path[i], path[i + 1])
                for _, path in accepted
                if len(path) > i + 1 and path[: i + 1] == root
            }
            removed_nodes = frozenset(root[:-1]) | banned_set
            found = _shortest(graph, spur, target, removed_nodes, frozenset(removed_edges))
            if found is None:
                continue
            _, spur_path = found
            full = root[:-1] + spur_path
            if full not in pool:
                pool[full] = path_weight(graph, full)
        if not pool:
            break
        next_path = min(pool, key=lambda p: (pool[p], p))
        accepted.append((pool.pop(next_path), next_path))
    return [path for _, path in accepted]


def enumerate_all_paths(
    graph: LosGraph, source: int, target: int, max_hops: int
) -> list[tuple[int, ...]]:
    """Every loopless source->target path with at most ``max_hops`` edges.

    Depth-first with ascending successors; exhaustive reference for the
    k-shortest search.
    """
    if max_hops < 1:
        raise RoutingError(f"max_hops must be >= 1, got {max_hops}")
    results: list[tuple[int, ...]] = []

    def walk(node: int, trail: tuple[int, ...]) -> None:
        if node == target:
            results.append(trail)
            return
        if len(trail) > max_hops:
            return
        for edge in graph.adjacency.get(node, ()):
            if edge.target in trail:
                continue
            if edge.target in graph.user_ids and edge.target != target:
                continue
            walk(edge.target, trail + (edge.target,))

    walk(source, (source,))
    return results


def dump_graph(graph: LosGraph) -> str:
    """Edge list with weights in the same document family as scenes."""
    doc = {
        "edges": [
            {"source": e.source, "target": e.target, "distance": e.distance, "weight": e.weight}
            for e in graph.edges
        ]
    }
    return json.dumps(doc, indent=2) + "\n"
