"""Admissibility, compatibility, clique search, and the exact solver."""
from __future__ import annotations

import math
from itertools import combinations

import numpy as np
import pytest

import starroute as sr
from scenegen import make_scene, random_config, random_scene

ES, MS, RO = sr.SolverMode.STAR_ES, sr.SolverMode.STAR_MS, sr.SolverMode.REFLECT_ONLY

CFG = sr.SystemConfig.with_defaults(
    n_bs_antennas=4, m0=4, carrier_hz=5e9, candidates_per_user=6, mode="star_es"
)


def fake_path(seq, user, peak_gain, hops=None):
    n = len(seq) + 1
    return sr.CandidatePath(
        ris_sequence=tuple(seq),
        user=user,
        hop_distances=tuple([1.0] * n),
        cascade_gain=1.0,
        total_distance=float(n),
        peak_gain=peak_gain,
        hop_surfaces=tuple([sr.SurfaceUse.REFLECT] * len(seq)),
    )


@pytest.fixture
def reflect_scene():
    """Single panel, user on the BS side: a pure front-side reflection."""
    return make_scene(
        [
            ("bs", (0.0, 0.0, 0.0)),
            ("star_ris", (1.0, 2.0, 0.0), (0.0, 1.0, 0.0)),
            ("user", (2.5, 1.0, 0.0)),
        ],
        [(0, 1), (1, 2)],
    )


class TestAdmissibility:
    def test_front_reflection_admissible_everywhere(self, reflect_scene):
        path = sr.path_metrics(reflect_scene, CFG, [1], 2)
        assert path.hop_surfaces == (sr.SurfaceUse.REFLECT,)
        for mode in (ES, MS, RO):
            assert sr.admissible_path(path, mode, reflect_scene)

    def test_transmission_inadmissible_reflect_only(self, branching_scene):
        path = sr.path_metrics(branching_scene, CFG, [1, 2], 7)  # transmit at 1
        assert sr.admissible_path(path, ES, branching_scene)
        assert sr.admissible_path(path, MS, branching_scene)
        assert not sr.admissible_path(path, RO, branching_scene)

    def test_back_side_reflection_inadmissible_reflect_only(self, branching_scene):
        path = sr.path_metrics(branching_scene, CFG, [1, 4], 7)  # back-side reflect at 4
        assert not sr.admissible_path(path, RO, branching_scene)


class TestCompatibility:
    def test_disjoint_always_compatible(self, branching_scene):
        a = sr.path_metrics(branching_scene, CFG, [1, 2], 7)
        b = sr.path_metrics(branching_scene, CFG, [5, 6], 7)
        for mode in (ES, MS, RO):
            assert sr.compatible(a, b, mode, same_user=True, scene=branching_scene)
            assert sr.compatible(a, b, mode, same_user=False, scene=branching_scene)

    def test_branch_at_shared_panel_full_split_only(self, branching_scene):
        a = sr.path_metrics(branching_scene, CFG, [1, 2], 7)
        b = sr.path_metrics(branching_scene, CFG, [1, 4], 7)
        assert sr.compatible(a, b, ES, same_user=True, scene=branching_scene)
        assert not sr.compatible(a, b, MS, same_user=True, scene=branching_scene)
        assert not sr.compatible(a, b, RO, same_user=True, scene=branching_scene)

    def test_nested_prefix_paths_compatible_full_split(self, branching_scene):
        a = sr.path_metrics(branching_scene, CFG, [1, 2, 3], 7)
        b = sr.path_metrics(branching_scene, CFG, [1, 2], 7)
        assert sr.compatible(a, b, ES, same_user=True, scene=branching_scene)
        assert not sr.compatible(a, b, MS, same_user=True, scene=branching_scene)

    def test_same_side_successors_incompatible(self):
        fan = make_scene(
            [
                ("bs", (0.0, 0.0, 0.0)),
                ("star_ris", (0.0, 1.0, 0.0), (0.0, 1.0, 0.0)),
                ("star_ris", (-1.5, 2.0, 0.0), (0.0, 1.0, 0.0)),
                ("star_ris", (0.0, 2.2, 0.0), (0.0, 1.0, 0.0)),
                ("user", (0.0, 4.0, 0.0)),
            ],
            [(0, 1), (1, 2), (1, 3), (2, 4), (3, 4)],
        )
        a = sr.path_metrics(fan, CFG, [1, 2], 4)
        b = sr.path_metrics(fan, CFG, [1, 3], 4)
        assert not sr.compatible(a, b, ES, same_user=True, scene=fan)

    def test_different_feeds_incompatible(self):
        diamond = make_scene(
            [
                ("bs", (0.0, 0.0, 0.0)),
                ("star_ris", (1.0, 1.0, 0.0), (0.0, 1.0, 0.0)),
                ("star_ris", (-1.0, 1.2, 0.0), (0.0, 1.0, 0.0)),
                ("star_ris", (0.0, 2.5, 0.0), (0.0, 1.0, 0.0)),
                ("user", (0.0, 3.5, 0.0)),
            ],
            [(0, 1), (0, 2), (1, 3), (2, 3), (3, 4)],
        )
        a = sr.path_metrics(diamond, CFG, [1, 3], 4)
        b = sr.path_metrics(diamond, CFG, [2, 3], 4)
        assert not sr.compatible(a, b, ES, same_user=True, scene=diamond)

    def test_cross_user_sharing_incompatible_every_mode(self, two_user_scene):
        a = sr.path_metrics(two_user_scene, CFG, [1], 4)
        b = sr.path_metrics(two_user_scene, CFG, [1], 5)
        for mode in (ES, MS, RO):
            assert not sr.compatible(a, b, mode, same_user=False, scene=two_user_scene)


def reference_maximal_cliques(graph):
    n = len(graph.entries)
    cliques = []
    for size in range(1, n + 1):
        for combo in combinations(range(n), size):
            if all(b in graph.neighbors[a] for a, b in combinations(combo, 2)):
                others = set(range(n)) - set(combo)
                if not any(
                    all(v in graph.neighbors[u] for u in combo) for v in others
                ):
                    cliques.append(tuple(combo))
    return sorted(cliques)


class TestCliqueSearch:
    def test_matches_reference_on_random_instances(self):
        rng = np.random.default_rng(11)
        for _ in range(30):
            scene = random_scene(rng, n_panels_range=(2, 5), n_users_range=(1, 2))
            config = random_config(rng, candidates_range=(2, 4))
            graph_los = sr.build_los_graph(scene, config)
            candidates = {
                u: sr.candidate_paths(scene, config, graph_los, u) for u in scene.user_ids
            }
            candidates = {u: c for u, c in candidates.items() if c}
            if not candidates:
                continue
            graph = sr.build_path_graph(candidates, config.mode, scene)
            got = sorted(tuple(sorted(c)) for c in sr.bron_kerbosch(graph))
            assert got == reference_maximal_cliques(graph)

    def test_deterministic(self, branching_scene):
        graph_los = sr.build_los_graph(branching_scene, CFG)
        candidates = {7: sr.candidate_paths(branching_scene, CFG, graph_los, 7)}
        graph = sr.build_path_graph(candidates, ES, branching_scene)
        first = sr.bron_kerbosch(graph)
        second = sr.bron_kerbosch(graph)
        assert first == second

    def test_every_clique_builds_a_forest(self):
        """Pairwise compatibility is exactly joint feasibility."""
        rng = np.random.default_rng(5150)
        checked = 0
        for _ in range(300):
            scene = random_scene(rng, n_panels_range=(2, 5), n_users_range=(1, 2))
            config = random_config(rng, candidates_range=(2, 4))
            graph_los = sr.build_los_graph(scene, config)
            candidates = {
                u: sr.candidate_paths(scene, config, graph_los, u) for u in scene.user_ids
            }
            candidates = {u: c for u, c in candidates.items() if c}
            if not candidates:
                continue
            graph = sr.build_path_graph(candidates, config.mode, scene)
            for clique in sr.bron_kerbosch(graph):
                entries = [graph.entries[v] for v in clique]
                forest = sr.build_forest(
                    scene, [p for _, p in entries], [u for u, _ in entries]
                )
                if config.mode is not ES:
                    panels = [j for _, p in entries for j in p.ris_sequence]
                    assert len(panels) == len(set(panels))
                assert len(forest.paths) == len(entries)
                checked += 1
        assert checked > 100


class TestRankKey:
    def test_orders_by_power_then_hops_then_nodes(self):
        strong = [(9, fake_path([1], 9, 8.0))]
        weak = [(9, fake_path([2], 9, 4.0))]
        assert sr.selection_rank_key(strong) < sr.selection_rank_key(weak)
        short = [(9, fake_path([3], 9, 8.0))]
        long = [(9, fake_path([4, 5], 9, 8.0))]
        assert sr.selection_rank_key(short) < sr.selection_rank_key(long)
        early = [(9, fake_path([3], 9, 8.0))]
        late = [(9, fake_path([6], 9, 8.0))]
        assert sr.selection_rank_key(early) < sr.selection_rank_key(late)

    def test_selection_power_single_and_multi(self):
        single = [(9, fake_path([1], 9, 6.0)), (9, fake_path([2], 9, 2.0))]
        assert sr.selection_power(single) == pytest.approx(8.0)
        multi = [(8, fake_path([1], 8, 10.0)), (9, fake_path([2], 9, 40.0))]
        assert sr.selection_power(multi) == pytest.approx(8.0)


class TestSolver:
    def test_branching_scene_full_split_takes_all_paths(self, branching_scene):
        sol = sr.solve_single_user(branching_scene, CFG)
        assert [p.nodes for p in sol.forest.paths] == [
            (0, 1, 2, 3, 7), (0, 1, 2, 7), (0, 1, 4, 7), (0, 5, 6, 7),
        ]
        assert sol.objective == pytest.approx(
            math.fsum(p.peak_gain for p in sol.forest.paths)
        )
        assert sol.user_powers[7] == pytest.approx(sol.objective)
        assert sol.mode is ES
        assert not sol.candidate_limit_binding

    def test_mode_ordering_on_branching_scene(self, branching_scene):
        es = sr.solve_single_user(branching_scene, CFG)
        ms = sr.solve_single_user(
            branching_scene,
            sr.SystemConfig.with_defaults(
                n_bs_antennas=4, m0=4, carrier_hz=5e9, candidates_per_user=6, mode="star_ms"
            ),
        )
        assert es.objective >= ms.objective
        with pytest.raises(sr.NoPathError):
            sr.solve_single_user(
                branching_scene,
                sr.SystemConfig.with_defaults(
                    n_bs_antennas=4, m0=4, carrier_hz=5e9, candidates_per_user=6,
                    mode="reflect_only",
                ),
            )

    def test_candidate_limit_binding_flag(self, branching_scene):
        tight = sr.SystemConfig.with_defaults(
            n_bs_antennas=4, m0=4, carrier_hz=5e9, candidates_per_user=1, mode="star_es"
        )
        sol = sr.solve_single_user(branching_scene, tight)
        assert len(sol.forest.paths) == 1
        assert sol.candidate_limit_binding
        roomy = sr.solve_single_user(branching_scene, CFG)
        assert not roomy.candidate_limit_binding

    def test_two_users_cannot_share_a_panel(self, two_user_scene):
        sol = sr.solve_multi_user(two_user_scene, CFG)
        panels = [j for p in sol.forest.paths for j in p.ris_sequence]
        assert len(panels) == len(set(panels))
        assert set(sol.users) == {4, 5}
        # Equalized delivery: both users receive the common objective.
        for user in sol.users:
            assert sol.user_powers[user] == pytest.approx(sol.objective)

    def test_uncoverable_users_named(self):
        scene = make_scene(
            [
                ("bs", (0.0, 0.0, 0.0)),
                ("star_ris", (0.0, 1.0, 0.0), (0.0, 1.0, 0.0)),
                ("user", (0.8, 2.0, 0.0)),
                ("user", (-0.8, 2.1, 0.0)),
            ],
            [(0, 1), (1, 2), (1, 3)],
        )
        with pytest.raises(sr.InfeasibleError) as info:
            sr.solve_multi_user(scene, CFG)
        assert info.value.users == (2,)

    def test_no_path_raises(self):
        scene = make_scene(
            [
                ("bs", (0.0, 0.0, 0.0)),
                ("star_ris", (0.0, 1.0, 0.0), (0.0, 1.0, 0.0)),
                ("star_ris", (1.0, 2.0, 0.0), (0.0, 1.0, 0.0)),
                ("user", (2.0, 1.0, 0.0)),
            ],
            [(0, 1), (2, 3)],
        )
        with pytest.raises(sr.NoPathError, match="user 3"):
            sr.solve_single_user(scene, CFG)

    def test_deterministic_resolve(self, branching_scene):
        a = sr.solve_single_user(branching_scene, CFG)
        b = sr.solve_single_user(branching_scene, CFG)
        assert a.objective == b.objective
        assert [p.nodes for p in a.forest.paths] == [p.nodes for p in b.forest.paths]
        assert a.clique_count == b.clique_count
        assert a.amplitudes.splits == b.amplitudes.splits


class TestSolverAgainstBruteForce:
    def test_bitwise_agreement_on_random_instances(self):
        rng = np.random.default_rng(31337)
        agreements = 0
        for _ in range(40):
            scene = random_scene(rng, n_panels_range=(2, 5), n_users_range=(1, 2))
            config = random_config(rng, candidates_range=(2, 3))
            graph_los = sr.build_los_graph(scene, config)
            candidates = {
                u: sr.candidate_paths(scene, config, graph_los, u) for u in scene.user_ids
            }
            if any(not c for c in candidates.values()):
                continue
            if sum(len(c) for c in candidates.values()) > 12:
                continue
            reference = sr.brute_force_select(scene, config, candidates)
            try:
                if len(scene.user_ids) == 1:
                    sol = sr.solve_single_user(scene, config)
                else:
                    sol = sr.solve_multi_user(scene, config)
            except (sr.NoPathError, sr.InfeasibleError):
                assert not reference.feasible
                continue
            assert reference.feasible
            got = tuple(
                (u, p.nodes) for u, p in zip(sol.forest.owners, sol.forest.paths)
            )
            want = tuple((u, p.nodes) for u, p in reference.selected)
            assert got == want
            assert sol.objective == reference.objective  # bitwise
            agreements += 1
        assert agreements >= 15


class TestModeMonotonicity:
    def test_objective_never_improves_with_stricter_modes(self):
        rng = np.random.default_rng(777)
        compared = 0
        for _ in range(30):
            scene = random_scene(rng, n_panels_range=(2, 6), n_users_range=(1, 2))
            base = random_config(rng)
            results = {}
            for mode in ("star_es", "star_ms", "reflect_only"):
                config = sr.SystemConfig.with_defaults(
                    n_bs_antennas=base.n_bs_antennas,
                    m0=base.m0,
                    carrier_hz=base.carrier_hz,
                    candidates_per_user=base.candidates_per_user,
                    mode=mode,
                )
                try:
                    if len(scene.user_ids) == 1:
                        results[mode] = sr.solve_single_user(scene, config).objective
                    else:
                        results[mode] = sr.solve_multi_user(scene, config).objective
                except (sr.NoPathError, sr.InfeasibleError):
                    results[mode] = None
            if results["star_ms"] is not None:
                assert results["star_es"] is not None
                assert results["star_es"] >= results["star_ms"]
                compared += 1
            if results["reflect_only"] is not None:
                assert results["star_ms"] is not None
                assert results["star_ms"] >= results["reflect_only"]
        assert compared >= 10
