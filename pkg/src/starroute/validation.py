"""Randomized end-to-end self-checks backing the ``validate`` command.

Every check cross-examines the closed-form designs against the
independent matrix-level simulator on freshly generated random scenes,
or compares a fast algorithm against an exhaustive reference. A failed
expectation is reported, never raised, so a full run always produces a
complete report.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .channel import CandidatePath
from .generate import random_config, random_scene
from .oracle import brute_force_select, verify_power_closed_form, verify_solution
from .routing import build_los_graph, enumerate_all_paths, path_weight, yen_k_shortest
from .scene import SolverMode, SystemConfig
from .selection import (
    NoPathError,
    build_path_graph,
    bron_kerbosch,
    candidate_paths,
    solve_multi_user,
    solve_single_user,
)
from .splitting import InfeasibleError, build_forest, user_gains

REL_TOL = 1e-9
EQUALIZATION_TOL = 1e-12

FULL_COUNTS = {
    "closed_form_scenes": 1000,
    "dominance_scenes": 100,
    "dominance_draws": 100,
    "solver_instances": 200,
    "shortest_path_scenes": 200,
    "mode_scenes": 100,
    "equalization_scenes": 200,
    "clique_instances": 10000,
}
QUICK_COUNTS = {
    "closed_form_scenes": 120,
    "dominance_scenes": 20,
    "dominance_draws": 40,
    "solver_instances": 60,
    "shortest_path_scenes": 60,
    "mode_scenes": 40,
    "equalization_scenes": 60,
    "clique_instances": 1500,
}


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    count: int
    detail: str
    wall_s: float


@dataclass(frozen=True)
class SuiteReport:
    seed: int
    quick: bool
    checks: tuple[CheckResult, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def as_dict(self) -> dict:
        return {
            "kind": "starroute-validation",
            "version": 1,
            "seed": self.seed,
            "quick": self.quick,
            "passed": self.passed,
            "wall_s": round(sum(c.wall_s for c in self.checks), 3),
            "checks": [
                {
                    "name": c.name,
                    "passed": c.passed,
                    "count": c.count,
                    "detail": c.detail,
                    "wall_s": round(c.wall_s, 3),
                }
                for c in self.checks
            ],
        }


def _solve(scene, config):
    if scene.n_users == 1:
        return solve_single_user(scene, config)
    return solve_multi_user(scene, config)


def check_closed_form_equality(rng: np.random.Generator, n_scenes: int) -> CheckResult:
    """Predicted power equals simulated power on random solved scenes."""
    worst = 0.0
    checked = 0
    attempts = 0
    while checked < n_scenes and attempts < 20 * n_scenes:
        attempts += 1
        scene = random_scene(rng)
        config = random_config(rng)
        try:
            solution = _solve(scene, config)
        except (NoPathError, InfeasibleError):
            continue
        isolated, _ = verify_solution(scene, config, solution.forest)
        worst = max(worst, isolated.relative_error)
        checked += 1
    passed = checked >= n_scenes and worst < REL_TOL
    return CheckResult(
        name="closed_form_equality",
        passed=passed,
        count=checked,
        detail=f"worst relative error {worst:.3e} (tolerance {REL_TOL:.0e})",
        wall_s=0.0,
    )


def check_power_dominance(
    rng: np.random.Generator, n_scenes: int, draws: int
) -> CheckResult:
    """No random feasible split/power draw beats its closed-form bound."""
    worst_margin = -math.inf
    checked = 0
    attempts = 0
    while checked < n_scenes and attempts < 20 * n_scenes:
        attempts += 1
        scene = random_scene(rng)
        config = random_config(rng, mode="star_es")
        try:
            solution = _solve(scene, config)
        except (NoPathError, InfeasibleError):
            continue
        report = verify_power_closed_form(
            scene, config, solution.forest, draws=draws, rng=rng
        )
        if not report.ok:
            return CheckResult(
                name="power_dominance",
                passed=False,
                count=checked,
                detail=(
                    f"violated: equality error {report.equality_error:.3e},"
                    f" worst draw margin {report.worst_draw_margin:.3e}"
                ),
                wall_s=0.0,
            )
        worst_margin = max(worst_margin, report.worst_draw_margin)
        checked += 1
    return CheckResult(
        name="power_dominance",
        passed=checked >= n_scenes,
        count=checked * draws,
        detail=f"worst draw margin {worst_margin:.3e} (must stay <= ~1e-9)",
        wall_s=0.0,
    )


def check_solver_exactness(rng: np.random.Generator, n_instances: int) -> CheckResult:
    """Clique solver bitwise-matches exhaustive subset enumeration."""
    checked = 0
    feasible_matches = 0
    attempts = 0
    while checked < n_instances and attempts < 40 * n_instances:
        attempts += 1
        scene = random_scene(rng, n_panels_range=(2, 5), n_users_range=(1, 2))
        config = random_config(rng, candidates_range=(2, 3))
        graph = build_los_graph(scene, config)
        candidates = {
            u: candidate_paths(scene, config, graph, u) for u in scene.user_ids
        }
        if sum(len(c) for c in candidates.values()) > 12:
            continue
        reference = brute_force_select(scene, config, candidates)
        try:
            solution = _solve(scene, config)
        except (NoPathError, InfeasibleError):
            if reference.feasible:
                return CheckResult(
                    name="solver_exactness",
                    passed=False,
                    count=checked,
                    detail="solver reported infeasible where brute force found a cover",
                    wall_s=0.0,
                )
            checked += 1
            continue
        got = tuple((u, p.nodes) for u, p in zip(solution.forest.owners, solution.forest.paths))
        want = tuple((u, p.nodes) for u, p in reference.selected)
        if not reference.feasible or got != want or solution.objective != reference.objective:
            return CheckResult(
                name="solver_exactness",
                passed=False,
                count=checked,
                detail=f"mismatch: solver {got} vs exhaustive {want}",
                wall_s=0.0,
            )
        feasible_matches += 1
        checked += 1
    return CheckResult(
        name="solver_exactness",
        passed=checked >= n_instances and feasible_matches >= n_instances // 4,
        count=checked,
        detail=f"{feasible_matches} feasible instances matched bitwise",
        wall_s=0.0,
    )


def check_shortest_path_exactness(rng: np.random.Generator, n_scenes: int) -> CheckResult:
    """Ranked route listing matches exhaustive enumeration on random DAGs."""
    checked = 0
    routes = 0
    attempts = 0
    while checked < n_scenes and attempts < 20 * n_scenes:
        attempts += 1
        scene = random_scene(rng)
        config = random_config(rng)
        graph = build_los_graph(scene, config)
        max_hops = scene.n_panels + 1
        for user in scene.user_ids:
            reference = enumerate_all_paths(graph, 0, user, max_hops)
            ranked = sorted(
                reference, key=lambda nodes: (path_weight(graph, nodes), tuple(nodes))
            )
            full = yen_k_shortest(graph, 0, user, len(reference) + 2)
            if [tuple(p) for p in full] != [tuple(p) for p in ranked]:
                return CheckResult(
                    name="shortest_path_exactness",
                    passed=False,
                    count=checked,
                    detail=f"full listing mismatch for user {user}",
                    wall_s=0.0,
                )
            for k in (1, 3):
                prefix = yen_k_shortest(graph, 0, user, k)
                if [tuple(p) for p in prefix] != [tuple(p) for p in ranked[:k]]:
                    return CheckResult(
                        name="shortest_path_exactness",
                        passed=False,
                        count=checked,
                        detail=f"prefix (k={k}) mismatch for user {user}",
                        wall_s=0.0,
                    )
            routes += len(reference)
        checked += 1
    return CheckResult(
        name="shortest_path_exactness",
        passed=checked >= n_scenes,
        count=checked,
        detail=f"{routes} routes cross-checked against exhaustive enumeration",
        wall_s=0.0,
    )


def check_mode_monotonicity(rng: np.random.Generator, n_scenes: int) -> CheckResult:
    """Looser surface disciplines never lose to stricter ones."""
    checked = 0
    comparisons = 0
    attempts = 0
    while checked < n_scenes and attempts < 20 * n_scenes:
        attempts += 1
        scene = random_scene(rng, n_panels_range=(2, 6))
        base = random_config(rng)
        objectives: dict[str, float | None] = {}
        for mode in SolverMode:
            config = SystemConfig.with_defaults(
                n_bs_antennas=base.n_bs_antennas,
                m0=base.m0,
                carrier_hz=base.carrier_hz,
                candidates_per_user=base.candidates_per_user,
                mode=mode,
            )
            try:
                objectives[mode.value] = _solve(scene, config).objective
            except (NoPathError, InfeasibleError):
                objectives[mode.value] = None
        es, ms, ro = (
            objectives["star_es"],
            objectives["star_ms"],
            objectives["reflect_only"],
        )
        if (ms is not None and es is None) or (ro is not None and ms is None):
            return CheckResult(
                name="mode_monotonicity",
                passed=False,
                count=checked,
                detail="a stricter mode was feasible where a looser one was not",
                wall_s=0.0,
            )
        if (ms is not None and es < ms) or (ro is not None and ms < ro):
            return CheckResult(
                name="mode_monotonicity",
                passed=False,
                count=checked,
                detail=f"ordering violated: es={es!r} ms={ms!r} ro={ro!r}",
                wall_s=0.0,
            )
        comparisons += sum(1 for v in (ms, ro) if v is not None)
        checked += 1
    return CheckResult(
        name="mode_monotonicity",
        passed=checked >= n_scenes,
        count=checked,
        detail=f"{comparisons} cross-mode comparisons, zero violations",
        wall_s=0.0,
    )


def check_power_equalization(rng: np.random.Generator, n_scenes: int) -> CheckResult:
    """Multi-user power split equalizes every user at the common level."""
    worst = 0.0
    checked = 0
    attempts = 0
    while checked < n_scenes and attempts < 20 * n_scenes:
        attempts += 1
        scene = random_scene(rng, n_users_range=(2, 3))
        config = random_config(rng)
        try:
            solution = solve_multi_user(scene, config)
        except (NoPathError, InfeasibleError):
            continue
        gains = user_gains(solution.forest)
        level = solution.objective
        for user, share in solution.allocation.user_fractions.items():
            err = abs(share * gains[user] - level) / level
            worst = max(worst, err)
        checked += 1
    passed = checked >= n_scenes and worst < EQUALIZATION_TOL
    return CheckResult(
        name="power_equalization",
        passed=passed,
        count=checked,
        detail=f"worst per-user deviation {worst:.3e} (tolerance {EQUALIZATION_TOL:.0e})",
        wall_s=0.0,
    )


def check_clique_feasibility(rng: np.random.Generator, n_instances: int) -> CheckResult:
    """Every maximal compatibility clique assembles into a valid forest."""
    cliques_checked = 0
    scenes = 0
    attempts = 0
    while cliques_checked < n_instances and attempts < 20 * n_instances:
        attempts += 1
        scene = random_scene(rng, n_panels_range=(2, 6))
        config = random_config(rng)
        graph_los = build_los_graph(scene, config)
        candidates: dict[int, list[CandidatePath]] = {
            user: list(candidate_paths(scene, config, graph_los, user))
            for user in scene.user_ids
        }
        if not any(candidates.values()):
            continue
        graph = build_path_graph(candidates, config.mode, scene)
        for clique in bron_kerbosch(graph):
            members = [graph.entries[i] for i in clique]
            try:
                forest = build_forest(
                    scene, [p for _, p in members], [u for u, _ in members]
                )
            except ValueError as exc:
                return CheckResult(
                    name="clique_feasibility",
                    passed=False,
                    count=cliques_checked,
                    detail=f"clique failed to assemble: {exc}",
                    wall_s=0.0,
                )
            if config.mode is not SolverMode.STAR_ES:
                panels = [p for path in forest.paths for p in path.ris_sequence]
                if len(panels) != len(set(panels)):
                    return CheckResult(
                        name="clique_feasibility",
                        passed=False,
                        count=cliques_checked,
                        detail="non-splitting clique reused a panel",
                        wall_s=0.0,
                    )
            cliques_checked += 1
        scenes += 1
    return CheckResult(
        name="clique_feasibility",
        passed=cliques_checked >= n_instances,
        count=cliques_checked,
        detail=f"{cliques_checked} maximal cliques over {scenes} scenes assembled",
        wall_s=0.0,
    )


def run_suite(seed: int = 20260822, quick: bool = False, log=None) -> SuiteReport:
    """Run every self-check with independent seeded randomness."""
    counts = QUICK_COUNTS if quick else FULL_COUNTS
    plan = [
        (
            "closed_form_equality",
            lambda rng: check_closed_form_equality(rng, counts["closed_form_scenes"]),
        ),
        (
            "power_dominance",
            lambda rng: check_power_dominance(
                rng, counts["dominance_scenes"], counts["dominance_draws"]
            ),
        ),
        (
            "solver_exactness",
            lambda rng: check_solver_exactness(rng, counts["solver_instances"]),
        ),
        (
            "shortest_path_exactness",
            lambda rng: check_shortest_path_exactness(rng, counts["shortest_path_scenes"]),
        ),
        (
            "mode_monotonicity",
            lambda rng: check_mode_monotonicity(rng, counts["mode_scenes"]),
        ),
        (
            "power_equalization",
            lambda rng: check_power_equalization(rng, counts["equalization_scenes"]),
        ),
        (
            "clique_feasibility",
            lambda rng: check_clique_feasibility(rng, counts["clique_instances"]),
        ),
    ]
    results = []
    for index, (name, runner) in enumerate(plan):
        rng = np.random.default_rng([seed, index])
        start = time.perf_counter()
        try:
            result = runner(rng)
        except Exception as exc:  # a crashed check is a failed check
            result = CheckResult(
                name=name, passed=False, count=0, detail=f"error: {exc!r}", wall_s=0.0
            )
        wall = time.perf_counter() - start
        result = CheckResult(
            name=result.name,
            passed=result.passed,
            count=result.count,
            detail=result.detail,
            wall_s=wall,
        )
        results.append(result)
        if log is not None:
            status = "ok" if result.passed else "FAILED"
            log(
                f"{result.name:<26} {status:<7} count={result.count:<7}"
                f" {result.wall_s:7.2f}s  {result.detail}"
            )
    return SuiteReport(seed=seed, quick=quick, checks=tuple(results))
