"""Matrix-level oracle for the closed-form designs.

Everything here rebuilds the physics from first principles - explicit
rank-1 hop matrices, diagonal surface coefficients, brute-force subset
search - and never reuses the solver's closed forms, so agreement
between the two routes is evidence, not tautology. The only shared
piece is the objective/rank-key computation, by design: the brute-force
reference must rank subsets with the solver's own objective while
testing feasibility independently.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Mapping, Sequence

import numpy as np

from .channel import Beamformer, CandidatePath
from .scene import Scene, SolverMode, SystemConfig, direction, distance
from .selection import selection_power, selection_rank_key
from .splitting import (
    AmplitudeAssignment,
    BeamForest,
    DesignBundle,
    ForestError,
    PowerAllocation,
    assemble_designs,
    beam_power_allocation,
    build_forest,
    optimal_amplitudes,
    predicted_powers,
    user_gains,
)

BRUTE_FORCE_LIMIT = 20
_TWO_PI = 2.0 * math.pi


class OracleError(ValueError):
    """Simulation request references a missing or invalid design element."""


class ChannelMatrices:
    """Per-hop channel matrices built directly from geometry.

    Every hop is sqrt(reference_gain)/d times exp(-i*2*pi*d/wavelength)
    times the rank-1 outer product of the receive and transmit array
    responses; matrices are cached per (source, target).
    """

    def __init__(self, scene: Scene, config: SystemConfig):
        self.scene = scene
        self.config = config
        self._cache: dict[tuple[int, int], np.ndarray] = {}

    def _scale(self, i: int, j: int) -> complex:
        d = distance(self.scene, i, j)
        return (
            math.sqrt(self.config.reference_gain)
            / d
            * np.exp(-1j * _TWO_PI * d / self.config.wavelength)
        )

    def _ula(self, toward: int) -> np.ndarray:
        cfg = self.config
        axis_cos = float(direction(self.scene, 0, toward) @ self.scene.bs_array_axis)
        n = np.arange(cfg.n_bs_antennas)
        return np.exp(-1j * _TWO_PI * n * cfg.bs_element_spacing * axis_cos / cfg.wavelength)

    def _ura(self, panel: int, other: int, arriving: bool) -> np.ndarray:
        cfg = self.config
        unit = (
            direction(self.scene, other, panel)
            if arriving
            else direction(self.scene, panel, other)
        )
        m = np.arange(cfg.elements_per_panel)
        surrogate = (m // cfg.m0) * float(unit[0]) + (m % cfg.m0) * float(unit[2])
        return np.exp(-1j * _TWO_PI * cfg.ris_element_spacing * surrogate / cfg.wavelength)

    def bs_to_panel(self, panel: int) -> np.ndarray:
        """(M, N_B) hop matrix from the BS array to a panel."""
        key = (0, panel)
        if key not in self._cache:
            arrive = self._ura(panel, 0, arriving=True)
            depart = self._ula(panel)
            self._cache[key] = self._scale(0, panel) * np.outer(arrive, depart.conj())
        return self._cache[key]

    def panel_to_panel(self, source: int, target: int) -> np.ndarray:
        """(M, M) hop matrix between two panels."""
        key = (source, target)
        if key not in self._cache:
            arrive = self._ura(target, source, arriving=True)
            depart = self._ura(source, target, arriving=False)
            self._cache[key] = self._scale(source, target) * np.outer(arrive, depart.conj())
        return self._cache[key]

    def panel_to_user(self, panel: int, user: int) -> np.ndarray:
        """(M,) receive row from a panel to a user antenna."""
        key = (panel, user)
        if key not in self._cache:
            depart = self._ura(panel, user, arriving=False)
            self._cache[key] = self._scale(panel, user) * depart.conj()
        return self._cache[key]


def _surface_matrix(
    profile_phases: np.ndarray, extra_rotation: float, power_fraction: float
) -> np.ndarray:
    """Diagonal of one face's coefficients: amplitude sqrt(fraction)."""
    return math.sqrt(power_fraction) * np.exp(1j * (profile_phases + extra_rotation))


def simulate_path(
    scene: Scene,
    config: SystemConfig,
    path: CandidatePath,
    designs: DesignBundle,
    amplitudes: AmplitudeAssignment,
    beamformer: Beamformer | np.ndarray,
    matrices: ChannelMatrices | None = None,
) -> complex:
    """End-to-end complex channel of one path under explicit designs.

    Multiplies the actual hop matrices and diagonal face coefficients;
    no closed form is consulted.
    """
    matrices = matrices or ChannelMatrices(scene, config)
    weights = beamformer.weights if isinstance(beamformer, Beamformer) else np.asarray(beamformer)
    if weights.shape != (config.n_bs_antennas,):
        raise OracleError(
            f"beamformer has shape {weights.shape}, expected ({config.n_bs_antennas},)"
        )
    field = matrices.bs_to_panel(path.ris_sequence[0]) @ weights
    for l, (panel, face) in enumerate(zip(path.ris_sequence, path.hop_surfaces)):
        profile = designs.profiles.get((panel, face))
        if profile is None:
            raise OracleError(f"no phase profile for panel {panel} face {face.value}")
        try:
            fraction = amplitudes.fraction(panel, face)
        except KeyError as exc:
            raise OracleError(str(exc)) from None
        field = _surface_matrix(profile.phases, profile.extra_rotation, fraction) * field
        nxt = path.nodes[l + 2]
        if l + 1 < path.n_panels:
            field = matrices.panel_to_panel(panel, nxt) @ field
        else:
            return complex(matrices.panel_to_user(panel, nxt) @ field)
    raise AssertionError("unreachable: every path ends at a user")


@dataclass(frozen=True)
class OracleReport:
    """Predicted-vs-simulated received power comparison.

    ``predicted``/``simulated`` are the headline (worst user) values;
    ``per_user`` has the full breakdown. ``leakage_power`` is only set
    for composite-beam simulation, where inter-beam coupling makes the
    simulated value drift from the per-beam model.
    """

    predicted: float
    simulated: float
    relative_error: float
    per_user: Mapping[int, tuple[float, float, float]]
    leakage_power: float | None = None

    @property
    def ok(self) -> bool:
        return self.relative_error < 1e-9


def _beam_weights(
    forest: BeamForest, allocation: PowerAllocation, designs: DesignBundle
) -> dict[tuple[int, int], np.ndarray]:
    weights = {}
    for beam in forest.beams:
        key = (beam.user, beam.first_panel)
        beamformer = designs.beamformers.get(key)
        if beamformer is None:
            raise OracleError(f"no beamformer for user {beam.user} first panel {beam.first_panel}")
        weights[key] = beamformer.weights
    return weights


def simulate_received_power(
    scene: Scene,
    config: SystemConfig,
    forest: BeamForest,
    amplitudes: AmplitudeAssignment,
    allocation: PowerAllocation,
    designs: DesignBundle,
    composite: bool = False,
    predicted: Mapping[int, float] | None = None,
    matrices: ChannelMatrices | None = None,
) -> OracleReport:
    """Per-user received power from explicit matrix products.

    Isolated mode evaluates each beam against its own sub-beamformer
    (the model the closed forms describe); composite mode transmits the
    superposed beamformer sum(sqrt(share) * w_beam) through every path,
    exposing inter-beam leakage as a reported (not asserted) error.
    """
    matrices = matrices or ChannelMatrices(scene, config)
    beam_weights = _beam_weights(forest, allocation, designs)
    if predicted is None:
        predicted = predicted_powers(forest)
    per_user: dict[int, tuple[float, float, float]] = {}
    composite_weights = None
    if composite:
        stacked = np.zeros(config.n_bs_antennas, dtype=complex)
        for beam in forest.beams:
            share = allocation.absolute(beam.user, beam.first_panel)
            stacked = stacked + math.sqrt(share) * beam_weights[(beam.user, beam.first_panel)]
        composite_weights = stacked
    for user in forest.users:
        amplitude = 0.0 + 0.0j
        for beam in forest.beams_of(user):
            share = allocation.absolute(beam.user, beam.first_panel)
            for idx in beam.path_indices:
                path = forest.paths[idx]
                if composite:
                    contribution = simulate_path(
                        scene, config, path, designs, amplitudes, composite_weights, matrices
                    )
                else:
                    contribution = math.sqrt(share) * simulate_path(
                        scene,
                        config,
                        path,
                        designs,
                        amplitudes,
                        beam_weights[(beam.user, beam.first_panel)],
                        matrices,
                    )
                amplitude += contribution
        power = float(abs(amplitude) ** 2)
        want = float(predicted[user])
        rel = abs(power - want) / max(want, 1e-300)
        per_user[user] = (want, power, rel)
    worst = max(per_user, key=lambda u: per_user[u][2])
    leakage = None
    if composite:
        leakage = max(abs(sim - want) for want, sim, _ in per_user.values())
    return OracleReport(
        predicted=per_user[worst][0],
        simulated=per_user[worst][1],
        relative_error=per_user[worst][2],
        per_user=per_user,
        leakage_power=leakage,
    )


def verify_solution(
    scene: Scene, config: SystemConfig, forest: BeamForest
) -> tuple[OracleReport, OracleReport]:
    """Isolated and composite oracle reports for a forest's optimal designs."""
    amplitudes = optimal_amplitudes(forest)
    allocation = beam_power_allocation(forest)
    designs = assemble_designs(scene, config, forest)
    matrices = ChannelMatrices(scene, config)
    isolated = simulate_received_power(
        scene, config, forest, amplitudes, allocation, designs, matrices=matrices
    )
    composite = simulate_received_power(
        scene, config, forest, amplitudes, allocation, designs, composite=True, matrices=matrices
    )
    return isolated, composite


@dataclass(frozen=True)
class ClosedFormCheck:
    """Outcome of the closed-form received-power verification."""

    equality_error: float
    worst_draw_margin: float
    draws: int
    ok: bool


def verify_power_closed_form(
    scene: Scene,
    config: SystemConfig,
    forest: BeamForest,
    draws: int = 100,
    rng: np.random.Generator | None = None,
    rel_tol: float = 1e-9,
) -> ClosedFormCheck:
    """Check the two claims behind the closed-form received power.

    Equality: under the optimal splits/shares/phases, the simulated
    per-user power matches the closed form within ``rel_tol`` relative.
    Dominance: under ``draws`` random feasible splits and shares (phases
    kept matched), no user's simulated power exceeds its share of the
    closed-form bound beyond ``rel_tol``.
    """
    rng = rng or np.random.default_rng(0)
    amplitudes = optimal_amplitudes(forest)
    allocation = beam_power_allocation(forest)
    designs = assemble_designs(scene, config, forest)
    matrices = ChannelMatrices(scene, config)
    report = simulate_received_power(
        scene, config, forest, amplitudes, allocation, designs, matrices=matrices
    )
    equality_error = report.relative_error

    gains = user_gains(forest)
    users = forest.users
    worst_margin = 0.0
    for _ in range(draws):
        split_draw = {
            panel: (beta_r, 1.0 - beta_r)
            for panel, beta_r in (
                (p, float(rng.uniform())) for p in forest.selected_panels
            )
        }
        random_amplitudes = AmplitudeAssignment(splits=split_draw)
        if len(users) == 1:
            user_draw = {users[0]: 1.0}
        else:
            simplex = rng.dirichlet(np.ones(len(users)))
            user_draw = {u: float(s) for u, s in zip(users, simplex)}
        beam_draw: dict[tuple[int, int], float] = {}
        for user in users:
            beams = forest.beams_of(user)
            simplex = rng.dirichlet(np.ones(len(beams)))
            for beam, share in zip(beams, simplex):
                beam_draw[(beam.user, beam.first_panel)] = float(share)
        random_allocation = PowerAllocation(user_fractions=user_draw, beam_fractions=beam_draw)
        bounds = {u: user_draw[u] * gains[u] for u in users}
        draw_report = simulate_received_power(
            scene,
            config,
            forest,
            random_amplitudes,
            random_allocation,
            designs,
            predicted=bounds,
            matrices=matrices,
        )
        for user, (bound, simulated, _) in draw_report.per_user.items():
            margin = (simulated - bound) / max(bound, 1e-300)
            worst_margin = max(worst_margin, margin)
    ok = equality_error < rel_tol and worst_margin < rel_tol
    return ClosedFormCheck(
        equality_error=equality_error,
        worst_draw_margin=worst_margin,
        draws=draws,
        ok=ok,
    )


@dataclass(frozen=True)
class BruteForceResult:
    """Best selection found by exhaustive subset search."""

    selected: tuple[tuple[int, CandidatePath], ...]
    objective: float | None
    feasible: bool
    subsets_checked: int
    uncovered_users: tuple[int, ...] = ()


def _subset_feasible(
    scene: Scene,
    entries: Sequence[tuple[int, CandidatePath]],
    mode: SolverMode,
) -> bool:
    try:
        build_forest(scene, [p for _, p in entries], [u for u, _ in entries])
    except ForestError:
        return False
    if mode is not SolverMode.STAR_ES:
        seen: set[int] = set()
        for _, path in entries:
            for panel in path.ris_sequence:
                if panel in seen:
                    return False
                seen.add(panel)
    return True


def brute_force_select(
    scene: Scene,
    config: SystemConfig,
    candidates: Mapping[int, Sequence[CandidatePath]],
    mode: SolverMode | str | None = None,
) -> BruteForceResult:
    """Exhaustive reference for the clique solver.

    Enumerates every subset of the candidate pool, testing feasibility
    through forest construction plus panel-disjointness (never through
    the compatibility graph), and ranks survivors with the solver's own
    key. Guarded to at most 20 candidates.
    """
    mode = config.mode if mode is None else SolverMode(mode)
    entries: list[tuple[int, CandidatePath]] = []
    for user in sorted(candidates):
        for path in candidates[user]:
            entries.append((user, path))
    if len(entries) > BRUTE_FORCE_LIMIT:
        raise OracleError(
            f"brute force limited to {BRUTE_FORCE_LIMIT} candidates, got {len(entries)}"
        )
    users = sorted(candidates)
    if any(not candidates[u] for u in users):
        return BruteForceResult(
            selected=(),
            objective=None,
            feasible=False,
            subsets_checked=0,
            uncovered_users=tuple(u for u in users if not candidates[u]),
        )
    best_key = None
    best: tuple[tuple[int, CandidatePath], ...] | None = None
    checked = 0
    n = len(entries)
    for size in range(1, n + 1):
        for combo in combinations(range(n), size):
            subset = [entries[i] for i in combo]
            if {u for u, _ in subset} != set(users):
                continue
            checked += 1
            if not _subset_feasible(scene, subset, mode):
                continue
            key = selection_rank_key(subset)
            if best_key is None or key < best_key:
                best_key = key
                best = tuple(sorted(subset, key=lambda e: (e[0], e[1].nodes)))
    if best is None:
        return BruteForceResult(
            selected=(),
            objective=None,
            feasible=False,
            subsets_checked=checked,
            uncovered_users=tuple(users),
        )
    return BruteForceResult(
        selected=best,
        objective=selection_power(best),
        feasible=True,
        subsets_checked=checked,
    )
