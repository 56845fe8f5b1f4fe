"""Beam forest construction and closed-form power splitting.

A selected path set is organized as a forest rooted at the BS: one beam
per (user, first panel), every selected panel fed by exactly one
predecessor, at most two successors per panel (on opposite sides of it,
so one face serves each), and no panel shared across users. For a valid
forest the optimal per-face power splits, per-beam power shares and
received powers all have closed forms in the member paths' peak gains:

* face split: each used face gets the fraction of the node's
  peak-gain mass routed through it (faces sum to 1 exactly);
* beam share: proportional to the beam's peak-gain sum;
* single-user received power: the plain sum of selected peak gains;
* multi-user shares: inverse-gain weighting, which equalizes every
  user's received power at 1 / sum_k(1/G_k).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

from .channel import (
    Beamformer,
    CandidatePath,
    PhaseProfile,
    SurfaceUse,
    optimal_beamformer,
    optimal_phase_profile,
)
from .scene import Scene, SystemConfig, side_cosine

TWO_PI = 2.0 * math.pi


class ForestError(ValueError):
    """Selected path set cannot form a valid beam forest."""

    def __init__(self, node: int, message: str):
        self.node = node
        super().__init__(message)


class InDegreeViolation(ForestError):
    def __init__(self, node: int, preds: Sequence[int]):
        super().__init__(
            node, f"panel {node} is fed by multiple predecessors {sorted(preds)}"
        )


class OutDegreeViolation(ForestError):
    def __init__(self, node: int, succs: Sequence[int]):
        super().__init__(
            node, f"panel {node} feeds more than two successors {sorted(succs)}"
        )


class SideViolation(ForestError):
    def __init__(self, node: int, succs: Sequence[int]):
        super().__init__(
            node,
            f"panel {node} feeds two successors {sorted(succs)} on the same side",
        )


class CrossUserSharing(ForestError):
    def __init__(self, node: int, users: Sequence[int]):
        super().__init__(
            node, f"panel {node} is shared across users {sorted(users)}"
        )


class InfeasibleError(ValueError):
    """No valid assignment serves every requested user."""

    def __init__(self, users: Sequence[int], message: str | None = None):
        self.users = tuple(sorted(users))
        super().__init__(
            message or f"no feasible assignment covers users {list(self.users)}"
        )


@dataclass(frozen=True)
class Beam:
    """All selected paths of one user entering through one first panel."""

    user: int
    first_panel: int
    path_indices: tuple[int, ...]


@dataclass(frozen=True, eq=False)
class BeamForest:
    """Validated structure of a selected path set.

    ``paths`` is canonically ordered (by user, then node sequence);
    ``face_paths`` maps (panel, face) to the member paths routed through
    that face; ``terminal`` maps each path to the unique (panel, face)
    from which it departs toward its user.
    """

    paths: tuple[CandidatePath, ...]
    owners: tuple[int, ...]
    beams: tuple[Beam, ...]
    predecessor: Mapping[int, int]
    successors: Mapping[int, tuple[int, ...]]
    branch_nodes: frozenset[int]
    face_paths: Mapping[tuple[int, SurfaceUse], tuple[int, ...]]
    terminal: Mapping[int, tuple[int, SurfaceUse]]

    @property
    def users(self) -> tuple[int, ...]:
        return tuple(sorted(set(self.owners)))

    @property
    def selected_panels(self) -> tuple[int, ...]:
        return tuple(sorted(self.predecessor))

    def beams_of(self, user: int) -> tuple[Beam, ...]:
        return tuple(b for b in self.beams if b.user == user)

    def paths_of(self, user: int) -> tuple[int, ...]:
        return tuple(i for i, owner in enumerate(self.owners) if owner == user)


def build_forest(
    scene: Scene,
    paths: Sequence[CandidatePath],
    owners: Sequence[int] | None = None,
) -> BeamForest:
    """Validate a selected path set and index its forest structure.

    Raises CrossUserSharing, InDegreeViolation, OutDegreeViolation or
    SideViolation naming the offending panel otherwise.
    """
    if not paths:
        raise ValueError("a forest needs at least one path")
    if owners is None:
        owners = [p.user for p in paths]
    if len(owners) != len(paths):
        raise ValueError("owners must align with paths")
    order = sorted(range(len(paths)), key=lambda i: (owners[i], paths[i].nodes))
    ordered_paths = tuple(paths[i] for i in order)
    ordered_owners = tuple(int(owners[i]) for i in order)

    user_of_panel: dict[int, set[int]] = {}
    preds: dict[int, set[int]] = {}
    succs: dict[int, set[int]] = {}
    for path, owner in zip(ordered_paths, ordered_owners):
        nodes = path.nodes
        for l, panel in enumerate(path.ris_sequence):
            user_of_panel.setdefault(panel, set()).add(owner)
            preds.setdefault(panel, set()).add(nodes[l])
            succs.setdefault(panel, set()).add(nodes[l + 2])
    for panel in sorted(user_of_panel):
        if len(user_of_panel[panel]) > 1:
            raise CrossUserSharing(panel, sorted(user_of_panel[panel]))
    for panel in sorted(preds):
        if len(preds[panel]) > 1:
            raise InDegreeViolation(panel, sorted(preds[panel]))
        out = sorted(succs[panel])
        if len(out) > 2:
            raise OutDegreeViolation(panel, out)
        if len(out) == 2:
            product = side_cosine(scene, out[0], panel) * side_cosine(scene, out[1], panel)
            if not product < 0.0:
                raise SideViolation(panel, out)

    face_paths: dict[tuple[int, SurfaceUse], list[int]] = {}
    terminal: dict[int, tuple[int, SurfaceUse]] = {}
    for idx, path in enumerate(ordered_paths):
        for panel, face in zip(path.ris_sequence, path.hop_surfaces):
            face_paths.setdefault((panel, face), []).append(idx)
        terminal[idx] = (path.ris_sequence[-1], path.hop_surfaces[-1])
    # A terminal face feeds the user only, so it belongs to exactly one path.
    for idx, key in terminal.items():
        assert face_paths[key] == [idx], (
            f"terminal face {key} shared by paths {face_paths[key]}"
        )

    beams: dict[tuple[int, int], list[int]] = {}
    for idx, (path, owner) in enumerate(zip(ordered_paths, ordered_owners)):
        beams.setdefault((owner, path.ris_sequence[0]), []).append(idx)
    beam_list = tuple(
        Beam(user=user, first_panel=panel, path_indices=tuple(members))
        for (user, panel), members in sorted(beams.items())
    )
    return BeamForest(
        paths=ordered_paths,
        owners=ordered_owners,
        beams=beam_list,
        predecessor={j: next(iter(p)) for j, p in preds.items()},
        successors={j: tuple(sorted(s)) for j, s in succs.items()},
        branch_nodes=frozenset(j for j, s in succs.items() if len(s) == 2),
        face_paths={k: tuple(v) for k, v in sorted(face_paths.items())},
        terminal=terminal,
    )


def _gains(forest: BeamForest, peak_gains: Sequence[float] | None) -> tuple[float, ...]:
    if peak_gains is None:
        return tuple(p.peak_gain for p in forest.paths)
    if len(peak_gains) != len(forest.paths):
        raise ValueError("peak_gains must align with forest.paths")
    return tuple(float(g) for g in peak_gains)


@dataclass(frozen=True)
class AmplitudeAssignment:
    """Per-(panel, face) power-split fractions.

    For every selected panel, reflect + transmit fractions sum to 1
    exactly; an unused face carries 0. The element amplitude applied by
    a face is the square root of its fraction.
    """

    splits: Mapping[int, tuple[float, float]]

    def reflect(self, panel: int) -> float:
        return self.splits[panel][0]

    def transmit(self, panel: int) -> float:
        return self.splits[panel][1]

    def fraction(self, panel: int, face: SurfaceUse) -> float:
        pair = self.splits.get(panel)
        if pair is None:
            raise KeyError(f"panel {panel} has no amplitude assignment")
        return pair[0] if face is SurfaceUse.REFLECT else pair[1]


def optimal_amplitudes(
    forest: BeamForest, peak_gains: Sequence[float] | None = None
) -> AmplitudeAssignment:
    """Closed-form optimal face splits: each face gets its peak-gain share.

    A face's fraction is (sum of peak gains routed through it) divided
    by (sum over both faces of the node); single-face nodes get 1.
    """
    gains = _gains(forest, peak_gains)
    splits: dict[int, tuple[float, float]] = {}
    for panel in forest.selected_panels:
        through_r = forest.face_paths.get((panel, SurfaceUse.REFLECT), ())
        through_t = forest.face_paths.get((panel, SurfaceUse.TRANSMIT), ())
        if through_r and through_t:
            mass_r = math.fsum(gains[i] for i in through_r)
            mass_t = math.fsum(gains[i] for i in through_t)
            beta_r = mass_r / (mass_r + mass_t)
            splits[panel] = (beta_r, 1.0 - beta_r)
        elif through_r:
            splits[panel] = (1.0, 0.0)
        else:
            splits[panel] = (0.0, 1.0)
    return AmplitudeAssignment(splits=splits)


def realized_path_gain(
    path: CandidatePath,
    amplitudes: AmplitudeAssignment,
    peak_gain: float | None = None,
) -> float:
    """End-to-end power gain of one path under a face-split assignment:
    the path's peak gain times the product of its faces' fractions."""
    value = path.peak_gain if peak_gain is None else float(peak_gain)
    for panel, face in zip(path.ris_sequence, path.hop_surfaces):
        value *= amplitudes.fraction(panel, face)
    return value


@dataclass(frozen=True)
class PowerAllocation:
    """Transmit power shares: per user, and per beam within each user.

    ``beam_fractions`` are within-user shares (each user's beams sum to
    1); a beam's absolute share is its user's fraction times its
    within-user fraction.
    """

    user_fractions: Mapping[int, float]
    beam_fractions: Mapping[tuple[int, int], float]

    def absolute(self, user: int, first_panel: int) -> float:
        return self.user_fractions[user] * self.beam_fractions[(user, first_panel)]


def user_gains(
    forest: BeamForest, peak_gains: Sequence[float] | None = None
) -> dict[int, float]:
    """Per-user sums of selected peak gains (canonical path order)."""
    gains = _gains(forest, peak_gains)
    return {
        user: math.fsum(gains[i] for i in forest.paths_of(user))
        for user in forest.users
    }


def user_power_allocation(gains_by_user: Mapping[int, float]) -> tuple[dict[int, float], float]:
    """Inverse-gain user shares and the common received power they equalize.

    Share of user k is (1/G_k) / sum(1/G); every user then receives
    exactly 1 / sum(1/G). A user with zero gain has no path and makes
    the assignment infeasible.
    """
    if not gains_by_user:
        raise InfeasibleError((), "no users to allocate power across")
    dead = [u for u, g in gains_by_user.items() if g <= 0.0]
    if dead:
        raise InfeasibleError(dead, f"users {sorted(dead)} have no usable path")
    users = sorted(gains_by_user)
    inverses = {u: 1.0 / gains_by_user[u] for u in users}
    total = math.fsum(inverses[u] for u in users)
    return {u: inverses[u] / total for u in users}, 1.0 / total


def beam_power_allocation(
    forest: BeamForest, peak_gains: Sequence[float] | None = None
) -> PowerAllocation:
    """Closed-form power shares across users and their beams.

    Within a user, a beam's share is proportional to its peak-gain sum
    (the square of its coherent amplitude under optimal splits); across
    users, shares follow the inverse-gain rule.
    """
    gains = _gains(forest, peak_gains)
    by_user = user_gains(forest, peak_gains)
    if len(by_user) == 1:
        user_fractions = {next(iter(by_user)): 1.0}
    else:
        user_fractions, _ = user_power_allocation(by_user)
    beam_fractions: dict[tuple[int, int], float] = {}
    for beam in forest.beams:
        beam_mass = math.fsum(gains[i] for i in beam.path_indices)
        beam_fractions[(beam.user, beam.first_panel)] = beam_mass / by_user[beam.user]
    return PowerAllocation(user_fractions=user_fractions, beam_fractions=beam_fractions)


def predicted_power_single(
    forest: BeamForest, peak_gains: Sequence[float] | None = None
) -> float:
    """Received power of a single-user forest under all optimal designs:
    the sum of the selected paths' peak gains."""
    if len(forest.users) != 1:
        raise ValueError("predicted_power_single needs a single-user forest")
    gains = _gains(forest, peak_gains)
    return math.fsum(gains)


def predicted_powers(
    forest: BeamForest, peak_gains: Sequence[float] | None = None
) -> dict[int, float]:
    """Per-user received powers under all optimal designs.

    Single user: the peak-gain sum. Multiple users: every user receives
    the equalized power 1 / sum_k(1/G_k).
    """
    by_user = user_gains(forest, peak_gains)
    if len(by_user) == 1:
        user = next(iter(by_user))
        return {user: by_user[user]}
    _, common = user_power_allocation(by_user)
    return {u: common for u in by_user}


@dataclass(frozen=True, eq=False)
class DesignBundle:
    """Every closed-form transmit/surface design realizing a forest."""

    beamformers: Mapping[tuple[int, int], Beamformer]
    profiles: Mapping[tuple[int, SurfaceUse], PhaseProfile]


def assemble_designs(scene: Scene, config: SystemConfig, forest: BeamForest) -> DesignBundle:
    """Matched phase profiles, per-path coherence rotations and beamformers.

    Each used face gets the matched profile for its unique
    (predecessor, successor) pair. The terminal face of each path
    additionally rotates by 2*pi*total_distance/wavelength so that every
    path arrives with zero phase and parallel paths add coherently; the
    terminal face is exclusive to its path, so the rotation never leaks.
    """
    successor_of_face: dict[tuple[int, SurfaceUse], int] = {}
    for (panel, face), members in forest.face_paths.items():
        next_nodes = set()
        for idx in members:
            path = forest.paths[idx]
            at = path.ris_sequence.index(panel)
            next_nodes.add(path.nodes[at + 2])
        assert len(next_nodes) == 1, (
            f"face ({panel}, {face.value}) feeds several successors {sorted(next_nodes)}"
        )
        successor_of_face[(panel, face)] = next_nodes.pop()

    rotations = {
        forest.terminal[idx]: (TWO_PI * forest.paths[idx].total_distance / config.wavelength)
        % TWO_PI
        for idx in range(len(forest.paths))
    }
    profiles = {
        (panel, face): optimal_phase_profile(
            scene,
            config,
            forest.predecessor[panel],
            panel,
            successor,
            surface=face,
            extra_rotation=rotations.get((panel, face), 0.0),
        )
        for (panel, face), successor in successor_of_face.items()
    }
    beamformers = {
        (beam.user, beam.first_panel): optimal_beamformer(scene, config, beam.first_panel)
        for beam in forest.beams
    }
    return DesignBundle(beamformers=beamformers, profiles=profiles)
