"""Far-field line-of-sight channel model and closed-form designs.

Every hop channel is rank-1: an outer product of the receive- and
transmit-side array responses, scaled by sqrt(reference_gain)/distance
and carrying the propagation phase exp(-i*2*pi*d/wavelength). With the
matched phase profiles and beamformer built here, each hop contributes
its full aperture gain, so a path's end-to-end power gain with unit
surface amplitudes has the closed form

    peak_gain = M**(2L) * N_B * cascade_gain**2

with ``M`` elements per panel, ``N_B`` BS antennas, ``L`` panels on the
path, and ``cascade_gain`` the product of sqrt(reference_gain)/d over
the L+1 hops.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Literal, Sequence

import numpy as np

from .scene import (
    GRAZING_COSINE,
    NodeKind,
    Scene,
    SceneInvariantError,
    SystemConfig,
    direction,
    distance,
    is_routing_edge,
    side_cosine,
)

TWO_PI = 2.0 * math.pi


class GrazingIncidenceError(ValueError):
    """A hop meets a panel within tolerance of grazing incidence."""


class MissingEdgeError(ValueError):
    """A requested hop is not a usable routing edge."""


class SurfaceUse(str, Enum):
    REFLECT = "R"
    TRANSMIT = "T"


@dataclass(frozen=True)
class ArrayResponse:
    """Unit-modulus array response vector observed at a node."""

    node: int
    entries: np.ndarray


@dataclass(frozen=True)
class Beamformer:
    """Unit-norm BS transmit vector steering one beam."""

    first_panel: int
    weights: np.ndarray


@dataclass(frozen=True)
class PhaseProfile:
    """Per-element phase configuration of one face of one panel.

    ``extra_rotation`` is a common rotation added to every element; the
    solver uses it at the terminal face of each path to align the path's
    end-to-end phase so that parallel paths combine coherently.
    """

    node: int
    surface: SurfaceUse
    phases: np.ndarray
    extra_rotation: float = 0.0


@dataclass(frozen=True)
class CandidatePath:
    """One BS -> panels -> user route with its closed-form metrics.

    ``peak_gain`` is the end-to-end power gain achievable with matched
    phases and unit surface amplitudes; ``cascade_gain`` the amplitude
    attenuation product over hops; ``hop_surfaces[l]`` the face panel
    ``ris_sequence[l]`` uses (same-side neighbors reflect, opposite-side
    neighbors transmit).
    """

    ris_sequence: tuple[int, ...]
    user: int
    hop_distances: tuple[float, ...]
    cascade_gain: float
    total_distance: float
    peak_gain: float
    hop_surfaces: tuple[SurfaceUse, ...]

    @property
    def nodes(self) -> tuple[int, ...]:
        return (0,) + self.ris_sequence + (self.user,)

    @property
    def n_panels(self) -> int:
        return len(self.ris_sequence)

    @property
    def n_hops(self) -> int:
        return len(self.ris_sequence) + 1


def surface_for_hop(scene: Scene, prev_node: int, node: int, next_node: int) -> SurfaceUse:
    """Which face panel ``node`` uses between its two path neighbors.

    Same-side neighbors (positive side-cosine product) reflect; opposite
    sides transmit. Grazing incidence on either side is refused.
    """
    b_prev = side_cosine(scene, prev_node, node)
    b_next = side_cosine(scene, next_node, node)
    for neighbor, cosine in ((prev_node, b_prev), (next_node, b_next)):
        if abs(cosine) < GRAZING_COSINE:
            raise GrazingIncidenceError(
                f"hop ({prev_node}, {node}, {next_node}): grazing incidence at panel"
                f" {node} from node {neighbor} (|side cosine| = {abs(cosine):.3e})"
            )
    return SurfaceUse.REFLECT if b_prev * b_next > 0.0 else SurfaceUse.TRANSMIT


def bs_steering(scene: Scene, config: SystemConfig, first_panel: int) -> ArrayResponse:
    """BS uniform-linear-array response toward the first panel of a path."""
    if not scene.is_panel(first_panel):
        raise MissingEdgeError(f"node {first_panel} is not a panel")
    if not scene.has_los(0, first_panel):
        raise MissingEdgeError(f"no LoS pair between the BS and panel {first_panel}")
    axis_cos = float(direction(scene, 0, first_panel) @ scene.bs_array_axis)
    n = np.arange(config.n_bs_antennas)
    phase = -TWO_PI * n * config.bs_element_spacing * axis_cos / config.wavelength
    return ArrayResponse(node=0, entries=np.exp(1j * phase))


def ris_response(
    scene: Scene,
    config: SystemConfig,
    panel: int,
    toward: int,
    role: Literal["arrival", "departure"],
) -> ArrayResponse:
    """Panel uniform-rectangular-array response for one hop endpoint.

    Panels are parallel to the x-z plane, so the two phase surrogates of
    the response are the x and z components of the unit hop direction:
    toward the panel for an arriving wave, away from it for a departing
    one. Reversing the direction conjugates the response elementwise.
    """
    if not scene.is_panel(panel):
        raise MissingEdgeError(f"node {panel} is not a panel")
    if not scene.has_los(panel, toward):
        raise MissingEdgeError(f"no LoS pair between panel {panel} and node {toward}")
    if role == "arrival":
        unit = direction(scene, toward, panel)
    elif role == "departure":
        unit = direction(scene, panel, toward)
    else:
        raise ValueError(f"role must be 'arrival' or 'departure', got {role!r}")
    u, w = float(unit[0]), float(unit[2])
    m = np.arange(config.elements_per_panel)
    rows = m // config.m0
    cols = m % config.m0
    phase = -TWO_PI * config.ris_element_spacing * (rows * u + cols * w) / config.wavelength
    return ArrayResponse(node=panel, entries=np.exp(1j * phase))


def peak_gain_value(m: int, n_bs: int, cascade_gain: float, n_panels: int) -> float:
    """Closed-form end-to-end power gain with matched phases, unit amplitudes."""
    return float(m) ** (2 * n_panels) * float(n_bs) * cascade_gain * cascade_gain


def path_metrics(
    scene: Scene, config: SystemConfig, ris_sequence: Sequence[int], user: int
) -> CandidatePath:
    """Closed-form metrics for the route BS -> ris_sequence -> user.

    Every hop must be a usable routing edge (outward between panels) and
    no panel incidence may be grazing.
    """
    seq = tuple(int(j) for j in ris_sequence)
    if not seq:
        raise MissingEdgeError("a path must traverse at least one panel")
    for j in seq:
        if not scene.is_panel(j):
            raise MissingEdgeError(f"path node {j} is not a panel")
    if not scene.is_user(user):
        raise MissingEdgeError(f"path target {user} is not a user")
    nodes = (0,) + seq + (user,)
    if len(set(nodes)) != len(nodes):
        raise MissingEdgeError(f"path revisits a node: {nodes}")
    for i, j in zip(nodes, nodes[1:]):
        if not is_routing_edge(scene, i, j):
            raise MissingEdgeError(f"hop ({i}, {j}) is not a usable routing edge")
    hop_distances = tuple(distance(scene, i, j) for i, j in zip(nodes, nodes[1:]))
    surfaces = tuple(
        surface_for_hop(scene, nodes[l], nodes[l + 1], nodes[l + 2])
        for l in range(len(seq))
    )
    amplitude = math.sqrt(config.reference_gain)
    cascade = 1.0
    for d in hop_distances:
        cascade *= amplitude / d
    return CandidatePath(
        ris_sequence=seq,
        user=int(user),
        hop_distances=hop_distances,
        cascade_gain=cascade,
        total_distance=math.fsum(hop_distances),
        peak_gain=peak_gain_value(config.elements_per_panel, config.n_bs_antennas, cascade, len(seq)),
        hop_surfaces=surfaces,
    )


def optimal_phase_profile(
    scene: Scene,
    config: SystemConfig,
    prev_node: int,
    node: int,
    next_node: int,
    surface: SurfaceUse | None = None,
    extra_rotation: float = 0.0,
) -> PhaseProfile:
    """Elementwise matched phases for one face of one panel.

    Each element's phase is the departure-response angle minus the
    arrival-response angle (mod 2pi), which makes the face's aggregate
    hop factor exactly M times the face amplitude.
    """
    if surface is None:
        surface = surface_for_hop(scene, prev_node, node, next_node)
    arrival = ris_response(scene, config, node, prev_node, "arrival")
    departure = ris_response(scene, config, node, next_node, "departure")
    phases = np.mod(np.angle(departure.entries) - np.angle(arrival.entries), TWO_PI)
    return PhaseProfile(
        node=node, surface=surface, phases=phases, extra_rotation=float(extra_rotation) % TWO_PI
    )


def optimal_beamformer(scene: Scene, config: SystemConfig, first_panel: int) -> Beamformer:
    """Unit-norm BS beam matched to the first hop of a beam's paths.

    The steering inner product with the hop response is exactly
    sqrt(N_B); any path-dependent common phase is applied at the path's
    terminal face instead of the BS, because one beam may feed several
    paths.
    """
    steering = bs_steering(scene, config, first_panel)
    weights = steering.entries / math.sqrt(config.n_bs_antennas)
    return Beamformer(first_panel=first_panel, weights=weights)
