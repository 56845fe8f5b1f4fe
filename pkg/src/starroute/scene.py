"""Scene geometry and system configuration.

A scene is a static set of nodes with 3D positions: one base station
(node 0), ``J`` dual-face panels (nodes ``1..J``, each with a unit
normal), and ``K`` users (nodes ``J+1..J+K``), plus an explicit
line-of-sight pair list. The side of a panel a node sits on is read off
the *side cosine*, the projection of the unit direction from the node to
the panel onto the panel normal. Scenes are immutable once built.

Documents are JSON. Loading then re-serializing is canonical: nodes
sorted by id, pairs normalized to ``[lo, hi]`` and sorted, floats in
shortest round-trip form.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

SPEED_OF_LIGHT = 299792458.0
GRAZING_COSINE = 1e-6
_UNIT_TOL = 1e-12
_DEFAULT_BS_AXIS = (1.0, 0.0, 0.0)


class SceneError(ValueError):
    """Base class for scene document problems."""


class SceneFormatError(SceneError):
    """Malformed scene document (parse or schema error)."""


class SceneInvariantError(SceneError):
    """Well-formed document violating a scene invariant."""


class ConfigError(ValueError):
    """Malformed or inconsistent system configuration."""


class NodeKind(str, Enum):
    BS = "bs"
    STAR_RIS = "star_ris"
    USER = "user"


class SolverMode(str, Enum):
    """Surface operating discipline the solver designs for.

    STAR_ES: every panel may split energy across both faces.
    STAR_MS: every panel serves one face only; selected paths are
        node-disjoint.
    REFLECT_ONLY: node-disjoint and every hop must be a front-side
        reflection (both neighbors on the positive-side-cosine side).
    """

    STAR_ES = "star_es"
    STAR_MS = "star_ms"
    REFLECT_ONLY = "reflect_only"


@dataclass(frozen=True, eq=False)
class Node:
    id: int
    kind: NodeKind
    position: np.ndarray
    normal: np.ndarray | None = None


@dataclass(frozen=True, eq=False)
class Scene:
    nodes: tuple[Node, ...]
    los_pairs: frozenset[tuple[int, int]]
    bs_array_axis: np.ndarray
    n_panels: int
    n_users: int

    @property
    def bs_id(self) -> int:
        return 0

    @property
    def panel_ids(self) -> range:
        return range(1, self.n_panels + 1)

    @property
    def user_ids(self) -> range:
        return range(self.n_panels + 1, self.n_panels + self.n_users + 1)

    def node(self, node_id: int) -> Node:
        try:
            found = self.nodes[node_id]
        except IndexError:
            raise SceneInvariantError(f"unknown node id {node_id}") from None
        return found

    def kind_of(self, node_id: int) -> NodeKind:
        return self.node(node_id).kind

    def is_panel(self, node_id: int) -> bool:
        return 1 <= node_id <= self.n_panels

    def is_user(self, node_id: int) -> bool:
        return self.n_panels < node_id <= self.n_panels + self.n_users

    def has_los(self, i: int, j: int) -> bool:
        return (min(i, j), max(i, j)) in self.los_pairs


def _as_vector(raw: object, where: str) -> np.ndarray:
    if (
        not isinstance(raw, (list, tuple))
        or len(raw) != 3
        or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in raw)
    ):
        raise SceneFormatError(f"{where}: expected a 3-vector of numbers, got {raw!r}")
    vec = np.array([float(v) for v in raw], dtype=float)
    vec.flags.writeable = False
    return vec


def build_scene(
    nodes: Sequence[Node],
    los_pairs: Iterable[tuple[int, int]],
    bs_array_axis: Sequence[float] = _DEFAULT_BS_AXIS,
) -> Scene:
    """Assemble and validate a scene from already-parsed parts.

    Enforces the node-id convention (0 = BS, then panels, then users,
    contiguous), unit panel normals, normals oriented so the BS side
    cosine is nonnegative, and well-formed LoS pairs.
    """
    ordered = sorted(nodes, key=lambda n: n.id)
    ids = [n.id for n in ordered]
    if ids != list(range(len(ordered))):
        raise SceneInvariantError(f"node ids must be contiguous from 0, got {ids}")
    if not ordered or ordered[0].kind is not NodeKind.BS:
        raise SceneInvariantError("node 0 must be the base station")
    n_panels = sum(1 for n in ordered if n.kind is NodeKind.STAR_RIS)
    n_users = sum(1 for n in ordered if n.kind is NodeKind.USER)
    if n_panels < 1:
        raise SceneInvariantError("scene must contain at least one panel")
    if n_users < 1:
        raise SceneInvariantError("scene must contain at least one user")
    for node in ordered[1 : n_panels + 1]:
        if node.kind is not NodeKind.STAR_RIS:
            raise SceneInvariantError(
                f"node {node.id}: panels must occupy ids 1..{n_panels}, found {node.kind.value}"
            )
    for node in ordered[n_panels + 1 :]:
        if node.kind is not NodeKind.USER:
            raise SceneInvariantError(
                f"node {node.id}: users must occupy ids {n_panels + 1}..{n_panels + n_users},"
                f" found {node.kind.value}"
            )
    for node in ordered:
        if node.kind is NodeKind.STAR_RIS:
            if node.normal is None:
                raise SceneInvariantError(f"node {node.id}: panel missing a normal")
            norm = float(np.linalg.norm(node.normal))
            if abs(norm - 1.0) > _UNIT_TOL:
                raise SceneInvariantError(
                    f"node {node.id}: normal not unit (norm={norm!r})"
                )
        elif node.normal is not None:
            raise SceneInvariantError(
                f"node {node.id}: only panels carry a normal ({node.kind.value})"
            )

    pairs: set[tuple[int, int]] = set()
    for pair in los_pairs:
        if len(pair) != 2:
            raise SceneFormatError(f"los pair {pair!r} must have two node ids")
        a, b = int(pair[0]), int(pair[1])
        if a == b:
            raise SceneInvariantError(f"los pair ({a}, {b}) links a node to itself")
        for end in (a, b):
            if not 0 <= end < len(ordered):
                raise SceneInvariantError(f"los pair ({a}, {b}) references unknown node {end}")
        pairs.add((min(a, b), max(a, b)))

    axis = _as_vector(list(bs_array_axis), "bs_array_axis")
    axis_norm = float(np.linalg.norm(axis))
    if abs(axis_norm - 1.0) > _UNIT_TOL:
        raise SceneInvariantError(f"bs_array_axis not unit (norm={axis_norm!r})")

    scene = Scene(
        nodes=tuple(ordered),
        los_pairs=frozenset(pairs),
        bs_array_axis=axis,
        n_panels=n_panels,
        n_users=n_users,
    )
    bs_pos = scene.node(0).position
    for j in scene.panel_ids:
        panel = scene.node(j)
        if float(np.linalg.norm(panel.position - bs_pos)) == 0.0:
            raise SceneInvariantError(f"node {j}: panel coincides with the base station")
        if side_cosine(scene, 0, j) < 0.0:
            raise SceneInvariantError(
                f"node {j}: normal points away from the base station"
                f" (side_cosine(0, {j}) < 0)"
            )
    return scene


def load_scene(text: str) -> Scene:
    """Parse a scene document and validate every invariant."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SceneFormatError(f"scene document is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise SceneFormatError("scene document must be a JSON object")
    raw_nodes = doc.get("nodes")
    if not isinstance(raw_nodes, list) or not raw_nodes:
        raise SceneFormatError("scene document needs a non-empty 'nodes' array")
    nodes = []
    for idx, raw in enumerate(raw_nodes):
        where = f"nodes[{idx}]"
        if not isinstance(raw, dict):
            raise SceneFormatError(f"{where}: expected an object")
        unknown = set(raw) - {"id", "kind", "position", "normal"}
        if unknown:
            raise SceneFormatError(f"{where}: unknown fields {sorted(unknown)}")
        if "id" not in raw or not isinstance(raw["id"], int) or isinstance(raw["id"], bool):
            raise SceneFormatError(f"{where}: missing or non-integer 'id'")
        try:
            kind = NodeKind(raw.get("kind"))
        except ValueError:
            raise SceneFormatError(
                f"{where}: 'kind' must be one of {[k.value for k in NodeKind]},"
                f" got {raw.get('kind')!r}"
            ) from None
        if "position" not in raw:
            raise SceneFormatError(f"{where}: missing 'position'")
        position = _as_vector(raw["position"], f"{where}.position")
        normal = None
        if "normal" in raw:
            normal = _as_vector(raw["normal"], f"{where}.normal")
        nodes.append(Node(id=raw["id"], kind=kind, position=position, normal=normal))
    raw_pairs = doc.get("los_pairs")
    if not isinstance(raw_pairs, list):
        raise SceneFormatError("scene document needs a 'los_pairs' array")
    pairs = []
    for idx, raw in enumerate(raw_pairs):
        if (
            not isinstance(raw, list)
            or len(raw) != 2
            or not all(isinstance(v, int) and not isinstance(v, bool) for v in raw)
        ):
            raise SceneFormatError(f"los_pairs[{idx}]: expected a pair of node ids, got {raw!r}")
        pairs.append((raw[0], raw[1]))
    axis = doc.get("bs_array_axis", list(_DEFAULT_BS_AXIS))
    return build_scene(nodes, pairs, _as_vector(axis, "bs_array_axis"))


def dump_scene(scene: Scene) -> str:
    """Serialize a scene to its canonical document form."""
    nodes = []
    for node in scene.nodes:
        entry: dict[str, object] = {
            "id": node.id,
            "kind": node.kind.value,
            "position": [float(v) for v in node.position],
        }
        if node.normal is not None:
            entry["normal"] = [float(v) for v in node.normal]
        nodes.append(entry)
    doc = {
        "nodes": nodes,
        "los_pairs": [list(p) for p in sorted(scene.los_pairs)],
        "bs_array_axis": [float(v) for v in scene.bs_array_axis],
    }
    return json.dumps(doc, indent=2) + "\n"


def restrict_users(scene: Scene, n_users: int) -> Scene:
    """Sub-scene keeping only users 1..n_users (panels untouched)."""
    if not 1 <= n_users <= scene.n_users:
        raise SceneInvariantError(
            f"cannot restrict to {n_users} users, scene has {scene.n_users}"
        )
    keep = scene.n_panels + n_users
    nodes = scene.nodes[: keep + 1]
    pairs = [p for p in scene.los_pairs if p[0] <= keep and p[1] <= keep]
    return build_scene(nodes, pairs, scene.bs_array_axis)


def distance(scene: Scene, i: int, j: int) -> float:
    """Euclidean distance between two distinct nodes."""
    if i == j:
        raise SceneInvariantError(f"distance of node {i} to itself is undefined")
    delta = scene.node(j).position - scene.node(i).position
    return float(np.linalg.norm(delta))


def direction(scene: Scene, i: int, j: int) -> np.ndarray:
    """Unit vector pointing from node i toward node j."""
    delta = scene.node(j).position - scene.node(i).position
    norm = float(np.linalg.norm(delta))
    if norm == 0.0:
        raise SceneInvariantError(f"nodes {i} and {j} are coincident")
    return delta / norm


def side_cosine(scene: Scene, i: int, j: int) -> float:
    """Projection of the unit direction from node i to panel j onto j's normal.

    The sign identifies the half-space node i occupies: positive means the
    same side as the base station (the front side), negative the far side.
    """
    panel = scene.node(j)
    if panel.kind is not NodeKind.STAR_RIS:
        raise SceneInvariantError(f"node {j} is not a panel; side cosine undefined")
    return float(direction(scene, i, j) @ panel.normal)


@dataclass(frozen=True)
class GrazingDiagnostic:
    """LoS pair whose incidence at a panel is within tolerance of grazing."""

    node: int
    panel: int
    cosine: float


def validate_geometry(scene: Scene) -> list[GrazingDiagnostic]:
    """Flag every LoS-adjacent (node, panel) incidence with |side cosine| < 1e-6.

    Paths that would use a flagged incidence are refused by the solver.
    """
    diagnostics = []
    for a, b in sorted(scene.los_pairs):
        for node, panel in ((a, b), (b, a)):
            if not scene.is_panel(panel):
                continue
            cosine = side_cosine(scene, node, panel)
            if abs(cosine) < GRAZING_COSINE:
                diagnostics.append(GrazingDiagnostic(node=node, panel=panel, cosine=cosine))
    return diagnostics


def is_routing_edge(scene: Scene, i: int, j: int) -> bool:
    """Directed routing-edge predicate over the LoS pair list.

    Edges leave the BS toward panels, move outward between panels
    (strictly increasing BS distance), and terminate at users. Direct
    BS-user pairs never form an edge, and users have no out-edges.
    """
    if i == j or not scene.has_los(i, j):
        return False
    if scene.is_user(i) or j == 0:
        return False
    if i == 0:
        return scene.is_panel(j)
    if scene.is_user(j):
        return True
    return distance(scene, 0, j) > distance(scene, 0, i)


@dataclass(frozen=True)
class SystemConfig:
    """Resolved radio/system parameters.

    ``m0`` is the per-dimension element count of each square panel
    (``m0**2`` elements per face pair); spacings and the reference gain
    default from the carrier wavelength.
    """

    n_bs_antennas: int
    m0: int
    carrier_hz: float
    candidates_per_user: int
    mode: SolverMode
    reference_gain: float
    bs_element_spacing: float
    ris_element_spacing: float

    def __post_init__(self) -> None:
        if self.n_bs_antennas < 1:
            raise ConfigError("n_bs_antennas must be >= 1")
        if self.m0 < 1:
            raise ConfigError("m0 must be >= 1")
        if self.carrier_hz <= 0:
            raise ConfigError("carrier_hz must be positive")
        if self.candidates_per_user < 1:
            raise ConfigError("candidates_per_user must be >= 1")
        if self.reference_gain <= 0:
            raise ConfigError("reference_gain must be positive")
        if self.bs_element_spacing <= 0 or self.ris_element_spacing <= 0:
            raise ConfigError("element spacings must be positive")

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_hz

    @property
    def elements_per_panel(self) -> int:
        return self.m0 * self.m0

    @classmethod
    def with_defaults(
        cls,
        n_bs_antennas: int,
        m0: int,
        carrier_hz: float,
        candidates_per_user: int,
        mode: SolverMode | str,
        reference_gain: float | None = None,
        bs_element_spacing: float | None = None,
        ris_element_spacing: float | None = None,
    ) -> "SystemConfig":
        """Build a config, materializing wavelength-derived defaults.

        The reference gain defaults to ``(wavelength / 4pi)**2`` (the 1 m
        free-space power gain) and both element spacings to half a
        wavelength.
        """
        if carrier_hz <= 0:
            raise ConfigError("carrier_hz must be positive")
        wavelength = SPEED_OF_LIGHT / float(carrier_hz)
        if reference_gain is None:
            reference_gain = (wavelength / (4.0 * math.pi)) ** 2
        if bs_element_spacing is None:
            bs_element_spacing = wavelength / 2.0
        if ris_element_spacing is None:
            ris_element_spacing = wavelength / 2.0
        return cls(
            n_bs_antennas=int(n_bs_antennas),
            m0=int(m0),
            carrier_hz=float(carrier_hz),
            candidates_per_user=int(candidates_per_user),
            mode=SolverMode(mode),
            reference_gain=float(reference_gain),
            bs_element_spacing=float(bs_element_spacing),
            ris_element_spacing=float(ris_element_spacing),
        )


_CONFIG_REQUIRED = {"n_bs_antennas", "m0", "carrier_hz", "candidates_per_user", "mode"}
_CONFIG_OPTIONAL = {"reference_gain", "bs_element_spacing", "ris_element_spacing"}


def load_config(text: str) -> SystemConfig:
    """Parse a configuration document, applying defaults for absent fields."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config document is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config document must be a JSON object")
    missing = _CONFIG_REQUIRED - set(doc)
    if missing:
        raise ConfigError(f"config missing required fields: {sorted(missing)}")
    unknown = set(doc) - _CONFIG_REQUIRED - _CONFIG_OPTIONAL
    if unknown:
        raise ConfigError(f"config has unknown fields: {sorted(unknown)}")
    for field in ("n_bs_antennas", "m0", "candidates_per_user"):
        if not isinstance(doc[field], int) or isinstance(doc[field], bool):
            raise ConfigError(f"config field '{field}' must be an integer")
    try:
        mode = SolverMode(doc["mode"])
    except ValueError:
        raise ConfigError(
            f"config field 'mode' must be one of {[m.value for m in SolverMode]},"
            f" got {doc['mode']!r}"
        ) from None
    numbers = {}
    for field in ("carrier_hz", "reference_gain", "bs_element_spacing", "ris_element_spacing"):
        if field in doc:
            value = doc[field]
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise ConfigError(f"config field '{field}' must be a number")
            numbers[field] = float(value)
    return SystemConfig.with_defaults(
        n_bs_antennas=doc["n_bs_antennas"],
        m0=doc["m0"],
        carrier_hz=numbers["carrier_hz"],
        candidates_per_user=doc["candidates_per_user"],
        mode=mode,
        reference_gain=numbers.get("reference_gain"),
        bs_element_spacing=numbers.get("bs_element_spacing"),
        ris_element_spacing=numbers.get("ris_element_spacing"),
    )


def resolved_config_dict(config: SystemConfig) -> dict[str, object]:
    """Config as a plain dict with every default materialized."""
    return {
        "n_bs_antennas": config.n_bs_antennas,
        "m0": config.m0,
        "carrier_hz": config.carrier_hz,
        "candidates_per_user": config.candidates_per_user,
        "mode": config.mode.value,
        "reference_gain": config.reference_gain,
        "bs_element_spacing": config.bs_element_spacing,
        "ris_element_spacing": config.ris_element_spacing,
        "wavelength": config.wavelength,
        "elements_per_panel": config.elements_per_panel,
    }
