"""Bundled demonstration scenes.

Two ready-to-solve scenes ship with the package:

``single_user``
    Eight panels feeding one user through a single gateway panel, so
    single-face operation is limited to one route while full dual-face
    splitting can energize the whole branch tree. One route is a pure
    front-side reflection chain, keeping every solver mode feasible.

``multi_user``
    Ten panels and five users around a pair of reflective walls. Users
    1-3 have front-side reflection routes on disjoint panels; users 4-5
    sit behind a wall and are reachable only through transmission, so
    reflect-only operation is infeasible once they are active.

Scene arguments of the form ``bundled:<name>`` resolve here; anything
else is treated as a filesystem path.
"""
from __future__ import annotations

from importlib import resources
from pathlib import Path

from .scene import Scene, SceneError, SystemConfig, load_config, load_scene

BUNDLED_PREFIX = "bundled:"
_DATA_PACKAGE = "starroute.data"


def bundled_scene_names() -> tuple[str, ...]:
    """Names accepted by load_bundled_scene, sorted."""
    names = []
    for entry in resources.files(_DATA_PACKAGE).iterdir():
        if entry.name.endswith(".json") and not entry.name.endswith(".config.json"):
            names.append(entry.name[: -len(".json")])
    return tuple(sorted(names))


def _read_data(filename: str) -> str:
    entry = resources.files(_DATA_PACKAGE) / filename
    if not entry.is_file():
        raise SceneError(
            f"no bundled scene file {filename!r}; available scenes:"
            f" {', '.join(bundled_scene_names())}"
        )
    return entry.read_text()


def load_bundled_scene(name: str) -> Scene:
    return load_scene(_read_data(f"{name}.json"))


def load_bundled_config(name: str) -> SystemConfig:
    return load_config(_read_data(f"{name}.config.json"))


def resolve_scene(spec: str) -> Scene:
    """Scene from a ``bundled:<name>`` reference or a file path."""
    if spec.startswith(BUNDLED_PREFIX):
        return load_bundled_scene(spec[len(BUNDLED_PREFIX) :])
    return load_scene(Path(spec).read_text())


def resolve_config(spec: str) -> SystemConfig:
    """Config from a ``bundled:<name>`` reference or a file path."""
    if spec.startswith(BUNDLED_PREFIX):
        return load_bundled_config(spec[len(BUNDLED_PREFIX) :])
    return load_config(Path(spec).read_text())
