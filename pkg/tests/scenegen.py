"""Test-local alias for the package's random scene generator."""
from starroute.generate import (
    DISTANCE_MARGIN,
    SIDE_COSINE_MARGIN,
    make_scene,
    random_config,
    random_scene,
    scene_has_grazing_free_pairs,
)

__all__ = [
    "DISTANCE_MARGIN",
    "SIDE_COSINE_MARGIN",
    "make_scene",
    "random_config",
    "random_scene",
    "scene_has_grazing_free_pairs",
]
