"""Shared fixtures: small hand-built scenes with known-by-hand answers."""
from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from scenegen import make_scene  # noqa: E402

from starroute import SystemConfig  # noqa: E402


@pytest.fixture
def branching_scene():
    """Six panels, one user, one 2-branch beam tree plus a disjoint route.

    Geometry (all in the z = 0 plane, normals +y, BS at the origin):
    routes 0-1-2-3-7, 0-1-2-7, 0-1-4-7 share panels 1 and 2 as branch
    nodes, while 0-5-6-7 is panel-disjoint from them. Panel faces, by
    side-cosine signs: transmit at 1 toward 2, reflect at 1 toward 4,
    transmit at 2 toward 3, reflect at 2 toward the user, front-side
    reflect at 3 and 6, back-side reflect at 4, transmit at 5.
    """
    return make_scene(
        [
            ("bs", (0.0, 0.0, 0.0)),
            ("star_ris", (1.0, 2.0, 0.0), (0.0, 1.0, 0.0)),
            ("star_ris", (2.0, 3.0, 0.0), (0.0, 1.0, 0.0)),
            ("star_ris", (3.0, 4.0, 0.0), (0.0, 1.0, 0.0)),
            ("star_ris", (2.5, 1.0, 0.0), (0.0, 1.0, 0.0)),
            ("star_ris", (-1.0, 1.5, 0.0), (0.0, 1.0, 0.0)),
            ("star_ris", (-0.5, 2.8, 0.0), (0.0, 1.0, 0.0)),
            ("user", (4.0, 2.5, 0.0)),
        ],
        [(0, 1), (1, 2), (2, 3), (1, 4), (2, 7), (3, 7), (4, 7), (0, 5), (5, 6), (6, 7)],
    )


@pytest.fixture
def branching_config():
    return SystemConfig.with_defaults(
        n_bs_antennas=4, m0=4, carrier_hz=5e9, candidates_per_user=6, mode="star_es"
    )


@pytest.fixture
def two_user_scene():
    """Two users with one contested panel and private alternatives.

    Panel 1 offers the strongest route to both users; panels 2 and 3
    are private fallbacks (2 can serve either user, 3 only user 5).
    """
    return make_scene(
        [
            ("bs", (0.0, 0.0, 0.0)),
            ("star_ris", (0.0, 1.0, 0.0), (0.0, 1.0, 0.0)),
            ("star_ris", (1.2, 1.4, 0.0), (0.0, 1.0, 0.0)),
            ("star_ris", (-1.5, 1.8, 0.0), (0.0, 1.0, 0.0)),
            ("user", (0.8, 2.0, 0.0)),
            ("user", (-0.9, 2.2, 0.0)),
        ],
        [(0, 1), (0, 2), (0, 3), (1, 4), (1, 5), (2, 4), (2, 5), (3, 5)],
    )


def small_config(mode="star_es", m0=2, n_bs=2, candidates=4):
    return SystemConfig.with_defaults(
        n_bs_antennas=n_bs, m0=m0, carrier_hz=5e9, candidates_per_user=candidates, mode=mode
    )
