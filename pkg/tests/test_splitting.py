"""Forest validation, closed-form splits, power shares, design assembly."""
from __future__ import annotations

import math

import numpy as np
import pytest

import starroute as sr
from scenegen import make_scene

TWO_PI = 2.0 * math.pi

CFG = sr.SystemConfig.with_defaults(
    n_bs_antennas=4, m0=4, carrier_hz=5e9, candidates_per_user=6, mode="star_es"
)


@pytest.fixture
def demo_forest(branching_scene):
    paths = [
        sr.path_metrics(branching_scene, CFG, seq, 7)
        for seq in ([1, 2, 3], [1, 2], [1, 4], [5, 6])
    ]
    return sr.build_forest(branching_scene, paths)


class TestBuildForest:
    def test_demo_structure(self, demo_forest):
        f = demo_forest
        assert [p.nodes for p in f.paths] == [
            (0, 1, 2, 3, 7), (0, 1, 2, 7), (0, 1, 4, 7), (0, 5, 6, 7),
        ]
        assert f.owners == (7, 7, 7, 7)
        assert f.users == (7,)
        assert f.selected_panels == (1, 2, 3, 4, 5, 6)
        assert [(b.user, b.first_panel, b.path_indices) for b in f.beams] == [
            (7, 1, (0, 1, 2)), (7, 5, (3,)),
        ]
        assert f.branch_nodes == frozenset({1, 2})
        assert f.predecessor == {1: 0, 2: 1, 3: 2, 4: 1, 5: 0, 6: 5}
        assert f.successors[1] == (2, 4)
        assert f.successors[2] == (3, 7)

    def test_demo_faces_and_terminals(self, demo_forest):
        R, T = sr.SurfaceUse.REFLECT, sr.SurfaceUse.TRANSMIT
        assert demo_forest.face_paths == {
            (1, R): (2,), (1, T): (0, 1),
            (2, R): (1,), (2, T): (0,),
            (3, R): (0,), (4, R): (2,),
            (5, T): (3,), (6, R): (3,),
        }
        assert demo_forest.terminal == {0: (3, R), 1: (2, R), 2: (4, R), 3: (6, R)}

    def test_in_degree_violation(self):
        scene = make_scene(
            [
                ("bs", (0.0, 0.0, 0.0)),
                ("star_ris", (1.0, 1.0, 0.0), (0.0, 1.0, 0.0)),
                ("star_ris", (-1.0, 1.2, 0.0), (0.0, 1.0, 0.0)),
                ("star_ris", (0.0, 2.5, 0.0), (0.0, 1.0, 0.0)),
                ("user", (0.0, 3.5, 0.0)),
            ],
            [(0, 1), (0, 2), (1, 3), (2, 3), (3, 4)],
        )
        paths = [
            sr.path_metrics(scene, CFG, [1, 3], 4),
            sr.path_metrics(scene, CFG, [2, 3], 4),
        ]
        with pytest.raises(sr.InDegreeViolation, match="panel 3") as info:
            sr.build_forest(scene, paths)
        assert info.value.node == 3

    @pytest.fixture
    def fan_scene(self):
        return make_scene(
            [
                ("bs", (0.0, 0.0, 0.0)),
                ("star_ris", (0.0, 1.0, 0.0), (0.0, 1.0, 0.0)),
                ("star_ris", (-1.5, 2.0, 0.0), (0.0, 1.0, 0.0)),
                ("star_ris", (0.0, 2.2, 0.0), (0.0, 1.0, 0.0)),
                ("star_ris", (1.5, 2.1, 0.0), (0.0, 1.0, 0.0)),
                ("user", (0.0, 4.0, 0.0)),
            ],
            [(0, 1), (1, 2), (1, 3), (1, 4), (2, 5), (3, 5), (4, 5)],
        )

    def test_out_degree_violation(self, fan_scene):
        paths = [
            sr.path_metrics(fan_scene, CFG, [1, 2], 5),
            sr.path_metrics(fan_scene, CFG, [1, 3], 5),
            sr.path_metrics(fan_scene, CFG, [1, 4], 5),
        ]
        with pytest.raises(sr.OutDegreeViolation, match="panel 1") as info:
            sr.build_forest(fan_scene, paths)
        assert info.value.node == 1

    def test_side_violation(self, fan_scene):
        # Panels 2 and 3 both sit behind panel 1 (same side): not splittable.
        paths = [
            sr.path_metrics(fan_scene, CFG, [1, 2], 5),
            sr.path_metrics(fan_scene, CFG, [1, 3], 5),
        ]
        with pytest.raises(sr.SideViolation, match="panel 1"):
            sr.build_forest(fan_scene, paths)

    def test_cross_user_sharing(self, two_user_scene):
        paths = [
            sr.path_metrics(two_user_scene, CFG, [1], 4),
            sr.path_metrics(two_user_scene, CFG, [1], 5),
        ]
        with pytest.raises(sr.CrossUserSharing, match="panel 1") as info:
            sr.build_forest(two_user_scene, paths)
        assert info.value.node == 1

    def test_rejects_empty(self, branching_scene):
        with pytest.raises(ValueError, match="at least one path"):
            sr.build_forest(branching_scene, [])


class TestOptimalAmplitudes:
    def test_demo_frozen_splits(self, demo_forest):
        amp = sr.optimal_amplitudes(demo_forest, peak_gains=[4.0, 2.0, 2.0, 2.0])
        assert amp.splits[1] == pytest.approx((0.25, 0.75))
        assert amp.splits[2] == pytest.approx((1.0 / 3.0, 2.0 / 3.0))
        assert amp.splits[3] == (1.0, 0.0)
        assert amp.splits[4] == (1.0, 0.0)
        assert amp.splits[5] == (0.0, 1.0)
        assert amp.splits[6] == (1.0, 0.0)

    def test_fractions_sum_to_one_exactly(self, demo_forest):
        amp = sr.optimal_amplitudes(demo_forest)
        for panel in demo_forest.selected_panels:
            r, t = amp.splits[panel]
            assert r + t == 1.0  # exact, by construction
            assert 0.0 <= r <= 1.0

    def test_fraction_accessors(self, demo_forest):
        amp = sr.optimal_amplitudes(demo_forest, peak_gains=[4.0, 2.0, 2.0, 2.0])
        assert amp.fraction(1, sr.SurfaceUse.TRANSMIT) == pytest.approx(0.75)
        assert amp.reflect(1) == pytest.approx(0.25)
        assert amp.transmit(2) == pytest.approx(2.0 / 3.0)
        with pytest.raises(KeyError):
            amp.fraction(9, sr.SurfaceUse.REFLECT)

    def test_realized_gains_frozen(self, demo_forest):
        amp = sr.optimal_amplitudes(demo_forest, peak_gains=[4.0, 2.0, 2.0, 2.0])
        realized = [
            sr.realized_path_gain(p, amp, peak_gain=g)
            for p, g in zip(demo_forest.paths, [4.0, 2.0, 2.0, 2.0])
        ]
        assert realized == pytest.approx([2.0, 0.5, 0.5, 2.0])


def coherent_user_power(forest, amplitudes, peak_gains):
    """Best single-user received power for given splits: per-beam coherent
    amplitudes squared, optimally weighted across beams."""
    total = 0.0
    for beam in forest.beams:
        amp = math.fsum(
            math.sqrt(sr.realized_path_gain(forest.paths[i], amplitudes, peak_gains[i]))
            for i in beam.path_indices
        )
        total += amp * amp
    return total


class TestClosedFormOptimality:
    def test_demo_power_telescopes_to_ten(self, demo_forest):
        gains = [4.0, 2.0, 2.0, 2.0]
        amp = sr.optimal_amplitudes(demo_forest, peak_gains=gains)
        assert coherent_user_power(demo_forest, amp, gains) == pytest.approx(10.0)
        assert sr.predicted_power_single(demo_forest, peak_gains=gains) == pytest.approx(10.0)

    @pytest.mark.parametrize("epsilon", [1e-3, 1e-2])
    def test_split_perturbations_lose_power(self, demo_forest, epsilon):
        gains = [p.peak_gain for p in demo_forest.paths]
        best = sr.optimal_amplitudes(demo_forest)
        reference = coherent_user_power(demo_forest, best, gains)
        assert reference == pytest.approx(sr.predicted_power_single(demo_forest), rel=1e-12)
        for panel in demo_forest.branch_nodes:
            for sign in (+1.0, -1.0):
                splits = dict(best.splits)
                r, t = splits[panel]
                r2 = r + sign * epsilon
                if not 0.0 < r2 < 1.0:
                    continue
                splits[panel] = (r2, 1.0 - r2)
                worse = coherent_user_power(
                    demo_forest, sr.AmplitudeAssignment(splits=splits), gains
                )
                assert worse < reference

    def test_beam_shares_proportional_to_mass(self, demo_forest):
        alloc = sr.beam_power_allocation(demo_forest, peak_gains=[4.0, 2.0, 2.0, 2.0])
        assert alloc.user_fractions == {7: 1.0}
        assert alloc.beam_fractions[(7, 1)] == pytest.approx(0.8)
        assert alloc.beam_fractions[(7, 5)] == pytest.approx(0.2)
        assert alloc.absolute(7, 1) == pytest.approx(0.8)


class TestUserPowerAllocation:
    def test_frozen_two_user_case(self):
        fractions, power = sr.user_power_allocation({8: 10.0, 9: 40.0})
        assert fractions == pytest.approx({8: 0.8, 9: 0.2})
        assert power == pytest.approx(8.0)

    def test_equalizes_received_power(self):
        rng = np.random.default_rng(99)
        for _ in range(200):
            n = int(rng.integers(2, 6))
            gains = {100 + k: float(rng.uniform(1e-12, 1e3)) for k in range(n)}
            fractions, power = sr.user_power_allocation(gains)
            assert math.fsum(fractions.values()) == pytest.approx(1.0, abs=1e-15)
            for user, g in gains.items():
                assert abs(fractions[user] * g - power) <= 1e-12 * power

    def test_zero_gain_user_infeasible(self):
        with pytest.raises(sr.InfeasibleError) as info:
            sr.user_power_allocation({8: 0.0, 9: 5.0})
        assert info.value.users == (8,)

    def test_no_users_infeasible(self):
        with pytest.raises(sr.InfeasibleError):
            sr.user_power_allocation({})


class TestPredictedPowers:
    def test_single_user_is_gain_sum(self, demo_forest):
        total = math.fsum(p.peak_gain for p in demo_forest.paths)
        assert sr.predicted_powers(demo_forest) == {7: pytest.approx(total)}

    def test_multi_user_equalized(self, two_user_scene):
        paths = [
            sr.path_metrics(two_user_scene, CFG, [1], 4),
            sr.path_metrics(two_user_scene, CFG, [3], 5),
        ]
        forest = sr.build_forest(two_user_scene, paths)
        powers = sr.predicted_powers(forest)
        g4, g5 = paths[0].peak_gain, paths[1].peak_gain
        want = 1.0 / (1.0 / g4 + 1.0 / g5)
        assert powers[4] == pytest.approx(want)
        assert powers[5] == pytest.approx(want)

    def test_single_guard(self, two_user_scene):
        paths = [
            sr.path_metrics(two_user_scene, CFG, [1], 4),
            sr.path_metrics(two_user_scene, CFG, [3], 5),
        ]
        forest = sr.build_forest(two_user_scene, paths)
        with pytest.raises(ValueError, match="single-user"):
            sr.predicted_power_single(forest)


class TestAssembleDesigns:
    def test_demo_design_inventory(self, branching_scene, demo_forest):
        designs = sr.assemble_designs(branching_scene, CFG, demo_forest)
        assert set(designs.profiles) == set(demo_forest.face_paths)
        assert set(designs.beamformers) == {(7, 1), (7, 5)}
        for key, bf in designs.beamformers.items():
            assert bf.first_panel == key[1]
            assert np.linalg.norm(bf.weights) == pytest.approx(1.0)

    def test_terminal_rotations_cancel_propagation(self, branching_scene, demo_forest):
        designs = sr.assemble_designs(branching_scene, CFG, demo_forest)
        for idx, path in enumerate(demo_forest.paths):
            panel, face = demo_forest.terminal[idx]
            profile = designs.profiles[(panel, face)]
            want = (TWO_PI * path.total_distance / CFG.wavelength) % TWO_PI
            assert profile.extra_rotation == pytest.approx(want)
        for key, profile in designs.profiles.items():
            if key not in demo_forest.terminal.values():
                assert profile.extra_rotation == 0.0
