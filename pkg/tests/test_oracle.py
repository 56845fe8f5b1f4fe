"""Matrix-level verification: the oracle must agree with the closed forms."""
from __future__ import annotations

import math

import numpy as np
import pytest

import starroute as sr
from scenegen import make_scene
from test_selection import fake_path

CFG = sr.SystemConfig.with_defaults(
    n_bs_antennas=4, m0=4, carrier_hz=5e9, candidates_per_user=6, mode="star_es"
)


@pytest.fixture
def unit_case():
    """Unit hops, unit reference gain: peak gain exactly 32."""
    scene = make_scene(
        [
            ("bs", (0.0, 0.0, 0.0)),
            ("star_ris", (0.0, 1.0, 0.0), (0.0, 1.0, 0.0)),
            ("user", (0.6, 1.8, 0.0)),
        ],
        [(0, 1), (1, 2)],
    )
    config = sr.SystemConfig.with_defaults(
        n_bs_antennas=2, m0=2, carrier_hz=5e9, candidates_per_user=2,
        mode="star_es", reference_gain=1.0,
    )
    return scene, config


class TestChannelMatrices:
    def test_hop_matrices_are_rank_one(self, branching_scene):
        mats = sr.ChannelMatrices(branching_scene, CFG)
        for matrix in (mats.bs_to_panel(1), mats.panel_to_panel(1, 2)):
            assert np.linalg.matrix_rank(matrix) == 1

    def test_entry_magnitude_is_attenuation(self, branching_scene):
        mats = sr.ChannelMatrices(branching_scene, CFG)
        d = sr.distance(branching_scene, 1, 2)
        want = math.sqrt(CFG.reference_gain) / d
        np.testing.assert_allclose(np.abs(mats.panel_to_panel(1, 2)), want)

    def test_propagation_phase(self, unit_case):
        scene, config = unit_case
        mats = sr.ChannelMatrices(scene, config)
        h = mats.panel_to_user(1, 2)
        d = sr.distance(scene, 1, 2)
        # Element 0 is the array reference: its response entry is 1, so the
        # channel phase is purely the propagation term exp(-i 2 pi d / lambda).
        expected = np.exp(-2j * math.pi * d / config.wavelength) / d
        np.testing.assert_allclose(h[0], expected, atol=1e-15)

    def test_reciprocity_transpose(self, branching_scene):
        mats = sr.ChannelMatrices(branching_scene, CFG)
        forward = mats.panel_to_panel(1, 2)
        # Build the reverse hop through a fresh cache: the physical channel
        # backward is the unconjugated transpose of the forward one.
        backward = sr.ChannelMatrices(branching_scene, CFG)._ura(2, 1, arriving=False)
        h_rev = (
            math.sqrt(CFG.reference_gain)
            / sr.distance(branching_scene, 1, 2)
            * np.exp(-2j * math.pi * sr.distance(branching_scene, 1, 2) / CFG.wavelength)
            * np.outer(
                sr.ChannelMatrices(branching_scene, CFG)._ura(1, 2, arriving=True),
                np.conj(backward),
            )
        )
        np.testing.assert_allclose(h_rev, forward.T, atol=1e-12)

    def test_matrices_cached(self, branching_scene):
        mats = sr.ChannelMatrices(branching_scene, CFG)
        assert mats.bs_to_panel(1) is mats.bs_to_panel(1)


class TestSimulatePath:
    def test_unit_case_matches_closed_form_exactly(self, unit_case):
        scene, config = unit_case
        sol = sr.solve_single_user(scene, config)
        path = sol.forest.paths[0]
        assert path.peak_gain == pytest.approx(32.0)
        h = sr.simulate_path(
            scene, config, path, sol.designs, sol.amplitudes,
            sol.designs.beamformers[(2, 1)],
        )
        assert abs(h) ** 2 == pytest.approx(32.0, rel=1e-12)
        # The terminal rotation cancels all propagation phase: h is real positive.
        assert h.imag == pytest.approx(0.0, abs=1e-9)
        assert h.real > 0

    def test_half_split_halves_power(self, unit_case):
        scene, config = unit_case
        sol = sr.solve_single_user(scene, config)
        path = sol.forest.paths[0]
        face = path.hop_surfaces[0]
        halved = sr.AmplitudeAssignment(
            splits={1: (0.5, 0.5)}
        )
        h = sr.simulate_path(
            scene, config, path, sol.designs, halved, sol.designs.beamformers[(2, 1)]
        )
        assert abs(h) ** 2 == pytest.approx(16.0, rel=1e-12)

    def test_rejects_wrong_beamformer_shape(self, unit_case):
        scene, config = unit_case
        sol = sr.solve_single_user(scene, config)
        with pytest.raises(sr.OracleError, match="shape"):
            sr.simulate_path(
                scene, config, sol.forest.paths[0], sol.designs, sol.amplitudes,
                np.ones(7, dtype=complex),
            )


class TestReceivedPowerOracle:
    def test_isolated_matches_prediction(self, branching_scene):
        sol = sr.solve_single_user(branching_scene, CFG)
        iso, comp = sr.verify_solution(branching_scene, CFG, sol.forest)
        assert iso.relative_error < 1e-9
        assert iso.ok
        assert iso.leakage_power is None

    def test_composite_reports_leakage(self, branching_scene):
        sol = sr.solve_single_user(branching_scene, CFG)
        _, comp = sr.verify_solution(branching_scene, CFG, sol.forest)
        assert comp.leakage_power is not None
        # Superposing the two beams couples them slightly; the drift is
        # reported and stays far below the delivered power.
        assert comp.leakage_power < 1e-3 * comp.predicted + 1e-18

    def test_single_beam_composite_is_isolated_bitwise(self, unit_case):
        scene, config = unit_case
        sol = sr.solve_single_user(scene, config)
        iso, comp = sr.verify_solution(scene, config, sol.forest)
        assert comp.simulated == iso.simulated
        assert comp.leakage_power == pytest.approx(abs(comp.simulated - comp.predicted))

    def test_multi_user_per_user_breakdown(self, two_user_scene):
        sol = sr.solve_multi_user(two_user_scene, CFG)
        iso, _ = sr.verify_solution(two_user_scene, CFG, sol.forest)
        assert set(iso.per_user) == {4, 5}
        for user, (want, got, rel) in iso.per_user.items():
            assert want == pytest.approx(sol.user_powers[user])
            assert rel < 1e-9


class TestClosedFormCheck:
    def test_equality_and_dominance(self, branching_scene):
        sol = sr.solve_single_user(branching_scene, CFG)
        check = sr.verify_power_closed_form(
            branching_scene, CFG, sol.forest, draws=50,
            rng=np.random.default_rng(123),
        )
        assert check.ok
        assert check.equality_error < 1e-9
        assert check.worst_draw_margin < 1e-9
        assert check.draws == 50

    def test_multi_user_bounds(self, two_user_scene):
        sol = sr.solve_multi_user(two_user_scene, CFG)
        check = sr.verify_power_closed_form(
            two_user_scene, CFG, sol.forest, draws=50,
            rng=np.random.default_rng(321),
        )
        assert check.ok


class TestBruteForce:
    def test_guard_refuses_large_pools(self, branching_scene):
        pool = {7: [fake_path([j], 7, float(j)) for j in range(1, 22)]}
        with pytest.raises(sr.OracleError, match="20"):
            sr.brute_force_select(branching_scene, CFG, pool)

    def test_matches_solver_on_branching_scene(self, branching_scene):
        graph = sr.build_los_graph(branching_scene, CFG)
        candidates = {7: sr.candidate_paths(branching_scene, CFG, graph, 7)}
        result = sr.brute_force_select(branching_scene, CFG, candidates)
        sol = sr.solve_single_user(branching_scene, CFG)
        assert result.feasible
        assert result.objective == sol.objective
        assert tuple(p.nodes for _, p in result.selected) == tuple(
            p.nodes for p in sol.forest.paths
        )

    def test_reports_infeasible_coverage(self):
        scene = make_scene(
            [
                ("bs", (0.0, 0.0, 0.0)),
                ("star_ris", (0.0, 1.0, 0.0), (0.0, 1.0, 0.0)),
                ("user", (0.8, 2.0, 0.0)),
                ("user", (-0.8, 2.1, 0.0)),
            ],
            [(0, 1), (1, 2), (1, 3)],
        )
        graph = sr.build_los_graph(scene, CFG)
        candidates = {
            u: sr.candidate_paths(scene, CFG, graph, u) for u in scene.user_ids
        }
        result = sr.brute_force_select(scene, CFG, candidates)
        assert not result.feasible
        assert result.objective is None
        assert result.uncovered_users == (2, 3)
