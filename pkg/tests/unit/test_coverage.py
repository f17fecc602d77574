"""Unit tests for per-site coverage maximization."""

import math

import numpy as np
import pytest

from pymmwave.coverage import CoverageSolution, max_coverage, sorted_feasible_grids
from pymmwave.exceptions import ScenarioError
from pymmwave.generator import generate_scenario
from pymmwave.linkmodel import RadioParams, build_link_table, solve_phi


class TestSortedFeasibleGrids:
    """Tests for the per-site grid ordering."""

    def test_order_by_distance(self, street_link_table):
        """Test that the middle site lists its grids nearest first."""
        order = sorted_feasible_grids(street_link_table, 2)
        distances = [street_link_table.r[1, g - 1] for g in order]
        assert distances == sorted(distances)
        assert set(order) == set(range(1, 7))

    def test_ties_by_grid_id(self, street_link_table):
        """Test that equidistant grids keep ascending id order."""
        # grids 3 and 4 sit symmetrically around site 2
        order = sorted_feasible_grids(street_link_table, 2)
        assert order.index(3) < order.index(4)

    def test_unusable_grids_excluded(self, canyon_scenario):
        """Test that occluded grids are not listed."""
        table = build_link_table(canyon_scenario)
        assert sorted_feasible_grids(table, 1) == [1, 3]

    def test_unknown_site(self, street_link_table):
        """Test that an unknown site id raises ScenarioError."""
        with pytest.raises(ScenarioError):
            sorted_feasible_grids(street_link_table, 4)


class TestMaxCoverage:
    """Tests for max_coverage."""

    def test_light_load_covers_everything(self, street_link_table, radio_params):
        """Test that a generous ceiling covers every usable grid."""
        phi = solve_phi(radio_params.gamma, radio_params.n_rf)
        solution = max_coverage(street_link_table, phi, radio_params)
        assert isinstance(solution, CoverageSolution)
        assert solution.cover.all()
        assert solution.degenerate_sites == ()

    def test_bisection_iterations(self, street_link_table, radio_params):
        """Test the iteration count for r_max 200 and tolerance 0.1."""
        solution = max_coverage(street_link_table, 1.0, radio_params)
        assert solution.iterations.tolist() == [11, 11, 11]

    @pytest.mark.parametrize("phi", [0.0, 0.01, 0.03, 0.05, 0.08, 0.12, 0.2])
    def test_load_within_ceiling(self, street_link_table, radio_params, phi):
        """Test that no site exceeds the load ceiling."""
        solution = max_coverage(street_link_table, phi, radio_params)
        assert np.all(solution.mean_load_per_site <= phi + 1e-12)

    @pytest.mark.parametrize("phi", [0.0, 0.01, 0.03, 0.05, 0.08, 0.12, 0.2])
    def test_bisection_matches_prefix(self, street_link_table, radio_params, phi):
        """Test that bisection and the prefix scan agree on the indicators."""
        bisected = max_coverage(street_link_table, phi, radio_params, method="bisection")
        scanned = max_coverage(street_link_table, phi, radio_params, method="prefix")
        np.testing.assert_array_equal(bisected.cover, scanned.cover)
        assert scanned.iterations.tolist() == [0, 0, 0]

    def test_cover_is_distance_prefix(self, street_link_table, radio_params):
        """Test that each site covers a nearest-first prefix of its grids."""
        solution = max_coverage(street_link_table, 0.05, radio_params)
        for site_id in range(1, 4):
            order = sorted_feasible_grids(street_link_table, site_id)
            flags = [bool(solution.cover[site_id - 1, g - 1]) for g in order]
            assert flags == sorted(flags, reverse=True)

    def test_prefix_is_maximal(self, street_link_table, radio_params):
        """Test that admitting the next grid would break the ceiling."""
        phi = 0.05
        solution = max_coverage(street_link_table, phi, radio_params, method="prefix")
        for b in range(3):
            order = sorted_feasible_grids(street_link_table, b + 1)
            admitted = int(solution.cover[b].sum())
            if admitted < len(order):
                nxt = order[admitted] - 1
                extra = street_link_table.ue_mass[nxt] * (1 - street_link_table.p_blk[b, nxt])
                assert solution.mean_load_per_site[b] + extra > phi

    def test_degenerate_sites(self, street_scenario):
        """Test that sites without usable grids keep the full radius."""
        params = RadioParams(r_max=5.0)
        table = build_link_table(street_scenario, params)
        solution = max_coverage(table, 1.0, params)
        assert solution.degenerate_sites == (1, 2, 3)
        assert solution.r_max_per_site.tolist() == [5.0, 5.0, 5.0]
        assert not solution.cover.any()

    def test_generated_scenario_methods_agree(self, tiny_scenario):
        """Test the two methods on a generated scenario with buildings."""
        params = tiny_scenario.radio
        table = build_link_table(tiny_scenario)
        for phi in (0.01, 0.05, solve_phi(params.gamma, params.n_rf)):
            bisected = max_coverage(table, phi, params)
            scanned = max_coverage(table, phi, params, method="prefix")
            np.testing.assert_array_equal(bisected.cover, scanned.cover)

    def test_small_scenarios_methods_agree_slow(self):
        """Test bisection against the prefix scan on loaded small scenarios."""
        for seed in range(20):
            scenario = generate_scenario("small", seed, contention=2.0)
            params = scenario.radio
            table = build_link_table(scenario)
            phi = solve_phi(params.gamma, params.n_rf)
            bisected = max_coverage(table, phi, params)
            scanned = max_coverage(table, phi, params, method="prefix")
            np.testing.assert_array_equal(bisected.cover, scanned.cover)
            assert math.ceil(math.log2(params.r_max / params.eps_bisect)) == 11
            assert set(bisected.iterations.tolist()) == {11}
            assert bisected.cover.sum() < table.feasible.sum()

    def test_to_frame(self, street_link_table, radio_params):
        """Test the per-site summary frame."""
        frame = max_coverage(street_link_table, 0.05, radio_params).to_frame()
        assert list(frame.columns) == ["site_id", "r_max", "mean_load", "n_grids"]
        assert frame["site_id"].tolist() == [1, 2, 3]
