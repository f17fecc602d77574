"""Unit tests for minimum-cost deployment."""

import itertools
import math
import time

import numpy as np
import pytest

from pymmwave.coverage import max_coverage
from pymmwave.deploy import (
    REASON_DIVERSITY,
    REASON_INTERFERENCE,
    REASON_UNCOVERED,
    build_outage_model,
    build_selection_ilp,
    evaluate_outage_lhs,
    log_outage_terms,
    outage_lhs_all,
    sinr_lower_bounds,
    solve_deployment,
    strict_row_epsilon,
)
from pymmwave.enums import Scheme, SolveStatus
from pymmwave.exceptions import InfeasibleError, ModelDomainError
from pymmwave.generator import generate_scenario
from pymmwave.ilpcore import null_variables, solve_bb
from pymmwave.linkmodel import RadioParams, build_link_table, solve_phi
from tests.fixtures.sample_data import get_tiny_scenario, get_two_site_scenario


def _stages(scenario):
    params = scenario.radio
    table = build_link_table(scenario)
    coverage = max_coverage(table, solve_phi(params.gamma, params.n_rf), params)
    return table, coverage


def _exhaustive_cost(scenario, table, cover):
    """Cheapest deployment meeting every outage tolerance, evaluated directly; inf if none."""
    params = scenario.radio
    demand = np.flatnonzero(scenario.demand_mask)
    best = math.inf
    for bits in itertools.product((0, 1), repeat=scenario.num_sites):
        y = np.array(bits)
        cost = float(scenario.site_costs @ y)
        if cost >= best:
            continue
        ok = True
        for g in demand:
            interference = sum(
                y[i] * (table.i_hat_assoc[i, g] if cover[i, g] else table.i_hat_free[i, g])
                for i in range(scenario.num_sites)
            )
            lhs = 0.0
            for b in range(scenario.num_sites):
                if y[b] and cover[b, g]:
                    sinr = table.p_bar[b, g] / (params.noise + interference)
                    if sinr >= params.z:
                        p = table.p_blk[b, g]
                        lhs += math.log(p + params.gamma * (1 - p))
            if lhs > math.log(scenario.grids[g].outage_tolerance) + 1e-9:
                ok = False
                break
        if ok:
            best = cost
    return best


class TestOutageTerms:
    """Tests for the log-outage terms and SINR lower bounds."""

    def test_log_term(self):
        """Test log(p + gamma (1 - p))."""
        assert log_outage_terms(np.array([0.5]), 0.1)[0] == pytest.approx(math.log(0.55))

    def test_log_term_domain(self):
        """Test that a zero argument is rejected."""
        with pytest.raises(ModelDomainError):
            log_outage_terms(np.array([0.0]), 0.0)

    def test_sinr_single_site(self, two_site_scenario):
        """Test the SINR bound with only the serving site built."""
        table, coverage = _stages(two_site_scenario)
        params = two_site_scenario.radio
        sinr = sinr_lower_bounds([1, 0], coverage.cover, table, params)
        expected = table.p_bar[0, 0] / (params.noise + table.i_hat_assoc[0, 0])
        assert sinr[0, 0] == pytest.approx(expected)
        assert sinr[0, 0] == pytest.approx(22.8, rel=0.01)
        assert sinr[1, 0] == 0.0

    def test_sinr_both_sites(self, two_site_scenario):
        """Test that a second built site lowers the bound."""
        table, coverage = _stages(two_site_scenario)
        sinr = sinr_lower_bounds([1, 1], coverage.cover, table, two_site_scenario.radio)
        assert sinr[0, 0] == pytest.approx(15.55, rel=0.005)
        assert sinr[1, 0] > 0

    def test_outage_lhs_values(self, two_site_scenario):
        """Test the left side of the outage constraint per deployment."""
        table, coverage = _stages(two_site_scenario)
        params = two_site_scenario.radio
        assert evaluate_outage_lhs([1, 0], coverage, table, 1, params) == pytest.approx(-0.1675, abs=1e-3)
        assert evaluate_outage_lhs([0, 1], coverage, table, 1, params) == pytest.approx(-0.0751, abs=1e-3)
        assert evaluate_outage_lhs([1, 1], coverage, table, 1, params) == pytest.approx(-0.2426, abs=1e-3)
        assert evaluate_outage_lhs([0, 0], coverage, table, 1, params) == 0.0

    def test_sinr_outage_links_contribute_nothing(self):
        """Test that links below the threshold are dropped from the sum."""
        scenario = get_two_site_scenario(radio=RadioParams(z=30.0))
        table, coverage = _stages(scenario)
        lhs = outage_lhs_all([1, 1], coverage.cover, table, scenario.radio)
        assert lhs.tolist() == [0.0]

    def test_evaluate_rejects_non_binary(self, two_site_scenario):
        """Test deployment vector validation."""
        table, coverage = _stages(two_site_scenario)
        with pytest.raises(ModelDomainError):
            evaluate_outage_lhs([1, 2], coverage, table, 1, two_site_scenario.radio)
        with pytest.raises(ModelDomainError):
            evaluate_outage_lhs([1], coverage, table, 1, two_site_scenario.radio)

    def test_outage_term_nondecreasing_in_access_blockage(self):
        """Test that the per-link term grows with the access blockage probability."""
        rho = np.linspace(0.0, 0.99, 100)
        for p in np.linspace(0.01, 0.95, 12):
            for p_sinr in np.linspace(0.0, 1.0 - p, 6):
                terms = log_outage_terms(np.full(rho.size, p + p_sinr), rho)
                np.testing.assert_allclose(np.exp(terms), p + rho * (1 - p) + (1 - rho) * p_sinr)
                assert np.all(np.diff(terms) >= -1e-12)

    def test_more_associations_never_raise_outage(self):
        """Test that covering one more link of a grid never increases its outage sum."""
        scenario = get_tiny_scenario(seed=4, zeta=0.5)
        table, coverage = _stages(scenario)
        params = scenario.radio
        rng = np.random.default_rng(8)
        for _ in range(200):
            y = rng.integers(0, 2, size=scenario.num_sites)
            cover = coverage.cover.copy()
            cover[rng.random(cover.shape) < 0.5] = False
            candidates = np.argwhere(~cover & table.feasible)
            if candidates.size == 0:
                continue
            b, g = candidates[rng.integers(len(candidates))]
            flipped = cover.copy()
            flipped[b, g] = True
            before = outage_lhs_all(y, cover, table, params)[g]
            after = outage_lhs_all(y, flipped, table, params)[g]
            assert after <= before + 1e-12


class TestSelectionIlp:
    """Tests for the linearized selection ILP."""

    def test_structure(self, two_site_scenario):
        """Test variables and row names of the two-site instance."""
        table, coverage = _stages(two_site_scenario)
        instance = build_selection_ilp(
            coverage, table, two_site_scenario.grids, two_site_scenario.radio, two_site_scenario.site_costs
        )
        assert instance.var_names == ("y_1", "y_2", "s_1_1", "s_2_1")
        assert instance.objective.tolist() == [3.0, 1.0, 0.0, 0.0]
        names = [row.name for row in instance.constraints]
        assert names == [
            "link_1_1", "sinr_lo_1_1", "sinr_hi_1_1",
            "link_2_1", "sinr_lo_2_1", "sinr_hi_2_1",
            "outage_1",
        ]

    def test_indicator_rows_match_sinr(self, two_site_scenario):
        """Test that s = 1 is admissible exactly when the SINR bound clears z."""
        table, coverage = _stages(two_site_scenario)
        instance = build_selection_ilp(coverage, table, two_site_scenario.grids, two_site_scenario.radio)
        sinr_rows = [row for row in instance.constraints if row.name.startswith("sinr")]
        # near site alone clears the threshold: s_1_1 = 1 only
        assert all(row.satisfied([1, 0, 1, 0]) for row in sinr_rows)
        assert not all(row.satisfied([1, 0, 0, 0]) for row in sinr_rows)

    def test_indicator_forced_off_below_threshold(self):
        """Test that s = 0 is the only choice when the SINR bound misses z."""
        scenario = get_two_site_scenario(radio=RadioParams(z=30.0))
        table, coverage = _stages(scenario)
        instance = build_selection_ilp(coverage, table, scenario.grids, scenario.radio)
        sinr_rows = [row for row in instance.constraints if row.name.startswith("sinr")]
        assert all(row.satisfied([1, 0, 0, 0]) for row in sinr_rows)
        assert not all(row.satisfied([1, 0, 1, 0]) for row in sinr_rows)

    def test_uncovered_grid_raises(self, canyon_scenario):
        """Test that a demand grid without a covering site raises InfeasibleError."""
        table, coverage = _stages(canyon_scenario)
        with pytest.raises(InfeasibleError) as error:
            build_selection_ilp(coverage, table, canyon_scenario.grids, canyon_scenario.radio)
        assert error.value.grid_ids == [2]
        assert error.value.reasons == {2: REASON_UNCOVERED}

    def test_strict_row_epsilon(self):
        """Test the slack of the normalized strict row."""
        assert strict_row_epsilon(0.5, 1e-13, 1e-9) == pytest.approx(1e-6)
        assert strict_row_epsilon(0.5, 1e-13, 1.0) == pytest.approx(5e-14)

    def test_selection_rows_match_outage_condition_slow(self):
        """Test that y admits indicators exactly when every demand grid meets its tolerance."""
        for seed in range(20):
            for zeta in (0.3, 0.6, 0.9):
                scenario = get_tiny_scenario(seed=seed, zeta=zeta)
                params = scenario.radio
                table, coverage = _stages(scenario)
                try:
                    instance = build_selection_ilp(coverage, table, scenario.grids, params)
                except InfeasibleError:
                    continue
                pairs = build_outage_model(coverage, table, scenario.grids, params).pairs
                sites, cells = np.array(pairs).T
                demand = scenario.demand_mask
                tolerance = np.log(scenario.outage_tolerance[demand])
                for bits in itertools.product((0, 1), repeat=scenario.num_sites):
                    y = np.array(bits)
                    sinr = sinr_lower_bounds(y, coverage.cover, table, params)
                    s = (y[sites] == 1) & (sinr[sites, cells] >= params.z)
                    meets = np.all(outage_lhs_all(y, coverage.cover, table, params)[demand] <= tolerance + 1e-9)
                    assert instance.is_feasible(np.concatenate((y, s.astype(int)))) == meets

    def test_indicator_rows_pin_each_link(self, street_scenario):
        """Test that every indicator other than the SINR outcome breaks a row."""
        scenario = street_scenario
        params = scenario.radio
        table, coverage = _stages(scenario)
        instance = build_selection_ilp(coverage, table, scenario.grids, params)
        pairs = build_outage_model(coverage, table, scenario.grids, params).pairs
        indicator_rows = [row for row in instance.constraints if not row.name.startswith("outage")]
        rng = np.random.default_rng(3)
        for _ in range(20):
            y = rng.integers(0, 2, size=scenario.num_sites)
            sinr = sinr_lower_bounds(y, coverage.cover, table, params)
            s = np.array([int(y[b] == 1 and sinr[b, g] >= params.z) for b, g in pairs])
            assignment = np.concatenate((y, s))
            assert all(row.satisfied(assignment) for row in indicator_rows)
            k = int(rng.integers(len(pairs)))
            assignment[scenario.num_sites + k] ^= 1
            assert not all(row.satisfied(assignment) for row in indicator_rows)

    def test_unreachable_links(self):
        """Test the links that miss the threshold even with their site alone."""
        scenario = get_two_site_scenario(radio=RadioParams(z=30.0))
        table, coverage = _stages(scenario)
        assert build_outage_model(coverage, table, scenario.grids, scenario.radio).unreachable().tolist() == [0, 1]
        scenario = get_two_site_scenario()
        table, coverage = _stages(scenario)
        model = build_outage_model(coverage, table, scenario.grids, scenario.radio)
        assert model.unreachable().size == 0


class TestSolveDeployment:
    """Tests for solve_deployment."""

    def test_two_site_optimum(self, two_site_scenario):
        """Test that the expensive near site is the only feasible choice."""
        deployment = solve_deployment(two_site_scenario)
        assert deployment.scheme == Scheme.PROPOSED
        assert deployment.status == SolveStatus.OPTIMAL
        assert deployment.deployed_sites == [1]
        assert deployment.cost == pytest.approx(3.0)
        assert deployment.macro_diversity.tolist() == [1]
        assert deployment.outage_lhs[0] <= math.log(0.9)
        assert deployment.nodes_explored >= 1

    def test_diversity_insufficient(self):
        """Test the reason when even every site together misses the tolerance."""
        deployment = solve_deployment(get_two_site_scenario(zeta=0.5))
        assert deployment.status == SolveStatus.INFEASIBLE
        assert deployment.infeasible_reasons == {1: REASON_DIVERSITY}
        assert deployment.deployed_sites == []

    def test_interference_limited(self):
        """Test the reason when no link can clear the SINR threshold."""
        deployment = solve_deployment(get_two_site_scenario(radio=RadioParams(z=30.0)))
        assert deployment.status == SolveStatus.INFEASIBLE
        assert deployment.infeasible_reasons == {1: REASON_INTERFERENCE}

    def test_uncovered(self, canyon_scenario):
        """Test that uncovered grids are reported, not raised."""
        deployment = solve_deployment(canyon_scenario)
        assert not deployment.is_feasible
        assert deployment.infeasible_grids == (2,)
        assert deployment.infeasible_reasons[2] == REASON_UNCOVERED

    def test_cached_stages(self, street_scenario):
        """Test that passing precomputed stages gives the same deployment."""
        table, coverage = _stages(street_scenario)
        direct = solve_deployment(street_scenario)
        cached = solve_deployment(street_scenario, link_table=table, coverage=coverage)
        assert direct.y.tolist() == cached.y.tolist()
        assert direct.cost == cached.cost

    def test_street_deployment_meets_every_grid(self, street_scenario):
        """Test the outage constraint of every demand grid at the optimum."""
        deployment = solve_deployment(street_scenario)
        assert deployment.is_feasible
        tolerance = np.log(street_scenario.outage_tolerance)
        demand = street_scenario.demand_mask
        assert np.all(deployment.outage_lhs[demand] <= tolerance[demand] + 1e-9)

    @pytest.mark.parametrize("seed", [1, 2, 3, 4, 5])
    def test_matches_exhaustive_search(self, seed):
        """Test the optimal cost against direct enumeration of every deployment."""
        scenario = get_tiny_scenario(seed=seed, zeta=0.5)
        table, coverage = _stages(scenario)
        expected = _exhaustive_cost(scenario, table, coverage.cover)
        deployment = solve_deployment(scenario, link_table=table, coverage=coverage)
        if math.isinf(expected):
            assert deployment.status == SolveStatus.INFEASIBLE
        else:
            assert deployment.status == SolveStatus.OPTIMAL
            assert deployment.cost == pytest.approx(expected)

    def test_matches_exhaustive_search_slow(self):
        """Test the optimal cost against enumeration over many seeds and tolerances."""
        for seed in range(50):
            for zeta in (0.3, 0.7):
                scenario = get_tiny_scenario(seed=seed, zeta=zeta)
                table, coverage = _stages(scenario)
                expected = _exhaustive_cost(scenario, table, coverage.cover)
                deployment = solve_deployment(scenario, link_table=table, coverage=coverage)
                if math.isinf(expected):
                    assert not deployment.is_feasible
                else:
                    assert deployment.cost == pytest.approx(expected)

    def test_served_indicators_clear_threshold(self, street_scenario):
        """Test that every link the solver switches on has an SINR bound of at least z."""
        params = street_scenario.radio
        table, coverage = _stages(street_scenario)
        instance = build_selection_ilp(coverage, table, street_scenario.grids, params, street_scenario.site_costs)
        solution = solve_bb(instance)
        assert solution.is_optimal
        y = solution.assignment[: street_scenario.num_sites]
        sinr = sinr_lower_bounds(y, coverage.cover, table, params)
        pairs = build_outage_model(coverage, table, street_scenario.grids, params).pairs
        served = [pair for k, pair in enumerate(pairs) if solution.assignment[street_scenario.num_sites + k]]
        assert served
        assert all(sinr[b, g] >= params.z for b, g in served)

    @pytest.mark.parametrize("seed", [1, 2, 3])
    def test_nulling_unreachable_links_keeps_optimum(self, seed):
        """Test that nulling unreachable indicators leaves the optimal cost unchanged."""
        scenario = get_tiny_scenario(seed=seed, zeta=0.9, radio=RadioParams(z=22.0))
        params = scenario.radio
        table, coverage = _stages(scenario)
        instance = build_selection_ilp(coverage, table, scenario.grids, params, scenario.site_costs)
        unreachable = scenario.num_sites + build_outage_model(coverage, table, scenario.grids, params).unreachable()
        full = solve_bb(instance)
        reduced = null_variables(instance, unreachable)
        nulled = solve_bb(reduced)
        assert nulled.status == full.status
        assert nulled.objective_value == pytest.approx(full.objective_value)
        assert len(reduced.constraints) <= len(instance.constraints)

    def test_small_scenario_slow(self):
        """Test that a generated small scenario solves to optimality in bounded time."""
        scenario = generate_scenario("small", 3, zeta=0.9)
        started = time.perf_counter()
        deployment = solve_deployment(scenario)
        elapsed = time.perf_counter() - started
        assert elapsed < 300.0
        assert deployment.status in (SolveStatus.OPTIMAL, SolveStatus.INFEASIBLE)
        if deployment.is_feasible:
            demand = scenario.demand_mask
            assert np.all(deployment.outage_lhs[demand] <= np.log(scenario.outage_tolerance[demand]) + 1e-9)
