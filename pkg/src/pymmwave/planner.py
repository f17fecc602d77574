"""Deployment planner facade."""

import logging
from dataclasses import replace
from functools import cached_property
from typing import Optional, Union

from .benchmarks import BenchmarkConfig, solve_assgp, solve_bgga, solve_mdp
from .coverage import CoverageSolution, max_coverage
from .deploy import solve_deployment
from .enums import Scheme
from .evalmc import McConfig, McReport, evaluate
from .exceptions import ScenarioError
from .geometry import Scenario
from .linkmodel import LinkTable, build_link_table, solve_phi
from .models import Deployment

logger = logging.getLogger(__name__)


def apply_overrides(
    scenario: Scenario,
    *,
    zeta: Optional[float] = None,
    gamma: Optional[float] = None,
    n_rf: Optional[int] = None,
    r_max: Optional[float] = None,
) -> Scenario:
    """New scenario with the given parameters replaced.

    ``zeta`` applies to every grid with a positive UE density; empty grids
    keep a tolerance of 1.
    """
    changes = {
        name: value
        for name, value in (("gamma", gamma), ("n_rf", n_rf), ("r_max", r_max))
        if value is not None
    }
    if changes:
        scenario = scenario.with_radio(replace(scenario.radio, **changes))
    if zeta is not None:
        if not 0 < zeta <= 1:
            raise ScenarioError(f"zeta must lie in (0, 1], got {zeta}")
        grids = [
            replace(grid, outage_tolerance=zeta) if grid.ue_density > 0 else grid for grid in scenario.grids
        ]
        scenario = replace(scenario, grids=grids)
    return scenario


class DeploymentPlanner:
    """Planning pipeline over one scenario.

    The link table, the load ceiling and the coverage solution are computed
    on first use and reused by every planner and evaluation.
    """

    def __init__(self, scenario: Scenario):
        self.scenario = scenario

    @cached_property
    def link_table(self) -> LinkTable:
        return build_link_table(self.scenario, self.scenario.radio)

    @cached_property
    def phi(self) -> float:
        """Expected-load ceiling per site for the configured access-blockage tolerance."""
        params = self.scenario.radio
        return solve_phi(params.gamma, params.n_rf)

    @cached_property
    def _coverage(self) -> CoverageSolution:
        return max_coverage(self.link_table, self.phi, self.scenario.radio)

    def coverage(self) -> CoverageSolution:
        """Load-constrained coverage indicators and radii of every site."""
        return self._coverage

    def optimize(self) -> Deployment:
        """Minimum-cost deployment meeting every grid's outage tolerance.

        Returns:
            Deployment: optimal, or infeasible with the offending grids.
        """
        return solve_deployment(self.scenario, link_table=self.link_table, coverage=self.coverage())

    def benchmark(self, scheme: Union[Scheme, str], config: Optional[BenchmarkConfig] = None) -> Deployment:
        """Run one of the comparison planners (or the proposed one)."""
        try:
            scheme = Scheme(scheme)
        except ValueError:
            raise ScenarioError(f"unknown scheme {scheme!r}") from None
        logger.info("running %s planner", scheme)
        if scheme == Scheme.PROPOSED:
            return self.optimize()
        if scheme == Scheme.MDP:
            return solve_mdp(self.scenario, config, link_table=self.link_table)
        if scheme == Scheme.ASSGP:
            return solve_assgp(self.scenario, config, link_table=self.link_table)
        return solve_bgga(self.scenario, link_table=self.link_table, coverage=self.coverage())

    def evaluate(self, deployment: Deployment, mc_config: Optional[McConfig] = None) -> McReport:
        """Monte Carlo statistics of ``deployment`` on this scenario."""
        return evaluate(deployment, self.scenario, mc_config, link_table=self.link_table)
