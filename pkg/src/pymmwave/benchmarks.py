"""Comparison planners: macro-diversity ILP, RSS-guaranteed greedy and blockage-guaranteed greedy."""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, Optional, Tuple

import numpy as np

from .coverage import CoverageSolution, max_coverage
from .deploy import REASON_DIVERSITY, REASON_UNCOVERED, OUTAGE_TOL, assemble_deployment, log_outage_terms
from .enums import Scheme, Sense, SolveStatus
from .exceptions import ScenarioError
from .geometry import Scenario
from .ilpcore import solve_bb
from .linkmodel import LinkTable, build_link_table, solve_phi
from .modeling import IlpBuilder
from .models import Deployment
from .values import Gain, Power

logger = logging.getLogger(__name__)

REASON_WEAK_SIGNAL = "rss-insufficient"


@dataclass(frozen=True)
class BenchmarkConfig:
    """Thresholds of the benchmark planners.

    Attributes:
        rss_threshold_db: minimum average received signal strength, dB.
        min_diversity: minimum number of serving sites per demand grid.
    """
    rss_threshold_db: float = -90.0
    min_diversity: int = 2

    def __post_init__(self):
        if int(self.min_diversity) != self.min_diversity or self.min_diversity < 1:
            raise ScenarioError(f"min_diversity must be a positive integer, got {self.min_diversity}")


def rss_db(link_table: LinkTable, scenario: Scenario) -> np.ndarray:
    """B x G received signal strength in dB: P_TX + G_main - PL, -inf where the pathloss is 0."""
    params = scenario.radio
    with np.errstate(divide="ignore"):
        pathloss_db = 10.0 * np.log10(link_table.pl)
    return Power(params.p_tx).dbm + Gain(params.g_main).db + pathloss_db


def _infeasible(scheme, scenario, cover, link_table, reasons: Dict[int, str]) -> Deployment:
    logger.warning("%s: %d grids cannot be served", scheme, len(reasons))
    return assemble_deployment(
        scheme, SolveStatus.INFEASIBLE, np.zeros(scenario.num_sites, dtype=int), cover,
        link_table, scenario, scenario.radio, infeasible=reasons,
    )


def _diversity_shortfall(visible: np.ndarray, scenario: Scenario, min_diversity: int) -> Dict[int, str]:
    counts = visible.sum(axis=0)
    return {
        int(g) + 1: REASON_UNCOVERED if counts[g] == 0 else REASON_DIVERSITY
        for g in np.flatnonzero(scenario.demand_mask & (counts < min_diversity))
    }


def solve_mdp(
    scenario: Scenario,
    config: Optional[BenchmarkConfig] = None,
    link_table: Optional[LinkTable] = None,
) -> Deployment:
    """Minimum-cost deployment giving every demand grid ``min_diversity`` visible sites."""
    config = config or BenchmarkConfig()
    link_table = link_table or build_link_table(scenario)
    visible = link_table.feasible

    shortfall = _diversity_shortfall(visible, scenario, config.min_diversity)
    if shortfall:
        return _infeasible(Scheme.MDP, scenario, visible, link_table, shortfall)

    builder = IlpBuilder()
    builder.add_vars([f"y_{b + 1}" for b in range(scenario.num_sites)], scenario.site_costs)
    for g in np.flatnonzero(scenario.demand_mask):
        row = {int(b): 1.0 for b in np.flatnonzero(visible[:, g])}
        builder.subject_to(row, Sense.GE, config.min_diversity, name=f"diversity_{g + 1}")
    solution = solve_bb(builder.build())

    if not solution.is_optimal:
        return _infeasible(Scheme.MDP, scenario, visible, link_table, shortfall)
    return assemble_deployment(
        Scheme.MDP, SolveStatus.OPTIMAL, solution.assignment, visible, link_table, scenario,
        scenario.radio, nodes_explored=solution.nodes_explored,
    )


def _greedy(
    scenario: Scenario,
    satisfied: Callable[[np.ndarray], np.ndarray],
    score: Callable[[np.ndarray, np.ndarray], np.ndarray],
    progress: Callable[[np.ndarray, np.ndarray], np.ndarray],
    demand: np.ndarray,
) -> Optional[np.ndarray]:
    """Add one site per round until every grid in ``demand`` is satisfied.

    ``score(selected, status)`` rates each candidate; when no candidate
    scores above zero, ``progress`` rates them instead. Ties go to the
    cheaper site, then the lower id. Returns None when stuck.
    """
    costs = scenario.site_costs
    selected = np.zeros(scenario.num_sites, dtype=bool)
    status = satisfied(selected)
    while not np.all(status[demand]):
        candidates = np.flatnonzero(~selected)
        if candidates.size == 0:
            return None
        values = score(selected, status)[candidates]
        if not np.any(values > 0):
            values = progress(selected, status)[candidates]
            if not np.any(values > 0):
                return None
        order = np.lexsort((candidates, costs[candidates], -values))
        chosen = candidates[order[0]]
        selected[chosen] = True
        status = satisfied(selected)
        logger.debug("greedy: added site %d, %d demand grids satisfied", chosen + 1, int(status[demand].sum()))
    return selected


def _per_cost(gain: np.ndarray, costs: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(costs > 0, gain / np.where(costs > 0, costs, 1.0), np.where(gain > 0, math.inf, gain))
    return ratio


def solve_assgp(
    scenario: Scenario,
    config: Optional[BenchmarkConfig] = None,
    link_table: Optional[LinkTable] = None,
) -> Deployment:
    """Greedy deployment meeting the diversity and average-RSS requirements of every demand grid.

    Each round adds the site with the largest net gain in satisfied grids per
    unit cost; average RSS is the arithmetic mean of the serving links' dB values.
    """
    config = config or BenchmarkConfig()
    link_table = link_table or build_link_table(scenario)
    visible = link_table.feasible
    demand = scenario.demand_mask
    rss = np.where(visible, rss_db(link_table, scenario), 0.0)
    k = config.min_diversity

    reasons = _diversity_shortfall(visible, scenario, k)
    for g in np.flatnonzero(demand):
        if g + 1 in reasons:
            continue
        best = np.sort(rss[visible[:, g], g])[::-1][:k]
        if best.mean() < config.rss_threshold_db:
            reasons[int(g) + 1] = REASON_WEAK_SIGNAL
    if reasons:
        return _infeasible(Scheme.ASSGP, scenario, visible, link_table, reasons)

    def satisfied(selected: np.ndarray) -> np.ndarray:
        serving = visible & selected[:, None]
        counts = serving.sum(axis=0)
        with np.errstate(invalid="ignore", divide="ignore"):
            mean = np.where(counts > 0, (rss * serving).sum(axis=0) / np.maximum(counts, 1), -math.inf)
        return (counts >= k) & (mean >= config.rss_threshold_db)

    def shortfalls(selected: np.ndarray) -> Tuple[float, float]:
        serving = visible & selected[:, None]
        counts = serving.sum(axis=0)
        unmet = demand & ~satisfied(selected)
        mean = (rss * serving).sum(axis=0) / np.maximum(counts, 1)
        weak = np.where(counts > 0, np.maximum(config.rss_threshold_db - mean, 0.0), 0.0)
        return float(np.maximum(k - counts, 0)[unmet].sum()), float(weak[unmet].sum())

    def deficit(selected: np.ndarray) -> float:
        # missing links dominate; the dB shortfall only breaks ties below one link
        links, weak = shortfalls(selected)
        return links + weak / (1.0 + weak)

    def trial(selected: np.ndarray, measure: Callable[[np.ndarray], float]) -> np.ndarray:
        values = np.full(scenario.num_sites, -math.inf)
        for b in np.flatnonzero(~selected):
            grown = selected.copy()
            grown[b] = True
            values[b] = measure(grown)
        return values

    def score(selected, status):
        base = int(status[demand].sum())
        gain = trial(selected, lambda grown: satisfied(grown)[demand].sum() - base)
        return _per_cost(gain, scenario.site_costs)

    def progress(selected, status):
        base = deficit(selected)
        return trial(selected, lambda grown: base - deficit(grown))

    selected = _greedy(scenario, satisfied, score, progress, demand)
    if selected is None:
        unmet = np.flatnonzero(demand & ~satisfied(np.ones(scenario.num_sites, dtype=bool)))
        unmet = unmet if unmet.size else np.flatnonzero(demand)
        return _infeasible(Scheme.ASSGP, scenario, visible, link_table,
                           {int(g) + 1: REASON_WEAK_SIGNAL for g in unmet})
    return assemble_deployment(
        Scheme.ASSGP, SolveStatus.FEASIBLE, selected.astype(int), visible, link_table, scenario, scenario.radio,
    )


def solve_bgga(
    scenario: Scenario,
    link_table: Optional[LinkTable] = None,
    coverage: Optional[CoverageSolution] = None,
) -> Deployment:
    """Greedy deployment meeting the blockage-only outage constraint of every demand grid.

    Uses the load-constrained coverage indicators; each round adds the site
    that newly satisfies the most grids.
    """
    params = scenario.radio
    link_table = link_table or build_link_table(scenario, params)
    if coverage is None:
        coverage = max_coverage(link_table, solve_phi(params.gamma, params.n_rf), params)
    cover = np.asarray(coverage.cover, dtype=bool)
    demand = scenario.demand_mask
    zeta_log = np.log(scenario.outage_tolerance)

    terms = np.zeros(cover.shape)
    terms[cover] = log_outage_terms(link_table.p_blk[cover], params.gamma)

    def lhs(selected: np.ndarray) -> np.ndarray:
        return (terms * selected[:, None]).sum(axis=0)

    def satisfied(selected: np.ndarray) -> np.ndarray:
        return lhs(selected) <= zeta_log + OUTAGE_TOL

    reasons = {
        int(g) + 1: REASON_UNCOVERED if not cover[:, g].any() else REASON_DIVERSITY
        for g in np.flatnonzero(demand & ~satisfied(np.ones(scenario.num_sites, dtype=bool)))
    }
    if reasons:
        return _infeasible(Scheme.BGGA, scenario, cover, link_table, reasons)

    def score(selected, status):
        current = lhs(selected)
        unmet = demand & ~status
        newly = (current[None, :] + terms <= zeta_log[None, :] + OUTAGE_TOL) & unmet[None, :]
        return newly.sum(axis=1).astype(float)

    def progress(selected, status):
        unmet = demand & ~status
        return -(terms * unmet[None, :]).sum(axis=1)

    selected = _greedy(scenario, satisfied, score, progress, demand)
    if selected is None:
        return _infeasible(Scheme.BGGA, scenario, cover, link_table,
                           {int(g) + 1: REASON_DIVERSITY for g in np.flatnonzero(demand)})
    return assemble_deployment(
        Scheme.BGGA, SolveStatus.FEASIBLE, selected.astype(int), cover, link_table, scenario, params,
    )
