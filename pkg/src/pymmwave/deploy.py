"""Minimum-cost site selection under per-grid outage constraints.

The outage constraint of a grid is linearized with one binary indicator per
covering link: the indicator may be 1 only when the site is built and the
link's SINR lower bound clears the threshold, and the sum of the indicators'
log-outage terms must stay below log(zeta).
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .coverage import CoverageSolution, max_coverage
from .enums import Scheme, Sense, SolveStatus
from .exceptions import InfeasibleError, ModelDomainError
from .geometry import GridCell, Scenario
from .ilpcore import null_variables, solve_bb
from .linkmodel import LinkTable, RadioParams, build_link_table, solve_phi
from .modeling import STRICT_EPSILON_SCALE, IlpBuilder, IlpInstance
from .models import Deployment

logger = logging.getLogger(__name__)

OUTAGE_TOL = 1e-9

REASON_UNCOVERED = "uncovered"
REASON_DIVERSITY = "diversity-insufficient"
REASON_INTERFERENCE = "interference-limited"
REASON_JOINT = "jointly infeasible"


@dataclass(frozen=True)
class OutageModel:
    """Data of the linearized outage rows, one entry per covering link of a demand grid.

    Attributes:
        pairs: 0-based (site, grid) index pairs with a coverage indicator of 1.
        log_term: log(p_blk + gamma (1 - p_blk)) per pair, always negative.
        p_bar: desired-power lower bound per pair, watts.
        i_hat: B x G interference bounds evaluated at the coverage indicators.
        zeta_log: log of the outage tolerance per grid.
        big_m: 2 sigma^2 + sum of the grid's interference bounds, per pair.
        big_m_signal: p_bar / z per pair, the constant of the lower indicator row.
        noise: noise power, watts.
    """
    pairs: Tuple[Tuple[int, int], ...]
    log_term: np.ndarray
    p_bar: np.ndarray
    i_hat: np.ndarray
    zeta_log: np.ndarray
    big_m: np.ndarray
    big_m_signal: np.ndarray
    noise: float

    def pairs_of_grid(self, g: int) -> List[int]:
        return [k for k, (_, grid) in enumerate(self.pairs) if grid == g]

    def unreachable(self) -> np.ndarray:
        """Pairs whose link misses the SINR threshold even with its site built alone."""
        if not self.pairs:
            return np.zeros(0, dtype=int)
        sites, cells = np.array(self.pairs).T
        return np.flatnonzero(self.big_m_signal <= self.noise + self.i_hat[sites, cells])


def log_outage_terms(p_blk: np.ndarray, gamma: float) -> np.ndarray:
    """log(p_blk + gamma (1 - p_blk)); undefined for a zero argument."""
    argument = np.asarray(p_blk, dtype=float) + gamma * (1.0 - np.asarray(p_blk, dtype=float))
    if np.any(argument <= 0):
        raise ModelDomainError("log-outage term needs p_blk + gamma (1 - p_blk) > 0")
    return np.log(argument)


def build_outage_model(
    coverage: CoverageSolution,
    link_table: LinkTable,
    grids: Sequence[GridCell],
    params: RadioParams,
) -> OutageModel:
    tolerance = np.array([grid.outage_tolerance for grid in grids], dtype=float)
    demand = tolerance < 1
    cover = np.asarray(coverage.cover, dtype=bool)
    i_hat = link_table.i_hat(cover)

    pairs = tuple(
        (int(b), int(g))
        for g in np.flatnonzero(demand)
        for b in np.flatnonzero(cover[:, g])
    )
    sites = np.array([b for b, _ in pairs], dtype=int)
    cells = np.array([g for _, g in pairs], dtype=int)
    p_bar = link_table.p_bar[sites, cells]
    big_m = 2.0 * params.noise + i_hat.sum(axis=0)[cells]
    return OutageModel(
        pairs=pairs,
        log_term=log_outage_terms(link_table.p_blk[sites, cells], params.gamma),
        p_bar=p_bar,
        i_hat=i_hat,
        zeta_log=np.log(tolerance),
        big_m=big_m,
        big_m_signal=p_bar / params.z,
        noise=params.noise,
    )


def strict_row_epsilon(rhs: float, noise: float, big_m: float) -> float:
    """Slack of the normalized strict row; keeps the s = 0 branch feasible."""
    return min(STRICT_EPSILON_SCALE * max(abs(rhs), 1.0), noise / (2.0 * big_m))


def build_selection_ilp(
    coverage: CoverageSolution,
    link_table: LinkTable,
    grids: Sequence[GridCell],
    params: RadioParams,
    costs: Optional[Sequence[float]] = None,
) -> IlpInstance:
    """Site-selection ILP: variables ``y_1..y_B`` then one ``s`` per covering link of a demand grid.

    Raises:
        InfeasibleError: a demand grid has no covering candidate.
    """
    model = build_outage_model(coverage, link_table, grids, params)
    n_sites = link_table.num_sites
    demand = np.flatnonzero(model.zeta_log < 0)
    uncovered = [int(g) + 1 for g in demand if not coverage.cover[:, g].any()]
    if uncovered:
        raise InfeasibleError(uncovered, {g: REASON_UNCOVERED for g in uncovered})

    if costs is None:
        costs = [0.0] * n_sites
    builder = IlpBuilder()
    builder.add_vars([f"y_{b + 1}" for b in range(n_sites)], costs)
    s_vars = [builder.add_var(f"s_{b + 1}_{g + 1}") for b, g in model.pairs]

    for k, (b, g) in enumerate(model.pairs):
        s = s_vars[k]
        builder.subject_to({s: 1.0, b: -1.0}, Sense.LE, 0.0, name=f"link_{b + 1}_{g + 1}")

        interference = model.i_hat[:, g]
        signal = model.big_m_signal[k]

        # sigma^2 + sum_i y_i I_i >= y_b P/z - s P/z, scaled by P/z
        lower = {i: interference[i] / signal for i in np.flatnonzero(interference)}
        lower[b] = lower.get(b, 0.0) - 1.0
        lower[s] = 1.0
        builder.subject_to(lower, Sense.GE, -model.noise / signal, name=f"sinr_lo_{b + 1}_{g + 1}")

        # sigma^2 + sum_i y_i I_i < y_b P/z + (1 - s) M, scaled by M
        big_m = model.big_m[k]
        upper = {i: interference[i] / big_m for i in np.flatnonzero(interference)}
        upper[b] = upper.get(b, 0.0) - signal / big_m
        upper[s] = 1.0
        rhs = 1.0 - model.noise / big_m
        builder.subject_to(
            upper, Sense.LT, rhs, epsilon=strict_row_epsilon(rhs, model.noise, big_m),
            name=f"sinr_hi_{b + 1}_{g + 1}",
        )

    for g in demand:
        terms = {s_vars[k]: model.log_term[k] for k in model.pairs_of_grid(int(g))}
        builder.subject_to(terms, Sense.LE, float(model.zeta_log[g]), name=f"outage_{g + 1}")

    instance = builder.build()
    logger.info(
        "selection ILP: %d variables (%d sites, %d link indicators), %d rows",
        instance.n_vars, n_sites, len(s_vars), len(instance.constraints),
    )
    return instance


def sinr_lower_bounds(y: Sequence[int], cover: np.ndarray, link_table: LinkTable, params: RadioParams) -> np.ndarray:
    """B x G SINR lower bounds of the associated links, 0 elsewhere."""
    built = np.asarray(y, dtype=bool)
    cover = np.asarray(cover, dtype=bool)
    x = built[:, None] & cover
    interference = (built[:, None] * link_table.i_hat(cover)).sum(axis=0)
    return np.where(x, link_table.p_bar / (params.noise + interference)[None, :], 0.0)


def outage_lhs_all(y: Sequence[int], cover: np.ndarray, link_table: LinkTable, params: RadioParams) -> np.ndarray:
    """Left side of every grid's outage constraint under deployment ``y``.

    Links in SINR outage contribute log(1) = 0; every other associated link
    contributes its log-outage term.
    """
    cover = np.asarray(cover, dtype=bool)
    sinr = sinr_lower_bounds(y, cover, link_table, params)
    x = np.asarray(y, dtype=bool)[:, None] & cover
    passing = x & (sinr >= params.z)
    terms = np.zeros_like(sinr)
    if passing.any():
        terms[passing] = log_outage_terms(link_table.p_blk[passing], params.gamma)
    return terms.sum(axis=0)


def evaluate_outage_lhs(
    y: Sequence[int], coverage: CoverageSolution, link_table: LinkTable, grid_id: int, params: RadioParams
) -> float:
    """Left side of the outage constraint of grid ``grid_id`` under deployment ``y``."""
    built = np.asarray(y, dtype=int)
    if built.shape != (link_table.num_sites,) or np.any((built != 0) & (built != 1)):
        raise ModelDomainError(f"deployment must be a binary vector of length {link_table.num_sites}")
    return float(outage_lhs_all(built, coverage.cover, link_table, params)[grid_id - 1])


def assemble_deployment(
    scheme: Scheme,
    status: SolveStatus,
    y: Sequence[int],
    cover: np.ndarray,
    link_table: LinkTable,
    scenario: Scenario,
    params: RadioParams,
    infeasible: Optional[Dict[int, str]] = None,
    nodes_explored: int = 0,
) -> Deployment:
    """Reconstruct ``x = diag(y) cover`` and the per-grid diagnostics."""
    built = np.asarray(y, dtype=int)
    x = built.astype(bool)[:, None] & np.asarray(cover, dtype=bool)
    infeasible = infeasible or {}
    return Deployment(
        scheme=scheme,
        status=status,
        y=built,
        x=x,
        cost=float(np.dot(scenario.site_costs, built)),
        macro_diversity=x.sum(axis=0).astype(int),
        outage_lhs=outage_lhs_all(built, cover, link_table, params),
        sinr_lb=sinr_lower_bounds(built, cover, link_table, params),
        infeasible_grids=tuple(infeasible),
        infeasible_reasons=dict(infeasible),
        nodes_explored=nodes_explored,
    )


def _grid_instance(instance: IlpInstance, grid_id: int) -> IlpInstance:
    """Feasibility version of the selection ILP keeping only the rows of one grid."""
    # every row name ends with the id of the grid it belongs to
    keep = tuple(row for row in instance.constraints if row.name.rsplit("_", 1)[-1] == str(grid_id))
    return IlpInstance(instance.n_vars, np.zeros(instance.n_vars), keep, instance.fixed, instance.var_names)


def diagnose_infeasibility(
    instance: IlpInstance,
    coverage: CoverageSolution,
    link_table: LinkTable,
    scenario: Scenario,
    params: RadioParams,
) -> Dict[int, str]:
    """Grids whose requirement cannot be met, with a short reason each."""
    reasons: Dict[int, str] = {}
    cover = np.asarray(coverage.cover, dtype=bool)
    for g in np.flatnonzero(scenario.demand_mask):
        grid_id = int(g) + 1
        covering = np.flatnonzero(cover[:, g])
        if covering.size == 0:
            reasons[grid_id] = REASON_UNCOVERED
            continue
        best_case = log_outage_terms(link_table.p_blk[covering, g], params.gamma).sum()
        if best_case > math.log(scenario.grids[g].outage_tolerance) + OUTAGE_TOL:
            reasons[grid_id] = REASON_DIVERSITY
            continue
        if not solve_bb(_grid_instance(instance, grid_id)).is_optimal:
            reasons[grid_id] = REASON_INTERFERENCE
    if not reasons:
        reasons = {int(g) + 1: REASON_JOINT for g in np.flatnonzero(scenario.demand_mask)}
    return reasons


def solve_deployment(
    scenario: Scenario,
    link_table: Optional[LinkTable] = None,
    coverage: Optional[CoverageSolution] = None,
) -> Deployment:
    """Minimum-cost deployment meeting every grid's outage tolerance.

    Runs the link table, load ceiling, coverage and selection ILP stages;
    cached stage results may be passed in. Infeasibility is reported in the
    returned deployment, never raised.
    """
    params = scenario.radio
    link_table = link_table or build_link_table(scenario, params)
    if coverage is None:
        coverage = max_coverage(link_table, solve_phi(params.gamma, params.n_rf), params)
    empty = np.zeros(scenario.num_sites, dtype=int)

    try:
        instance = build_selection_ilp(coverage, link_table, scenario.grids, params, scenario.site_costs)
    except InfeasibleError as error:
        logger.warning("deployment infeasible: %s", error)
        return assemble_deployment(
            Scheme.PROPOSED, SolveStatus.INFEASIBLE, empty, coverage.cover, link_table, scenario, params,
            infeasible=error.reasons,
        )

    model = build_outage_model(coverage, link_table, scenario.grids, params)
    unreachable = scenario.num_sites + model.unreachable()
    if unreachable.size:
        logger.info("nulling %d link indicators that can never clear the SINR threshold", unreachable.size)
    solution = solve_bb(null_variables(instance, unreachable))
    if not solution.is_optimal:
        reasons = diagnose_infeasibility(instance, coverage, link_table, scenario, params)
        logger.warning("deployment infeasible: %d grids cannot be served", len(reasons))
        return assemble_deployment(
            Scheme.PROPOSED, SolveStatus.INFEASIBLE, empty, coverage.cover, link_table, scenario, params,
            infeasible=reasons, nodes_explored=solution.nodes_explored,
        )

    y = solution.assignment[: scenario.num_sites]
    deployment = assemble_deployment(
        Scheme.PROPOSED, SolveStatus.OPTIMAL, y, coverage.cover, link_table, scenario, params,
        nodes_explored=solution.nodes_explored,
    )
    logger.info("%s", deployment)
    return deployment
