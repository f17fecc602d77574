"""Exact binary ILP solver: LP relaxation by dual simplex and branch-and-bound.

The LP keeps every variable between its box bounds implicitly: a nonbasic
variable sits at its lower or upper bound, and the dual simplex works on a
condensed tableau ``x_B = beta - T x_N`` holding one row per active
constraint. Rows join the tableau only once the current LP point violates
them, and one tableau serves every node of a search: changing the box only
moves nonbasic variables to the bound their reduced cost prefers, which
keeps the basis dual feasible.
"""

import heapq
import itertools
import logging
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np

from .enums import SolveStatus
from .exceptions import IlpInputError, SolverError
from .modeling import FEASIBILITY_TOL, Constraint, IlpInstance

logger = logging.getLogger(__name__)

PIVOT_TOL = 1e-11
RATIO_TOL = 1e-12
INTEGRALITY_TOL = 1e-6
BOUND_TOL = 1e-9
DEGENERATE_STREAK = 50
MAX_PIVOTS = 200_000
REFACTOR_INTERVAL = 1000


@dataclass(frozen=True)
class LpResult:
    """Optimal value and solution of an LP relaxation."""
    value: float
    solution: np.ndarray


@dataclass(frozen=True)
class IlpSolution:
    """Outcome of :func:`solve_bb`.

    ``objective_value`` is ``inf`` and ``assignment`` all-zero when the
    instance is infeasible.
    """
    assignment: np.ndarray
    objective_value: float
    status: SolveStatus
    nodes_explored: int
    root_bound: float = math.nan

    @property
    def is_optimal(self) -> bool:
        return self.status == SolveStatus.OPTIMAL


@dataclass(frozen=True)
class _Rows:
    """``A v <= b`` as row-sorted triplets."""
    row: np.ndarray
    col: np.ndarray
    value: np.ndarray
    rhs: np.ndarray
    n_vars: int

    @classmethod
    def of(cls, instance: IlpInstance) -> "_Rows":
        row, col, value, rhs = instance.sparse_le()
        return cls(row, col, value, rhs, instance.n_vars)

    @property
    def size(self) -> int:
        return self.rhs.size

    def activity(self, values: np.ndarray) -> np.ndarray:
        return np.bincount(self.row, weights=self.value * values[self.col], minlength=self.size)

    def dense(self, indices: np.ndarray) -> np.ndarray:
        """The rows ``indices`` (sorted) as a dense block."""
        block = np.zeros((indices.size, self.n_vars))
        member = np.isin(self.row, indices)
        block[np.searchsorted(indices, self.row[member]), self.col[member]] = self.value[member]
        return block


def _pivot(tableau: np.ndarray, beta: np.ndarray, cost: np.ndarray, r: int, j: int) -> None:
    """Exchange basic row ``r`` with nonbasic column ``j`` in place."""
    pivot = tableau[r, j]
    row = tableau[r] / pivot
    row[j] = 1.0 / pivot
    column = tableau[:, j].copy()
    column[r] = 0.0

    delta = cost[j]
    cost -= delta * row
    cost[j] = -delta / pivot

    beta[r] /= pivot
    touched = np.flatnonzero(column)
    if touched.size:
        tableau[touched] -= np.outer(column[touched], row)
        tableau[touched, j] = -column[touched] / pivot
        beta[touched] -= column[touched] * beta[r]
    tableau[r] = row


class _BoundedLp:
    """Dual simplex for ``min c . v`` s.t. ``A v <= b``, ``lo <= v <= hi``.

    Variables ``0 .. n-1`` are structural; ``n + k`` is the slack of the
    ``k``-th active row, bounded below by 0 only.
    """

    def __init__(self, cost: np.ndarray, rows: _Rows):
        n = cost.size
        self.cost = np.asarray(cost, dtype=float)
        self.rows = rows
        self.n = n
        self.active = np.zeros(0, dtype=np.intp)
        self.in_tableau = np.zeros(rows.size, dtype=bool)
        self.a_active = np.zeros((0, n))
        self.tableau = np.zeros((0, n))
        self.beta = np.zeros(0)
        self.reduced = self.cost.copy()
        self.basic = np.zeros(0, dtype=np.intp)
        self.nonbasic = np.arange(n)
        self.at_upper = np.zeros(n, dtype=bool)
        self.lo = np.zeros(n)
        self.hi = np.ones(n)
        self.pivots = 0
        self._since_refactor = 0

    def solve(self, lo: np.ndarray, hi: np.ndarray) -> Optional[Tuple[float, np.ndarray]]:
        """Optimum over the box ``[lo, hi]``; None when infeasible."""
        self.lo, self.hi = lo.astype(float), hi.astype(float)
        self._place_nonbasic()
        while True:
            if not self._optimize():
                return None
            values = self._point()
            pending = np.flatnonzero((self.rows.activity(values) > self.rows.rhs + FEASIBILITY_TOL) & ~self.in_tableau)
            if pending.size == 0:
                if not np.all(np.isfinite(values)):
                    raise SolverError("LP solution is not finite")
                return float(self.cost @ values), values
            self._add_rows(pending)

    def _place_nonbasic(self) -> None:
        structural = self.nonbasic < self.n
        index = self.nonbasic[structural]
        free = self.hi[index] - self.lo[index] > BOUND_TOL
        upper = np.zeros(self.nonbasic.size, dtype=bool)
        upper[structural] = free & (self.reduced[structural] < 0)
        self.at_upper = upper

    def _nonbasic_values(self) -> np.ndarray:
        values = np.zeros(self.nonbasic.size)
        structural = self.nonbasic < self.n
        index = self.nonbasic[structural]
        values[structural] = np.where(self.at_upper[structural], self.hi[index], self.lo[index])
        return values

    def _basic_bounds(self) -> Tuple[np.ndarray, np.ndarray]:
        slacks = self.active.size
        lower = np.concatenate((self.lo, np.zeros(slacks)))[self.basic]
        upper = np.concatenate((self.hi, np.full(slacks, np.inf)))[self.basic]
        return lower, upper

    def _columns(self, ids: np.ndarray) -> np.ndarray:
        """Columns of ``[A_active | I]`` for the variable ids ``ids``."""
        block = np.zeros((self.active.size, ids.size))
        structural = ids < self.n
        block[:, structural] = self.a_active[:, ids[structural]]
        slack = np.flatnonzero(~structural)
        block[ids[slack] - self.n, slack] = 1.0
        return block

    def _point(self) -> np.ndarray:
        x_n = self._nonbasic_values()
        x_b = self.beta - self.tableau @ x_n
        values = np.zeros(self.n)
        structural = self.nonbasic < self.n
        values[self.nonbasic[structural]] = x_n[structural]
        structural = self.basic < self.n
        values[self.basic[structural]] = x_b[structural]
        return np.clip(values, self.lo, self.hi)

    def _optimize(self) -> bool:
        """Restore primal feasibility of the active rows; False when infeasible."""
        bland = False
        streak = 0
        start = self.pivots
        while True:
            if self.pivots - start >= MAX_PIVOTS:
                raise SolverError(f"dual simplex did not terminate within {MAX_PIVOTS} pivots")
            if self._since_refactor >= REFACTOR_INTERVAL:
                self._refactor()

            x_b = self.beta - self.tableau @ self._nonbasic_values()
            lower, upper = self._basic_bounds()
            below, above = lower - x_b, x_b - upper
            violation = np.maximum(below, above)
            infeasible = np.flatnonzero(violation > FEASIBILITY_TOL)
            if infeasible.size == 0:
                return True
            if bland:
                r = int(infeasible[np.argmin(self.basic[infeasible])])
            else:
                r = int(infeasible[np.argmax(violation[infeasible])])
            raise_value = below[r] > 0

            row = self.tableau[r]
            span = np.concatenate((self.hi - self.lo, np.full(self.active.size, np.inf)))
            movable = span[self.nonbasic] > BOUND_TOL
            sign = -1.0 if raise_value else 1.0
            # entering moves away from its bound in the direction that fixes row r
            eligible = movable & np.where(self.at_upper, sign * row < -PIVOT_TOL, sign * row > PIVOT_TOL)
            candidates = np.flatnonzero(eligible)
            if candidates.size == 0:
                return False
            ratios = np.abs(self.reduced[candidates]) / np.abs(row[candidates])
            best = ratios.min()
            ties = candidates[ratios <= best + RATIO_TOL]
            if bland:
                j = int(ties[np.argmin(self.nonbasic[ties])])
            else:
                j = int(ties[np.argmax(np.abs(row[ties]))])

            streak = streak + 1 if best <= RATIO_TOL else 0
            if not bland and streak > DEGENERATE_STREAK:
                logger.debug("dual simplex: degenerate streak, switching to Bland's rule")
                bland = True

            _pivot(self.tableau, self.beta, self.reduced, r, j)
            self.nonbasic[j], self.basic[r] = self.basic[r], self.nonbasic[j]
            self.at_upper[j] = not raise_value
            self.pivots += 1
            self._since_refactor += 1

    def _add_rows(self, indices: np.ndarray) -> None:
        """Bring rows into the tableau with their slacks basic."""
        block = self.rows.dense(indices)
        basic_structural = np.flatnonzero(self.basic < self.n)
        on_basic = block[:, self.basic[basic_structural]]
        nonbasic_structural = self.nonbasic < self.n
        on_nonbasic = np.zeros((indices.size, self.n))
        on_nonbasic[:, nonbasic_structural] = block[:, self.nonbasic[nonbasic_structural]]

        first = self.active.size
        self.tableau = np.vstack((self.tableau, on_nonbasic - on_basic @ self.tableau[basic_structural]))
        self.beta = np.concatenate((self.beta, self.rows.rhs[indices] - on_basic @ self.beta[basic_structural]))
        self.basic = np.concatenate((self.basic, self.n + first + np.arange(indices.size)))
        self.active = np.concatenate((self.active, indices))
        self.a_active = np.vstack((self.a_active, block))
        self.in_tableau[indices] = True
        logger.debug("LP: %d rows active of %d", self.active.size, self.rows.size)

    def _refactor(self) -> None:
        """Recompute the tableau from the current basis to shed round-off."""
        m = self.active.size
        right = np.column_stack((self._columns(self.nonbasic), self.rows.rhs[self.active]))
        try:
            solved = np.linalg.solve(self._columns(self.basic), right)
        except np.linalg.LinAlgError as error:
            raise SolverError("basis became singular") from error
        self.tableau = solved[:, :-1]
        self.beta = solved[:, -1]
        extended = np.concatenate((self.cost, np.zeros(m)))
        self.reduced = extended[self.nonbasic] - extended[self.basic] @ self.tableau
        self._since_refactor = 0
        self._place_nonbasic()


def _initial_bounds(instance: IlpInstance, bounds=None) -> Tuple[np.ndarray, np.ndarray]:
    if bounds is None:
        lo, hi = np.zeros(instance.n_vars), np.ones(instance.n_vars)
    else:
        box = np.asarray(bounds, dtype=float).reshape(-1, 2)
        if box.shape[0] != instance.n_vars:
            raise IlpInputError(f"{box.shape[0]} bounds for {instance.n_vars} variables")
        lo, hi = box[:, 0].copy(), box[:, 1].copy()
        if np.any(lo < 0) or np.any(hi > 1) or np.any(lo > hi):
            raise IlpInputError("variable bounds must satisfy 0 <= lo <= hi <= 1")
    for var, value in instance.fixed.items():
        lo[var] = max(lo[var], value)
        hi[var] = min(hi[var], value)
    return lo, hi


def lp_relax(instance: IlpInstance, bounds: Optional[Sequence[Tuple[float, float]]] = None) -> Optional[LpResult]:
    """LP relaxation of ``instance`` over the per-variable boxes ``bounds``.

    Returns None when the relaxation is infeasible.
    """
    lo, hi = _initial_bounds(instance, bounds)
    if np.any(lo > hi):
        return None
    result = _BoundedLp(instance.objective, _Rows.of(instance)).solve(lo, hi)
    if result is None:
        return None
    return LpResult(value=result[0], solution=result[1])


def _propagate(rows: _Rows, lo: np.ndarray, hi: np.ndarray) -> bool:
    """Tighten binary bounds implied by the ``<=`` rows; False on conflict."""
    positive = rows.value > 0
    for _ in range(lo.size + 1):
        low = np.where(positive, rows.value * lo[rows.col], rows.value * hi[rows.col])
        slack = rows.rhs - np.bincount(rows.row, weights=low, minlength=rows.size)
        if np.any(slack < -FEASIBILITY_TOL):
            return False
        forced = np.abs(rows.value) * (hi - lo)[rows.col] > slack[rows.row] + FEASIBILITY_TOL
        if not forced.any():
            return True
        down = np.zeros(lo.size, dtype=bool)
        down[rows.col[forced & positive]] = True
        up = np.zeros(lo.size, dtype=bool)
        up[rows.col[forced & ~positive]] = True
        if np.any(down & up):
            return False
        hi[down] = lo[down]
        lo[up] = hi[up]
    return True


def _branch_variable(values: np.ndarray) -> Optional[int]:
    """Most fractional variable, lowest index on ties."""
    fractional = np.flatnonzero(np.abs(values - np.round(values)) > INTEGRALITY_TOL)
    if fractional.size:
        return int(fractional[np.argmin(np.abs(values[fractional] - 0.5))])
    return None


def solve_bb(instance: IlpInstance) -> IlpSolution:
    """Solve ``instance`` to proven optimality by branch-and-bound.

    Best-bound search with depth-first plunging; the most fractional
    variable is branched on (lowest index on ties) and its value-1 child is
    explored first. Every node warm-starts from the basis the previous node
    left behind. ``nodes_explored`` counts LP relaxations solved.
    """
    rows = _Rows.of(instance)
    lp = _BoundedLp(instance.objective, rows)
    lo, hi = _initial_bounds(instance)
    if np.any(lo > hi):
        raise IlpInputError("fixed assignment is inconsistent")

    best_value = math.inf
    best: Optional[np.ndarray] = None
    root_bound = math.nan
    nodes = 0
    order = itertools.count()
    heap = []
    current: Optional[Tuple[np.ndarray, np.ndarray]] = (lo, hi)

    while True:
        if current is None:
            if not heap:
                break
            bound, _, node_lo, node_hi = heapq.heappop(heap)
            if bound >= best_value - BOUND_TOL:
                break
            current = (node_lo, node_hi)
        node_lo, node_hi = current
        current = None

        if not _propagate(rows, node_lo, node_hi):
            continue
        result = lp.solve(node_lo, node_hi)
        nodes += 1
        if nodes == 1:
            root_bound = math.inf if result is None else result[0]
        if result is None:
            continue
        value, values = result
        if value >= best_value - BOUND_TOL:
            continue

        var = _branch_variable(values)
        if var is None:
            candidate = np.round(values).astype(int)
            if instance.is_feasible(candidate):
                objective = instance.objective_value(candidate)
                if objective < best_value:
                    best_value, best = objective, candidate
                    logger.debug("incumbent %.6g after %d nodes", best_value, nodes)
                continue
            # integral LP point that fails the original rows: split on a free variable
            free = np.flatnonzero(node_hi - node_lo > 0.5)
            if free.size == 0:
                continue
            var = int(free[0])

        down_lo, down_hi = node_lo.copy(), node_hi.copy()
        down_hi[var] = 0.0
        up_lo, up_hi = node_lo.copy(), node_hi.copy()
        up_lo[var] = 1.0
        heapq.heappush(heap, (value, next(order), down_lo, down_hi))
        current = (up_lo, up_hi)

    if nodes == 0:
        root_bound = math.inf
    logger.debug("branch-and-bound: %d pivots, %d of %d rows active", lp.pivots, lp.active.size, rows.size)
    if best is None:
        logger.info("branch-and-bound: infeasible after %d nodes", nodes)
        return IlpSolution(
            assignment=np.zeros(instance.n_vars, dtype=int),
            objective_value=math.inf,
            status=SolveStatus.INFEASIBLE,
            nodes_explored=nodes,
            root_bound=root_bound,
        )
    logger.info(
        "branch-and-bound: optimum %.6g (root bound %.6g) after %d nodes",
        best_value, root_bound, nodes,
    )
    return IlpSolution(
        assignment=best,
        objective_value=best_value,
        status=SolveStatus.OPTIMAL,
        nodes_explored=nodes,
        root_bound=root_bound,
    )


def _never_binds(coeffs, rhs: float, fixed) -> bool:
    """True when ``coeffs . v <= rhs`` holds for every binary completion of ``fixed``."""
    worst = sum(value * fixed[var] if var in fixed else max(value, 0.0) for var, value in coeffs.items())
    return worst <= rhs + FEASIBILITY_TOL


def null_variables(instance: IlpInstance, zero_set: Iterable[int]) -> IlpInstance:
    """Fix the variables in ``zero_set`` to 0 and drop them from every row.

    Rows that lose a variable and can no longer be violated are removed.
    Variable indices are kept, so assignments of both instances line up.
    """
    zeros = set(int(var) for var in zero_set)
    if not zeros:
        return instance
    for var in zeros:
        if not 0 <= var < instance.n_vars:
            raise IlpInputError(f"cannot null unknown variable {var}")
        if instance.fixed.get(var) == 1:
            raise IlpInputError(f"variable {instance.name_of(var)} is fixed to 1")

    fixed = dict(instance.fixed)
    fixed.update({var: 0 for var in zeros})
    constraints = []
    for row in instance.constraints:
        if zeros.isdisjoint(row.coeffs):
            constraints.append(row)
            continue
        coeffs = {var: value for var, value in row.coeffs.items() if var not in zeros}
        reduced = Constraint(coeffs, row.sense, row.rhs, row.epsilon or None, row.name)
        if _never_binds(*reduced.as_le(), fixed):
            continue
        constraints.append(reduced)

    return IlpInstance(
        n_vars=instance.n_vars,
        objective=instance.objective,
        constraints=tuple(constraints),
        fixed=fixed,
        var_names=instance.var_names,
    )
