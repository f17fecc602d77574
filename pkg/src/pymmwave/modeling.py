"""Binary ILP modeling layer: constraints, instances and a fluent builder."""

import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .enums import Sense
from .exceptions import IlpInputError

FEASIBILITY_TOL = 1e-9
STRICT_EPSILON_SCALE = 1e-6


def default_strict_epsilon(rhs: float) -> float:
    """Slack that turns ``a.x < rhs`` into ``a.x <= rhs - eps``."""
    return STRICT_EPSILON_SCALE * max(abs(rhs), 1.0)


@dataclass(frozen=True, eq=False)
class Constraint:
    """A sparse linear row ``sum(coeffs[j] * v_j) <sense> rhs``.

    Strict rows carry the slack ``epsilon`` they are enforced with.
    """
    coeffs: Mapping[int, float]
    sense: Sense
    rhs: float
    epsilon: Optional[float] = None
    name: str = ""

    def __post_init__(self):
        try:
            sense = Sense(self.sense)
        except ValueError:
            raise IlpInputError(f"unknown constraint sense {self.sense!r}") from None
        coeffs: Dict[int, float] = {}
        for var, value in self.coeffs.items():
            if isinstance(var, bool) or int(var) != var:
                raise IlpInputError(f"{self.name or 'row'}: variable index {var!r} is not an integer")
            value = float(value)
            if not math.isfinite(value):
                raise IlpInputError(f"{self.name or 'row'}: non-finite coefficient for variable {var}")
            if value != 0.0:
                coeffs[int(var)] = value
        rhs = float(self.rhs)
        if not math.isfinite(rhs):
            raise IlpInputError(f"{self.name or 'row'}: non-finite right-hand side")

        epsilon = 0.0
        if sense == Sense.LT:
            epsilon = default_strict_epsilon(rhs) if self.epsilon is None else float(self.epsilon)
            if not epsilon > 0:
                raise IlpInputError(f"{self.name or 'row'}: strict rows need a positive epsilon")
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "sense", sense)
        object.__setattr__(self, "rhs", rhs)
        object.__setattr__(self, "epsilon", epsilon)

    def activity(self, assignment: Sequence[float]) -> float:
        return float(sum(value * assignment[var] for var, value in self.coeffs.items()))

    def as_le(self) -> Tuple[Dict[int, float], float]:
        """The row rewritten as ``coeffs . v <= rhs``."""
        if self.sense == Sense.GE:
            return {var: -value for var, value in self.coeffs.items()}, -self.rhs
        if self.sense == Sense.LT:
            return dict(self.coeffs), self.rhs - self.epsilon
        return dict(self.coeffs), self.rhs

    def satisfied(self, assignment: Sequence[float], tol: float = FEASIBILITY_TOL) -> bool:
        coeffs, rhs = self.as_le()
        return sum(value * assignment[var] for var, value in coeffs.items()) <= rhs + tol


@dataclass(frozen=True, eq=False)
class IlpInstance:
    """``min objective . v`` over binary ``v`` subject to ``constraints``.

    Attributes:
        n_vars: number of binary variables.
        objective: cost vector of length ``n_vars``.
        constraints: linear rows over variable indices ``0 .. n_vars - 1``.
        fixed: partial assignment ``var -> 0 | 1``.
        var_names: optional labels, one per variable.
    """
    n_vars: int
    objective: np.ndarray
    constraints: Tuple[Constraint, ...]
    fixed: Mapping[int, int] = field(default_factory=dict)
    var_names: Tuple[str, ...] = ()

    def __post_init__(self):
        if self.n_vars < 0:
            raise IlpInputError(f"negative variable count {self.n_vars}")
        objective = np.array(self.objective, dtype=float).reshape(-1)
        if objective.size != self.n_vars:
            raise IlpInputError(f"objective has {objective.size} entries for {self.n_vars} variables")
        if not np.all(np.isfinite(objective)):
            raise IlpInputError("objective contains non-finite costs")
        objective.setflags(write=False)

        constraints = tuple(self.constraints)
        for row in constraints:
            for var in row.coeffs:
                if not 0 <= var < self.n_vars:
                    raise IlpInputError(f"{row.name or 'row'} references unknown variable {var}")

        fixed = {}
        for var, value in dict(self.fixed).items():
            if not 0 <= int(var) < self.n_vars:
                raise IlpInputError(f"cannot fix unknown variable {var}")
            if value not in (0, 1):
                raise IlpInputError(f"variable {var} fixed to non-binary value {value}")
            fixed[int(var)] = int(value)

        names = tuple(self.var_names)
        if names and len(names) != self.n_vars:
            raise IlpInputError(f"{len(names)} variable names for {self.n_vars} variables")

        object.__setattr__(self, "objective", objective)
        object.__setattr__(self, "constraints", constraints)
        object.__setattr__(self, "fixed", fixed)
        object.__setattr__(self, "var_names", names)

    def name_of(self, var: int) -> str:
        return self.var_names[var] if self.var_names else f"v{var}"

    def objective_value(self, assignment: Sequence[float]) -> float:
        return float(np.dot(self.objective, np.asarray(assignment, dtype=float)))

    def violations(self, assignment: Sequence[float], tol: float = FEASIBILITY_TOL) -> List[str]:
        """Names of the rows (and fixings) ``assignment`` does not satisfy."""
        values = np.asarray(assignment, dtype=float)
        if values.shape != (self.n_vars,):
            raise IlpInputError(f"assignment must have length {self.n_vars}, got {values.shape}")
        failed = [
            f"fixed {self.name_of(var)}={value}"
            for var, value in self.fixed.items()
            if abs(values[var] - value) > tol
        ]
        failed += [
            row.name or f"row {index}"
            for index, row in enumerate(self.constraints)
            if not row.satisfied(values, tol)
        ]
        return failed

    def is_feasible(self, assignment: Sequence[float], tol: float = FEASIBILITY_TOL) -> bool:
        values = np.asarray(assignment, dtype=float)
        binary = np.all((values == 0) | (values == 1))
        return bool(binary) and not self.violations(values, tol)

    def sparse_le(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """All rows as ``(row, col, value)`` triplets of ``A v <= b``, plus ``b``."""
        rows: List[int] = []
        cols: List[int] = []
        values: List[float] = []
        b = np.zeros(len(self.constraints))
        for index, row in enumerate(self.constraints):
            coeffs, rhs = row.as_le()
            rows.extend([index] * len(coeffs))
            cols.extend(coeffs)
            values.extend(coeffs.values())
            b[index] = rhs
        return (
            np.array(rows, dtype=np.intp),
            np.array(cols, dtype=np.intp),
            np.array(values, dtype=float),
            b,
        )


class IlpBuilder:
    """Fluent builder for binary ILP instances."""

    def __init__(self):
        self._names: List[str] = []
        self._costs: List[float] = []
        self._constraints: List[Constraint] = []
        self._fixed: Dict[int, int] = {}

    @property
    def n_vars(self) -> int:
        return len(self._names)

    def add_var(self, name: str, cost: float = 0.0) -> int:
        """Declare a binary variable and return its index."""
        self._names.append(name)
        self._costs.append(float(cost))
        return len(self._names) - 1

    def add_vars(self, names: Iterable[str], costs: Optional[Iterable[float]] = None) -> List[int]:
        names = list(names)
        costs = [0.0] * len(names) if costs is None else list(costs)
        if len(costs) != len(names):
            raise IlpInputError(f"{len(costs)} costs for {len(names)} variables")
        return [self.add_var(name, cost) for name, cost in zip(names, costs)]

    def minimize(self, costs: Union[Mapping[int, float], Sequence[float]]) -> "IlpBuilder":
        """Set objective coefficients, by index mapping or as a full vector."""
        items = costs.items() if isinstance(costs, Mapping) else enumerate(costs)
        for var, cost in items:
            if not 0 <= var < self.n_vars:
                raise IlpInputError(f"objective references unknown variable {var}")
            self._costs[var] = float(cost)
        return self

    def subject_to(
        self,
        coeffs: Mapping[int, float],
        sense: Union[Sense, str],
        rhs: float,
        epsilon: Optional[float] = None,
        name: str = "",
    ) -> "IlpBuilder":
        self._constraints.append(Constraint(coeffs, Sense(sense), rhs, epsilon, name))
        return self

    def fix(self, var: int, value: int) -> "IlpBuilder":
        self._fixed[var] = value
        return self

    def build(self) -> IlpInstance:
        return IlpInstance(
            n_vars=self.n_vars,
            objective=np.array(self._costs),
            constraints=tuple(self._constraints),
            fixed=dict(self._fixed),
            var_names=tuple(self._names),
        )


def _format_terms(coeffs: Mapping[int, float], instance: IlpInstance) -> str:
    if not coeffs:
        return "0"
    parts = []
    for var in sorted(coeffs):
        value = coeffs[var]
        sign = "-" if value < 0 else "+"
        parts.append(f"{sign} {abs(value):.12g} {instance.name_of(var)}")
    text = " ".join(parts)
    return text[2:] if text.startswith("+ ") else text


def to_lp_text(instance: IlpInstance) -> str:
    """Render ``instance`` in LP text format for inspection with external solvers.

    Strict rows are written with their epsilon already applied.
    """
    objective = {var: cost for var, cost in enumerate(instance.objective) if cost != 0}
    lines = ["minimize", f" obj: {_format_terms(objective, instance)}", "subject to"]
    for index, row in enumerate(instance.constraints):
        label = row.name or f"c{index + 1}"
        if row.sense == Sense.LT:
            lines.append(f" {label}: {_format_terms(row.coeffs, instance)} <= {row.rhs - row.epsilon:.12g}")
        else:
            lines.append(f" {label}: {_format_terms(row.coeffs, instance)} {row.sense} {row.rhs:.12g}")
    lines.append("bounds")
    for var in range(instance.n_vars):
        if var in instance.fixed:
            lines.append(f" {instance.name_of(var)} = {instance.fixed[var]}")
        else:
            lines.append(f" 0 <= {instance.name_of(var)} <= 1")
    lines.append("binary")
    lines.extend(f" {instance.name_of(var)}" for var in range(instance.n_vars))
    lines.append("end")
    return "\n".join(lines) + "\n"
