"""Exception hierarchy for pymmwave."""

from typing import Dict, Iterable, Optional


class PlannerError(Exception):
    """Base class for every error raised by pymmwave."""


class ScenarioError(PlannerError, ValueError):
    """Invalid scenario geometry, unknown ids or a malformed document."""


class ModelDomainError(PlannerError, ValueError):
    """A closed-form link statistic was evaluated outside its domain."""


class IlpInputError(PlannerError, ValueError):
    """An ILP instance references unknown variables or carries bad data."""


class SolverError(PlannerError, RuntimeError):
    """Internal fault of the LP/ILP engine."""


class InfeasibleError(PlannerError):
    """No deployment can satisfy the per-grid requirements.

    Attributes:
        grid_ids: 1-based ids of the grids whose constraints cannot be met.
        reasons: optional short reason per grid id.
    """

    def __init__(self, grid_ids: Iterable[int], reasons: Optional[Dict[int, str]] = None):
        self.grid_ids = sorted(set(int(g) for g in grid_ids))
        self.reasons = dict(reasons or {})
        shown = ", ".join(str(g) for g in self.grid_ids[:10])
        more = "" if len(self.grid_ids) <= 10 else f" (+{len(self.grid_ids) - 10} more)"
        super().__init__(f"infeasible grids: {shown}{more}")
