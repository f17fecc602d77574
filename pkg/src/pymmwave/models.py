"""Result models for pymmwave planners."""

from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Tuple

import numpy as np

from .enums import Scheme, SolveStatus


@dataclass(frozen=True)
class Deployment:
    """A planner's site selection and the per-grid diagnostics of that choice.

    Attributes:
        scheme: planner that produced the deployment.
        status: optimal, feasible (heuristics) or infeasible.
        y: binary site vector, length B.
        x: B x G association matrix.
        cost: total deployment cost.
        macro_diversity: number of serving sites per grid.
        outage_lhs: left side of each grid's outage constraint.
        sinr_lb: B x G SINR lower bound of the associated links, 0 elsewhere.
        infeasible_grids: ids of grids whose requirements could not be met.
        infeasible_reasons: short reason per infeasible grid id.
        nodes_explored: branch-and-bound nodes, 0 for greedy planners.
    """
    scheme: Scheme
    status: SolveStatus
    y: np.ndarray
    x: np.ndarray
    cost: float
    macro_diversity: np.ndarray
    outage_lhs: np.ndarray
    sinr_lb: np.ndarray
    infeasible_grids: Tuple[int, ...] = ()
    infeasible_reasons: Mapping[int, str] = field(default_factory=dict)
    nodes_explored: int = 0

    def __post_init__(self):
        object.__setattr__(self, "y", np.asarray(self.y, dtype=int))
        object.__setattr__(self, "x", np.asarray(self.x, dtype=bool))
        for name in ("y", "x", "macro_diversity", "outage_lhs", "sinr_lb"):
            array = np.array(getattr(self, name))
            array.setflags(write=False)
            object.__setattr__(self, name, array)
        object.__setattr__(self, "infeasible_grids", tuple(sorted(int(g) for g in self.infeasible_grids)))

    @property
    def is_feasible(self) -> bool:
        return self.status != SolveStatus.INFEASIBLE

    @property
    def deployed_sites(self) -> List[int]:
        """1-based ids of the selected sites."""
        return [int(b) + 1 for b in np.flatnonzero(self.y)]

    def covering_sites(self, grid_id: int) -> List[int]:
        """1-based ids of the sites serving ``grid_id``."""
        return [int(b) + 1 for b in np.flatnonzero(self.x[:, grid_id - 1])]

    def diversity_histogram(self) -> Dict[int, int]:
        """Number of grids per macro-diversity order; the counts sum to G."""
        orders, counts = np.unique(self.macro_diversity, return_counts=True)
        return {int(order): int(count) for order, count in zip(orders, counts)}

    def __str__(self) -> str:
        return (
            f"{self.scheme} deployment ({self.status}): {len(self.deployed_sites)} sites, "
            f"cost {self.cost:.2f}"
        )


@dataclass(frozen=True)
class RunManifest:
    """Provenance written next to every artifact."""
    command: str
    scenario_path: Optional[str] = None
    seed: Optional[int] = None
    overrides: Mapping[str, object] = field(default_factory=dict)
    version: str = ""
    duration_s: Optional[float] = None

    def to_document(self) -> Dict[str, object]:
        document: Dict[str, object] = {
            "command": self.command,
            "scenario": self.scenario_path,
            "seed": self.seed,
            "overrides": dict(self.overrides),
            "version": self.version,
        }
        if self.duration_s is not None:
            document["duration_s"] = round(self.duration_s, 3)
        return document
