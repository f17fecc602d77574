"""Urban scenario geometry: buildings, candidate sites, grids and LoS queries."""

import logging
import math
from dataclasses import dataclass, replace
from functools import cached_property
from typing import TYPE_CHECKING, Optional, Sequence, Tuple

import numpy as np

from .exceptions import ScenarioError

if TYPE_CHECKING:
    from .linkmodel import RadioParams

logger = logging.getLogger(__name__)

# Intersections closer than this to the site end of a link are ignored, so a
# wall-mounted site is not occluded by its own wall.
SELF_OCCLUSION_SKIP = 0.01


@dataclass(frozen=True)
class Building:
    """An axis-aligned box standing on the ground plane."""
    x0: float
    y0: float
    x1: float
    y1: float
    height: float

    def __post_init__(self):
        if not (self.x1 > self.x0 and self.y1 > self.y0):
            raise ScenarioError(
                f"building footprint must have positive width and depth: "
                f"[{self.x0}, {self.x1}] x [{self.y0}, {self.y1}]"
            )
        if not self.height > 0:
            raise ScenarioError(f"building height must be positive, got {self.height}")

    @property
    def lower(self) -> np.ndarray:
        return np.array([self.x0, self.y0, 0.0])

    @property
    def upper(self) -> np.ndarray:
        return np.array([self.x1, self.y1, self.height])

    def contains(self, point: Sequence[float]) -> bool:
        """True when ``point`` lies strictly inside the building volume."""
        p = np.asarray(point, dtype=float)
        return bool(np.all(p > self.lower) and np.all(p < self.upper))

    def footprint_contains(self, x: float, y: float) -> bool:
        """True when (x, y) lies strictly inside the footprint."""
        return self.x0 < x < self.x1 and self.y0 < y < self.y1


@dataclass(frozen=True)
class CandidateSite:
    """A location where a base station may be installed."""
    id: int
    x: float
    y: float
    z: float
    cost: float
    host: Optional[int] = None  # 1-based index of the building the site is mounted on

    def __post_init__(self):
        if self.cost < 0:
            raise ScenarioError(f"site {self.id}: cost must be nonnegative, got {self.cost}")

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])


@dataclass(frozen=True)
class GridCell:
    """A square outdoor grid represented by its center point."""
    id: int
    x: float
    y: float
    z: float
    side: float
    ue_density: float = 0.0
    outage_tolerance: float = 1.0

    def __post_init__(self):
        if not self.side > 0:
            raise ScenarioError(f"grid {self.id}: side must be positive, got {self.side}")
        if self.ue_density < 0:
            raise ScenarioError(f"grid {self.id}: UE density must be nonnegative, got {self.ue_density}")
        if not 0 < self.outage_tolerance <= 1:
            raise ScenarioError(
                f"grid {self.id}: outage tolerance must lie in (0, 1], got {self.outage_tolerance}"
            )

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    @property
    def ue_mass(self) -> float:
        """Expected number of active UEs in the cell."""
        return self.ue_density * self.side * self.side

    @property
    def is_demand(self) -> bool:
        """Whether the grid carries an outage requirement."""
        return self.outage_tolerance < 1


@dataclass(frozen=True)
class Scenario:
    """Immutable world description."""
    buildings: Tuple[Building, ...]
    sites: Tuple[CandidateSite, ...]
    grids: Tuple[GridCell, ...]
    radio: "RadioParams"

    def __post_init__(self):
        object.__setattr__(self, "buildings", tuple(self.buildings))
        object.__setattr__(self, "sites", tuple(self.sites))
        object.__setattr__(self, "grids", tuple(self.grids))

        for expected, site in enumerate(self.sites, start=1):
            if site.id != expected:
                raise ScenarioError(f"site ids must be contiguous from 1; found {site.id} at position {expected}")
            if not site.z > self.radio.h_ue:
                raise ScenarioError(f"site {site.id}: height {site.z} must exceed UE height {self.radio.h_ue}")
            if site.host is not None and not 1 <= site.host <= len(self.buildings):
                raise ScenarioError(f"site {site.id}: unknown host building {site.host}")
            for index, building in enumerate(self.buildings, start=1):
                if building.contains(site.position):
                    raise ScenarioError(f"site {site.id} lies inside building {index}")

        for expected, grid in enumerate(self.grids, start=1):
            if grid.id != expected:
                raise ScenarioError(f"grid ids must be contiguous from 1; found {grid.id} at position {expected}")
            for index, building in enumerate(self.buildings, start=1):
                if building.contains(grid.position):
                    raise ScenarioError(f"grid {grid.id} center lies inside building {index}")

    @property
    def num_sites(self) -> int:
        return len(self.sites)

    @property
    def num_grids(self) -> int:
        return len(self.grids)

    def site(self, site_id: int) -> CandidateSite:
        if not 1 <= site_id <= len(self.sites):
            raise ScenarioError(f"unknown site id {site_id}")
        return self.sites[site_id - 1]

    def grid(self, grid_id: int) -> GridCell:
        if not 1 <= grid_id <= len(self.grids):
            raise ScenarioError(f"unknown grid id {grid_id}")
        return self.grids[grid_id - 1]

    @cached_property
    def site_positions(self) -> np.ndarray:
        return np.array([s.position for s in self.sites]).reshape(-1, 3)

    @cached_property
    def grid_positions(self) -> np.ndarray:
        return np.array([g.position for g in self.grids]).reshape(-1, 3)

    @cached_property
    def site_costs(self) -> np.ndarray:
        return np.array([s.cost for s in self.sites], dtype=float)

    @cached_property
    def ue_mass(self) -> np.ndarray:
        return np.array([g.ue_mass for g in self.grids], dtype=float)

    @cached_property
    def outage_tolerance(self) -> np.ndarray:
        return np.array([g.outage_tolerance for g in self.grids], dtype=float)

    @cached_property
    def demand_mask(self) -> np.ndarray:
        return self.outage_tolerance < 1

    def with_radio(self, radio: "RadioParams") -> "Scenario":
        return replace(self, radio=radio)


def _box_bounds(buildings: Sequence[Building]) -> Tuple[np.ndarray, np.ndarray]:
    lower = np.array([b.lower for b in buildings]).reshape(-1, 3)
    upper = np.array([b.upper for b in buildings]).reshape(-1, 3)
    return lower, upper


def occluded_mask(
    start: Sequence[float],
    ends: np.ndarray,
    buildings: Sequence[Building],
    skip: float = 0.0,
) -> np.ndarray:
    """Slab-method occlusion test of the segments ``start -> ends[k]``.

    A segment is occluded when it passes through the open interior of some
    box over a parameter interval of positive length. The first ``skip``
    meters from ``start`` are ignored.

    Returns:
        Boolean array, one entry per row of ``ends``.
    """
    start = np.asarray(start, dtype=float)
    ends = np.atleast_2d(np.asarray(ends, dtype=float))
    if not buildings or ends.shape[0] == 0:
        return np.zeros(ends.shape[0], dtype=bool)

    lower, upper = _box_bounds(buildings)
    direction = ends - start
    length = np.linalg.norm(direction, axis=1)
    t_start = np.where(length > 0, skip / np.where(length > 0, length, 1.0), 0.0)

    d = direction[:, None, :]
    parallel = d == 0
    inside_slab = (start > lower) & (start < upper)
    with np.errstate(divide="ignore", invalid="ignore"):
        ta = (lower[None, :, :] - start) / d
        tb = (upper[None, :, :] - start) / d
        t_low = np.where(parallel, np.where(inside_slab, -np.inf, np.inf), np.minimum(ta, tb))
        t_high = np.where(parallel, np.where(inside_slab, np.inf, -np.inf), np.maximum(ta, tb))
    enter = np.maximum(t_low.max(axis=2), t_start[:, None])
    leave = np.minimum(t_high.min(axis=2), 1.0)
    return np.any(enter < leave, axis=1)


def segment_clear(a: Sequence[float], b: Sequence[float], buildings: Sequence[Building], skip: float = 0.0) -> bool:
    """True when the segment a-b crosses no building interior."""
    return not bool(occluded_mask(a, np.asarray(b, dtype=float)[None, :], buildings, skip)[0])


def los_visible(scenario: Scenario, site_id: int, grid_id: int) -> bool:
    """Deterministic LoS between a candidate site and a grid center."""
    site = scenario.site(site_id)
    grid = scenario.grid(grid_id)
    return segment_clear(site.position, grid.position, scenario.buildings, skip=SELF_OCCLUSION_SKIP)


def link_distance(scenario: Scenario, site_id: int, grid_id: int) -> float:
    """Euclidean 3D distance between a site and a grid center, in meters."""
    site = scenario.site(site_id)
    grid = scenario.grid(grid_id)
    return math.dist(site.position, grid.position)


def visibility_matrix(scenario: Scenario) -> np.ndarray:
    """B x G boolean LoS matrix for every (site, grid) pair."""
    grid_positions = scenario.grid_positions
    rows = [
        ~occluded_mask(site.position, grid_positions, scenario.buildings, skip=SELF_OCCLUSION_SKIP)
        for site in scenario.sites
    ]
    return np.array(rows, dtype=bool).reshape(scenario.num_sites, scenario.num_grids)


def distance_matrix(scenario: Scenario) -> np.ndarray:
    """B x G matrix of link distances in meters."""
    delta = scenario.site_positions[:, None, :] - scenario.grid_positions[None, :, :]
    return np.linalg.norm(delta, axis=2)
