"""Synthetic Manhattan scenarios for tests and demos.

A size class fixes a rectangular lattice of building blocks separated by
streets. Each building carries a wall-mounted candidate site on every face
but one interior face, chosen so the neighbor across that street keeps its
facing wall. The area is split into five vertical strips of increasing UE
density and site cost, and a final audit guarantees every outdoor grid sees
at least one candidate within range.
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np

from .enums import SizeClass
from .exceptions import ScenarioError
from .geometry import Scenario, distance_matrix, visibility_matrix
from .linkmodel import RadioParams, build_link_table, solve_phi
from .parser import parse_scenario
from .values import Gain, Power

logger = logging.getLogger(__name__)

GRID_SIDE = 5.0
REGION_COUNT = 5
DENSITY_STEP = 1e-4
COST_STEP = 0.2
HEIGHT_MARGIN = (5.0, 30.0)
WALL_MARGIN = 1.0


@dataclass(frozen=True)
class Layout:
    """Block lattice of one size class."""
    blocks_x: int
    blocks_y: int
    block: float
    street: float

    @property
    def width(self) -> float:
        return self.blocks_x * self.block + (self.blocks_x + 1) * self.street

    @property
    def depth(self) -> float:
        return self.blocks_y * self.block + (self.blocks_y + 1) * self.street


LAYOUTS: Dict[SizeClass, Layout] = {
    SizeClass.TINY: Layout(blocks_x=2, blocks_y=1, block=10.0, street=5.0),
    SizeClass.SMALL: Layout(blocks_x=4, blocks_y=3, block=15.0, street=10.0),
    SizeClass.DEMO: Layout(blocks_x=7, blocks_y=5, block=20.0, street=10.0),
}


def radio_to_db_document(params: RadioParams) -> Dict[str, float]:
    """``radio`` block with gains in dB and powers in dBm."""
    return {
        "h_bs": params.h_bs,
        "h_ue": params.h_ue,
        "alpha": params.alpha,
        "beta": params.beta,
        "r_max": params.r_max,
        "n_rf": params.n_rf,
        "z": params.z,
        "gamma": params.gamma,
        "eps_bisect": params.eps_bisect,
        "g_main_db": Gain(params.g_main).db,
        "g_side_db": Gain(params.g_side).db,
        "p_tx_dbm": Power(params.p_tx).dbm,
        "noise_dbm": Power(params.noise).dbm,
    }


def region_of(x: float, width: float) -> int:
    """1-based vertical strip containing abscissa ``x``."""
    return min(int(x / width * REGION_COUNT), REGION_COUNT - 1) + 1


def site_cost(x: float, width: float) -> float:
    return round(COST_STEP * region_of(x, width), 10)


# Faces in order west, east, south, north
FACE_OFFSETS = ((-1, 0), (1, 0), (0, -1), (0, 1))
OPPOSITE_FACE = (1, 0, 3, 2)


def _dropped_face(
    i: int, j: int, layout: Layout, dropped: Dict[Tuple[int, int], Optional[int]], rng: np.random.Generator
) -> Optional[int]:
    """A face across the street from a neighbor that keeps its facing wall; None if there is none."""
    eligible = []
    for face, (di, dj) in enumerate(FACE_OFFSETS):
        ni, nj = i + di, j + dj
        if not (0 <= ni < layout.blocks_x and 0 <= nj < layout.blocks_y):
            continue
        if dropped.get((ni, nj)) != OPPOSITE_FACE[face]:
            eligible.append(face)
    if not eligible:
        return None
    return eligible[int(rng.integers(len(eligible)))]


def _wall_sites(
    footprint: Tuple[float, float, float, float],
    host: int,
    skip: Optional[int],
    width: float,
    h_bs: float,
    rng: np.random.Generator,
) -> List[Dict[str, Any]]:
    x0, y0, x1, y1 = footprint
    sites = []
    for face in range(4):
        if face == skip:
            continue
        if face < 2:
            x = x0 if face == 0 else x1
            y = float(rng.uniform(y0 + WALL_MARGIN, y1 - WALL_MARGIN))
        else:
            x = float(rng.uniform(x0 + WALL_MARGIN, x1 - WALL_MARGIN))
            y = y0 if face == 2 else y1
        sites.append({"x": x, "y": y, "z": h_bs, "cost": site_cost(x, width), "host": host})
    return sites


def uncovered_grids(scenario: Scenario) -> np.ndarray:
    """0-based indices of grids with no LoS candidate within ``r_max``."""
    if scenario.num_sites == 0:
        return np.arange(scenario.num_grids)
    reachable = visibility_matrix(scenario) & (distance_matrix(scenario) <= scenario.radio.r_max)
    return np.flatnonzero(~reachable.any(axis=0))


def audit_los(document: Dict[str, Any], max_rounds: int = 3) -> Scenario:
    """Parse ``document``, adding wall sites until every grid sees a candidate.

    Each uncovered grid gets a site at the closest point of the nearest
    building footprint; ``document["sites"]`` is extended in place.
    """
    width = document["grid"]["nx"] * document["grid"]["side"]
    h_bs = document["radio"]["h_bs"]
    scenario = parse_scenario(document)
    for _ in range(max_rounds):
        missing = uncovered_grids(scenario)
        if missing.size == 0:
            return scenario
        if not scenario.buildings:
            break
        added = set()
        for g in missing:
            grid = scenario.grids[g]
            distances = [
                (np.hypot(grid.x - np.clip(grid.x, b.x0, b.x1), grid.y - np.clip(grid.y, b.y0, b.y1)), k)
                for k, b in enumerate(scenario.buildings)
            ]
            _, k = min(distances)
            b = scenario.buildings[k]
            spot = (float(np.clip(grid.x, b.x0, b.x1)), float(np.clip(grid.y, b.y0, b.y1)))
            if spot in added:
                continue
            added.add(spot)
            document["sites"].append(
                {"x": spot[0], "y": spot[1], "z": h_bs, "cost": site_cost(spot[0], width), "host": k + 1}
            )
        logger.info("los audit: %d grids uncovered, added %d sites", missing.size, len(added))
        scenario = parse_scenario(document)
    raise ScenarioError(f"los audit left {uncovered_grids(scenario).size} grids without a candidate")


def contention_scale(scenario: Scenario, contention: float) -> float:
    """Density factor giving the busiest site ``contention`` times the load ceiling."""
    if not contention > 0:
        raise ScenarioError(f"contention must be positive, got {contention}")
    table = build_link_table(scenario)
    loads = np.where(table.feasible, table.ue_mass[None, :] * (1.0 - table.p_blk), 0.0).sum(axis=1)
    if loads.size == 0 or loads.max() <= 0:
        raise ScenarioError("contention needs a scenario with reachable UEs")
    phi = solve_phi(scenario.radio.gamma, scenario.radio.n_rf)
    return float(contention * phi / loads.max())


def generate_document(
    size: Union[SizeClass, str],
    seed: int,
    *,
    zeta: float = 0.05,
    density_scale: float = 1.0,
    contention: Optional[float] = None,
    radio: Optional[RadioParams] = None,
) -> Dict[str, Any]:
    """Scenario document of the given size class; equal seeds give equal documents.

    Args:
        size: tiny, small or demo.
        seed: seed of the building heights and site placement.
        zeta: outage tolerance of every outdoor grid.
        density_scale: factor applied to every region's UE density.
        contention: when set, densities are rescaled so the busiest site, serving
            every grid it can reach, carries this multiple of the load ceiling.
        radio: radio parameters; defaults when None.

    Returns:
        A grid-block document whose sites pass the LoS audit.
    """
    try:
        layout = LAYOUTS[SizeClass(size)]
    except ValueError:
        raise ScenarioError(f"unknown size class {size!r}; expected one of {[s.value for s in SizeClass]}") from None
    if seed < 0:
        raise ScenarioError(f"seed must be nonnegative, got {seed}")
    if not 0 < zeta <= 1:
        raise ScenarioError(f"zeta must lie in (0, 1], got {zeta}")
    if density_scale < 0:
        raise ScenarioError(f"density_scale must be nonnegative, got {density_scale}")

    radio = radio or RadioParams()
    rng = np.random.Generator(np.random.Philox(seed))
    width, depth = layout.width, layout.depth

    buildings, sites = [], []
    dropped: Dict[Tuple[int, int], Optional[int]] = {}
    for j in range(layout.blocks_y):
        for i in range(layout.blocks_x):
            x0 = layout.street + i * (layout.block + layout.street)
            y0 = layout.street + j * (layout.block + layout.street)
            footprint = (x0, y0, x0 + layout.block, y0 + layout.block)
            height = float(rng.uniform(radio.h_bs + HEIGHT_MARGIN[0], radio.h_bs + HEIGHT_MARGIN[1]))
            buildings.append(dict(zip(("x0", "y0", "x1", "y1"), footprint), h=height))
            dropped[(i, j)] = _dropped_face(i, j, layout, dropped, rng)
            sites.extend(_wall_sites(footprint, len(buildings), dropped[(i, j)], width, radio.h_bs, rng))

    strip = width / REGION_COUNT
    regions = [
        {
            "x0": (i - 1) * strip,
            "y0": 0.0,
            "x1": i * strip,
            "y1": depth,
            "lambda": (2 * i + 2) * DENSITY_STEP * density_scale,
            "zeta": zeta,
        }
        for i in range(1, REGION_COUNT + 1)
    ]
    document = {
        "buildings": buildings,
        "sites": sites,
        "grid": {
            "x0": 0.0,
            "y0": 0.0,
            "nx": int(round(width / GRID_SIDE)),
            "ny": int(round(depth / GRID_SIDE)),
            "side": GRID_SIDE,
            "z": radio.h_ue,
        },
        "regions": regions,
        "radio": radio_to_db_document(radio),
    }
    scenario = audit_los(document)
    if contention is not None:
        scale = contention_scale(scenario, contention)
        for region in document["regions"]:
            region["lambda"] *= scale
    logger.info("generated %s scenario (seed %d): %d buildings, %d sites", SizeClass(size), seed,
                len(buildings), len(document["sites"]))
    return document


def generate_scenario(size: Union[SizeClass, str], seed: int, **kwargs) -> Scenario:
    """Parsed scenario of :func:`generate_document`."""
    return parse_scenario(generate_document(size, seed, **kwargs))
