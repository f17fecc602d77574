"""JSON documents for scenarios and deployment plans."""

import json
import logging
from pathlib import Path
from typing import Any, Callable, Dict, List, Mapping, Optional, Tuple, Union

import numpy as np

from .enums import Scheme, SolveStatus
from .exceptions import ScenarioError
from .geometry import Building, CandidateSite, GridCell, Scenario
from .linkmodel import LinkTable, RadioParams, build_link_table
from .models import Deployment, RunManifest
from .values import Gain, GainUnit, Power, PowerUnit

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

RADIO_PLAIN_FIELDS = ("h_bs", "h_ue", "alpha", "beta", "r_max", "n_rf", "z", "gamma", "eps_bisect",
                      "g_main", "g_side", "p_tx", "noise")

# Document keys carrying a unit, mapped to the linear RadioParams field
RADIO_UNIT_FIELDS: Dict[str, Tuple[str, Callable[[float], float]]] = {
    "g_main_db": ("g_main", lambda v: Gain.from_value(v, GainUnit.DB).linear),
    "g_side_db": ("g_side", lambda v: Gain.from_value(v, GainUnit.DB).linear),
    "z_db": ("z", lambda v: Gain.from_value(v, GainUnit.DB).linear),
    "p_tx_dbm": ("p_tx", lambda v: Power.from_value(v, PowerUnit.DBM).watts),
    "noise_dbm": ("noise", lambda v: Power.from_value(v, PowerUnit.DBM).watts),
}


def parse_radio(block: Optional[Mapping[str, Any]]) -> RadioParams:
    """Build RadioParams from a ``radio`` block; unknown keys are rejected."""
    values: Dict[str, float] = {}
    for key, raw in dict(block or {}).items():
        if key in RADIO_UNIT_FIELDS:
            name, convert = RADIO_UNIT_FIELDS[key]
        elif key in RADIO_PLAIN_FIELDS:
            name, convert = key, float
        else:
            raise ScenarioError(f"unknown radio parameter {key!r}")
        if name in values:
            raise ScenarioError(f"radio parameter {name!r} given more than once")
        try:
            values[name] = convert(raw)
        except (TypeError, ValueError) as error:
            raise ScenarioError(f"radio parameter {key!r}: {error}") from None
    return RadioParams(**values)


def radio_to_document(params: RadioParams) -> Dict[str, float]:
    """Linear-valued ``radio`` block that parses back to ``params`` exactly."""
    return {name: getattr(params, name) for name in RADIO_PLAIN_FIELDS}


def _require(document: Mapping[str, Any], key: str, where: str) -> Any:
    if key not in document:
        raise ScenarioError(f"{where}: missing field {key!r}")
    return document[key]


def parse_building(item: Mapping[str, Any], index: int) -> Building:
    where = f"building {index}"
    return Building(
        x0=float(_require(item, "x0", where)),
        y0=float(_require(item, "y0", where)),
        x1=float(_require(item, "x1", where)),
        y1=float(_require(item, "y1", where)),
        height=float(_require(item, "h", where)),
    )


def parse_site(item: Mapping[str, Any], site_id: int, radio: RadioParams) -> CandidateSite:
    where = f"site {site_id}"
    host = item.get("host")
    return CandidateSite(
        id=site_id,
        x=float(_require(item, "x", where)),
        y=float(_require(item, "y", where)),
        z=float(item.get("z", radio.h_bs)),
        cost=float(_require(item, "cost", where)),
        host=None if host is None else int(host),
    )


def _region_values(regions: List[Mapping[str, Any]], x: float, y: float) -> Tuple[float, float]:
    density, tolerance = 0.0, 1.0
    for region in regions:
        if region["x0"] <= x <= region["x1"] and region["y0"] <= y <= region["y1"]:
            density = float(region.get("lambda", 0.0))
            tolerance = float(region.get("zeta", 1.0))
    return density, tolerance


def expand_grid_block(
    block: Mapping[str, Any],
    regions: List[Mapping[str, Any]],
    buildings: List[Building],
    radio: RadioParams,
) -> List[GridCell]:
    """Row-major grid cells of ``block``; cells centered inside a building footprint are skipped."""
    where = "grid"
    x0 = float(_require(block, "x0", where))
    y0 = float(_require(block, "y0", where))
    nx = int(_require(block, "nx", where))
    ny = int(_require(block, "ny", where))
    side = float(_require(block, "side", where))
    z = float(block.get("z", radio.h_ue))
    for region in regions:
        for key in ("x0", "y0", "x1", "y1"):
            _require(region, key, "region")

    grids = []
    for j in range(ny):
        for i in range(nx):
            x = x0 + (i + 0.5) * side
            y = y0 + (j + 0.5) * side
            if any(building.footprint_contains(x, y) for building in buildings):
                continue
            density, tolerance = _region_values(regions, x, y)
            grids.append(GridCell(len(grids) + 1, x, y, z, side, density, tolerance))
    return grids


def parse_scenario(document: Mapping[str, Any]) -> Scenario:
    """Build a Scenario from a parsed JSON document.

    Grids come either from a ``grid`` block with ``regions`` or from an
    explicit ``grids`` list.
    """
    if not isinstance(document, Mapping):
        raise ScenarioError("scenario document must be a JSON object")
    try:
        radio = parse_radio(document.get("radio"))
        buildings = [parse_building(item, k) for k, item in enumerate(document.get("buildings", []), start=1)]
        sites = [parse_site(item, k, radio) for k, item in enumerate(_require(document, "sites", "scenario"), start=1)]
        if "grids" in document:
            grids = [
                GridCell(
                    id=k,
                    x=float(_require(item, "x", f"grid {k}")),
                    y=float(_require(item, "y", f"grid {k}")),
                    z=float(item.get("z", radio.h_ue)),
                    side=float(_require(item, "side", f"grid {k}")),
                    ue_density=float(item.get("lambda", 0.0)),
                    outage_tolerance=float(item.get("zeta", 1.0)),
                )
                for k, item in enumerate(document["grids"], start=1)
            ]
        else:
            grids = expand_grid_block(
                _require(document, "grid", "scenario"), list(document.get("regions", [])), buildings, radio
            )
    except ScenarioError:
        raise
    except (TypeError, ValueError, AttributeError) as error:
        raise ScenarioError(f"malformed scenario document: {error}") from None

    scenario = Scenario(buildings=buildings, sites=sites, grids=grids, radio=radio)
    logger.info(
        "scenario: %d buildings, %d sites, %d grids (%d with demand)",
        len(buildings), scenario.num_sites, scenario.num_grids, int(scenario.demand_mask.sum()),
    )
    return scenario


def scenario_to_document(scenario: Scenario) -> Dict[str, Any]:
    """Explicit-grid document that parses back to an equal Scenario."""
    return {
        "buildings": [
            {"x0": b.x0, "y0": b.y0, "x1": b.x1, "y1": b.y1, "h": b.height} for b in scenario.buildings
        ],
        "sites": [
            {"x": s.x, "y": s.y, "z": s.z, "cost": s.cost, **({"host": s.host} if s.host is not None else {})}
            for s in scenario.sites
        ],
        "grids": [
            {"x": g.x, "y": g.y, "z": g.z, "side": g.side, "lambda": g.ue_density, "zeta": g.outage_tolerance}
            for g in scenario.grids
        ],
        "radio": radio_to_document(scenario.radio),
    }


def read_json(path: PathLike) -> Any:
    path = Path(path)
    try:
        with path.open(encoding="utf-8") as handle:
            return json.load(handle)
    except FileNotFoundError:
        raise ScenarioError(f"file not found: {path}") from None
    except json.JSONDecodeError as error:
        raise ScenarioError(f"{path}: invalid JSON ({error})") from None


def write_json(document: Any, path: PathLike) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as handle:
        json.dump(document, handle, indent=2, sort_keys=True)
        handle.write("\n")


def load_scenario(path: PathLike) -> Scenario:
    return parse_scenario(read_json(path))


def save_scenario(scenario: Scenario, path: PathLike) -> None:
    write_json(scenario_to_document(scenario), path)


def plan_to_document(
    deployment: Deployment, scenario: Scenario, manifest: Optional[RunManifest] = None
) -> Dict[str, Any]:
    """Plan document: selection, per-grid serving sites and diagnostics."""
    zeta_log = np.log(scenario.outage_tolerance)
    document: Dict[str, Any] = {
        "scheme": str(deployment.scheme),
        "status": str(deployment.status),
        "cost": deployment.cost,
        "nodes_explored": deployment.nodes_explored,
        "y": [int(v) for v in deployment.y],
        "sites": [
            {"id": site.id, "cost": site.cost, "deployed": bool(deployment.y[site.id - 1])}
            for site in scenario.sites
        ],
        "association": [
            {"grid": grid.id, "sites": deployment.covering_sites(grid.id)} for grid in scenario.grids
        ],
        "diagnostics": {
            "diversity_hist": {str(k): v for k, v in deployment.diversity_histogram().items()},
            "outage_slack": [
                float(zeta_log[g] - deployment.outage_lhs[g]) for g in range(scenario.num_grids)
            ],
            "infeasible_grids": list(deployment.infeasible_grids),
            "reasons": {str(g): reason for g, reason in deployment.infeasible_reasons.items()},
        },
    }
    if manifest is not None:
        document["manifest"] = manifest.to_document()
    return document


def parse_plan(
    document: Mapping[str, Any], scenario: Scenario, link_table: Optional[LinkTable] = None
) -> Deployment:
    """Rebuild a Deployment (and its diagnostics) from a plan document."""
    from .deploy import assemble_deployment

    try:
        scheme = Scheme(_require(document, "scheme", "plan"))
        status = SolveStatus(_require(document, "status", "plan"))
        y = np.array(_require(document, "y", "plan"), dtype=int)
        x = np.zeros((scenario.num_sites, scenario.num_grids), dtype=bool)
        for entry in _require(document, "association", "plan"):
            for site_id in entry["sites"]:
                x[int(site_id) - 1, int(entry["grid"]) - 1] = True
        reasons = {int(g): str(r) for g, r in document.get("diagnostics", {}).get("reasons", {}).items()}
    except ScenarioError:
        raise
    except (KeyError, TypeError, ValueError, IndexError) as error:
        raise ScenarioError(f"malformed plan document: {error}") from None

    if y.shape != (scenario.num_sites,):
        raise ScenarioError(f"plan selects over {y.size} sites, scenario has {scenario.num_sites}")
    if np.any(x & ~y.astype(bool)[:, None]):
        raise ScenarioError("plan associates grids with sites that are not deployed")
    link_table = link_table or build_link_table(scenario)
    return assemble_deployment(
        scheme, status, y, x, link_table, scenario, scenario.radio,
        infeasible=reasons, nodes_explored=int(document.get("nodes_explored", 0)),
    )
