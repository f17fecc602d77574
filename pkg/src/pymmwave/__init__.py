"""
Millimeter-wave base station deployment planning.

This package selects minimum-cost base station sites under per-grid UE
outage guarantees and evaluates deployments with a Monte Carlo simulator.
"""

from .benchmarks import BenchmarkConfig
from .cli import main
from .coverage import CoverageSolution
from .enums import Scheme, SizeClass, SolveStatus
from .evalmc import McConfig, McReport
from .exceptions import InfeasibleError, PlannerError, ScenarioError, SolverError
from .generator import generate_scenario
from .geometry import Building, CandidateSite, GridCell, Scenario
from .linkmodel import LinkTable, RadioParams
from .models import Deployment, RunManifest
from .parser import load_scenario, save_scenario
from .planner import DeploymentPlanner

__all__ = [
    "DeploymentPlanner",
    "Scenario",
    "Building",
    "CandidateSite",
    "GridCell",
    "RadioParams",
    "LinkTable",
    "CoverageSolution",
    "Deployment",
    "RunManifest",
    "BenchmarkConfig",
    "McConfig",
    "McReport",
    "Scheme",
    "SizeClass",
    "SolveStatus",
    "PlannerError",
    "ScenarioError",
    "SolverError",
    "InfeasibleError",
    "generate_scenario",
    "load_scenario",
    "save_scenario",
    "main",
]
