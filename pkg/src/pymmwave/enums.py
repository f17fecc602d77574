"""Enumerations for pymmwave."""

from enum import IntEnum, StrEnum


class Scheme(StrEnum):
    """Deployment planners."""
    PROPOSED = "proposed"
    MDP = "mdp"
    ASSGP = "assgp"
    BGGA = "bgga"


class Sense(StrEnum):
    """Relation of an ILP constraint row."""
    LE = "<="
    GE = ">="
    LT = "<"


class SolveStatus(StrEnum):
    """Outcome of an exact solve or a planner run."""
    OPTIMAL = "optimal"
    FEASIBLE = "feasible"  # heuristic planners: feasible, no optimality claim
    INFEASIBLE = "infeasible"


class SizeClass(StrEnum):
    """Synthetic scenario sizes."""
    TINY = "tiny"
    SMALL = "small"
    DEMO = "demo"


class ExitCode(IntEnum):
    """Process exit status of the command-line front end."""
    OK = 0
    INPUT_ERROR = 1
    INFEASIBLE = 2
