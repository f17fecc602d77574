"""Command-line front end.

Subcommands: ``gen`` writes a synthetic scenario, ``coverage``, ``optimize``
and ``benchmark`` plan over a scenario file, ``evaluate`` runs the Monte
Carlo evaluation of a saved plan. Exit status is 0 on success, 1 on input
errors and 2 when a planner reports an infeasible scenario.
"""

import argparse
import logging
import os
import sys
import time
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path
from typing import Any, Dict, Optional, Sequence

from .benchmarks import BenchmarkConfig
from .enums import ExitCode, Scheme, SizeClass
from .evalmc import McConfig
from .exceptions import PlannerError
from .generator import generate_document
from .models import Deployment, RunManifest
from .parser import load_scenario, parse_plan, plan_to_document, read_json, write_json
from .planner import DeploymentPlanner, apply_overrides

logger = logging.getLogger(__name__)

LOG_ENV = "MMWAVE_LOG"
LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"
OVERRIDE_FLAGS = ("zeta", "gamma", "nrf", "rmax")


def tool_version() -> str:
    try:
        return version("pymmwave")
    except PackageNotFoundError:
        return "0.0.0"


def configure_logging() -> None:
    """Root handler at the level named by ``MMWAVE_LOG`` (warning when unset)."""
    name = os.environ.get(LOG_ENV, "warning").upper()
    level = getattr(logging, name, None)
    if not isinstance(level, int):
        level = logging.WARNING
    logging.basicConfig(level=level, format=LOG_FORMAT, force=True)


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pymmwave", description="mmWave base station deployment planner")
    commands = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="root seed of every random stream")
    common.add_argument("--record-timing", action="store_true", help="write wall-clock duration into artifacts")

    scenario = argparse.ArgumentParser(add_help=False, parents=[common])
    scenario.add_argument("--scenario", required=True, help="scenario JSON file")
    scenario.add_argument("--out", required=True, help="output JSON file; CSV tables are written beside it")
    scenario.add_argument("--zeta", type=float, help="outage tolerance of every grid with UE demand")
    scenario.add_argument("--gamma", type=float, help="access-blockage tolerance")
    scenario.add_argument("--nrf", type=int, help="RF chains per base station")
    scenario.add_argument("--rmax", type=float, help="maximum link distance, meters")

    gen = commands.add_parser("gen", parents=[common], help="write a synthetic scenario")
    gen.add_argument("--size", choices=[s.value for s in SizeClass], default=SizeClass.TINY.value)
    gen.add_argument("--out", required=True, help="scenario JSON file to write")
    gen.add_argument("--zeta", type=float, default=0.05, help="outage tolerance of every outdoor grid")
    gen.add_argument("--density-scale", type=float, default=1.0, help="factor on every region's UE density")
    gen.add_argument("--contention", type=float,
                     help="scale densities so the busiest site's full load is this multiple of phi")

    commands.add_parser("coverage", parents=[scenario], help="per-site coverage under the load ceiling")
    commands.add_parser("optimize", parents=[scenario], help="minimum-cost deployment")

    bench = commands.add_parser("benchmark", parents=[scenario], help="comparison planners")
    bench.add_argument("--scheme", choices=[s.value for s in Scheme] + ["all"], default="all")
    bench.add_argument("--rss-threshold", type=float, default=BenchmarkConfig.rss_threshold_db,
                       help="average RSS threshold, dB")
    bench.add_argument("--min-diversity", type=_positive_int, default=BenchmarkConfig.min_diversity)

    ev = commands.add_parser("evaluate", parents=[scenario], help="Monte Carlo evaluation of a plan")
    ev.add_argument("--plan", required=True, help="plan JSON written by optimize or benchmark")
    ev.add_argument("--trials", type=_positive_int, default=McConfig.n_trials)
    ev.add_argument("--grid-center", action="store_true", help="place every UE at its grid center")
    ev.add_argument("--threads", type=_positive_int, default=1, help="Monte Carlo worker threads")
    return parser


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    return {flag: getattr(args, flag) for flag in OVERRIDE_FLAGS if getattr(args, flag, None) is not None}


def _manifest(args: argparse.Namespace, started: float) -> RunManifest:
    duration = time.perf_counter() - started
    logger.info("%s finished in %.3f s", args.command, duration)
    return RunManifest(
        command=args.command,
        scenario_path=getattr(args, "scenario", None),
        seed=args.seed,
        overrides=_overrides(args) if args.command != "gen" else {},
        version=tool_version(),
        duration_s=duration if args.record_timing else None,
    )


def _planner(args: argparse.Namespace) -> DeploymentPlanner:
    scenario = apply_overrides(
        load_scenario(args.scenario), zeta=args.zeta, gamma=args.gamma, n_rf=args.nrf, r_max=args.rmax
    )
    return DeploymentPlanner(scenario)


def cmd_gen(args: argparse.Namespace, started: float) -> ExitCode:
    document = generate_document(
        args.size, args.seed, zeta=args.zeta, density_scale=args.density_scale, contention=args.contention
    )
    if args.record_timing:
        document["manifest"] = _manifest(args, started).to_document()
    write_json(document, args.out)
    print(f"wrote {args.size} scenario to {args.out}")
    return ExitCode.OK


def cmd_coverage(args: argparse.Namespace, started: float) -> ExitCode:
    planner = _planner(args)
    solution = planner.coverage()
    out = Path(args.out)
    frame = solution.to_frame()
    out.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(out.with_suffix(".csv"), index=False)
    write_json(
        {
            "phi": solution.phi,
            "iterations": [int(n) for n in solution.iterations],
            "degenerate_sites": list(solution.degenerate_sites),
            "sites": frame.to_dict(orient="records"),
            "cover": [
                [int(g) + 1 for g in row.nonzero()[0]] for row in solution.cover
            ],
            "manifest": _manifest(args, started).to_document(),
        },
        out,
    )
    print(f"phi = {solution.phi:.4f}; {len(solution.degenerate_sites)} degenerate sites")
    return ExitCode.OK


def _sibling(path: Path, tag: str, suffix: Optional[str] = None) -> Path:
    """``runs/plan.json`` tagged ``mdp`` becomes ``runs/plan_mdp.json``."""
    return path.with_name(f"{path.stem}_{tag}{suffix or path.suffix or '.json'}")


def _write_plan(deployment: Deployment, planner: DeploymentPlanner, path: Path, manifest: RunManifest) -> ExitCode:
    write_json(plan_to_document(deployment, planner.scenario, manifest), path)
    print(deployment)
    if not deployment.is_feasible:
        print(f"infeasible grids: {list(deployment.infeasible_grids)}", file=sys.stderr)
        return ExitCode.INFEASIBLE
    return ExitCode.OK


def cmd_optimize(args: argparse.Namespace, started: float) -> ExitCode:
    planner = _planner(args)
    deployment = planner.optimize()
    return _write_plan(deployment, planner, Path(args.out), _manifest(args, started))


def cmd_benchmark(args: argparse.Namespace, started: float) -> ExitCode:
    planner = _planner(args)
    config = BenchmarkConfig(rss_threshold_db=args.rss_threshold, min_diversity=args.min_diversity)
    schemes = list(Scheme) if args.scheme == "all" else [Scheme(args.scheme)]
    out = Path(args.out)
    status = ExitCode.OK
    for scheme in schemes:
        deployment = planner.benchmark(scheme, config)
        path = _sibling(out, str(scheme)) if args.scheme == "all" else out
        code = _write_plan(deployment, planner, path, _manifest(args, started))
        status = max(status, code)
    return ExitCode(status)


def cmd_evaluate(args: argparse.Namespace, started: float) -> ExitCode:
    planner = _planner(args)
    deployment = parse_plan(read_json(args.plan), planner.scenario, planner.link_table)
    config = McConfig(n_trials=args.trials, seed=args.seed, use_grid_center=args.grid_center, threads=args.threads)
    report = planner.evaluate(deployment, config)

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    for name, frame in report.to_frames().items():
        frame.to_csv(_sibling(out, name, ".csv"), index=False)
    document = report.to_document()
    document["plan"] = str(args.plan)
    document["manifest"] = _manifest(args, started).to_document()
    write_json(document, out)
    print(f"{report.n_trials} trials, {report.sinr_samples.size} link samples, "
          f"{report.bound_violations} bound violations")
    return ExitCode.OK


COMMANDS = {
    "gen": cmd_gen,
    "coverage": cmd_coverage,
    "optimize": cmd_optimize,
    "benchmark": cmd_benchmark,
    "evaluate": cmd_evaluate,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    configure_logging()
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exit_:
        # usage errors are input errors; --help exits cleanly
        return int(ExitCode.INPUT_ERROR) if exit_.code else int(ExitCode.OK)
    started = time.perf_counter()
    try:
        return int(COMMANDS[args.command](args, started))
    except PlannerError as error:
        logger.debug("command failed", exc_info=True)
        print(f"error: {error}", file=sys.stderr)
        return int(ExitCode.INPUT_ERROR)
    except OSError as error:
        print(f"error: {error}", file=sys.stderr)
        return int(ExitCode.INPUT_ERROR)
