"""Monte Carlo evaluation of a deployment.

Each trial draws Poisson UE counts per grid, independent per-link blockage
and a uniformly random served subset at overloaded sites, then computes the
realized SINR of every served link with sidelobe interference.

Random streams: ``SeedSequence(seed)`` has one child per trial (keyed by the
trial index), and each trial child has one child per stage (UE placement,
blockage, contention). Every stream drives a counter-based Philox generator,
so trials give the same draws in any execution order.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .exceptions import ScenarioError
from .geometry import Scenario
from .linkmodel import LinkTable, blockage_prob, build_link_table, pathloss
from .models import Deployment

logger = logging.getLogger(__name__)

BOUND_RTOL = 1e-9


@dataclass(frozen=True)
class McConfig:
    """Monte Carlo settings.

    Attributes:
        n_trials: independent realizations.
        seed: root seed of every random stream.
        sinr_threshold: SINR threshold, linear; the scenario's ``z`` when None.
        use_grid_center: place every UE at its grid center.
        threads: worker threads running trials.
    """
    n_trials: int = 50
    seed: int = 0
    sinr_threshold: Optional[float] = None
    use_grid_center: bool = False
    threads: int = 1

    def __post_init__(self):
        if self.n_trials < 1:
            raise ScenarioError(f"n_trials must be at least 1, got {self.n_trials}")
        if self.seed < 0:
            raise ScenarioError(f"seed must be nonnegative, got {self.seed}")
        if self.threads < 1:
            raise ScenarioError(f"threads must be at least 1, got {self.threads}")
        if self.sinr_threshold is not None and not self.sinr_threshold > 0:
            raise ScenarioError(f"SINR threshold must be positive, got {self.sinr_threshold}")


class TrialStreams(NamedTuple):
    placement: np.random.Generator
    blockage: np.random.Generator
    contention: np.random.Generator


def trial_streams(seed: int, trial: int) -> TrialStreams:
    """The three generators of trial ``trial`` under root ``seed``."""
    trial_seed = np.random.SeedSequence(entropy=seed, spawn_key=(trial,))
    stages = trial_seed.spawn(3)
    return TrialStreams(*(np.random.Generator(np.random.Philox(stage)) for stage in stages))


@dataclass(frozen=True)
class TrialRecord:
    """Outcome of one realization.

    ``sinr`` and ``sinr_lb`` hold one entry per served, unblocked link;
    per-site arrays follow the order of ``deployed``.
    """
    trial: int
    deployed: np.ndarray
    macro_diversity: np.ndarray
    sinr: np.ndarray
    sinr_lb: np.ndarray
    ue_grid: np.ndarray
    ue_outage: np.ndarray
    attempting: np.ndarray
    access_block: np.ndarray


def run_trial(
    deployment: Deployment,
    scenario: Scenario,
    streams: TrialStreams,
    *,
    trial: int = 0,
    link_table: Optional[LinkTable] = None,
    sinr_threshold: Optional[float] = None,
    use_grid_center: bool = False,
) -> TrialRecord:
    params = scenario.radio
    z = params.z if sinr_threshold is None else sinr_threshold
    link_table = link_table or build_link_table(scenario, params)
    if deployment.x.shape != (scenario.num_sites, scenario.num_grids):
        raise ScenarioError("deployment does not match the scenario dimensions")

    counts = streams.placement.poisson(scenario.ue_mass)
    ue_grid = np.repeat(np.arange(scenario.num_grids), counts)
    positions = scenario.grid_positions[ue_grid].copy()
    if not use_grid_center and ue_grid.size:
        sides = np.array([grid.side for grid in scenario.grids])[ue_grid]
        positions[:, :2] += streams.placement.uniform(-0.5, 0.5, size=(ue_grid.size, 2)) * sides[:, None]

    deployed = np.flatnonzero(deployment.y)
    r = np.linalg.norm(positions[:, None, :] - scenario.site_positions[deployed][None, :, :], axis=2)
    los = link_table.los[deployed][:, ue_grid].T
    assoc = deployment.x[deployed][:, ue_grid].T

    blocked = streams.blockage.random(r.shape) < blockage_prob(r, los, params)
    attempting = assoc & ~blocked
    n_attempting = attempting.sum(axis=0)

    served = attempting.copy()
    for d in np.flatnonzero(n_attempting > params.n_rf):
        users = np.flatnonzero(attempting[:, d])
        keep = streams.contention.choice(users, size=params.n_rf, replace=False)
        served[:, d] = False
        served[keep, d] = True
    n_served = served.sum(axis=0)

    gain = pathloss(r) if r.size else np.zeros_like(r)
    share = np.where(n_served > 0, (n_served - assoc) / np.maximum(n_served, 1), 0.0)
    interference = np.where(blocked, 0.0, share * params.p_tx * params.g_side * gain).sum(axis=1)
    desired = params.p_tx * params.g_main * gain / np.maximum(n_served, 1)
    sinr = desired / (params.noise + interference[:, None])

    bound = deployment.sinr_lb[deployed][:, ue_grid].T
    success = served & (sinr >= z)
    with np.errstate(invalid="ignore", divide="ignore"):
        access_block = np.where(
            n_attempting > 0, np.maximum(n_attempting - params.n_rf, 0) / np.maximum(n_attempting, 1), 0.0
        )
    return TrialRecord(
        trial=trial,
        deployed=deployed + 1,
        macro_diversity=np.asarray(deployment.macro_diversity),
        sinr=sinr[served],
        sinr_lb=bound[served],
        ue_grid=ue_grid + 1,
        ue_outage=~success.any(axis=1),
        attempting=n_attempting,
        access_block=access_block,
    )


def empirical_cdf(values: Sequence[float]) -> pd.DataFrame:
    """``value, cdf`` table of the sorted samples."""
    ordered = np.sort(np.asarray(values, dtype=float))
    ordered = ordered[~np.isnan(ordered)]
    cdf = np.arange(1, ordered.size + 1) / max(ordered.size, 1)
    return pd.DataFrame({"value": ordered, "cdf": cdf})


@dataclass(frozen=True)
class McReport:
    """Pooled statistics over every trial.

    ``ue_outage_est`` is NaN for grids that never received a UE.
    """
    n_trials: int
    deployed: np.ndarray
    sinr_samples: np.ndarray
    sinr_lb_samples: np.ndarray
    access_block_est: np.ndarray
    access_block_se: np.ndarray
    mean_active_ue: np.ndarray
    mean_active_ue_se: np.ndarray
    ue_counts: np.ndarray
    ue_outage_est: np.ndarray
    diversity_hist: Dict[int, int] = field(default_factory=dict)
    bound_violations: int = 0

    def to_frames(self) -> Dict[str, pd.DataFrame]:
        """CSV-ready tables keyed by metric name."""
        return {
            "sinr_cdf": empirical_cdf(self.sinr_samples),
            "sinr_lb_cdf": empirical_cdf(self.sinr_lb_samples),
            "access_block_cdf": empirical_cdf(self.access_block_est),
            "ue_outage_cdf": empirical_cdf(self.ue_outage_est),
            "diversity_hist": pd.DataFrame(
                {"diversity": list(self.diversity_hist), "grids": list(self.diversity_hist.values())}
            ),
        }

    def to_document(self) -> Dict[str, object]:
        def clean(values):
            return [None if math.isnan(v) else float(v) for v in values]

        return {
            "n_trials": self.n_trials,
            "n_links": int(self.sinr_samples.size),
            "bound_violations": self.bound_violations,
            "sites": [
                {
                    "site": int(site),
                    "access_block": float(rho),
                    "access_block_se": float(se),
                    "mean_active_ue": float(load),
                    "mean_active_ue_se": float(load_se),
                }
                for site, rho, se, load, load_se in zip(
                    self.deployed, self.access_block_est, self.access_block_se,
                    self.mean_active_ue, self.mean_active_ue_se,
                )
            ],
            "ue_counts": [int(n) for n in self.ue_counts],
            "ue_outage": clean(self.ue_outage_est),
            "diversity_hist": {str(order): count for order, count in self.diversity_hist.items()},
        }


def _mean_and_se(samples: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    mean = samples.mean(axis=0)
    if samples.shape[0] < 2:
        return mean, np.zeros_like(mean)
    return mean, samples.std(axis=0, ddof=1) / math.sqrt(samples.shape[0])


def aggregate(trials: Sequence[TrialRecord]) -> McReport:
    """Pool trial records; the result does not depend on their order."""
    if not trials:
        raise ScenarioError("cannot aggregate zero trials")
    trials = sorted(trials, key=lambda record: record.trial)
    first = trials[0]
    n_grids = first.macro_diversity.size

    sinr = np.concatenate([record.sinr for record in trials])
    bound = np.concatenate([record.sinr_lb for record in trials])
    access, access_se = _mean_and_se(np.array([record.access_block for record in trials], dtype=float))
    load, load_se = _mean_and_se(np.array([record.attempting for record in trials], dtype=float))

    ue_grid = np.concatenate([record.ue_grid for record in trials]).astype(int)
    outage = np.concatenate([record.ue_outage for record in trials]).astype(float)
    ue_counts = np.bincount(ue_grid - 1, minlength=n_grids) if ue_grid.size else np.zeros(n_grids, dtype=int)
    outage_counts = np.bincount(ue_grid - 1, weights=outage, minlength=n_grids) if ue_grid.size else np.zeros(n_grids)
    with np.errstate(invalid="ignore", divide="ignore"):
        ue_outage = np.where(ue_counts > 0, outage_counts / np.maximum(ue_counts, 1), np.nan)

    orders, counts = np.unique(first.macro_diversity, return_counts=True)
    violations = int(np.sum(sinr < bound * (1.0 - BOUND_RTOL)))
    return McReport(
        n_trials=len(trials),
        deployed=first.deployed,
        sinr_samples=sinr,
        sinr_lb_samples=bound,
        access_block_est=access,
        access_block_se=access_se,
        mean_active_ue=load,
        mean_active_ue_se=load_se,
        ue_counts=ue_counts,
        ue_outage_est=ue_outage,
        diversity_hist={int(o): int(c) for o, c in zip(orders, counts)},
        bound_violations=violations,
    )


def evaluate(
    deployment: Deployment,
    scenario: Scenario,
    config: Optional[McConfig] = None,
    link_table: Optional[LinkTable] = None,
) -> McReport:
    """Run ``config.n_trials`` realizations of ``deployment`` and pool them."""
    config = config or McConfig()
    link_table = link_table or build_link_table(scenario)

    def one(trial: int) -> TrialRecord:
        return run_trial(
            deployment, scenario, trial_streams(config.seed, trial), trial=trial, link_table=link_table,
            sinr_threshold=config.sinr_threshold, use_grid_center=config.use_grid_center,
        )

    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            records: List[TrialRecord] = list(pool.map(one, range(config.n_trials)))
    else:
        records = [one(trial) for trial in range(config.n_trials)]

    report = aggregate(records)
    logger.info(
        "monte carlo: %d trials, %d link samples, %d bound violations",
        report.n_trials, report.sinr_samples.size, report.bound_violations,
    )
    return report
