"""Closed-form per-link statistics and the precomputed link table.

Covers the 28 GHz LoS pathloss, the cone beam gains, physical blockage,
UE access-limited blockage and the desired/interference power bounds that
feed the SINR lower bound.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple, Union

import numpy as np

from .exceptions import ModelDomainError, ScenarioError
from .geometry import Scenario, distance_matrix, visibility_matrix
from .values import Power, db_to_linear

logger = logging.getLogger(__name__)

CARRIER_GHZ = 28.0
POISSON_TAIL_MASS = 1e-14
PHI_TOLERANCE = 1e-12

ArrayLike = Union[float, np.ndarray]


@dataclass(frozen=True)
class RadioParams:
    """Radio and model parameters; gains and powers are linear."""
    h_bs: float = 10.0
    h_ue: float = 1.5
    alpha: float = 0.08
    beta: float = 0.08
    r_max: float = 200.0
    n_rf: int = 12
    z: float = 1.0
    gamma: float = 0.05
    g_main: float = field(default_factory=lambda: db_to_linear(15.0))
    g_side: float = field(default_factory=lambda: db_to_linear(-9.0))
    p_tx: float = 1.0
    noise: float = field(default_factory=lambda: Power.from_value(-104.5, "dBm").watts)
    eps_bisect: float = 0.1

    def __post_init__(self):
        if not self.r_max > 0:
            raise ScenarioError(f"r_max must be positive, got {self.r_max}")
        if int(self.n_rf) != self.n_rf or self.n_rf < 1:
            raise ScenarioError(f"n_rf must be a positive integer, got {self.n_rf}")
        object.__setattr__(self, "n_rf", int(self.n_rf))
        if not 0 < self.gamma < 1:
            raise ScenarioError(f"gamma must lie in (0, 1), got {self.gamma}")
        if not self.g_main > self.g_side > 0:
            raise ScenarioError(f"gains must satisfy g_main > g_side > 0, got {self.g_main}, {self.g_side}")
        if not self.p_tx > 0:
            raise ScenarioError(f"p_tx must be positive, got {self.p_tx}")
        if not self.noise > 0:
            raise ScenarioError(f"noise must be positive, got {self.noise}")
        if not self.eps_bisect > 0:
            raise ScenarioError(f"eps_bisect must be positive, got {self.eps_bisect}")
        if not self.z > 0:
            raise ScenarioError(f"SINR threshold must be positive, got {self.z}")
        if self.alpha < 0 or self.beta < 0:
            raise ScenarioError(f"blockage parameters must be nonnegative, got {self.alpha}, {self.beta}")
        if not self.h_bs > self.h_ue >= 0:
            raise ScenarioError(f"heights must satisfy h_bs > h_ue >= 0, got {self.h_bs}, {self.h_ue}")


@dataclass(frozen=True)
class LinkTable:
    """Per (site, grid) link statistics; every matrix is B x G.

    ``i_hat_assoc`` is the interference bound with the grid associated to
    the interfering site (x = 1), ``i_hat_free`` the bound with x = 0.
    """
    los: np.ndarray
    r: np.ndarray
    pl: np.ndarray
    p_blk: np.ndarray
    p_bar: np.ndarray
    i_hat_assoc: np.ndarray
    i_hat_free: np.ndarray
    ue_mass: np.ndarray
    r_max: float

    def __post_init__(self):
        for name in ("los", "r", "pl", "p_blk", "p_bar", "i_hat_assoc", "i_hat_free", "ue_mass"):
            array = np.array(getattr(self, name))
            array.setflags(write=False)
            object.__setattr__(self, name, array)

    @property
    def num_sites(self) -> int:
        return self.r.shape[0]

    @property
    def num_grids(self) -> int:
        return self.r.shape[1]

    @property
    def feasible(self) -> np.ndarray:
        """Pairs that may be associated: LoS, within r_max and p_blk < 1."""
        return self.los & (self.r <= self.r_max) & (self.p_blk < 1)

    def i_hat(self, cover: np.ndarray) -> np.ndarray:
        """Interference bounds evaluated at the association ``cover``."""
        return np.where(cover, self.i_hat_assoc, self.i_hat_free)


def pathloss(r: ArrayLike) -> ArrayLike:
    """Linear 28 GHz LoS pathloss at distance ``r`` meters."""
    distances = np.asarray(r, dtype=float)
    if np.any(distances <= 0):
        raise ModelDomainError("pathloss is defined for r > 0 only")
    value = 10.0 ** (-3.24 - 2.1 * np.log10(distances) - 2.0 * math.log10(CARRIER_GHZ))
    return float(value) if np.ndim(r) == 0 else value


def blockage_prob(r: ArrayLike, los: Union[bool, np.ndarray], params: RadioParams) -> ArrayLike:
    """Physical blockage probability of a link.

    1 - exp(-beta r - alpha) for LoS links within r_max, 1 otherwise.
    """
    distances = np.asarray(r, dtype=float)
    visible = np.asarray(los, dtype=bool)
    with np.errstate(over="ignore"):
        unblocked = np.exp(-params.beta * distances - params.alpha)
    value = np.where(visible & (distances <= params.r_max), 1.0 - unblocked, 1.0)
    return float(value) if np.ndim(value) == 0 else value


def access_block_prob(mu: float, n_rf: int) -> float:
    """UE access-limited blockage probability for a Poisson load ``mu``.

    Sums P(n = i) (i - n_rf) / i over i > n_rf until the remaining Poisson
    mass is below POISSON_TAIL_MASS.
    """
    if mu < 0:
        raise ModelDomainError(f"expected load must be nonnegative, got {mu}")
    if n_rf < 0:
        raise ModelDomainError(f"RF chain count must be nonnegative, got {n_rf}")
    if mu == 0:
        return 0.0

    log_mu = math.log(mu)
    total = 0.0
    i = n_rf + 1
    while True:
        pmf = math.exp(-mu + i * log_mu - math.lgamma(i + 1))
        total += pmf * (i - n_rf) / i
        if i > mu:
            ratio = mu / (i + 1)
            if pmf * ratio / (1.0 - ratio) < POISSON_TAIL_MASS:
                break
        i += 1
    return min(total, 1.0)


def mean_active_ue(assoc_row: np.ndarray, link_table: LinkTable, site_id: int) -> float:
    """Expected number of unblocked active UEs a site serves under ``assoc_row``."""
    row = np.asarray(assoc_row, dtype=float)
    if row.shape != (link_table.num_grids,):
        raise ModelDomainError(f"association row must have length {link_table.num_grids}, got {row.shape}")
    p_blk = link_table.p_blk[site_id - 1]
    return float(np.sum(row * link_table.ue_mass * (1.0 - p_blk)))


def solve_phi(gamma: float, n_rf: int) -> float:
    """Largest expected load whose access-limited blockage stays at ``gamma``.

    Bracketing bisection; the returned value sits on the feasible side,
    access_block_prob(phi, n_rf) <= gamma.
    """
    if not 0 < gamma < 1:
        raise ModelDomainError(f"gamma must lie in (0, 1), got {gamma}")

    hi = 1.0
    while access_block_prob(hi, n_rf) <= gamma:
        hi *= 2.0
    lo = 0.0
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if access_block_prob(mid, n_rf) <= gamma:
            lo = mid
        else:
            hi = mid
        if hi - lo <= PHI_TOLERANCE * max(1.0, hi):
            break
    logger.debug("phi(gamma=%g, n_rf=%d) = %.12g", gamma, n_rf, lo)
    return lo


def blockage_params_from_obstacles(
    lambda_obs: float,
    mean_length: float,
    mean_width: float,
    height_cdf: Callable[[np.ndarray], np.ndarray],
    h_bs: float = 10.0,
    h_ue: float = 1.5,
    nodes: int = 2001,
) -> Tuple[float, float]:
    """Blockage intercept and slope from random-obstacle moments.

    Args:
        lambda_obs: obstacle density per square meter.
        mean_length: expected obstacle length in meters.
        mean_width: expected obstacle width in meters.
        height_cdf: CDF of the obstacle height, vectorized over meters.

    Returns:
        (alpha, beta)
    """
    if lambda_obs < 0 or mean_length < 0 or mean_width < 0:
        raise ModelDomainError("obstacle density and sizes must be nonnegative")
    s = np.linspace(0.0, 1.0, nodes)
    heights = s * h_ue + (1.0 - s) * h_bs
    cdf = np.broadcast_to(np.asarray(height_cdf(heights), dtype=float), heights.shape)
    eta = 1.0 - float(np.trapezoid(cdf, s))
    alpha = lambda_obs * mean_length * mean_width
    beta = 2.0 * lambda_obs * (mean_length + mean_width) / math.pi * eta
    return alpha, beta


def build_link_table(scenario: Scenario, params: Optional[RadioParams] = None) -> LinkTable:
    """Precompute every per-pair statistic of ``scenario``."""
    params = params or scenario.radio
    los = visibility_matrix(scenario)
    r = distance_matrix(scenario)
    pl = pathloss(r) if r.size else np.zeros_like(r)
    p_blk = blockage_prob(r, los, params) if r.size else np.ones_like(r)

    usable = los & (r <= params.r_max) & (p_blk < 1)
    p_bar = np.where(usable, params.p_tx * params.g_main * pl / params.n_rf, 0.0)
    sidelobe = params.p_tx * params.g_side * pl
    i_hat_free = np.where(usable, sidelobe, 0.0)
    i_hat_assoc = np.where(usable, (1.0 - 1.0 / params.n_rf) * sidelobe, 0.0)

    logger.info(
        "link table: %d sites x %d grids, %d usable pairs",
        scenario.num_sites, scenario.num_grids, int(usable.sum()),
    )
    return LinkTable(
        los=los,
        r=r,
        pl=pl,
        p_blk=p_blk,
        p_bar=p_bar,
        i_hat_assoc=i_hat_assoc,
        i_hat_free=i_hat_free,
        ue_mass=scenario.ue_mass,
        r_max=params.r_max,
    )
