"""Power loading of the free band under power and interference budgets.

The rate-maximization problem is concave, and its KKT conditions give the
powers in closed form once the two Lagrange multipliers are known:

    P_m = max(0, 1 / (alpha * Omega_m + beta) - sigma2_m)

``solve`` finds the multipliers by bisection, trying the single-constraint
cases before the nested search where both budgets bind.
"""

import logging
from collections.abc import Callable
from dataclasses import dataclass
from enum import Enum

import numpy as np

from d2d_overlay.interference.tables import BandMap, InterferenceTable

logger = logging.getLogger(__name__)

# Bisection stops when the bracket is this many ulps of its upper end
BRACKET_ULPS = 4
MAX_BISECTIONS = 300

# Relative slack accepted on a budget before it counts as violated
BUDGET_TOLERANCE = 1e-9


class BindingConstraint(Enum):
    """Budgets active at the optimum."""

    POWER = "power"  # Sum power budget P_t only
    INTERFERENCE = "interference"  # Interference threshold I_th only
    BOTH = "both"


@dataclass(frozen=True, eq=False)
class AllocationProblem:
    """Rate maximization over the free subcarriers."""

    omegas: np.ndarray
    total_power: float
    interference_threshold: float
    noise: np.ndarray | float = 1e-6  # sigma^2_{N+I} per subcarrier, W

    def __post_init__(self) -> None:
        omegas = np.atleast_1d(np.asarray(self.omegas, dtype=float))
        if omegas.ndim != 1 or omegas.size == 0:
            raise ValueError("omegas must be a non-empty vector")
        if not np.all(np.isfinite(omegas)) or np.any(omegas < 0):
            raise ValueError("omegas must be finite and non-negative")
        if not self.total_power > 0:
            raise ValueError(f"total_power must be > 0, got {self.total_power}")
        if not self.interference_threshold > 0:
            raise ValueError(
                f"interference_threshold must be > 0, got {self.interference_threshold}"
            )

        noise = np.broadcast_to(np.asarray(self.noise, dtype=float), omegas.shape).copy()
        if not np.all(np.isfinite(noise)) or np.any(noise <= 0):
            raise ValueError("noise must be finite and > 0")

        object.__setattr__(self, "omegas", omegas)
        object.__setattr__(self, "noise", noise)
        object.__setattr__(self, "total_power", float(self.total_power))
        object.__setattr__(self, "interference_threshold", float(self.interference_threshold))

    @property
    def size(self) -> int:
        return self.omegas.size

    def powers(self, alpha: float, beta: float) -> np.ndarray:
        """Closed-form KKT powers for given multipliers."""
        level = alpha * self.omegas + beta
        with np.errstate(divide="ignore"):
            inverse = np.where(level > 0, 1.0 / np.where(level > 0, level, 1.0), np.inf)
        return np.maximum(0.0, inverse - self.noise)

    def interference(self, powers: np.ndarray) -> float:
        """Worst-case interference sum_m P_m Omega_m."""
        return float(np.dot(self.omegas, powers))


@dataclass(frozen=True, eq=False)
class AllocationResult:
    powers: np.ndarray
    alpha: float
    beta: float
    binding: BindingConstraint
    objective: float

    @property
    def total_power(self) -> float:
        return float(np.sum(self.powers))


def objective(problem: AllocationProblem, powers: np.ndarray) -> float:
    """Sum rate in bits per symbol: sum_m log2(1 + P_m / sigma2_m)."""
    return float(np.sum(np.log1p(np.asarray(powers) / problem.noise)) / np.log(2))


def omega_factors(table: InterferenceTable, band_map: BandMap) -> np.ndarray:
    """
    Maximum interference factor of each free subcarrier.

    Omega_m sums, over every incumbent subcarrier l, the worst-case table entry
    over all tabulated timing and frequency offsets at distance m - l. The
    worst case is taken separately for each l.
    """
    dt_max = table.incumbent.max_timing_offset
    if table.dt_grid.min() > -dt_max or table.dt_grid.max() < dt_max:
        logger.warning(
            f"Timing grid [{table.dt_grid.min()}, {table.dt_grid.max()}] does not cover "
            f"+/-{dt_max} samples; Omega may be underestimated"
        )
    if not band_map.incumbent:
        return np.zeros(len(band_map.free))

    worst = table.worst_case()
    rows = table.distance_indices(band_map.distance_matrix())
    return worst[rows].sum(axis=1)


def _bisect(decreasing: Callable[[float], float], target: float, hi: float) -> float:
    """
    Smallest x in [0, hi] with decreasing(x) <= target, to a few ulps.

    ``decreasing`` must be non-increasing with decreasing(hi) <= target.
    """
    lo = 0.0
    for _ in range(MAX_BISECTIONS):
        if hi - lo <= BRACKET_ULPS * np.finfo(float).eps * hi:
            break
        mid = 0.5 * (lo + hi)
        if decreasing(mid) <= target:
            hi = mid
        else:
            lo = mid
    return hi


def _water_level(problem: AllocationProblem, alpha: float) -> float:
    """Smallest beta meeting the power budget at a given alpha."""

    def used(beta: float) -> float:
        return float(np.sum(problem.powers(alpha, beta)))

    # Subcarriers with Omega = 0 make used(0) infinite
    if alpha > 0 and used(0.0) <= problem.total_power:
        return 0.0
    return _bisect(used, problem.total_power, float(np.max(1.0 / problem.noise)))


def _within(value: float, budget: float) -> bool:
    return value <= budget * (1 + BUDGET_TOLERANCE)


def _result(problem: AllocationProblem, alpha: float, beta: float) -> AllocationResult:
    powers = problem.powers(alpha, beta)
    if alpha > 0 and beta > 0:
        binding = BindingConstraint.BOTH
    elif alpha > 0:
        binding = BindingConstraint.INTERFERENCE
    else:
        binding = BindingConstraint.POWER
    return AllocationResult(
        powers=powers,
        alpha=alpha,
        beta=beta,
        binding=binding,
        objective=objective(problem, powers),
    )


def solve(problem: AllocationProblem) -> AllocationResult:
    """
    Maximize the sum rate subject to both budgets.

    Returns:
        The unique optimum, with the multipliers that generate it.
    """
    # Power budget alone
    beta = _water_level(problem, 0.0)
    powers = problem.powers(0.0, beta)
    if _within(problem.interference(powers), problem.interference_threshold):
        logger.debug(f"Power budget binds alone (beta={beta:.6g})")
        return _result(problem, 0.0, beta)

    positive = problem.omegas > 0
    alpha_hi = float(np.max(1.0 / (problem.omegas[positive] * problem.noise[positive])))

    # Interference budget alone
    if np.all(positive):
        alpha = _bisect(
            lambda a: problem.interference(problem.powers(a, 0.0)),
            problem.interference_threshold,
            alpha_hi,
        )
        powers = problem.powers(alpha, 0.0)
        if _within(float(np.sum(powers)), problem.total_power):
            logger.debug(f"Interference budget binds alone (alpha={alpha:.6g})")
            return _result(problem, alpha, 0.0)

    # Both budgets: beta follows alpha through the power budget
    alpha = _bisect(
        lambda a: problem.interference(problem.powers(a, _water_level(problem, a))),
        problem.interference_threshold,
        alpha_hi,
    )
    beta = _water_level(problem, alpha)
    logger.debug(f"Both budgets bind (alpha={alpha:.6g}, beta={beta:.6g})")
    return _result(problem, alpha, beta)


def kkt_residual(problem: AllocationProblem, result: AllocationResult) -> float:
    """
    Largest violation of the KKT conditions, made dimensionless.

    Covers stationarity of the closed form, both budgets, non-negative powers
    and multipliers, and complementary slackness.
    """
    powers = np.asarray(result.powers, dtype=float)
    alpha, beta = result.alpha, result.beta
    p_t, i_th = problem.total_power, problem.interference_threshold

    expected = problem.powers(max(alpha, 0.0), max(beta, 0.0))
    used = float(np.sum(powers))
    caused = problem.interference(powers)

    terms = [
        float(np.max(np.abs(powers - expected))) / p_t,
        max(0.0, used - p_t) / p_t,
        max(0.0, caused - i_th) / i_th,
        max(0.0, float(-np.min(powers))) / p_t,
        max(0.0, -alpha) * i_th,
        max(0.0, -beta) * p_t,
        abs(alpha * (i_th - caused)),
        abs(beta * (p_t - used)),
    ]
    residual = max(terms)
    return residual if np.isfinite(residual) else float("inf")
