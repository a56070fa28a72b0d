"""Tests for power allocation."""

import numpy as np
import pytest

from d2d_overlay.allocation import (
    AllocationProblem,
    AllocationResult,
    BindingConstraint,
    kkt_residual,
    objective,
    omega_factors,
    solve,
)
from d2d_overlay.interference import BandMap, IncumbentConfig, InterferenceTable
from d2d_overlay.waveforms import WaveformKind


def dual_oracle(problem: AllocationProblem, bisections: int = 64):
    """
    Nested bisection on the gradient of the Lagrange dual.

    Works in multipliers scaled by the budgets, a = alpha·I_th and b = beta·P_t,
    so both gradient components are dimensionless. Only gradient signs are
    compared, so the result is not limited by rounding in dual values.
    """
    omegas, noise = problem.omegas, problem.noise
    i_th, p_t = problem.interference_threshold, problem.total_power

    def powers(a, b):
        level = a * omegas / i_th + b / p_t
        if np.any(level <= 0):
            return np.full(omegas.shape, np.inf)
        return np.maximum(0.0, 1.0 / level - noise)

    def root(gradient):
        """Smallest x >= 0 with gradient(x) >= 0; gradient is nondecreasing."""
        if gradient(0.0) >= 0:
            return 0.0
        lo, hi = 0.0, 1.0
        while gradient(hi) < 0:
            lo, hi = hi, 2 * hi
        for _ in range(bisections):
            mid = (lo + hi) / 2
            if gradient(mid) < 0:
                lo = mid
            else:
                hi = mid
        return hi

    def best_b(a):
        return root(lambda b: 1.0 - powers(a, b).sum() / p_t)

    # The dual minimized over b is convex in a, with this derivative
    a = root(lambda a: 1.0 - omegas @ powers(a, best_b(a)) / i_th)
    b = best_b(a)

    alpha, beta = a / i_th, b / p_t
    return alpha, beta, problem.powers(alpha, beta)


def random_problem(rng: np.random.Generator) -> AllocationProblem:
    n = int(rng.integers(2, 17))
    omegas = rng.uniform(0.01, 2.0, n)
    total_power = 10 ** rng.uniform(-1, 1)
    return AllocationProblem(
        omegas=omegas,
        total_power=total_power,
        interference_threshold=total_power * omegas.mean() * 10 ** rng.uniform(-1.5, 0.5),
        noise=10 ** rng.uniform(-3, 0, n),
    )


def assert_matches_oracle(problem: AllocationProblem, result: AllocationResult):
    _, _, expected = dual_oracle(problem)
    np.testing.assert_allclose(
        result.powers, expected, rtol=1e-4, atol=1e-6 * problem.total_power
    )


class TestAllocationProblem:
    """Test problem validation."""

    def test_rejects_negative_omega(self):
        """Interference factors cannot be negative."""
        with pytest.raises(ValueError, match="omegas"):
            AllocationProblem(omegas=[-1.0], total_power=1.0, interference_threshold=1.0)

    def test_rejects_non_positive_budgets(self):
        """Both budgets must be positive."""
        with pytest.raises(ValueError, match="total_power"):
            AllocationProblem(omegas=[1.0], total_power=0.0, interference_threshold=1.0)
        with pytest.raises(ValueError, match="interference_threshold"):
            AllocationProblem(omegas=[1.0], total_power=1.0, interference_threshold=-1.0)

    def test_broadcasts_scalar_noise(self):
        """A scalar noise level should apply to every subcarrier."""
        problem = AllocationProblem(
            omegas=np.zeros(3), total_power=1.0, interference_threshold=1.0, noise=0.5
        )

        assert problem.noise.tolist() == [0.5, 0.5, 0.5]


class TestSolve:
    """Test the KKT solver."""

    def test_uniform_water_filling(self):
        """Without interference weight, equal noise should share power equally."""
        noise = 1e-6
        problem = AllocationProblem(
            omegas=np.zeros(12), total_power=12.0, interference_threshold=1.0, noise=noise
        )

        result = solve(problem)

        np.testing.assert_allclose(result.powers, np.ones(12), rtol=1e-12)
        assert result.alpha == 0.0
        assert result.beta == pytest.approx(1 / (1 + noise), rel=1e-12)
        assert result.binding is BindingConstraint.POWER

    def test_vanishing_budget(self):
        """A vanishing power budget should give vanishing powers and rate."""
        problem = AllocationProblem(
            omegas=[0.5, 1.0], total_power=1e-15, interference_threshold=1.0, noise=1e-3
        )

        result = solve(problem)

        assert result.total_power <= 1e-15 * (1 + 1e-9)
        assert result.objective < 1e-10

    def test_interference_binding_example(self):
        """Omega = (1, 3) with a tight I_th should bind on interference only."""
        problem = AllocationProblem(
            omegas=[1.0, 3.0], total_power=10.0, interference_threshold=4.0, noise=1e-6
        )

        result = solve(problem)

        assert result.binding is BindingConstraint.INTERFERENCE
        # 2/alpha - 4·sigma2 = I_th fixes alpha, then P_m = 1/(alpha·Omega_m) - sigma2
        np.testing.assert_allclose(result.powers, [2.0 + 1e-6, 2 / 3 - 1e-6 / 3], rtol=1e-9)
        assert_matches_oracle(problem, result)

    def test_matches_oracle_on_random_problems(self, subtests):
        """solve() should match the nested-bisection dual oracle and satisfy KKT."""
        rng = np.random.default_rng(20240501)

        for case in range(100):
            problem = random_problem(rng)
            with subtests.test(case=case, n=problem.size):
                result = solve(problem)
                assert_matches_oracle(problem, result)
                assert kkt_residual(problem, result) < 1e-8

    def test_budgets_hold(self, subtests):
        """Both budgets should be met within 1e-9 relative."""
        rng = np.random.default_rng(5)

        for case in range(100):
            problem = random_problem(rng)
            with subtests.test(case=case):
                result = solve(problem)
                assert result.total_power <= problem.total_power * (1 + 1e-9)
                assert problem.interference(result.powers) <= (
                    problem.interference_threshold * (1 + 1e-9)
                )
                assert np.all(result.powers >= 0)

    def test_beats_random_feasible_points(self):
        """No random feasible allocation should exceed the optimum."""
        rng = np.random.default_rng(8)
        problem = random_problem(rng)
        best = solve(problem).objective

        for _ in range(1000):
            p = rng.random(problem.size) * rng.exponential()
            scale = min(
                1.0,
                problem.total_power / p.sum(),
                problem.interference_threshold / problem.interference(p),
            )
            assert objective(problem, p * scale) <= best + 1e-12

    def test_objective_nondecreasing_in_threshold(self, subtests):
        """Loosening I_th should never reduce the rate."""
        rng = np.random.default_rng(21)

        for case in range(100):
            base = random_problem(rng)
            thresholds = np.sort(base.interference_threshold * 10 ** rng.uniform(-2, 2, 5))
            with subtests.test(case=case):
                rates = [
                    solve(
                        AllocationProblem(
                            omegas=base.omegas,
                            total_power=base.total_power,
                            interference_threshold=threshold,
                            noise=base.noise,
                        )
                    ).objective
                    for threshold in thresholds
                ]
                assert np.all(np.diff(rates) >= -1e-9 * max(rates))

    def test_scaling_covariance(self):
        """Scaling P_t, I_th and noise by c should scale the powers by c."""
        rng = np.random.default_rng(3)
        problem = random_problem(rng)
        c = 7.5

        scaled = AllocationProblem(
            omegas=problem.omegas,
            total_power=c * problem.total_power,
            interference_threshold=c * problem.interference_threshold,
            noise=c * problem.noise,
        )

        np.testing.assert_allclose(
            solve(scaled).powers, c * solve(problem).powers, rtol=1e-9, atol=1e-12
        )

    def test_larger_omega_gets_less_power(self):
        """With equal noise and binding interference, power should fall with Omega."""
        omegas = np.array([0.1, 0.4, 0.9, 1.6])
        problem = AllocationProblem(
            omegas=omegas, total_power=10.0, interference_threshold=0.5, noise=1e-3
        )

        result = solve(problem)

        assert result.binding in (BindingConstraint.INTERFERENCE, BindingConstraint.BOTH)
        assert np.all(np.diff(result.powers) <= 0)

    def test_identical_subcarriers_get_identical_power(self):
        """Ties should be broken by the shared water level, not iteration order."""
        problem = AllocationProblem(
            omegas=[0.3, 0.7, 0.3, 0.7], total_power=1.0, interference_threshold=0.05, noise=1e-2
        )

        powers = solve(problem).powers

        assert powers[0] == powers[2]
        assert powers[1] == powers[3]


class TestKKTResidual:
    """Test the KKT residual."""

    def test_perturbed_powers_are_flagged(self):
        """A 1% bump on one subcarrier at a tight budget should show up."""
        problem = AllocationProblem(
            omegas=[0.2, 0.5, 1.0], total_power=1.0, interference_threshold=10.0, noise=1e-3
        )
        result = solve(problem)
        bumped = result.powers.copy()
        bumped[0] *= 1.01

        perturbed = AllocationResult(
            powers=bumped,
            alpha=result.alpha,
            beta=result.beta,
            binding=result.binding,
            objective=objective(problem, bumped),
        )

        assert kkt_residual(problem, result) < 1e-8
        assert kkt_residual(problem, perturbed) > 0

    def test_oracle_solution_passes(self):
        """The oracle's multipliers should satisfy KKT to 1e-8."""
        problem = random_problem(np.random.default_rng(12))
        alpha, beta, powers = dual_oracle(problem)

        result = AllocationResult(
            powers=powers,
            alpha=alpha,
            beta=beta,
            binding=BindingConstraint.BOTH,
            objective=objective(problem, powers),
        )

        assert kkt_residual(problem, result) < 1e-8


class TestOmegaFactors:
    """Test maximum interference factors."""

    @staticmethod
    def table(values, distances, dt_grid=(0,), df_grid=(0.0,)):
        return InterferenceTable(
            waveform=WaveformKind.FMT,
            distances=np.asarray(distances),
            dt_grid=np.asarray(dt_grid),
            df_grid=np.asarray(df_grid),
            values=np.asarray(values, dtype=float),
            incumbent=IncumbentConfig(),
        )

    def test_zero_table(self):
        """An all-zero table should give zero factors."""
        table = self.table(np.zeros((181, 1, 1)), np.arange(-90, 91))

        omegas = omega_factors(table, BandMap.centered())

        np.testing.assert_array_equal(omegas, np.zeros(12))

    def test_single_incumbent_constant_table(self):
        """One incumbent subcarrier and a constant table should give that constant."""
        c = 0.037
        table = self.table(np.full((11, 3, 2), c), np.arange(-5, 6), [-4, 0, 4], [0.0, 0.5])

        omegas = omega_factors(table, BandMap(free=(3, 4), incumbent=(5,)))

        np.testing.assert_allclose(omegas, [c, c])

    def test_takes_worst_offset_per_pair(self):
        """Each incumbent subcarrier should contribute its own worst case."""
        values = np.zeros((3, 2, 1))
        values[0, 0, 0] = 1.0  # d = -1 worst at dt = 0
        values[2, 1, 0] = 2.0  # d = +1 worst at dt = 4
        table = self.table(values, [-1, 0, 1], dt_grid=[0, 4])

        omegas = omega_factors(table, BandMap(free=(5,), incumbent=(4, 6)))

        np.testing.assert_allclose(omegas, [3.0])

    def test_oqam_edges_leak_more(self, coarse_tables):
        """Edge subcarriers of the free band should have larger Omega than the centre."""
        omegas = omega_factors(coarse_tables[WaveformKind.OQAM], BandMap.centered())

        assert omegas[0] > omegas[5]
        assert omegas[-1] > omegas[6]
