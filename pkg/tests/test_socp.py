"""Tests for the barrier solver of the x-update subproblem."""

import json
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from stap_slp.exceptions import ValidationError
from stap_slp.socp import (
    ConvexSubproblem,
    InnerSettings,
    SolveStatus,
    constraint_violation,
    find_interior_point,
    kkt_residual,
    maximize_min_margin,
    newton_direction,
    solve,
)

from .conftest import crandn


def _psd(rng: np.random.Generator, n: int, rank: int = 3) -> np.ndarray:
    G = crandn(rng, rank, n)
    return G.conj().T @ G


def _random_problem(
    rng: np.random.Generator, n: int, n_half: int, *, ball: bool, similarity: bool = False
) -> ConvexSubproblem:
    """Feasible instance: halfspaces pass 0.1 below a known interior point."""
    x0 = 0.5 * crandn(rng, n) / np.sqrt(2)
    x0 = x0 / np.maximum(1.0, np.abs(x0) / 0.5)
    rows = crandn(rng, n_half, n)
    thresholds = np.real(rows.conj() @ x0) - 0.1
    return ConvexSubproblem(
        quad=_psd(rng, n),
        linear=crandn(rng, n),
        prox_weight=1.0,
        prox_center=crandn(rng, n),
        halfspace_rows=rows,
        halfspace_thresholds=thresholds,
        disk_radius=1.0,
        ball_radius=float(np.sqrt(0.8 * n)) if ball else None,
        similarity_center=x0 + 0.1 * crandn(rng, n) if similarity else None,
        similarity_radius=0.5 if similarity else None,
    )


class TestClosedForms:
    """Instances with known solutions."""

    def test_unconstrained(self, rng: np.random.Generator) -> None:
        """Test x = (2D + ρI)⁻¹(b + ρv) without constraints."""
        n = 4
        p = ConvexSubproblem(
            quad=_psd(rng, n), linear=crandn(rng, n), prox_weight=2.0, prox_center=crandn(rng, n)
        )
        report = solve(p)
        expected = np.linalg.solve(2 * p.quad + 2.0 * np.eye(n), p.linear + 2.0 * p.prox_center)
        assert report.ok
        np.testing.assert_allclose(report.solution, expected, atol=1e-8)

    def test_disks_project_radially(self, rng: np.random.Generator) -> None:
        """Test that with D = 0 the solution is the radial clip of v + b/ρ."""
        n = 5
        v = 2.0 * crandn(rng, n)
        b = crandn(rng, n)
        p = ConvexSubproblem(
            quad=np.zeros((n, n), dtype=complex),
            linear=b,
            prox_weight=1.0,
            prox_center=v,
            disk_radius=1.0,
        )
        free = v + b
        expected = free / np.maximum(1.0, np.abs(free))
        report = solve(p)
        assert report.status is SolveStatus.OPTIMAL
        np.testing.assert_allclose(report.solution, expected, atol=1e-5)

    def test_equalities_project_affinely(self, rng: np.random.Generator) -> None:
        """Test the projection of v onto {x : eᴴx = t}."""
        n = 4
        E = crandn(rng, 2, n)
        t = crandn(rng, 2)
        v = crandn(rng, n)
        p = ConvexSubproblem(
            quad=np.zeros((n, n), dtype=complex),
            linear=np.zeros(n, dtype=complex),
            prox_weight=1.0,
            prox_center=v,
            equality_rows=E,
            equality_targets=t,
        )
        A = E.conj()
        expected = v - A.conj().T @ np.linalg.solve(A @ A.conj().T, A @ v - t)
        report = solve(p)
        np.testing.assert_allclose(report.solution, expected, atol=1e-8)
        np.testing.assert_allclose(A @ report.solution, t, atol=1e-10)


class TestOptimality:
    """KKT conditions and status reporting."""

    def test_random_instances_are_optimal(self, rng: np.random.Generator) -> None:
        """Test optimal status, feasibility and the KKT residual on random instances."""
        settings = InnerSettings()
        for k in range(10):
            p = _random_problem(rng, 3 + k % 4, 4, ball=k % 2 == 0)
            report = solve(p, settings)
            assert report.status is SolveStatus.OPTIMAL
            assert constraint_violation(p, report.solution) <= settings.feas_tol
            scale = max(1.0, abs(report.objective_value))
            assert kkt_residual(p, report.solution, report.duals) <= settings.kkt_tol * scale

    def test_perturbed_point_fails_kkt(self, rng: np.random.Generator) -> None:
        """Test that a feasible non-optimal point has a large residual."""
        p = _random_problem(rng, 4, 3, ball=False)
        report = solve(p)
        interior = find_interior_point(p)
        assert interior is not None
        moved = 0.5 * (report.solution + interior)
        assert constraint_violation(p, moved) == 0.0
        assert kkt_residual(p, moved, report.duals) > 1e-6

    def test_inactive_duals_vanish(self, rng: np.random.Generator) -> None:
        """Test that far-away disks get zero multipliers."""
        n = 3
        p = ConvexSubproblem(
            quad=_psd(rng, n),
            linear=crandn(rng, n),
            prox_weight=1.0,
            prox_center=crandn(rng, n),
            disk_radius=100.0,
        )
        report = solve(p)
        np.testing.assert_allclose(report.duals, 0.0, atol=1e-6)

    def test_warm_start_is_deterministic(self, rng: np.random.Generator) -> None:
        """Test that repeated solves agree and a warm start reaches the same point."""
        p = _random_problem(rng, 4, 4, ball=True)
        first, second = solve(p), solve(p)
        np.testing.assert_array_equal(first.solution, second.solution)
        warm = solve(p, warm_start=first.solution)
        np.testing.assert_allclose(warm.solution, first.solution, atol=1e-5)

    def test_infeasible(self) -> None:
        """Test that disjoint constraints give INFEASIBLE and no interior point."""
        n = 2
        row = np.zeros((1, n), dtype=complex)
        row[0, 0] = 1.0
        p = ConvexSubproblem(
            quad=np.zeros((n, n), dtype=complex),
            linear=np.zeros(n, dtype=complex),
            prox_weight=1.0,
            prox_center=np.zeros(n, dtype=complex),
            halfspace_rows=row,
            halfspace_thresholds=np.array([2.0]),
            disk_radius=1.0,
        )
        assert find_interior_point(p) is None
        assert solve(p).status is SolveStatus.INFEASIBLE


class TestMaximin:
    """Epigraph maximization of the smallest halfspace margin."""

    def test_single_row(self) -> None:
        """Test that one row Re{x₀} over the unit disks peaks at 1."""
        n = 2
        row = np.zeros((1, n), dtype=complex)
        row[0, 0] = 1.0
        p = ConvexSubproblem(
            quad=np.zeros((n, n), dtype=complex),
            linear=np.zeros(n, dtype=complex),
            prox_weight=1.0,
            prox_center=np.zeros(n, dtype=complex),
            halfspace_rows=row,
            halfspace_thresholds=np.array([0.25]),
            disk_radius=1.0,
        )
        found = maximize_min_margin(p)
        assert found is not None
        x, margin = found
        assert margin == pytest.approx(0.75, abs=1e-6)
        assert x[0].real == pytest.approx(1.0, abs=1e-6)

    def test_needs_bounded_set(self, rng: np.random.Generator) -> None:
        """Test that an unbounded maximin is refused."""
        p = ConvexSubproblem(
            quad=np.zeros((2, 2), dtype=complex),
            linear=np.zeros(2, dtype=complex),
            prox_weight=1.0,
            prox_center=np.zeros(2, dtype=complex),
            halfspace_rows=crandn(rng, 1, 2),
            halfspace_thresholds=np.zeros(1),
        )
        with pytest.raises(ValidationError):
            maximize_min_margin(p)


class TestSubproblem:
    """Validation and export."""

    def test_prox_weight_positive(self) -> None:
        """Test that ρ must be positive."""
        with pytest.raises(ValidationError):
            ConvexSubproblem(
                quad=np.zeros((1, 1), dtype=complex),
                linear=np.zeros(1, dtype=complex),
                prox_weight=0.0,
                prox_center=np.zeros(1, dtype=complex),
            )

    def test_similarity_needs_both(self) -> None:
        """Test that a similarity center without a radius is refused."""
        with pytest.raises(ValidationError):
            ConvexSubproblem(
                quad=np.zeros((1, 1), dtype=complex),
                linear=np.zeros(1, dtype=complex),
                prox_weight=1.0,
                prox_center=np.zeros(1, dtype=complex),
                similarity_center=np.zeros(1, dtype=complex),
            )

    def test_json_dump(self, rng: np.random.Generator, tmp_path: Path) -> None:
        """Test that the dump carries every constraint family."""
        p = _random_problem(rng, 3, 2, ball=True)
        path = tmp_path / "sub.json"
        p.to_json(path)
        doc = json.loads(path.read_text())
        assert doc["n"] == 3
        assert len(doc["halfspace_rows"]) == 2
        assert doc["disk_radius"] == [1.0, 1.0, 1.0]
        assert doc["ball_radius"] == pytest.approx(np.sqrt(2.4))

    def test_bad_settings(self) -> None:
        """Test that nonpositive tolerances are refused."""
        with pytest.raises(ValidationError) as info:
            InnerSettings(feas_tol=0.0)
        assert info.value.field == "solver.inner.feas_tol"


class TestNewtonSystem:
    """Factorization of singular and badly scaled Newton systems."""

    def test_singular_matrix_gets_a_ridge(self) -> None:
        """Test a finite descent step for a rank-one PSD Hessian."""
        H = np.ones((2, 2))
        grad = np.ones(2)
        step = newton_direction(H, grad)
        assert step is not None
        np.testing.assert_allclose(step, [-0.5, -0.5], atol=1e-6)
        assert grad @ step < 0

    def test_badly_scaled_diagonal(self) -> None:
        """Test that diagonal scaling handles entries twenty orders apart."""
        H = np.diag([1e10, 1e-10])
        step = newton_direction(H, np.array([1e10, 1e-10]))
        assert step is not None
        np.testing.assert_allclose(step, [-1.0, -1.0], rtol=1e-10)

    def test_zero_matrix_has_no_step(self) -> None:
        """Test that no ridge rescues a zero Hessian against a nonzero gradient."""
        assert newton_direction(np.zeros((2, 2)), np.ones(2)) is None

    def test_stiff_objective_does_not_raise(self, rng: np.random.Generator) -> None:
        """Test a feasible answer when the quadratic dwarfs the proximal term."""
        base = _random_problem(rng, 6, 4, ball=True)
        p = replace(base, quad=1e8 * base.quad, prox_weight=1e-6)
        report = solve(p)
        assert report.status is not SolveStatus.INFEASIBLE
        assert constraint_violation(p, report.solution) <= 1e-6
        assert np.all(np.isfinite(report.solution))


class TestOracle:
    """Agreement with an independent conic solver on random instances."""

    @pytest.mark.slow
    def test_matches_cvxpy(self, rng: np.random.Generator) -> None:
        """Test 100 instances up to dimension 12: objective within 1e-5, feasibility 1e-6."""
        cp = pytest.importorskip("cvxpy")
        for k in range(100):
            n = 2 + k % 11
            p = _random_problem(rng, n, 1 + k % 6, ball=k % 3 == 0, similarity=k % 4 == 1)
            report = solve(p)

            z = cp.Variable(2 * n)
            xr, xi = z[:n], z[n:]
            Dr, Di = np.real(p.quad), np.imag(p.quad)
            Q = np.block([[Dr, -Di], [Di, Dr]])
            Q = 0.5 * (Q + Q.T)
            lin = np.concatenate([np.real(p.linear), np.imag(p.linear)])
            v = np.concatenate([np.real(p.prox_center), np.imag(p.prox_center)])
            objective = (
                cp.quad_form(z, cp.psd_wrap(Q))
                - lin @ z
                + 0.5 * p.prox_weight * cp.sum_squares(z - v)
            )
            rows = p.halfspace_rows
            cons = [np.real(rows) @ xr + np.imag(rows) @ xi >= p.halfspace_thresholds]
            cons += [cp.square(xr[j]) + cp.square(xi[j]) <= 1.0 for j in range(n)]
            if p.ball_radius is not None:
                cons.append(cp.sum_squares(z) <= p.ball_radius**2)
            if p.similarity_center is not None:
                cr, ci = np.real(p.similarity_center), np.imag(p.similarity_center)
                cons += [
                    cp.square(xr[j] - cr[j]) + cp.square(xi[j] - ci[j]) <= p.similarity_radius**2
                    for j in range(n)
                ]
            problem = cp.Problem(cp.Minimize(objective), cons)
            problem.solve()

            assert report.ok
            assert constraint_violation(p, report.solution) <= 1e-6
            reference = float(problem.value)
            assert abs(report.objective_value - reference) <= 1e-5 * max(1.0, abs(reference))

    def test_maximin_matches_cvxpy(self, rng: np.random.Generator) -> None:
        """Test the achieved minimum margin against the conic epigraph form."""
        cp = pytest.importorskip("cvxpy")
        for k in range(10):
            n = 2 + k % 4
            p = _random_problem(rng, n, 2 + k % 5, ball=False)
            found = maximize_min_margin(p)
            assert found is not None
            _, margin = found

            z, s = cp.Variable(2 * n), cp.Variable()
            xr, xi = z[:n], z[n:]
            rows = p.halfspace_rows
            cons = [np.real(rows) @ xr + np.imag(rows) @ xi - p.halfspace_thresholds >= s]
            cons += [cp.square(xr[j]) + cp.square(xi[j]) <= 1.0 for j in range(n)]
            problem = cp.Problem(cp.Maximize(s), cons)
            problem.solve()
            assert margin == pytest.approx(float(problem.value), abs=1e-5)
