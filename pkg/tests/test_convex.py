"""Barrier solver: small programs with known optima, feasibility phase,
and report invariants."""

import numpy as np
import pytest

from epicontrol.convex import (
    ConvexProgram,
    InfeasibleError,
    LogSumExp,
    phase_one,
    solve,
)


def monomial_objective(sign: float = -1.0):
    """y -> e^{sign*y} with exact derivatives."""

    def fgh(y):
        v = float(np.sum(np.exp(sign * y)))
        g = sign * np.exp(sign * y)
        H = np.diag(sign * sign * np.exp(sign * y))
        return v, g, H

    return fgh


def quadratic_objective(center: np.ndarray):
    def fgh(y):
        d = y - center
        return float(d @ d), 2.0 * d, 2.0 * np.eye(len(y))

    return fgh


class TestLogSumExp:
    def test_value_gradient_hessian(self):
        rng = np.random.default_rng(0)
        A = rng.standard_normal((3, 4))
        b = rng.standard_normal(3)
        lse = LogSumExp(A=A, b=b)
        y = rng.standard_normal(4)
        v, g, H = lse.eval(y)
        assert v == pytest.approx(
            np.log(np.sum(np.exp(A @ y + b))), abs=1e-12)
        h = 1e-6
        for i in range(4):
            e = np.zeros(4)
            e[i] = h
            fd = (lse.value(y + e) - lse.value(y - e)) / (2 * h)
            assert g[i] == pytest.approx(fd, rel=1e-5, abs=1e-8)
            fd2 = (lse.grad(y + e) - lse.grad(y - e)) / (2 * h)
            assert H[:, i] == pytest.approx(fd2, rel=1e-4, abs=1e-6)


class TestSolve:
    def test_active_exponential_constraint(self):
        # minimize e^{-y} subject to y <= 0: optimum at the boundary y = 0
        prog = ConvexProgram(
            dim=1, objective=monomial_objective(-1.0),
            inequalities=(LogSumExp(A=np.array([[1.0]]), b=np.array([0.0])),),
            eq_A=None, eq_b=None, lower=None, upper=None)
        rep = solve(prog, np.array([-1.0]), tol=1e-9)
        assert rep.status == "optimal"
        assert rep.minimizer[0] == pytest.approx(0.0, abs=1e-6)
        assert rep.objective_value == pytest.approx(1.0, abs=1e-6)

    def test_unconstrained_quadratic(self):
        prog = ConvexProgram(dim=1, objective=quadratic_objective(np.array([3.0])),
                             inequalities=(), eq_A=None, eq_b=None,
                             lower=None, upper=None)
        rep = solve(prog, np.array([0.0]), tol=1e-10)
        assert rep.minimizer[0] == pytest.approx(3.0, abs=1e-8)

    def test_symmetric_two_variable_program(self):
        # minimize e^{-y1} + e^{-y2} subject to y1 + y2 <= 0
        prog = ConvexProgram(
            dim=2, objective=monomial_objective(-1.0),
            inequalities=(LogSumExp(A=np.array([[1.0, 1.0]]),
                                    b=np.array([0.0])),),
            eq_A=None, eq_b=None, lower=None, upper=None)
        rep = solve(prog, np.array([-0.5, -0.3]), tol=1e-9)
        assert rep.minimizer == pytest.approx(np.zeros(2), abs=1e-5)
        # grid-search confirmation at 1e-3 resolution
        ys = np.arange(-0.05, 0.0005, 1e-3)
        vals = [np.exp(-a) + np.exp(-b)
                for a in ys for b in ys if a + b <= 0]
        assert rep.objective_value <= min(vals) + 1e-6

    def test_equality_constraint_nullspace(self):
        # minimize e^{y1} + e^{y2} subject to y1 - y2 = 1
        prog = ConvexProgram(
            dim=2, objective=monomial_objective(1.0), inequalities=(),
            eq_A=np.array([[1.0, -1.0]]), eq_b=np.array([1.0]),
            lower=None, upper=None)
        rep = solve(prog, np.array([1.0, 0.0]), tol=1e-10)
        assert rep.minimizer[0] - rep.minimizer[1] == pytest.approx(1.0, abs=1e-9)
        # stationarity on the constraint line: e^{y1} = e^{y2} is impossible,
        # compare against a fine parameter sweep instead
        ts = np.linspace(-2.0, 2.0, 4001)
        sweep = np.exp(ts + 1.0) + np.exp(ts)
        assert rep.objective_value <= sweep.min() + 1e-8

    def test_box_constraints(self):
        prog = ConvexProgram(
            dim=1, objective=monomial_objective(-1.0), inequalities=(),
            eq_A=None, eq_b=None,
            lower=np.array([-2.0]), upper=np.array([0.5]))
        rep = solve(prog, np.array([0.0]), tol=1e-9)
        assert rep.minimizer[0] == pytest.approx(0.5, abs=1e-6)

    def test_optimal_report_invariants(self):
        prog = ConvexProgram(
            dim=2, objective=monomial_objective(-1.0),
            inequalities=(LogSumExp(A=np.array([[1.0, 1.0]]),
                                    b=np.array([0.0])),),
            eq_A=None, eq_b=None, lower=None, upper=None)
        rep = solve(prog, np.array([-0.5, -0.3]), tol=1e-9)
        assert rep.status == "optimal"
        assert rep.kkt_residual <= 1e-6
        for c in prog.all_inequalities():
            assert c.value(rep.minimizer) <= 1e-8

    def test_infeasible_start_rejected(self):
        prog = ConvexProgram(
            dim=1, objective=monomial_objective(-1.0),
            inequalities=(LogSumExp(A=np.array([[1.0]]), b=np.array([0.0])),),
            eq_A=None, eq_b=None, lower=None, upper=None)
        with pytest.raises(ValueError):
            solve(prog, np.array([2.0]))


class TestPhaseOne:
    def test_simple_halfspace(self):
        prog = ConvexProgram(
            dim=1, objective=monomial_objective(-1.0),
            inequalities=(LogSumExp(A=np.array([[1.0]]), b=np.array([0.0])),),
            eq_A=None, eq_b=None, lower=None, upper=None)
        y = phase_one(prog, np.array([5.0]))
        assert y[0] < 0.0

    def test_empty_inequalities_projects_into_box(self):
        prog = ConvexProgram(
            dim=2, objective=monomial_objective(1.0), inequalities=(),
            eq_A=None, eq_b=None,
            lower=np.array([0.0, 0.0]), upper=np.array([1.0, 1.0]))
        y = phase_one(prog, np.array([5.0, -3.0]))
        assert np.all(y > 0.0) and np.all(y < 1.0)

    def test_contradictory_constraints_raise(self):
        # y <= -1 and y >= 1 simultaneously
        prog = ConvexProgram(
            dim=1, objective=monomial_objective(1.0),
            inequalities=(
                LogSumExp(A=np.array([[1.0]]), b=np.array([1.0])),
                LogSumExp(A=np.array([[-1.0]]), b=np.array([1.0])),
            ),
            eq_A=None, eq_b=None, lower=None, upper=None)
        with pytest.raises(InfeasibleError):
            phase_one(prog, np.array([0.0]))

    def test_allocation_subproblem_strictly_feasible(self):
        from conftest import cycle_graph, recipe_bounds
        from epicontrol import AllocationProblem
        from epicontrol.centralized import build_gp

        g = cycle_graph(3)
        prob = AllocationProblem.create(g, recipe_bounds(g), eps_bar=0.2)
        build = build_gp(prob)
        y = phase_one(build.program, build.initial_guess())
        for c in build.program.all_inequalities():
            assert c.value(y) < 0.0
