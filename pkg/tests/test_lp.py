import itertools

import numpy as np
import pytest

from wassmdp import lp


def solve(objective, constraints, bounds=None):
    return lp.solve_lp(lp.LpProblem(np.asarray(objective, dtype=float), tuple(constraints), bounds))


class TestBasics:
    def test_single_variable_box(self):
        sol = solve([1.0], [([1.0], lp.LEQ, 3.0)], [(0.0, None)])
        assert sol.status == lp.OPTIMAL
        assert sol.x[0] == pytest.approx(3.0, abs=1e-9)
        assert sol.objective_value == pytest.approx(3.0, abs=1e-9)

    def test_two_variable_simplex_face(self):
        sol = solve([1.0, 1.0], [([1.0, 1.0], lp.LEQ, 1.0)], [(0.0, None), (0.0, None)])
        assert sol.status == lp.OPTIMAL
        assert sol.objective_value == pytest.approx(1.0, abs=1e-9)

    def test_bounds_only_problem(self):
        sol = solve([2.0, -1.0], [], [(0.0, 5.0), (1.0, 4.0)])
        assert sol.status == lp.OPTIMAL
        assert sol.x[0] == pytest.approx(5.0)
        assert sol.x[1] == pytest.approx(1.0)

    def test_equality_constraint(self):
        sol = solve([1.0, 2.0], [([1.0, 1.0], lp.EQ, 2.0)], [(0.0, None), (0.0, None)])
        assert sol.status == lp.OPTIMAL
        assert sol.x[1] == pytest.approx(2.0, abs=1e-9)
        assert sol.objective_value == pytest.approx(4.0, abs=1e-9)

    def test_free_variables(self):
        sol = solve(
            [-1.0, -1.0],
            [([1.0, 0.0], lp.GEQ, -3.0), ([0.0, 1.0], lp.GEQ, 2.0)],
        )
        assert sol.status == lp.OPTIMAL
        assert sol.x[0] == pytest.approx(-3.0, abs=1e-9)
        assert sol.x[1] == pytest.approx(2.0, abs=1e-9)

    def test_negative_rhs_normalization(self):
        sol = solve([1.0], [([-1.0], lp.GEQ, -4.0)], [(0.0, None)])
        assert sol.status == lp.OPTIMAL
        assert sol.x[0] == pytest.approx(4.0, abs=1e-9)


class TestStatuses:
    def test_infeasible_rows(self):
        sol = solve([1.0], [([1.0], lp.LEQ, 1.0), ([1.0], lp.GEQ, 2.0)])
        assert sol.status == lp.INFEASIBLE
        assert sol.x is None

    def test_infeasible_crossed_bounds(self):
        sol = solve([1.0], [], [(2.0, 1.0)])
        assert sol.status == lp.INFEASIBLE

    def test_unbounded(self):
        sol = solve([1.0], [([1.0], lp.GEQ, 0.0)], [(0.0, None)])
        assert sol.status == lp.UNBOUNDED

    def test_unbounded_free_direction(self):
        sol = solve([0.0, 1.0], [([1.0, 0.0], lp.LEQ, 1.0)])
        assert sol.status == lp.UNBOUNDED


class TestMalformedInput:
    def test_nan_objective(self):
        with pytest.raises(ValueError, match="non-finite"):
            lp.LpProblem(np.array([np.nan]), ())

    def test_nan_constraint(self):
        with pytest.raises(ValueError, match="non-finite"):
            lp.LpProblem(np.array([1.0]), ((np.array([np.nan]), lp.LEQ, 1.0),))

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="coefficients"):
            lp.LpProblem(np.array([1.0, 2.0]), ((np.array([1.0]), lp.LEQ, 1.0),))

    def test_bad_relation(self):
        with pytest.raises(ValueError, match="relation"):
            lp.LpProblem(np.array([1.0]), ((np.array([1.0]), "<", 1.0),))

    def test_wrong_bound_count(self):
        with pytest.raises(ValueError, match="bound"):
            lp.LpProblem(np.array([1.0, 1.0]), (), ((0.0, 1.0),))


def enumerate_vertex_optimum(A, b, c):
    """Brute-force transportation oracle: scan every basic feasible solution.

    A must have full row rank after dropping dependent rows; candidates are
    all column subsets of that size.
    """
    rank = np.linalg.matrix_rank(A)
    # reduce to `rank` independent rows
    keep = []
    for i in range(A.shape[0]):
        trial = keep + [i]
        if np.linalg.matrix_rank(A[trial]) == len(trial):
            keep.append(i)
        if len(keep) == rank:
            break
    A_r, b_r = A[keep], b[keep]
    best = np.inf
    for cols in itertools.combinations(range(A.shape[1]), rank):
        B = A_r[:, list(cols)]
        if abs(np.linalg.det(B)) < 1e-10:
            continue
        xb = np.linalg.solve(B, b_r)
        if xb.min() < -1e-9:
            continue
        x = np.zeros(A.shape[1])
        x[list(cols)] = xb
        if np.abs(A @ x - b).max() > 1e-8:
            continue
        best = min(best, c @ x)
    return best


class TestTransportationOracle:
    def test_random_4x4_matches_vertex_enumeration(self):
        rng = np.random.default_rng(23)
        for trial in range(3):
            cost = rng.uniform(0.1, 2.0, size=(4, 4))
            mu = rng.dirichlet(np.ones(4))
            nu = rng.dirichlet(np.ones(4))
            A = np.zeros((8, 16))
            for i in range(4):
                A[i, i * 4 : (i + 1) * 4] = 1.0
                A[4 + i, i::4] = 1.0
            b = np.concatenate([mu, nu])
            expected = enumerate_vertex_optimum(A, b, cost.ravel())
            constraints = [(A[i], lp.EQ, b[i]) for i in range(8)]
            sol = solve(-cost.ravel(), constraints, [(0.0, None)] * 16)
            assert sol.status == lp.OPTIMAL
            assert -sol.objective_value == pytest.approx(expected, abs=1e-9)


class TestGridSearchOracle:
    def test_two_variable_problems_match_grid_search(self):
        # Coarse but sound: the solver's point is certified feasible, so its
        # value can only exceed the best grid point by the grid resolution.
        rng = np.random.default_rng(53)
        grid = np.linspace(0.0, 1.0, 201)
        xs, ys = np.meshgrid(grid, grid)
        pts = np.stack([xs.ravel(), ys.ravel()], axis=1)
        for _ in range(25):
            c = rng.uniform(-2.0, 2.0, 2)
            rows = [rng.uniform(-2.0, 2.0, 2) for _ in range(3)]
            rhs = [float(rng.uniform(-0.5, 2.0)) for _ in range(3)]
            feasible = np.ones(pts.shape[0], dtype=bool)
            for row, b in zip(rows, rhs):
                feasible &= pts @ row <= b + 1e-12
            sol = solve(
                c,
                [(row, lp.LEQ, b) for row, b in zip(rows, rhs)],
                [(0.0, 1.0), (0.0, 1.0)],
            )
            if not feasible.any():
                # the grid can miss a sliver of feasibility, so only the
                # converse direction is checked
                continue
            grid_best = (pts[feasible] @ c).max()
            assert sol.status == lp.OPTIMAL
            resolution = 0.005 * (abs(c[0]) + abs(c[1]))
            assert sol.objective_value >= grid_best - 1e-9
            assert sol.objective_value <= grid_best + resolution + 1e-9


class TestSolutionContracts:
    def _random_problem(self, rng):
        nv = int(rng.integers(2, 6))
        nc = int(rng.integers(1, 6))
        constraints = []
        for _ in range(nc):
            row = rng.normal(size=nv)
            rel = rng.choice([lp.LEQ, lp.GEQ, lp.EQ], p=[0.5, 0.3, 0.2])
            constraints.append((row, rel, float(rng.normal())))
        bounds = [(0.0, float(rng.uniform(0.5, 3.0))) for _ in range(nv)]
        return lp.LpProblem(rng.normal(size=nv), tuple(constraints), tuple(bounds))

    def test_feasibility_certified_within_tolerance(self):
        rng = np.random.default_rng(31)
        found = 0
        for _ in range(60):
            problem = self._random_problem(rng)
            sol = lp.solve_lp(problem)
            if sol.status != lp.OPTIMAL:
                continue
            found += 1
            for row, rel, rhs in problem.constraints:
                lhs = row @ sol.x
                if rel == lp.LEQ:
                    assert lhs <= rhs + 1e-9
                elif rel == lp.GEQ:
                    assert lhs >= rhs - 1e-9
                else:
                    assert abs(lhs - rhs) <= 1e-9
            assert sol.objective_value == pytest.approx(
                float(problem.objective @ sol.x), abs=1e-9
            )
        assert found >= 20

    def test_dual_price_out_matches_objective(self):
        rng = np.random.default_rng(37)
        found = 0
        for _ in range(60):
            problem = self._random_problem(rng)
            sol = lp.solve_lp(problem)
            if sol.status != lp.OPTIMAL:
                continue
            found += 1
            assert sol.dual_objective_value == pytest.approx(
                sol.objective_value, abs=1e-8 * (1.0 + abs(sol.objective_value))
            )
        assert found >= 20

    def test_bitwise_determinism(self):
        rng = np.random.default_rng(41)
        problem = self._random_problem(rng)
        a = lp.solve_lp(problem)
        b = lp.solve_lp(problem)
        assert a.status == b.status
        if a.status == lp.OPTIMAL:
            assert np.array_equal(a.x, b.x)
            assert a.objective_value == b.objective_value
            assert np.array_equal(a.duals, b.duals)

    def test_degenerate_problem_terminates(self):
        # many redundant rows through the same vertex
        constraints = [([1.0, 1.0], lp.LEQ, 1.0)] * 6 + [([1.0, 0.0], lp.LEQ, 1.0)] * 4
        sol = solve([1.0, 1.0], constraints, [(0.0, None), (0.0, None)])
        assert sol.status == lp.OPTIMAL
        assert sol.objective_value == pytest.approx(1.0, abs=1e-9)
