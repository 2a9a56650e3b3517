"""Dense two-phase simplex solver for small linear programs.

Maximizes ``objective @ x`` over general relational constraints plus
per-variable bounds.  Everything is converted to equality standard form
with nonnegative variables, phase 1 drives artificial variables out, and
phase 2 optimizes the real objective.  The final basis is re-factorized
against the original data so the returned point is certified feasible
rather than inherited from accumulated tableau arithmetic.

Pivoting follows Bland's rule throughout (lowest eligible entering
index, ratio-test ties broken by lowest basis variable index), which
makes the solver deterministic and provably cycle-free; the problem
sizes here are small enough that robustness is worth more than pivot
counts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

LEQ, EQ, GEQ = "<=", "==", ">="
_RELATIONS = (LEQ, EQ, GEQ)

FEASIBILITY_TOL = 1e-9
OPTIMALITY_TOL = 1e-9
_PIVOT_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class LpProblem:
    """maximize objective @ x subject to rows and per-variable bounds.

    ``constraints`` is a sequence of (row, relation, rhs) with relation in
    {"<=", "==", ">="}.  ``bounds`` gives one (lower, upper) pair per
    variable where either side may be None (or +-inf) for unbounded; the
    default is free variables.
    """

    objective: np.ndarray
    constraints: tuple
    bounds: tuple | None = None

    def __post_init__(self):
        c = np.array(self.objective, dtype=float).ravel()
        if c.size == 0:
            raise ValueError("objective must have at least one variable")
        if not np.all(np.isfinite(c)):
            raise ValueError("objective contains non-finite coefficients")
        object.__setattr__(self, "objective", c)
        rows = []
        for idx, item in enumerate(self.constraints):
            try:
                row, rel, rhs = item
            except (TypeError, ValueError):
                raise ValueError(f"constraint {idx} is not a (row, relation, rhs) triple")
            row = np.array(row, dtype=float).ravel()
            if row.shape[0] != c.shape[0]:
                raise ValueError(
                    f"constraint {idx} has {row.shape[0]} coefficients, expected {c.shape[0]}"
                )
            if not np.all(np.isfinite(row)) or not np.isfinite(rhs):
                raise ValueError(f"constraint {idx} contains non-finite coefficients")
            if rel not in _RELATIONS:
                raise ValueError(f"constraint {idx} has unknown relation {rel!r}")
            rows.append((row, rel, float(rhs)))
        object.__setattr__(self, "constraints", tuple(rows))
        if self.bounds is not None:
            bnds = []
            if len(self.bounds) != c.shape[0]:
                raise ValueError(
                    f"got {len(self.bounds)} bound pairs for {c.shape[0]} variables"
                )
            for j, (lo, hi) in enumerate(self.bounds):
                lo = None if lo is None or lo == -np.inf else float(lo)
                hi = None if hi is None or hi == np.inf else float(hi)
                if lo is not None and not np.isfinite(lo):
                    raise ValueError(f"bound for variable {j} is not finite")
                if hi is not None and not np.isfinite(hi):
                    raise ValueError(f"bound for variable {j} is not finite")
                bnds.append((lo, hi))
            object.__setattr__(self, "bounds", tuple(bnds))

    @property
    def n_vars(self) -> int:
        return self.objective.shape[0]


@dataclass(frozen=True, eq=False)
class LpSolution:
    """Solver outcome; x and the objective are present only when optimal.

    ``duals`` are the equality prices of the internal standard form and
    ``dual_objective_value`` is their independently re-factorized price-out
    of the optimum, which must agree with ``objective_value``.
    """

    status: str
    x: np.ndarray | None = None
    objective_value: float | None = None
    duals: np.ndarray | None = None
    dual_objective_value: float | None = None


class _Standard:
    """Equality standard form plus the affine map back to original variables.

    Each standard column is a signed copy of one original variable:
    x = q + scatter(signs * u over src), which keeps the transform free of
    dense matrix products.
    """

    def __init__(self, A, b, relations, c, src, signs, q, offset):
        self.A = A
        self.b = b
        self.relations = relations
        self.c = c
        self.src = src
        self.signs = signs
        self.q = q
        self.offset = offset

    def recover(self, u):
        x = self.q.copy()
        np.add.at(x, self.src, self.signs * u)
        return x


def _standardize(problem: LpProblem):
    """Shift/split variables to u >= 0 and normalize rows to b >= 0.

    Returns None when a variable's bounds cross (trivially infeasible).
    """
    nv = problem.n_vars
    bounds = problem.bounds or tuple((None, None) for _ in range(nv))
    src = []
    signs = []
    q = np.zeros(nv)
    upper_rows = []  # (u column, upper value) for two-sided bounds
    for j, (lo, hi) in enumerate(bounds):
        if lo is not None and hi is not None and hi < lo - FEASIBILITY_TOL:
            return None
        if lo is not None:
            if hi is not None:
                upper_rows.append((len(src), hi - lo))
            src.append(j)
            signs.append(1.0)
            q[j] = lo
        elif hi is not None:
            src.append(j)
            signs.append(-1.0)
            q[j] = hi
        else:
            src.append(j)
            signs.append(1.0)
            src.append(j)
            signs.append(-1.0)
    src = np.array(src, dtype=int)
    signs = np.array(signs)
    k = src.shape[0]

    m0 = len(problem.constraints)
    A = np.zeros((m0 + len(upper_rows), k))
    b = np.zeros(m0 + len(upper_rows))
    relations = []
    if m0:
        A0 = np.vstack([row for row, _, _ in problem.constraints])
        A[:m0] = A0[:, src] * signs[None, :]
        b[:m0] = np.array([rhs for _, _, rhs in problem.constraints]) - A0 @ q
        relations.extend(rel for _, rel, _ in problem.constraints)
    for r, (col, ub) in enumerate(upper_rows):
        A[m0 + r, col] = 1.0
        b[m0 + r] = ub
        relations.append(LEQ)

    flip = {LEQ: GEQ, GEQ: LEQ, EQ: EQ}
    for i in range(A.shape[0]):
        if b[i] < 0.0:
            A[i] = -A[i]
            b[i] = -b[i]
            relations[i] = flip[relations[i]]

    c = problem.objective[src] * signs
    offset = float(problem.objective @ q)
    return _Standard(A, b, relations, c, src, signs, q, offset)


def _run_simplex(tab, basis, ncols):
    """Minimize the objective row in place under Bland's rule.

    Returns 'optimal' or 'unbounded'.  The pivot budget is a guard
    against implementation bugs; Bland's rule itself cannot cycle.
    """
    m = tab.shape[0] - 1
    max_pivots = 5000 + 60 * (m + ncols)
    rhs = tab[:m, -1]
    ratios = np.empty(m)
    work = np.empty_like(tab)
    for _ in range(max_pivots):
        reduced = tab[-1, :ncols]
        cand = reduced < -OPTIMALITY_TOL
        if not cand.any():
            return "optimal"
        col = int(np.argmax(cand))
        column = tab[:m, col]
        pos = column > _PIVOT_TOL
        if not pos.any():
            return "unbounded"
        ratios.fill(np.inf)
        np.divide(rhs, column, out=ratios, where=pos)
        theta = ratios.min()
        tied = np.flatnonzero(ratios <= theta + 1e-12 * (1.0 + abs(theta)))
        p = int(tied[0]) if tied.size == 1 else int(tied[np.argmin(basis[tied])])
        piv_row = tab[p]
        piv_row /= piv_row[col]
        factors = tab[:, col].copy()
        factors[p] = 0.0
        np.multiply(factors[:, None], piv_row[None, :], out=work)
        np.subtract(tab, work, out=tab)
        tab[:, col] = 0.0
        tab[p, col] = 1.0
        basis[p] = col
    raise ArithmeticError("simplex did not terminate within its pivot budget")


def _pivot(tab, basis, p, col):
    piv_row = tab[p]
    piv_row /= piv_row[col]
    factors = tab[:, col].copy()
    factors[p] = 0.0
    tab -= factors[:, None] * piv_row[None, :]
    tab[:, col] = 0.0
    tab[p, col] = 1.0
    basis[p] = col


def _solve_unconstrained(problem, std):
    if np.any(std.c > OPTIMALITY_TOL):
        return LpSolution(status=UNBOUNDED)
    x = std.recover(np.zeros(std.src.shape[0]))
    value = float(problem.objective @ x)
    return LpSolution(OPTIMAL, x, value, np.zeros(0), std.offset)


def solve_lp(problem: LpProblem) -> LpSolution:
    """Solve a small dense LP to a certified-feasible optimal vertex.

    Infeasibility and unboundedness are reported through the status, not
    by raising; only malformed input raises.
    """
    std = _standardize(problem)
    if std is None:
        return LpSolution(status=INFEASIBLE)
    m, k = std.A.shape
    if m == 0:
        return _solve_unconstrained(problem, std)

    slack_of_row = np.full(m, -1, dtype=int)
    ns = 0
    for i, rel in enumerate(std.relations):
        if rel != EQ:
            slack_of_row[i] = k + ns
            ns += 1
    art_start = k + ns
    art_rows = [i for i, rel in enumerate(std.relations) if rel != LEQ]
    na = len(art_rows)
    ncols = art_start + na

    full = np.zeros((m, ncols))
    full[:, :k] = std.A
    basis = np.empty(m, dtype=int)
    for i, rel in enumerate(std.relations):
        if rel == LEQ:
            full[i, slack_of_row[i]] = 1.0
            basis[i] = slack_of_row[i]
        elif rel == GEQ:
            full[i, slack_of_row[i]] = -1.0
    for r, i in enumerate(art_rows):
        full[i, art_start + r] = 1.0
        basis[i] = art_start + r

    tab = np.zeros((m + 1, ncols + 1))
    tab[:m, :ncols] = full
    tab[:m, -1] = std.b

    kept = np.arange(m)
    if na:
        # Phase 1 minimizes the artificial total; starting reduced costs are
        # the negated column sums over the artificial rows.
        for i in art_rows:
            tab[-1] -= tab[i]
        tab[-1, art_start:ncols] = 0.0
        status = _run_simplex(tab, basis, ncols)
        if status != "optimal":
            raise ArithmeticError("phase-1 subproblem reported unbounded")
        phase1 = -tab[-1, -1]
        if phase1 > FEASIBILITY_TOL * (1.0 + std.b.max(initial=0.0)):
            return LpSolution(status=INFEASIBLE)
        drop = []
        for p in range(m):
            if basis[p] >= art_start:
                row = np.abs(tab[p, :art_start])
                j = int(np.argmax(row))
                if row[j] > _PIVOT_TOL:
                    _pivot(tab, basis, p, j)
                else:
                    drop.append(p)
        if drop:
            tab = np.delete(tab, drop, axis=0)
            basis = np.delete(basis, drop)
            kept = np.delete(kept, drop)
            m = basis.shape[0]
        tab = np.hstack([tab[:, :art_start], tab[:, -1:]])
        ncols = art_start

    c_min = np.zeros(ncols)
    c_min[:k] = -std.c
    tab[-1, :ncols] = c_min
    tab[-1, -1] = 0.0
    for p in range(m):
        cb = c_min[basis[p]]
        if cb != 0.0:
            tab[-1] -= cb * tab[p]
    status = _run_simplex(tab, basis, ncols)
    if status == "unbounded":
        return LpSolution(status=UNBOUNDED)

    # Re-factorize the final basis against the original standard-form data
    # so the answer does not inherit accumulated tableau drift.
    full_ns = full[:, :art_start][kept]
    b_kept = std.b[kept]
    B = full_ns[:, basis]
    try:
        x_basic = np.linalg.solve(B, b_kept)
        y_min = np.linalg.solve(B.T, c_min[basis])
    except np.linalg.LinAlgError:
        x_basic = tab[:m, -1].copy()
        y_min = np.linalg.lstsq(B.T, c_min[basis], rcond=None)[0]
    u = np.zeros(ncols)
    u[basis] = x_basic
    u[np.abs(u) < 1e-12] = 0.0
    if u.min(initial=0.0) < -1e-7:
        raise ArithmeticError("refined basic solution lost nonnegativity")

    x = std.recover(u[:k])
    value = float(problem.objective @ x)
    duals = -y_min
    dual_value = float(duals @ b_kept) + std.offset
    _certify(problem, x)
    return LpSolution(OPTIMAL, x, value, duals, dual_value)


def _certify(problem, x):
    for idx, (row, rel, rhs) in enumerate(problem.constraints):
        lhs = float(row @ x)
        tol = FEASIBILITY_TOL * max(1.0, abs(rhs))
        if rel == LEQ and lhs > rhs + tol:
            raise ArithmeticError(f"constraint {idx} violated by {lhs - rhs:.3e}")
        if rel == GEQ and lhs < rhs - tol:
            raise ArithmeticError(f"constraint {idx} violated by {rhs - lhs:.3e}")
        if rel == EQ and abs(lhs - rhs) > tol:
            raise ArithmeticError(f"constraint {idx} violated by {abs(lhs - rhs):.3e}")
    if problem.bounds is not None:
        for j, (lo, hi) in enumerate(problem.bounds):
            if lo is not None and x[j] < lo - FEASIBILITY_TOL:
                raise ArithmeticError(f"lower bound on variable {j} violated")
            if hi is not None and x[j] > hi + FEASIBILITY_TOL:
                raise ArithmeticError(f"upper bound on variable {j} violated")
