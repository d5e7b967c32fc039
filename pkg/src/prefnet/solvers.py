"""Optimization kernels: a dense two-phase simplex LP solver and Frank-Wolfe
for smooth concave maximization over linear feasible regions.

Both are deterministic pure functions of their inputs. The simplex uses
Bland's rule, so it cannot cycle; a pivot-count guard converts any
pathological stall into :class:`NumericalFailure` instead of a hang.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

FEAS_TOL = 1e-7
PIVOT_EPS = 1e-9


class NumericalFailure(RuntimeError):
    """The solver could not certify a result (pivot guard or residual check)."""


class InfeasibleRegion(ValueError):
    """The feasible region handed to Frank-Wolfe is empty."""


class NoInteriorPoint(ValueError):
    """The objective is not finite anywhere we can start (e.g. log of a
    variable forced to zero; add epsilon lower bounds)."""


class LpStatus(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class Constraint:
    coeffs: tuple[float, ...]
    relation: str  # "<=", "=", ">="
    rhs: float

    def __post_init__(self) -> None:
        if self.relation not in ("<=", "=", ">="):
            raise ValueError(f"bad relation {self.relation!r}")
        if not np.isfinite(self.rhs):
            raise ValueError("rhs must be finite")


@dataclass
class LpProblem:
    """maximize objective . x subject to the constraint rows and per-variable
    bounds [lo, hi] (hi may be None for unbounded above; lo >= 0)."""

    n_vars: int
    objective: np.ndarray
    constraints: list[Constraint]
    bounds: list[tuple[float, float | None]] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.objective = np.asarray(self.objective, dtype=float)
        if self.objective.shape != (self.n_vars,):
            raise ValueError("objective length != n_vars")
        for i, row in enumerate(self.constraints):
            if len(row.coeffs) != self.n_vars:
                raise ValueError(f"constraint {i} has {len(row.coeffs)} coeffs, expected {self.n_vars}")
        if not self.bounds:
            self.bounds = [(0.0, None)] * self.n_vars
        if len(self.bounds) != self.n_vars:
            raise ValueError("bounds length != n_vars")
        for i, (lo, hi) in enumerate(self.bounds):
            if lo < 0:
                raise ValueError(f"variable {i} has negative lower bound")
            if hi is not None and not np.isfinite(hi):
                self.bounds[i] = (lo, None)


@dataclass(frozen=True)
class LpSolution:
    status: LpStatus
    x: np.ndarray
    objective_value: float


def _pivot(T: np.ndarray, row: int, col: int) -> None:
    T[row] /= T[row, col]
    for r in range(T.shape[0]):
        if r != row and abs(T[r, col]) > 0:
            T[r] -= T[r, col] * T[row]


def _run_simplex(T: np.ndarray, basis: np.ndarray, allowed: int, budget: list[int]) -> str:
    """Minimize T[0,:-1].x over the tableau; Bland's rule. ``allowed`` caps
    the entering-column range (excludes artificials in phase 2). Returns
    "optimal" or "unbounded"; decrements budget in place."""
    m = T.shape[0] - 1
    while True:
        col = -1
        for j in range(allowed):
            if T[0, j] < -PIVOT_EPS:
                col = j
                break
        if col < 0:
            return "optimal"
        row, best_ratio, best_basis = -1, np.inf, np.inf
        for i in range(1, m + 1):
            a = T[i, col]
            if a > PIVOT_EPS:
                ratio = T[i, -1] / a
                # Bland: smallest ratio, ties broken by smallest basic index
                if ratio < best_ratio - PIVOT_EPS or (
                    ratio < best_ratio + PIVOT_EPS and basis[i - 1] < best_basis
                ):
                    row, best_ratio, best_basis = i, ratio, basis[i - 1]
        if row < 0:
            return "unbounded"
        _pivot(T, row, col)
        basis[row - 1] = col
        budget[0] -= 1
        if budget[0] <= 0:
            raise NumericalFailure("simplex pivot guard exceeded")


def lp_solve(p: LpProblem) -> LpSolution:
    """Solve ``maximize c.x`` over the rows and bounds of ``p``.

    Two-phase dense simplex. Raises :class:`NumericalFailure` if the pivot
    guard of 10*(rows+cols)^2 trips or the final residual check fails.
    """
    n = p.n_vars
    lo = np.array([b[0] for b in p.bounds])
    for i, (l, h) in enumerate(p.bounds):
        if h is not None and h < l:
            return LpSolution(LpStatus.INFEASIBLE, np.full(n, np.nan), np.nan)

    # shift x = lo + y, y >= 0; upper bounds become rows y_i <= hi - lo
    rows: list[tuple[np.ndarray, str, float]] = []
    for c in p.constraints:
        a = np.asarray(c.coeffs, dtype=float)
        rows.append((a, c.relation, c.rhs - float(a @ lo)))
    for i, (l, h) in enumerate(p.bounds):
        if h is not None:
            e = np.zeros(n)
            e[i] = 1.0
            rows.append((e, "<=", h - l))

    m = len(rows)
    n_slack = sum(1 for _, rel, _ in rows if rel != "=")
    A = np.zeros((m, n + n_slack))
    b = np.zeros(m)
    slack_j = n
    slack_col = np.full(m, -1)
    for i, (a, rel, rhs) in enumerate(rows):
        A[i, :n] = a
        b[i] = rhs
        if rel != "=":
            A[i, slack_j] = 1.0 if rel == "<=" else -1.0
            slack_col[i] = slack_j
            slack_j += 1
    flip = b < 0
    A[flip] *= -1.0
    b[flip] *= -1.0

    # rows whose slack is +1 after flipping start basic; others get artificials
    need_art = [i for i in range(m) if slack_col[i] < 0 or A[i, slack_col[i]] < 0]
    n_art = len(need_art)
    ncols = n + n_slack + n_art
    T = np.zeros((m + 1, ncols + 1))
    T[1:, : n + n_slack] = A
    T[1:, -1] = b
    basis = np.empty(m, dtype=int)
    art_j = n + n_slack
    for i in range(m):
        if i in need_art:
            T[i + 1, art_j] = 1.0
            basis[i] = art_j
            art_j += 1
        else:
            basis[i] = slack_col[i]

    budget = [max(1000, 10 * (m + ncols) ** 2)]

    if n_art:
        # phase 1: minimize sum of artificials
        T[0, n + n_slack : ncols] = 1.0
        for i in range(m):
            if basis[i] >= n + n_slack:
                T[0] -= T[i + 1]
        _run_simplex(T, basis, ncols, budget)
        if T[0, -1] < -FEAS_TOL * (1.0 + float(np.abs(b).max(initial=0.0))):
            return LpSolution(LpStatus.INFEASIBLE, np.full(n, np.nan), np.nan)
        for i in range(m):
            if basis[i] >= n + n_slack:
                # degenerate artificial still basic: pivot out or the row is redundant
                for j in range(n + n_slack):
                    if abs(T[i + 1, j]) > 1e-8:
                        _pivot(T, i + 1, j)
                        basis[i] = j
                        break

    # phase 2: minimize -c.y over structural+slack columns
    T[0] = 0.0
    T[0, :n] = -p.objective
    for i in range(m):
        if basis[i] < n + n_slack and abs(T[0, basis[i]]) > 0:
            T[0] -= T[0, basis[i]] * T[i + 1]
    status = _run_simplex(T, basis, n + n_slack, budget)
    if status == "unbounded":
        return LpSolution(LpStatus.UNBOUNDED, np.full(n, np.nan), np.nan)

    y = np.zeros(n + n_slack + n_art)
    for i in range(m):
        y[basis[i]] = T[i + 1, -1]
    x = lo + y[:n]

    for c in p.constraints:
        a = np.asarray(c.coeffs)
        lhs = float(a @ x)
        tol = FEAS_TOL * (1.0 + abs(c.rhs))
        ok = (
            lhs <= c.rhs + tol
            if c.relation == "<="
            else lhs >= c.rhs - tol
            if c.relation == ">="
            else abs(lhs - c.rhs) <= tol
        )
        if not ok:
            raise NumericalFailure(f"residual check failed: {lhs} {c.relation} {c.rhs}")
    return LpSolution(LpStatus.OPTIMAL, x, float(p.objective @ x))


# ---------------------------------------------------------------------------
# Frank-Wolfe


class LpRegion:
    """Linear-maximization oracle backed by constraint rows + bounds."""

    def __init__(self, n_vars: int, constraints: list[Constraint], bounds=None):
        self.n_vars = n_vars
        self.constraints = constraints
        self.bounds = bounds if bounds is not None else [(0.0, None)] * n_vars

    def argmax(self, direction: np.ndarray) -> np.ndarray:
        sol = lp_solve(LpProblem(self.n_vars, np.asarray(direction, dtype=float),
                                 self.constraints, list(self.bounds)))
        if sol.status is LpStatus.INFEASIBLE:
            raise InfeasibleRegion("empty feasible region")
        if sol.status is LpStatus.UNBOUNDED:
            raise InfeasibleRegion("region is unbounded; Frank-Wolfe needs a bounded region")
        return sol.x

    def initial_vertices(self) -> list[np.ndarray]:
        """A few probe vertices; their average is interior to the hull."""
        pts = [self.argmax(np.ones(self.n_vars)), self.argmax(-np.ones(self.n_vars))]
        for i in range(min(self.n_vars, 8)):
            e = np.zeros(self.n_vars)
            e[i] = 1.0
            pts.append(self.argmax(e))
        return pts


class VertexSet:
    """Linear-maximization oracle over the convex hull of explicit points."""

    def __init__(self, vertices: np.ndarray):
        self.vertices = np.asarray(vertices, dtype=float)
        if self.vertices.ndim != 2 or len(self.vertices) == 0:
            raise InfeasibleRegion("need a nonempty 2-D vertex array")

    def argmax(self, direction: np.ndarray) -> np.ndarray:
        return self.vertices[int(np.argmax(self.vertices @ np.asarray(direction)))]

    def initial_vertices(self) -> list[np.ndarray]:
        return list(self.vertices)


def maximize_concave(region, f, grad, tol: float = 1e-5, max_iters: int = 500) -> np.ndarray:
    """Pairwise Frank-Wolfe maximization of a smooth concave ``f`` over
    ``region`` (any object with ``argmax(direction)`` and
    ``initial_vertices()``).

    The iterate is kept as an explicit convex combination of region vertices,
    and each round moves weight from the worst active vertex onto the best
    oracle vertex (pairwise steps dodge the zig-zag that stalls plain
    Frank-Wolfe short of tight gap targets). Stops when the duality gap
    grad(x).(s - x) drops to ``tol`` or after ``max_iters`` rounds; the value
    of the returned point is the best seen, so it is nondecreasing in
    ``max_iters``. Raises :class:`NoInteriorPoint` if ``f`` is not finite at
    the starting point.
    """
    actives: list[np.ndarray] = []
    index: dict[bytes, int] = {}
    for v in region.initial_vertices():
        key = v.tobytes()
        if key not in index:
            index[key] = len(actives)
            actives.append(v)
    weights = np.full(len(actives), 1.0 / len(actives))

    def combine() -> np.ndarray:
        return np.asarray(actives).T @ weights

    x = combine()
    fx = f(x)
    if not np.isfinite(fx):
        raise NoInteriorPoint("objective not finite at the starting point")
    x_best, f_best = x, fx

    for _ in range(max_iters):
        g = np.asarray(grad(x), dtype=float)
        s = region.argmax(g)
        gap = float(g @ (s - x))
        if gap <= tol:
            break
        pos = np.flatnonzero(weights > 1e-15)
        away = int(pos[np.argmin([float(g @ actives[i]) for i in pos])])
        d = s - actives[away]
        slope = float(g @ d)
        if slope <= PIVOT_EPS:
            break
        t_max = float(weights[away])
        if float(np.asarray(grad(x + t_max * d)) @ d) >= 0:
            t = t_max  # drop step: the away vertex leaves the active set
        else:
            lo_t, hi_t = 0.0, t_max
            for _ in range(60):
                mid = 0.5 * (lo_t + hi_t)
                if float(np.asarray(grad(x + mid * d)) @ d) > 0:
                    lo_t = mid
                else:
                    hi_t = mid
            t = lo_t
            if t <= 0.0:
                break
        key = s.tobytes()
        if key not in index:
            index[key] = len(actives)
            actives.append(s)
            weights = np.append(weights, 0.0)
        weights[index[key]] += t
        weights[away] -= t
        if weights[away] <= 1e-15:
            weights[away] = 0.0
        x = combine()
        f_new = f(x)
        if np.isfinite(f_new) and f_new > f_best:
            x_best, f_best = x, f_new
        elif t < t_max and f_new <= fx:
            break  # interior step made no numeric progress
        fx = f_new
    return x_best


def check_gradient(f, grad, x: np.ndarray, rel: float = 1e-5, h: float = 1e-6) -> None:
    """Assert ``grad`` matches central finite differences of ``f`` at ``x``."""
    x = np.asarray(x, dtype=float)
    g = np.asarray(grad(x), dtype=float)
    for i in range(len(x)):
        e = np.zeros_like(x)
        e[i] = h
        fd = (f(x + e) - f(x - e)) / (2 * h)
        if abs(fd - g[i]) > rel * (1.0 + abs(fd)):
            raise AssertionError(f"gradient mismatch at coord {i}: fd={fd}, grad={g[i]}")
