"""MILP backends.

``builtin`` is a dense bounded-variable primal simplex (two phases, Dantzig pricing
with a Bland fallback on stalling) driven by best-first branch-and-bound on the
binaries. ``highs`` hands the same arrays to HiGHS through scipy.
"""
from __future__ import annotations

import heapq
import itertools
import math
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .model import EQ, GE, LE, MilpModel

OPTIMAL, INFEASIBLE, ITERATION_LIMIT = "Optimal", "Infeasible", "IterationLimit"
FEAS_TOL = 1e-6
INT_TOL = 1e-6


class SolverError(RuntimeError):
    pass


class IterationLimit(SolverError):
    pass


@dataclass
class SolveResult:
    status: str
    objective: float
    values: np.ndarray | None
    stats: dict = field(default_factory=dict)
    names: list | None = None

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL

    @property
    def assignment(self) -> dict:
        if self.values is None:
            return {}
        return dict(zip(self.names, self.values.tolist()))


@dataclass(frozen=True)
class Arrays:
    c: np.ndarray
    A: sp.csr_matrix
    row_lo: np.ndarray
    row_hi: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    integer: np.ndarray
    constant: float


def to_arrays(model: MilpModel) -> Arrays:
    n, m = model.n_vars, len(model.rows)
    c = np.zeros(n)
    for i, coef in model.objective.items():
        c[i] += coef
    data, ri, ci = [], [], []
    lo = np.full(m, -np.inf)
    hi = np.full(m, np.inf)
    for r, row in enumerate(model.rows):
        for i, coef in row.coefs.items():
            ri.append(r)
            ci.append(i)
            data.append(coef)
        if row.sense in (LE, EQ):
            hi[r] = row.rhs
        if row.sense in (GE, EQ):
            lo[r] = row.rhs
    A = sp.csr_matrix((data, (ri, ci)), shape=(m, n))
    return Arrays(c, A, lo, hi, np.array(model.lb, float), np.array(model.ub, float),
                  np.array(model.binary, bool), model.obj_constant)


def row_violation(arrays: Arrays, x: np.ndarray) -> float:
    ax = arrays.A @ x
    viol = np.maximum(arrays.row_lo - ax, 0.0).max(initial=0.0)
    viol = max(viol, np.maximum(ax - arrays.row_hi, 0.0).max(initial=0.0))
    viol = max(viol, np.maximum(arrays.lb - x, 0).max(initial=0.0), np.maximum(x - arrays.ub, 0).max(initial=0.0))
    return float(viol)


# -- bounded-variable primal simplex ---------------------------------------------------

class _Simplex:
    """min c x  s.t.  A x + s = 0 with row bounds on s, lb <= x <= ub.

    Slack s_r carries the row bounds: A x - s = 0, row_lo <= s <= row_hi.
    """

    def __init__(self, arrays: Arrays, lb, ub, max_iter: int, tol: float = 1e-9):
        A = arrays.A
        m, n = A.shape
        self.m, self.n = m, n
        # columns: structural, slacks (-I), artificials (+-I)
        self.cols = sp.hstack([A, -sp.identity(m), sp.identity(m)], format="csc")
        self.lo = np.concatenate([lb, arrays.row_lo, np.zeros(m)])
        self.hi = np.concatenate([ub, arrays.row_hi, np.full(m, np.inf)])
        self.cost = np.concatenate([arrays.c, np.zeros(2 * m)])
        self.max_iter = max_iter
        self.tol = tol
        self.iterations = 0

    def _col(self, j):
        return self.dense[:, j]

    def solve(self):
        m, n = self.m, self.n
        lo, hi = self.lo, self.hi
        if np.any(lo > hi + 1e-12):
            return INFEASIBLE, None
        x = np.where(np.isfinite(lo), lo, np.where(np.isfinite(hi), hi, 0.0))
        # rows: A x_struct - s + a*sign = 0 ; pick slack basic when it can absorb the residual
        ax = self.cols[:, :n] @ x[:n]
        basis = np.empty(m, dtype=int)
        art_sign = np.ones(m)
        for r in range(m):
            if lo[n + r] - 1e-12 <= ax[r] <= hi[n + r] + 1e-12:
                basis[r] = n + r
                x[n + r] = ax[r]
            else:
                target = min(max(ax[r], lo[n + r]), hi[n + r])
                x[n + r] = target
                resid = target - ax[r]  # a*sign = resid with a >= 0
                art_sign[r] = 1.0 if resid >= 0 else -1.0
                basis[r] = n + m + r
                x[n + m + r] = abs(resid)
        # artificials not in the basis stay at zero, fixed
        self.cols = self.cols.tolil()
        for r in range(m):
            self.cols[r, n + m + r] = art_sign[r]
        self.cols = self.cols.tocsc()
        self.dense = self.cols.toarray()
        art_hi = hi[n + m:].copy()
        for r in range(m):
            if basis[r] != n + m + r:
                art_hi[r] = 0.0
        hi = hi.copy()
        hi[n + m:] = art_hi
        self.hi = hi
        phase1_cost = np.concatenate([np.zeros(n + m), np.ones(m)])
        status, x, basis = self._run(x, basis, phase1_cost)
        if status != OPTIMAL:
            return status, None
        if x[n + m:].sum() > 1e-7:
            return INFEASIBLE, None
        self.hi[n + m:] = 0.0
        x[n + m:] = 0.0
        status, x, basis = self._run(x, basis, self.cost)
        if status != OPTIMAL:
            return status, None
        return OPTIMAL, x[:n]

    def _run(self, x, basis, cost):
        lo, hi = self.lo, self.hi
        dense = self.dense
        Binv = np.linalg.inv(dense[:, basis])
        is_basic = np.zeros(len(x), bool)
        is_basic[basis] = True
        fixed = hi - lo <= 1e-12
        stall, bland = 0, False
        since_refactor = 0
        colsT = dense.T
        while True:
            if self.iterations >= self.max_iter:
                return ITERATION_LIMIT, x, basis
            if since_refactor >= 60:
                Binv = np.linalg.inv(dense[:, basis])
                nb = ~is_basic
                rhs = -(dense[:, nb] @ x[nb])
                x[basis] = Binv @ rhs
                since_refactor = 0
            y = cost[basis] @ Binv
            d = cost - colsT @ y
            at_lo = np.abs(x - lo) <= 1e-12
            at_hi = np.abs(x - hi) <= 1e-12
            can_up = ~is_basic & ~fixed & ~at_hi & (d < -self.tol)
            can_dn = ~is_basic & ~fixed & ~at_lo & (d > self.tol)
            cand = np.nonzero(can_up | can_dn)[0]
            if len(cand) == 0:
                return OPTIMAL, x, basis
            if bland:
                j = int(cand[0])
            else:
                j = int(cand[np.argmax(np.abs(d[cand]))])
            sigma = 1.0 if can_up[j] else -1.0
            alpha = Binv @ self._col(j)
            theta = hi[j] - lo[j]
            leave = -1
            leave_to = None
            step = sigma * alpha
            xb = x[basis]
            best_piv = 0.0
            for r in np.nonzero(np.abs(alpha) > 1e-9)[0]:
                if step[r] > 0:
                    lim = (xb[r] - lo[basis[r]]) / step[r]
                    bound = lo[basis[r]]
                else:
                    lim = (hi[basis[r]] - xb[r]) / -step[r]
                    bound = hi[basis[r]]
                if not math.isfinite(lim):
                    continue
                lim = max(lim, 0.0)
                better = lim < theta - 1e-12
                tie = abs(lim - theta) <= 1e-12 and leave >= 0
                if better or (tie and (basis[r] < basis[leave] if bland else abs(alpha[r]) > best_piv)):
                    theta, leave, leave_to, best_piv = lim, r, bound, abs(alpha[r])
            if not math.isfinite(theta):
                raise SolverError("unbounded LP")
            self.iterations += 1
            since_refactor += 1
            stall = stall + 1 if theta <= 1e-12 else 0
            if stall > 50:
                bland = True
            x[basis] = xb - theta * step
            x[j] += sigma * theta
            if leave < 0:
                continue  # bound flip
            out = basis[leave]
            x[out] = leave_to
            is_basic[out] = False
            is_basic[j] = True
            basis[leave] = j
            piv = alpha[leave]
            row = Binv[leave] / piv
            Binv -= np.outer(alpha, row)
            Binv[leave] = row


def solve_lp(model_or_arrays, lb=None, ub=None, max_iter: int = 10**6) -> SolveResult:
    """Solve the LP relaxation (binaries relaxed to their bounds)."""
    arrays = model_or_arrays if isinstance(model_or_arrays, Arrays) else to_arrays(model_or_arrays)
    lb = arrays.lb if lb is None else lb
    ub = arrays.ub if ub is None else ub
    t0 = time.perf_counter()
    spx = _Simplex(arrays, lb, ub, max_iter)
    status, x = spx.solve()
    stats = {"simplex_iterations": spx.iterations, "nodes": 0, "wall_time": time.perf_counter() - t0}
    if status != OPTIMAL:
        return SolveResult(status, math.nan, None, stats)
    return SolveResult(OPTIMAL, float(arrays.c @ x + arrays.constant), x, stats)


def solve_milp(model: MilpModel, node_limit: int = 10**6, max_iter: int = 10**6) -> SolveResult:
    """Best-first branch-and-bound; branches on the most fractional binary."""
    arrays = to_arrays(model)
    t0 = time.perf_counter()
    integer = np.nonzero(arrays.integer)[0]
    counter = itertools.count()
    iters = 0
    nodes = 0
    incumbent, best = None, math.inf

    def relax(lb, ub):
        nonlocal iters
        res = solve_lp(arrays, lb, ub, max_iter=max(max_iter - iters, 1))
        iters += res.stats["simplex_iterations"]
        return res

    root = relax(arrays.lb, arrays.ub)
    nodes += 1
    heap = []
    if root.status == OPTIMAL:
        heapq.heappush(heap, (root.objective, next(counter), arrays.lb, arrays.ub, root))
    elif root.status == ITERATION_LIMIT:
        return SolveResult(ITERATION_LIMIT, math.nan, None, _stats(nodes, iters, t0), model.names)
    while heap:
        bound, _, lb, ub, res = heapq.heappop(heap)
        if bound >= best - 1e-9:
            break
        x = res.values
        frac = np.abs(x[integer] - np.round(x[integer]))
        if frac.size == 0 or frac.max() <= INT_TOL:
            xr = x.copy()
            xr[integer] = np.round(xr[integer])
            incumbent, best = xr, float(arrays.c @ xr + arrays.constant)
            continue
        # most fractional, ties by lowest index
        pick = integer[int(np.argmax(frac - 1e-12 * np.arange(frac.size)))]
        for value in (0.0, 1.0):
            lb2, ub2 = lb.copy(), ub.copy()
            lb2[pick] = ub2[pick] = value
            child = relax(lb2, ub2)
            nodes += 1
            if child.status == ITERATION_LIMIT or nodes >= node_limit:
                return SolveResult(ITERATION_LIMIT, best, incumbent, _stats(nodes, iters, t0), model.names)
            if child.status == OPTIMAL and child.objective < best - 1e-9:
                assert child.objective >= bound - 1e-6, "child bound below parent"
                heapq.heappush(heap, (child.objective, next(counter), lb2, ub2, child))
    if incumbent is None:
        return SolveResult(INFEASIBLE, math.nan, None, _stats(nodes, iters, t0), model.names)
    return SolveResult(OPTIMAL, best, incumbent, _stats(nodes, iters, t0), model.names)


def _stats(nodes, iters, t0):
    return {"nodes": nodes, "simplex_iterations": iters, "wall_time": time.perf_counter() - t0}


# -- backends -----------------------------------------------------------------------

class BuiltinBackend:
    name = "builtin"

    def __init__(self, node_limit: int = 10**6, max_iter: int = 10**6):
        self.node_limit = node_limit
        self.max_iter = max_iter

    def solve(self, model: MilpModel) -> SolveResult:
        if not model.binaries():
            res = solve_lp(model, max_iter=self.max_iter)
            res.names = model.names
            return res
        return solve_milp(model, self.node_limit, self.max_iter)


class HighsBackend:
    name = "highs"

    def __init__(self, time_limit: float | None = None, mip_rel_gap: float = 1e-9):
        self.time_limit = time_limit
        self.mip_rel_gap = mip_rel_gap

    def solve(self, model: MilpModel) -> SolveResult:
        from scipy.optimize import Bounds, LinearConstraint, milp

        arrays = to_arrays(model)
        t0 = time.perf_counter()
        options = {"mip_rel_gap": self.mip_rel_gap, "presolve": True}
        if self.time_limit:
            options["time_limit"] = self.time_limit
        cons = [LinearConstraint(arrays.A, arrays.row_lo, arrays.row_hi)] if arrays.A.shape[0] else []
        res = milp(arrays.c, constraints=cons, integrality=arrays.integer.astype(int),
                   bounds=Bounds(arrays.lb, arrays.ub), options=options)
        stats = {"nodes": int(getattr(res, "mip_node_count", 0) or 0), "simplex_iterations": None,
                 "wall_time": time.perf_counter() - t0}
        if res.status == 0:
            x = np.asarray(res.x, float)
            x[arrays.integer] = np.round(x[arrays.integer])
            return SolveResult(OPTIMAL, float(arrays.c @ x + arrays.constant), x, stats, model.names)
        if res.status == 2:
            return SolveResult(INFEASIBLE, math.nan, None, stats, model.names)
        if res.status == 1 and res.x is not None:
            return SolveResult(ITERATION_LIMIT, float(res.fun + arrays.constant), np.asarray(res.x), stats, model.names)
        return SolveResult(ITERATION_LIMIT, math.nan, None, stats, model.names)


BACKENDS = {"builtin": BuiltinBackend, "highs": HighsBackend}
DEFAULT_BACKEND = "highs"


def get_backend(name: str | None = None, **options):
    name = name or DEFAULT_BACKEND
    try:
        return BACKENDS[name](**options)
    except KeyError:
        raise ValueError(f"unknown solver backend {name!r}; choose from {sorted(BACKENDS)}") from None


def solve(model: MilpModel, backend=None) -> SolveResult:
    if backend is None or isinstance(backend, str):
        backend = get_backend(backend)
    return backend.solve(model)
