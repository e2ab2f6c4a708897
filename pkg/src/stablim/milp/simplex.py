"""Bounded-variable simplex on a dense tableau.

The LP is kept in the form ``A x + s = 0`` where every structural column
``x`` and every row slack ``s`` carries its own (possibly infinite) bounds,
so the row set never changes when branch-and-bound tightens a binary.  The
initial basis is the slack basis; there are no artificial columns:

* phase 1 minimizes the sum of bound infeasibilities of the basic
  variables (cost vector rebuilt every iteration, ratio test stops at the
  first breakpoint so the sum never increases);
* phase 2 is the primal simplex with Dantzig pricing, switching to Bland's
  rule after a run of degenerate pivots;
* a dual simplex re-optimizes from a warm basis after bound changes.

Rows and columns are equilibrated before solving; the final point is
checked against the unscaled rows.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

try:
    from scipy.linalg.blas import dger as _dger
except ImportError:  # pragma: no cover
    _dger = None

from .model import MilpModel, SolveResult

FEAS_TOL = 1e-9
DUAL_TOL = 1e-9
PIVOT_TOL = 1e-9
CHECK_TOL = 1e-6
DEGENERATE_RUN = 50
REFACTOR_EVERY = 100
RECHECK_PIVOT = 1e-6  # pivots smaller than this are confirmed on a fresh factorization
MAX_ITER = 200_000

AT_LB, AT_UB, AT_ZERO, BASIC = 0, 1, 2, 3


class LpTimeout(Exception):
    """The caller's deadline passed in the middle of an LP solve."""


class NumericalInstabilityError(ArithmeticError):
    pass


@dataclass
class Basis:
    """Warm-start information: basic column per row plus nonbasic positions."""

    basic: np.ndarray
    status: np.ndarray


class LpData:
    """Scaled LP ``min c x  s.t.  A x + s = 0`` shared by many solves."""

    def __init__(self, c, A, row_lo, row_hi):
        A = np.asarray(A, dtype=float)
        m, n = A.shape
        self.m, self.n = m, n
        r = np.ones(m)
        if m and n:
            rmax = np.abs(A).max(axis=1)
            r = np.where(rmax > 0, 1.0 / np.where(rmax > 0, rmax, 1.0), 1.0)
        As = A * r[:, None]
        s = np.ones(n)
        if m and n:
            cmax = np.abs(As).max(axis=0)
            s = np.where(cmax > 0, 1.0 / np.where(cmax > 0, cmax, 1.0), 1.0)
        As = As * s[None, :]
        self.row_scale, self.col_scale = r, s
        self.M = np.hstack([As, np.eye(m)])
        self.cost = np.concatenate([np.asarray(c, float) * s, np.zeros(m)])
        self.slack_lo = -np.asarray(row_hi, float) * r
        self.slack_hi = -np.asarray(row_lo, float) * r
        self.A = A
        self.c = np.asarray(c, float)
        self.row_lo = np.asarray(row_lo, float)
        self.row_hi = np.asarray(row_hi, float)

    def bounds(self, lb, ub):
        s = self.col_scale
        lo = np.concatenate([np.asarray(lb, float) / s, self.slack_lo])
        hi = np.concatenate([np.asarray(ub, float) / s, self.slack_hi])
        return lo, hi


class _Run:
    def __init__(self, data: LpData, lo, hi, basis: Basis | None, bland: bool, deadline: float | None = None):
        self.d = data
        self.lo, self.hi = lo, hi
        self.bland = bland
        self.deadline = deadline
        self.iters = 0
        m, n = data.m, data.n
        N = n + m
        if basis is None:
            self.basic = np.arange(n, N)
            self.status = np.empty(N, dtype=np.int8)
            self.status[:n] = [self._rest(j) for j in range(n)]
            self.status[n:] = BASIC
        else:
            self.basic = basis.basic.copy()
            self.status = basis.status.copy()
            for j in range(N):
                if self.status[j] != BASIC:
                    self.status[j] = self._fit(j, self.status[j])
        self.refactor()

    def _tick(self):
        self.iters += 1
        if self.iters > MAX_ITER:
            raise NumericalInstabilityError("iteration limit reached")
        if self.deadline is not None and self.iters % 32 == 0 and time.perf_counter() > self.deadline:
            raise LpTimeout()

    # -- state -------------------------------------------------------------

    def _rest(self, j):
        if math.isfinite(self.lo[j]):
            return AT_LB
        if math.isfinite(self.hi[j]):
            return AT_UB
        return AT_ZERO

    def _fit(self, j, st):
        if st == AT_UB and math.isfinite(self.hi[j]):
            return AT_UB
        if st == AT_LB and math.isfinite(self.lo[j]):
            return AT_LB
        return self._rest(j)

    def _nb_value(self, j):
        st = self.status[j]
        if st == AT_LB:
            return self.lo[j]
        if st == AT_UB:
            return self.hi[j]
        return 0.0

    def refactor(self):
        d = self.d
        B = d.M[:, self.basic]
        try:
            self.T = np.linalg.solve(B, d.M) if d.m else np.zeros((0, d.n))
        except np.linalg.LinAlgError as exc:
            raise NumericalInstabilityError("singular basis") from exc
        self.T[:, self.basic] = np.eye(d.m)
        self.T = np.ascontiguousarray(self.T)
        N = d.n + d.m
        self.x = np.zeros(N)
        nb = self.status != BASIC
        for j in np.flatnonzero(nb):
            self.x[j] = self._nb_value(j)
        xn = np.where(nb, self.x, 0.0)
        self.x[self.basic] = -(self.T @ xn)
        self.since_refactor = 0

    def snapshot(self) -> Basis:
        return Basis(self.basic.copy(), self.status.copy())

    def pivot(self, r, j):
        T = self.T
        piv = T[r, j]
        prow = T[r] / piv
        col = T[:, j].copy()
        col[r] = 0.0
        if _dger is not None and T.flags.c_contiguous:
            _dger(-1.0, prow, col, a=T.T, overwrite_a=1)
        else:  # pragma: no cover
            T -= np.outer(col, prow)
        T[r] = prow
        leaving = self.basic[r]
        self.basic[r] = j
        self.status[j] = BASIC
        self.since_refactor += 1
        return leaving

    def infeasibility(self):
        xb = self.x[self.basic]
        lo, hi = self.lo[self.basic], self.hi[self.basic]
        return np.maximum(lo - xb, 0.0) + np.maximum(xb - hi, 0.0)

    def _maybe_refactor(self):
        if self.since_refactor >= REFACTOR_EVERY:
            self.refactor()

    # -- primal ------------------------------------------------------------

    def _reduced(self, cost):
        return cost - cost[self.basic] @ self.T

    def _entering(self, dj):
        st = self.status
        free = st == AT_ZERO
        fixed = self.lo == self.hi
        can_inc = ((st == AT_LB) | free) & ~fixed
        can_dec = ((st == AT_UB) | free) & ~fixed
        score = np.where(can_inc & (dj < -DUAL_TOL), -dj, 0.0)
        score = np.maximum(score, np.where(can_dec & (dj > DUAL_TOL), dj, 0.0))
        cand = np.flatnonzero(score > 0)
        if cand.size == 0:
            return None
        if self.bland_now:
            return int(cand[0])
        return int(cand[np.argmax(score[cand])])

    def primal(self, phase1: bool) -> str:
        """Run primal iterations; returns 'optimal', 'infeasible' or 'unbounded'."""
        d = self.d
        self.bland_now = self.bland
        degenerate = 0
        cost = d.cost
        dj = None
        while True:
            self._tick()
            self._maybe_refactor()
            if phase1:
                xb = self.x[self.basic]
                below = xb < self.lo[self.basic] - FEAS_TOL
                above = xb > self.hi[self.basic] + FEAS_TOL
                if not (below.any() or above.any()):
                    return "optimal"
                cost = np.zeros(d.n + d.m)
                cost[self.basic[below]] = -1.0
                cost[self.basic[above]] = 1.0
                dj = self._reduced(cost)
            elif dj is None or self.since_refactor == 0:
                dj = self._reduced(cost)
            j = self._entering(dj)
            if j is None:
                return "infeasible" if phase1 else "optimal"
            direction = 1.0 if dj[j] < 0 else -1.0
            col = self.T[:, j]
            rate = -direction * col
            xb = self.x[self.basic]
            lo_b, hi_b = self.lo[self.basic], self.hi[self.basic]
            big = np.abs(col) > PIVOT_TOL
            dec = big & (rate < 0)
            inc = big & (rate > 0)
            if phase1:
                below = xb < lo_b - FEAS_TOL
                above = xb > hi_b + FEAS_TOL
                ok = ~below & ~above
                lim_dec = np.where(dec & ok, lo_b, np.where(dec & above, hi_b, -np.inf))
                lim_inc = np.where(inc & ok, hi_b, np.where(inc & below, lo_b, np.inf))
            else:
                lim_dec = np.where(dec, lo_b, -np.inf)
                lim_inc = np.where(inc, hi_b, np.inf)
            with np.errstate(divide="ignore", invalid="ignore"):
                t_dec = np.where(dec & np.isfinite(lim_dec), (xb - lim_dec) / -rate, np.inf)
                t_inc = np.where(inc & np.isfinite(lim_inc), (lim_inc - xb) / rate, np.inf)
            t_row = np.maximum(np.minimum(t_dec, t_inc), 0.0)
            leave_val = np.where(t_inc < t_dec, lim_inc, lim_dec)
            span = self.hi[j] - self.lo[j]
            t_flip = span if math.isfinite(span) else np.inf
            r = -1
            t = t_flip
            if t_row.size:
                tmin = t_row.min()
                if tmin < t_flip:
                    if self.bland_now:
                        ties = np.flatnonzero(t_row <= tmin + 1e-12)
                        r = int(ties[np.argmin(self.basic[ties])])
                    else:
                        # Harris-style: among near-minimal ratios take the largest pivot
                        ties = np.flatnonzero(t_row <= tmin + FEAS_TOL / np.maximum(np.abs(rate), 1e-300))
                        ties = ties[t_row[ties] < t_flip] if ties.size else ties
                        r = int(ties[np.argmax(np.abs(col[ties]))]) if ties.size else int(np.argmin(t_row))
                    t = t_row[r]
            if r >= 0 and abs(col[r]) < RECHECK_PIVOT and self.since_refactor:
                # small pivot on an updated tableau may be drift; redo the step on fresh numbers
                self.refactor()
                dj = None
                continue
            if not math.isfinite(t):
                if phase1:  # cannot happen with consistent data
                    raise NumericalInstabilityError("unbounded phase-1 ray")
                return "unbounded"
            if t <= 1e-12:
                degenerate += 1
                if degenerate > DEGENERATE_RUN:
                    self.bland_now = True
            else:
                degenerate = 0
            self.x[self.basic] = xb + rate * t
            self.x[j] += direction * t
            if r < 0:
                self.status[j] = AT_UB if direction > 0 else AT_LB
                self.x[j] = self.hi[j] if direction > 0 else self.lo[j]
                continue
            leaving = self.basic[r]
            dj_j = dj[j]
            self.pivot(r, j)
            at_hi = leave_val[r] == self.hi[leaving] and self.lo[leaving] != self.hi[leaving]
            self.status[leaving] = AT_UB if at_hi else AT_LB
            self.x[leaving] = leave_val[r]
            if not phase1:
                dj = dj - dj_j * self.T[r] if self.since_refactor else None
                if dj is not None:
                    dj[j] = 0.0

    # -- dual --------------------------------------------------------------

    def dual_feasible(self, cost) -> bool:
        dj = self._reduced(cost)
        st = self.status
        fixed = self.lo == self.hi
        bad = (~fixed) & (
            ((st == AT_LB) & (dj < -DUAL_TOL * 10))
            | ((st == AT_UB) & (dj > DUAL_TOL * 10))
            | ((st == AT_ZERO) & (np.abs(dj) > DUAL_TOL * 10))
        )
        return not bad.any()

    def dual(self) -> str:
        """Dual simplex from a dual-feasible basis.

        Returns 'optimal', 'infeasible' or 'stalled'; a stalled run leaves a
        valid basis for the primal to finish from.
        """
        d = self.d
        cost = d.cost
        dj = self._reduced(cost)
        budget = max(200, 2 * (d.m + d.n))
        bland = False
        degenerate = 0
        for _ in range(budget):
            self._tick()
            if self.since_refactor >= REFACTOR_EVERY:
                self.refactor()
                dj = self._reduced(cost)
            infeas = self.infeasibility()
            if infeas.size == 0 or infeas.max() <= FEAS_TOL:
                return "optimal"
            if bland:
                rows = np.flatnonzero(infeas > FEAS_TOL)
                r = int(rows[np.argmin(self.basic[rows])])
            else:
                r = int(np.argmax(infeas))
            i = self.basic[r]
            xi = self.x[i]
            raise_it = xi < self.lo[i]
            target = self.lo[i] if raise_it else self.hi[i]
            alpha = self.T[r].copy()
            st = self.status
            fixed = self.lo == self.hi
            nb = (st != BASIC) & ~fixed
            can_inc = nb & ((st == AT_LB) | (st == AT_ZERO))
            can_dec = nb & ((st == AT_UB) | (st == AT_ZERO))
            big = np.abs(alpha) > PIVOT_TOL
            if raise_it:
                elig = big & ((can_inc & (alpha < 0)) | (can_dec & (alpha > 0)))
            else:
                elig = big & ((can_inc & (alpha > 0)) | (can_dec & (alpha < 0)))
            cand = np.flatnonzero(elig)
            if cand.size == 0:
                return "infeasible"
            ratio = np.abs(dj[cand]) / np.abs(alpha[cand])
            rmin = ratio.min()
            ties = cand[ratio <= rmin + DUAL_TOL]
            j = int(ties[0]) if bland else int(ties[np.argmax(np.abs(alpha[ties]))])
            if abs(alpha[j]) < RECHECK_PIVOT and self.since_refactor:
                self.refactor()
                dj = self._reduced(cost)
                continue
            if rmin <= DUAL_TOL:
                degenerate += 1
                bland = bland or degenerate > DEGENERATE_RUN
            else:
                degenerate = 0
            delta = (xi - target) / alpha[j]
            col = self.T[:, j]
            self.x[self.basic] -= col * delta
            self.x[j] += delta
            dj_j = dj[j]
            self.pivot(r, j)
            self.status[i] = AT_LB if raise_it else AT_UB
            self.x[i] = target
            dj = dj - dj_j * self.T[r]
            dj[j] = 0.0
        return "stalled"

    # -- result ------------------------------------------------------------

    def structural(self):
        d = self.d
        return self.x[: d.n] * d.col_scale


def _check(data: LpData, x, lb, ub) -> float:
    if data.m:
        act = data.A @ x
        scale = np.maximum(1.0, np.abs(act))
        v_rows = np.maximum(data.row_lo - act, 0.0) + np.maximum(act - data.row_hi, 0.0)
        rows = float(np.max(v_rows / scale)) if v_rows.size else 0.0
    else:
        rows = 0.0
    cols = 0.0
    if x.size:
        cols = float(np.max(np.maximum(lb - x, 0.0) + np.maximum(x - ub, 0.0)))
    return max(rows, cols)


def solve_arrays(data: LpData, lb, ub, warm: Basis | None = None, bland: bool = False,
                 deadline: float | None = None):
    """Solve one LP over prepared data; returns (status, x, Basis, iterations).

    Numerical trouble is retried once from the slack basis under Bland's
    rule before it is reported.  ``deadline`` is a ``time.perf_counter``
    value after which ``LpTimeout`` is raised.
    """
    try:
        return _solve_arrays(data, lb, ub, warm, bland, deadline)
    except NumericalInstabilityError:
        if bland and warm is None:
            raise
        return _solve_arrays(data, lb, ub, None, True, deadline)


def _solve_arrays(data: LpData, lb, ub, warm: Basis | None, bland: bool, deadline: float | None = None):
    lb = np.asarray(lb, float)
    ub = np.asarray(ub, float)
    if np.any(lb > ub):
        return "infeasible", None, None, 0
    lo, hi = data.bounds(lb, ub)
    if np.any(lo > hi + FEAS_TOL):
        return "infeasible", None, None, 0
    run = _Run(data, lo, hi, warm, bland, deadline)
    status = None
    if warm is not None:
        if run.infeasibility().max(initial=0.0) > FEAS_TOL and run.dual_feasible(data.cost):
            status = run.dual()
            if status == "infeasible":
                return "infeasible", None, None, run.iters
    for attempt in range(3):
        if run.infeasibility().max(initial=0.0) > FEAS_TOL:
            if run.primal(phase1=True) == "infeasible":
                return "infeasible", None, None, run.iters
        status = run.primal(phase1=False)
        if status == "unbounded":
            return "unbounded", None, None, run.iters
        run.refactor()
        if run.infeasibility().max(initial=0.0) <= FEAS_TOL * 100:
            break
    x = run.structural()
    viol = _check(data, x, lb, ub)
    if viol > CHECK_TOL:
        if not bland:
            return _solve_arrays(data, lb, ub, None, True, deadline)
        raise NumericalInstabilityError(f"solution violates rows by {viol:.3g}")
    return "optimal", x, run.snapshot(), run.iters


def solve_lp(model: MilpModel, lb=None, ub=None, warm: Basis | None = None, data: LpData | None = None,
             time_limit: float | None = None) -> SolveResult:
    """LP relaxation of ``model`` (integrality dropped).

    ``lb``/``ub`` override the variable bounds (arrays in registry order).
    """
    t0 = time.perf_counter()
    c, A, lo, hi, vlb, vub = model.arrays()
    if data is None:
        data = LpData(c, A, lo, hi)
    lb = vlb if lb is None else lb
    ub = vub if ub is None else ub
    deadline = None if time_limit is None else t0 + time_limit
    try:
        status, x, basis, iters = solve_arrays(data, lb, ub, warm, deadline=deadline)
    except LpTimeout:
        return SolveResult(status="timeout", wall_time=time.perf_counter() - t0, message="time limit reached")
    res = SolveResult(status=status, nodes=0, wall_time=time.perf_counter() - t0)
    res.iterations = iters
    res.basis = basis
    if status == "optimal":
        res.values = {i: float(v) for i, v in enumerate(x)}
        obj = model.objective.value(res.values)
        res.objective = obj
        res.bound = obj
        res.gap = 0.0
    return res
