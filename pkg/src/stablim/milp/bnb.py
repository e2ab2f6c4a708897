"""Best-bound branch-and-bound over binaries.

Node order is deterministic: smallest LP bound first, ties in creation
order.  Branching picks the most fractional binary (lowest id on ties) and
creates the down child before the up child.  Children warm-start from the
parent basis through the dual simplex.
"""

from __future__ import annotations

import heapq
import itertools
import math
import time
from dataclasses import dataclass

import numpy as np

from .model import MilpModel, SolveResult
from .simplex import LpData, LpTimeout, NumericalInstabilityError, solve_arrays

INT_TOL = 1e-6


@dataclass(frozen=True)
class Limits:
    time_limit: float | None = None
    node_limit: int | None = None
    gap: float = 1e-6


def _lp(data, lb, ub, warm, deadline=None):
    try:
        return solve_arrays(data, lb, ub, warm, deadline=deadline)
    except NumericalInstabilityError:
        if warm is None:
            raise
        return solve_arrays(data, lb, ub, None, deadline=deadline)


def _rel_gap(inc, bound):
    if inc is None or bound is None:
        return math.inf
    return max(inc - bound, 0.0) / max(1.0, abs(inc))


def solve_milp(model: MilpModel, limits: Limits | None = None, *, time_limit=None, node_limit=None, gap=None,
               branch_first=()) -> SolveResult:
    """Best-bound branch-and-bound over the binaries.

    Branching picks the most fractional binary, ties to the lowest id.
    ``branch_first`` names binaries that are branched on before any other
    while one of them is fractional.
    """
    limits = limits or Limits()
    if time_limit is not None or node_limit is not None or gap is not None:
        limits = Limits(
            time_limit if time_limit is not None else limits.time_limit,
            node_limit if node_limit is not None else limits.node_limit,
            gap if gap is not None else limits.gap,
        )
    t0 = time.perf_counter()
    c, A, lo, hi, lb0, ub0 = model.arrays()
    sign = -1.0 if model.sense == "max" else 1.0
    const = model.objective.constant
    data = LpData(c, A, lo, hi)
    bin_ids = np.array([v.id for v in model.binaries], dtype=int)
    first_ids = np.array(sorted({v.id for v in branch_first if v.is_binary}), dtype=int)

    seq = itertools.count()
    heap = []
    incumbent = None  # (min-form objective, x)
    nodes = 0

    def finish(st, bound, msg=""):
        res = SolveResult(status=st, nodes=nodes, wall_time=time.perf_counter() - t0, message=msg)
        if incumbent is not None:
            obj, x = incumbent
            res.values = {i: float(v) for i, v in enumerate(x)}
            res.objective = sign * obj + const
            b = bound if bound is not None else obj
            res.bound = sign * min(b, obj) + const
            res.gap = _rel_gap(obj, min(b, obj))
        elif bound is not None:
            res.bound = sign * bound + const
        return res

    deadline = None if limits.time_limit is None else t0 + limits.time_limit
    try:
        st, x, basis, _ = _lp(data, lb0, ub0, None, deadline)
    except LpTimeout:
        return finish("timeout", None, "time limit reached in the root relaxation")
    nodes = 1
    if st == "infeasible":
        return finish("infeasible", None)
    if st == "unbounded":
        return finish("unbounded", None, "LP relaxation is unbounded")
    heapq.heappush(heap, (float(c @ x), next(seq), lb0.copy(), ub0.copy(), basis, x))

    while heap:
        bound = heap[0][0]
        if incumbent is not None and _rel_gap(incumbent[0], bound) <= limits.gap:
            return finish("optimal", bound)
        if limits.time_limit is not None and time.perf_counter() - t0 > limits.time_limit:
            return finish("timeout", bound, "time limit reached")
        if limits.node_limit is not None and nodes >= limits.node_limit:
            return finish("timeout", bound, "node limit reached")
        obj, _, lb, ub, basis, x = heapq.heappop(heap)
        if incumbent is not None and obj >= incumbent[0] - 1e-9 * max(1.0, abs(incumbent[0])):
            continue
        frac = np.abs(x[bin_ids] - np.round(x[bin_ids])) if bin_ids.size else np.zeros(0)
        if frac.size == 0 or frac.max() <= INT_TOL:
            # polish: fix the rounded binaries and re-solve the continuous part
            flb, fub = lb.copy(), ub.copy()
            r = np.round(x[bin_ids])
            flb[bin_ids] = r
            fub[bin_ids] = r
            try:
                pst, px, _, _ = _lp(data, flb, fub, basis, deadline)
            except LpTimeout:
                heapq.heappush(heap, (obj, next(seq), lb, ub, basis, x))
                return finish("timeout", heap[0][0], "time limit reached")
            nodes += 1
            if pst == "optimal":
                pobj = float(c @ px)
                if incumbent is None or pobj < incumbent[0] - 1e-12:
                    incumbent = (pobj, px)
            continue
        # most fractional, ties to the lowest id (argmax returns the first)
        pool = bin_ids
        if first_ids.size:
            ff = np.abs(x[first_ids] - np.round(x[first_ids]))
            if ff.max() > INT_TOL:
                pool = first_ids
        score = np.round(-np.abs(x[pool] - np.floor(x[pool]) - 0.5), 12)
        k = pool[int(np.argmax(score))]
        for val in (0.0, 1.0):
            if limits.node_limit is not None and nodes >= limits.node_limit:
                # put the parent back so the reported bound stays valid
                heapq.heappush(heap, (obj, next(seq), lb, ub, basis, x))
                return finish("timeout", heap[0][0], "node limit reached")
            clb, cub = lb.copy(), ub.copy()
            clb[k] = cub[k] = val
            try:
                cst, cx, cbasis, _ = _lp(data, clb, cub, basis, deadline)
            except LpTimeout:
                heapq.heappush(heap, (obj, next(seq), lb, ub, basis, x))
                return finish("timeout", heap[0][0], "time limit reached")
            nodes += 1
            if cst != "optimal":
                continue
            cobj = float(c @ cx)
            if incumbent is not None and cobj >= incumbent[0] - 1e-9 * max(1.0, abs(incumbent[0])):
                continue
            heapq.heappush(heap, (cobj, next(seq), clb, cub, cbasis, cx))

    if incumbent is None:
        return finish("infeasible", None)
    return finish("optimal", incumbent[0])
