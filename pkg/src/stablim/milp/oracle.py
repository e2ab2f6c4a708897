"""Reference MILP solver by exhaustive binary enumeration.

Every assignment of the free binaries is screened against the rows that
involve only binaries, and the survivors are solved as LPs with HiGHS
(through scipy).  It shares no code with the simplex or branch-and-bound,
so agreement between the two is a meaningful check.
"""

from __future__ import annotations

import time

import numpy as np
from scipy.optimize import linprog

from .model import MilpModel, ModelError, SolveResult

MAX_ENUM = 20


def enumerate_oracle(model: MilpModel, max_binaries: int = MAX_ENUM) -> SolveResult:
    t0 = time.perf_counter()
    c, A, lo, hi, lb, ub = model.arrays()
    free = [v.id for v in model.binaries if v.lb < v.ub]
    k = len(free)
    if k > max_binaries:
        raise ModelError(f"{k} free binaries exceed the enumeration cap of {max_binaries}")

    fixed_mask = lb == ub
    bin_mask = np.zeros(len(lb), dtype=bool)
    bin_mask[free] = True
    # rows touching only binaries and fixed columns can be checked without an LP
    touches_cont = (np.abs(A[:, ~(bin_mask | fixed_mask)]) > 0).any(axis=1) if A.size else np.zeros(len(lo), bool)
    screen = ~touches_cont
    const_part = A[:, fixed_mask] @ lb[fixed_mask] if A.size else np.zeros(len(lo))

    codes = np.arange(2**k, dtype=np.int64)
    # lexicographic order with the first free binary as the most significant bit
    assign = ((codes[:, None] >> np.arange(k - 1, -1, -1)) & 1).astype(float)
    ok = np.ones(len(codes), dtype=bool)
    if screen.any():
        rows = np.flatnonzero(screen)
        tol = 1e-9 * np.maximum(1.0, np.maximum(np.abs(np.where(np.isfinite(lo[rows]), lo[rows], 0)), np.abs(np.where(np.isfinite(hi[rows]), hi[rows], 0))))
        for start in range(0, len(codes), 65536):
            sl = slice(start, start + 65536)
            act = assign[sl] @ A[np.ix_(rows, free)].T + const_part[rows]
            ok[sl] = ((act >= lo[rows] - tol) & (act <= hi[rows] + tol)).all(axis=1)

    rest = ~screen
    Ar = A[rest]
    lor, hir = lo[rest], hi[rest]
    ub_rows = np.isfinite(hir) & (lor != hir)
    lb_rows = np.isfinite(lor) & (lor != hir)
    eq_rows = lor == hir
    A_ub = np.vstack([Ar[ub_rows], -Ar[lb_rows]])
    b_ub = np.concatenate([hir[ub_rows], -lor[lb_rows]])
    A_eq, b_eq = Ar[eq_rows], lor[eq_rows]

    best = None
    lps = 0
    for idx in np.flatnonzero(ok):
        blb, bub = lb.copy(), ub.copy()
        blb[free] = assign[idx]
        bub[free] = assign[idx]
        lps += 1
        res = linprog(
            c,
            A_ub=A_ub if len(b_ub) else None,
            b_ub=b_ub if len(b_ub) else None,
            A_eq=A_eq if len(b_eq) else None,
            b_eq=b_eq if len(b_eq) else None,
            bounds=np.column_stack([blb, bub]),
            method="highs",
        )
        if res.status == 3:
            return SolveResult(status="unbounded", nodes=lps, wall_time=time.perf_counter() - t0)
        if res.status != 0:
            continue
        if best is None or res.fun < best[0] - 1e-9 * max(1.0, abs(best[0])):
            best = (float(res.fun), res.x.copy())
    out = SolveResult(status="infeasible" if best is None else "optimal", nodes=lps, wall_time=time.perf_counter() - t0)
    if best is not None:
        x = best[1]
        out.values = {i: float(v) for i, v in enumerate(x)}
        out.objective = model.objective.value(out.values)
        out.bound = out.objective
        out.gap = 0.0
    return out
