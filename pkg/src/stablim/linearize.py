"""Compile ``x <= e`` / ``x >= e`` for nested min/max limit expressions into MILP rows.

Encoding per node, with ``L_k`` the linear stand-in for child ``k``:

    x <= min(...)   one row ``x <= L_k`` per child, no binaries
    x >= max(...)   one row ``x >= L_k`` per child, no binaries
    x <= max(...)   binaries ``b_k`` with ``sum b = 1`` and ``x <= L_k + M (1 - b_k)``
    x >= min(...)   binaries ``b_k`` with ``sum b = 1`` and ``x >= L_k - M (1 - b_k)``

A composite child sitting inside a sum or a scaling is replaced by a fresh
continuous variable constrained from the side its context needs (a negative
scale flips the side).  ``M`` is computed per node from interval bounds of
its children, so it is as small as the bound analysis allows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

from .expr import (
    Add, Const, LimitExpr, Max, Min, Mul, Neg, UnboundVariableError, Var, canonical, node_count,
    substitute, variables,
)
from .milp.model import LinExpr, MilpModel, VarRef
from .transform import DomainMap, Interval, Simplified, bounds, simplify

M_PAD = 1.01
M_ABS = 1e-6

UNDER, OVER = "under", "over"


class LinearizeError(ValueError):
    pass


def _flip(need: str) -> str:
    return OVER if need == UNDER else UNDER


@dataclass
class SymbolTable:
    """Expression symbol -> model variable or constant, plus fallback domains."""

    entries: dict = field(default_factory=dict)
    domains: DomainMap = field(default_factory=DomainMap)

    def bind(self, name: str, target) -> "SymbolTable":
        self.entries[name] = target
        return self

    def domain(self, name: str) -> Interval:
        if name not in self.entries:
            raise UnboundVariableError(name)
        t = self.entries[name]
        if isinstance(t, VarRef):
            lo = t.lb if math.isfinite(t.lb) else None
            hi = t.ub if math.isfinite(t.ub) else None
            if lo is not None and hi is not None:
                return Interval(lo, hi)
            fallback = self.domains[name]
            out = Interval(fallback.lo if lo is None else lo, fallback.hi if hi is None else hi)
        else:
            out = Interval(float(t), float(t))
        if not (math.isfinite(out.lo) and math.isfinite(out.hi)):
            raise LinearizeError(f"symbol {name!r} has an unbounded domain and no finite default")
        return out

    def domain_map(self, names) -> DomainMap:
        return DomainMap({n: self.domain(n) for n in sorted(names)}, self.domains.default)


@dataclass
class BigM:
    node: str
    kind: str
    M: float
    interval: Interval
    binaries: int

    def to_json(self) -> dict:
        return {"node": self.node, "kind": self.kind, "M": self.M,
                "lo": self.interval.lo, "hi": self.interval.hi, "binaries": self.binaries}


@dataclass
class Linearization:
    name: str
    expr: LimitExpr
    definitions: list
    rows: list = field(default_factory=list)
    variables: list = field(default_factory=list)
    bigm: list = field(default_factory=list)

    @property
    def binaries(self) -> int:
        return sum(1 for v in self.variables if v.is_binary)

    def manifest(self) -> dict:
        return {
            "name": self.name,
            "rows": len(self.rows),
            "fresh_variables": len(self.variables),
            "binaries": self.binaries,
            "big_m": [b.to_json() for b in self.bigm],
        }


def lin_interval(model: MilpModel, a) -> Interval:
    """Interval of a linear term over the variables' bounds."""
    a = LinExpr.of(a)
    lo = hi = a.constant
    for k, c in a.terms.items():
        v = model.variables[k]
        ends = (c * v.lb, c * v.ub) if c else (0.0, 0.0)
        lo += min(ends)
        hi += max(ends)
    return Interval(lo, hi)


def big_m(kid_bounds) -> tuple[float, Interval]:
    env = Interval(min(b.lo for b in kid_bounds), max(b.hi for b in kid_bounds))
    return env.width * M_PAD + M_ABS, env


class _Compiler:
    def __init__(self, model: MilpModel, st: SymbolTable, name: str, d: DomainMap, cse: Mapping[str, VarRef]):
        self.m = model
        self.st = st
        self.name = name
        self.d = d
        self.cse = dict(cse)
        self.polarity: dict[str, set] = {k: set() for k in cse}
        self.out = Linearization(name, Const(0.0), [])

    # -- helpers -----------------------------------------------------------

    def _fresh(self, path: str, iv: Interval, binary=False) -> VarRef:
        base = f"__mm_{self.name}_{path}"
        v = self.m.add_var(self.m.unique_name(base), 0.0 if binary else iv.lo, 1.0 if binary else iv.hi,
                           "binary" if binary else "continuous")
        self.out.variables.append(v)
        return v

    def _row(self, lhs, sense, rhs, path):
        row = self.m.add_constraint(lhs, sense, rhs, name=self.m.unique_row(f"__mm_{self.name}_{path}"))
        self.out.rows.append(row)
        return row

    def _sym(self, name: str, scale: float, need: str) -> LinExpr:
        if name in self.cse:
            self.polarity[name].add(need if scale > 0 else _flip(need))
            return LinExpr({self.cse[name].id: scale})
        if name not in self.st.entries:
            raise UnboundVariableError(name)
        t = self.st.entries[name]
        if isinstance(t, VarRef):
            return LinExpr({t.id: scale})
        return LinExpr(constant=scale * float(t))

    # -- encoding ----------------------------------------------------------

    def encode(self, e: LimitExpr, need: str, path: str, scale: float = 1.0) -> LinExpr:
        """Linear L with ``L <= scale*e`` (UNDER) or ``L >= scale*e`` (OVER), tight when free."""
        if isinstance(e, Const):
            return LinExpr(constant=scale * e.value)
        if isinstance(e, Var):
            return self._sym(e.name, scale, need)
        if isinstance(e, Neg):
            return self.encode(e.child, need, path, -scale)
        if isinstance(e, Mul):
            return self.encode(e.child, need, path, scale * e.scalar)
        if isinstance(e, Add):
            out = LinExpr()
            for i, k in enumerate(e.children):
                out.iadd(self.encode(k, need, f"{path}_{i}", scale))
            return out
        # composite: y stands for e; scale*y must sit on the ``need`` side of scale*e
        side = need if scale > 0 else _flip(need)
        y = self._fresh(path, bounds(e, self.d))
        self.relate(LinExpr({y.id: 1.0}), "<=" if side == UNDER else ">=", e, path)
        return LinExpr({y.id: scale})

    def relate(self, lhs: LinExpr, sense: str, e: LimitExpr, path: str):
        """Add rows enforcing ``lhs sense e`` exactly."""
        need = UNDER if sense == "<=" else OVER
        direct = Min if sense == "<=" else Max
        selected = Max if sense == "<=" else Min
        if isinstance(e, direct):
            for i, k in enumerate(e.children):
                self.relate(lhs, sense, k, f"{path}_{i}")
            return
        if isinstance(e, selected):
            kids = e.children
            kb = [bounds(k, self.d) for k in kids]
            M, env = big_m(kb)
            bins = [self._fresh(f"{path}_b{i}", env, binary=True) for i in range(len(kids))]
            self._row(LinExpr.sum(bins), "==", 1.0, f"{path}_sel")
            for i, (k, b) in enumerate(zip(kids, bins)):
                L = self.encode(k, need, f"{path}_{i}")
                if sense == "<=":
                    # lhs <= L + M (1 - b)
                    self._row(lhs - L + M * b, "<=", M, f"{path}_{i}")
                else:
                    self._row(lhs - L - M * b, ">=", -M, f"{path}_{i}")
            self.out.bigm.append(BigM(path, "max_le" if sense == "<=" else "min_ge", M, env, len(kids)))
            return
        L = self.encode(e, need, path)
        self._row(lhs - L, sense, 0.0, path)


def _prepare(e: LimitExpr, st: SymbolTable, prefix: str, simplify_first: bool):
    consts = {n: Const(float(t)) for n, t in st.entries.items() if not isinstance(t, VarRef)}
    missing = sorted(n for n in variables(e) if n not in st.entries)
    if missing:
        raise UnboundVariableError(missing[0])
    if consts:
        e = substitute(e, consts)
    d = st.domain_map(variables(e))
    if not simplify_first:
        # encode the tree as written; only useful for inspecting the raw rows
        e = canonical(e)
        return Simplified(e, [], node_count(e), node_count(e), 0, []), d
    s = simplify(e, d, factor=True, prefix=prefix)
    return s, d


def _attach(model: MilpModel, x, sense: str, e: LimitExpr, st: SymbolTable, name: str,
            simplify_first: bool = True) -> Linearization:
    prefix = f"__cse_{name}_"
    s, d = _prepare(e, st, prefix, simplify_first)
    # domains for the shared subexpressions, inner definitions first
    for cname, cdef in s.definitions:
        d = d.with_entries({cname: bounds(cdef, d)})
    cse_vars = {}
    for cname, _ in s.definitions:
        iv = d[cname]
        v = model.add_var(model.unique_name(f"__mm_{name}_{cname[len(prefix):] or cname}"), iv.lo, iv.hi)
        cse_vars[cname] = v
    comp = _Compiler(model, st, name, d, cse_vars)
    comp.out.variables.extend(cse_vars.values())
    comp.out.expr = s.expr
    comp.out.definitions = s.definitions
    comp.relate(LinExpr.of(x), sense, s.expr, "r")
    # outer definitions first so every use of an inner one is known before it is encoded
    for idx in range(len(s.definitions) - 1, -1, -1):
        cname, cdef = s.definitions[idx]
        v = cse_vars[cname]
        for side in sorted(comp.polarity[cname]):
            comp.relate(LinExpr({v.id: 1.0}), "<=" if side == UNDER else ">=", cdef, f"c{idx}{side[0]}")
    return comp.out


def attach_upper(model: MilpModel, x, e: LimitExpr, st: SymbolTable, name: str = "lim",
                 simplify_first: bool = True) -> Linearization:
    """Rows enforcing ``x <= e``.

    ``simplify_first=False`` skips normalization and pruning, so constant
    siblings keep their own selector binaries.
    """
    return _attach(model, x, "<=", e, st, name, simplify_first)


def attach_lower(model: MilpModel, x, e: LimitExpr, st: SymbolTable, name: str = "lim",
                 simplify_first: bool = True) -> Linearization:
    """Rows enforcing ``x >= e``."""
    return _attach(model, x, ">=", e, st, name, simplify_first)


def attach_abs(model: MilpModel, t: VarRef, a, name: str = "abs") -> list:
    """Epigraph of ``|a|``: ``t >= a`` and ``t >= -a``."""
    a = LinExpr.of(a)
    return [
        model.add_constraint(t - a, ">=", 0.0, name=model.unique_row(f"{name}_pos")),
        model.add_constraint(t + a, ">=", 0.0, name=model.unique_row(f"{name}_neg")),
    ]


def attach_gated_abs(model: MilpModel, t: VarRef, a, gate: VarRef, M: float, name: str = "gabs",
                     implied_binary: bool = False) -> list:
    """``t >= |a|`` unless ``gate = 1``; then ``t >= 0`` only.

    ``implied_binary`` admits a continuous gate in [0, 1] that other rows
    already force to 0 or 1.
    """
    if not (gate.is_binary or (implied_binary and gate.lb >= 0.0 and gate.ub <= 1.0)):
        raise LinearizeError(f"gate {gate.name!r} is not binary")
    a = LinExpr.of(a)
    iv = lin_interval(model, a)
    need = max(abs(iv.lo), abs(iv.hi))
    if not math.isfinite(need) or M < need:
        raise LinearizeError(f"M={M:g} is below the attainable |a| of {need:g} in {name!r}")
    return [
        model.add_constraint(t - a + M * gate, ">=", 0.0, name=model.unique_row(f"{name}_pos")),
        model.add_constraint(t + a + M * gate, ">=", 0.0, name=model.unique_row(f"{name}_neg")),
        model.add_constraint(LinExpr.of(t), ">=", 0.0, name=model.unique_row(f"{name}_nn")),
    ]
