"""MILP model container: variables, linear rows, objective.

Arithmetic on :class:`VarRef` and :class:`LinExpr` builds linear terms the
way most Python modelling layers do::

    m = MilpModel("demo")
    x = m.add_var("x", ub=2)
    y = m.add_var("y")
    m.add_constraint(x + y, "<=", 4, name="cap")
    m.set_objective(3 * x + 2 * y, "max")

Comparison operators are deliberately not overloaded, so variables stay
hashable by identity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

INF = math.inf
SENSES = ("<=", "==", ">=")


class ModelError(ValueError):
    pass


class VarRef:
    __slots__ = ("id", "name", "kind", "lb", "ub")

    def __init__(self, id: int, name: str, kind: str, lb: float, ub: float):
        self.id = id
        self.name = name
        self.kind = kind
        self.lb = lb
        self.ub = ub

    @property
    def is_binary(self) -> bool:
        return self.kind == "binary"

    def __repr__(self):
        return f"VarRef({self.id}, {self.name!r}, {self.kind}, [{self.lb}, {self.ub}])"

    def _lin(self) -> "LinExpr":
        return LinExpr({self.id: 1.0})

    def __add__(self, other):
        return self._lin() + other

    __radd__ = __add__

    def __sub__(self, other):
        return self._lin() - other

    def __rsub__(self, other):
        return (-self._lin()) + other

    def __mul__(self, c):
        return self._lin() * c

    __rmul__ = __mul__

    def __neg__(self):
        return -self._lin()


class LinExpr:
    """Sparse linear form ``sum(coef * var) + constant`` keyed by var id."""

    __slots__ = ("terms", "constant")

    def __init__(self, terms: Mapping[int, float] | None = None, constant: float = 0.0):
        self.terms = dict(terms) if terms else {}
        self.constant = float(constant)

    @classmethod
    def of(cls, x) -> "LinExpr":
        if isinstance(x, LinExpr):
            return x
        if isinstance(x, VarRef):
            return x._lin()
        if isinstance(x, (int, float, np.floating, np.integer)):
            return cls(constant=float(x))
        raise TypeError(f"cannot build a linear term from {x!r}")

    @classmethod
    def sum(cls, items: Iterable) -> "LinExpr":
        out = cls()
        for it in items:
            out.iadd(it)
        return out

    def copy(self) -> "LinExpr":
        return LinExpr(self.terms, self.constant)

    def iadd(self, other, scale: float = 1.0) -> "LinExpr":
        if isinstance(other, VarRef):
            self.terms[other.id] = self.terms.get(other.id, 0.0) + scale
            return self
        other = LinExpr.of(other)
        for k, v in other.terms.items():
            self.terms[k] = self.terms.get(k, 0.0) + scale * v
        self.constant += scale * other.constant
        return self

    def __add__(self, other):
        return self.copy().iadd(other)

    __radd__ = __add__

    def __sub__(self, other):
        return self.copy().iadd(other, -1.0)

    def __rsub__(self, other):
        return (-self).iadd(other)

    def __mul__(self, c):
        if not isinstance(c, (int, float, np.floating, np.integer)):
            raise TypeError("linear terms can only be scaled by numbers")
        c = float(c)
        return LinExpr({k: c * v for k, v in self.terms.items()}, c * self.constant)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def value(self, values: Mapping[int, float]) -> float:
        return math.fsum([c * values[k] for k, c in self.terms.items()]) + self.constant

    def __repr__(self):
        return f"LinExpr({self.terms}, {self.constant})"


@dataclass
class Constraint:
    """Row ``sum(coefs * vars) sense rhs`` (constants folded into rhs)."""

    name: str
    coefs: dict
    sense: str
    rhs: float

    def activity(self, values: Mapping[int, float]) -> float:
        return math.fsum([c * values[k] for k, c in self.coefs.items()])

    def violation(self, values: Mapping[int, float]) -> float:
        a = self.activity(values)
        if self.sense == "<=":
            return max(a - self.rhs, 0.0)
        if self.sense == ">=":
            return max(self.rhs - a, 0.0)
        return abs(a - self.rhs)


@dataclass
class MilpModel:
    name: str = "model"
    variables: list = field(default_factory=list)
    constraints: list = field(default_factory=list)
    objective: LinExpr = field(default_factory=LinExpr)
    sense: str = "min"
    sealed: bool = False

    def __post_init__(self):
        self._by_name: dict[str, VarRef] = {v.name: v for v in self.variables}
        self._rows: set[str] = {c.name for c in self.constraints}

    # -- construction ------------------------------------------------------

    def _check_open(self):
        if self.sealed:
            raise ModelError(f"model {self.name!r} is sealed")

    def add_var(self, name: str, lb: float = 0.0, ub: float = INF, kind: str = "continuous") -> VarRef:
        self._check_open()
        if name in self._by_name:
            raise ModelError(f"duplicate variable name {name!r}")
        if kind not in ("continuous", "binary"):
            raise ModelError(f"unknown variable kind {kind!r}")
        lb, ub = float(lb), float(ub)
        if kind == "binary":
            lb, ub = max(lb, 0.0), min(ub, 1.0)
        if math.isnan(lb) or math.isnan(ub) or lb > ub:
            raise ModelError(f"bad bounds [{lb}, {ub}] for {name!r}")
        v = VarRef(len(self.variables), name, kind, lb, ub)
        self.variables.append(v)
        self._by_name[name] = v
        return v

    def add_binary(self, name: str) -> VarRef:
        return self.add_var(name, 0.0, 1.0, "binary")

    def fix(self, v: VarRef, value: float) -> None:
        self._check_open()
        v.lb = v.ub = float(value)

    def add_constraint(self, lhs, sense: str, rhs=0.0, name: str | None = None) -> Constraint:
        self._check_open()
        if sense not in SENSES:
            raise ModelError(f"unknown sense {sense!r}")
        expr = LinExpr.of(lhs) - LinExpr.of(rhs)
        if name is None:
            name = f"r{len(self.constraints)}"
        if name in self._rows:
            raise ModelError(f"duplicate constraint name {name!r}")
        coefs = {}
        for k, c in sorted(expr.terms.items()):
            if not math.isfinite(c):
                raise ModelError(f"non-finite coefficient in {name!r}")
            if k < 0 or k >= len(self.variables):
                raise ModelError(f"row {name!r} references an unknown variable")
            if c != 0.0:
                coefs[k] = c
        row = Constraint(name, coefs, sense, -expr.constant)
        self.constraints.append(row)
        self._rows.add(name)
        return row

    def set_objective(self, expr, sense: str = "min") -> None:
        self._check_open()
        if sense not in ("min", "max"):
            raise ModelError(f"unknown objective sense {sense!r}")
        self.objective = LinExpr.of(expr).copy()
        self.sense = sense

    def seal(self) -> "MilpModel":
        self.sealed = True
        return self

    # -- queries -----------------------------------------------------------

    def var(self, name: str) -> VarRef:
        return self._by_name[name]

    def has_var(self, name: str) -> bool:
        return name in self._by_name

    @property
    def binaries(self) -> list[VarRef]:
        return [v for v in self.variables if v.is_binary]

    def unique_name(self, base: str) -> str:
        if base not in self._by_name:
            return base
        k = 1
        while f"{base}#{k}" in self._by_name:
            k += 1
        return f"{base}#{k}"

    def unique_row(self, base: str) -> str:
        if base not in self._rows:
            return base
        k = 1
        while f"{base}#{k}" in self._rows:
            k += 1
        return f"{base}#{k}"

    def row(self, name: str) -> Constraint:
        for c in self.constraints:
            if c.name == name:
                return c
        raise KeyError(name)

    def max_violation(self, values: Mapping[int, float]) -> float:
        worst = 0.0
        for c in self.constraints:
            worst = max(worst, c.violation(values))
        for v in self.variables:
            x = values[v.id]
            worst = max(worst, v.lb - x, x - v.ub)
        return worst

    def arrays(self):
        """Dense (c, A, row_lo, row_hi, lb, ub) with the objective as a minimization."""
        n, m = len(self.variables), len(self.constraints)
        c = np.zeros(n)
        for k, v in self.objective.terms.items():
            c[k] = v
        if self.sense == "max":
            c = -c
        A = np.zeros((m, n))
        lo = np.full(m, -INF)
        hi = np.full(m, INF)
        for i, row in enumerate(self.constraints):
            for k, v in row.coefs.items():
                A[i, k] = v
            if row.sense in ("<=", "=="):
                hi[i] = row.rhs
            if row.sense in (">=", "=="):
                lo[i] = row.rhs
        lb = np.array([v.lb for v in self.variables])
        ub = np.array([v.ub for v in self.variables])
        return c, A, lo, hi, lb, ub


@dataclass
class SolveResult:
    status: str
    objective: float | None = None
    values: dict = field(default_factory=dict)
    nodes: int = 0
    wall_time: float = 0.0
    bound: float | None = None
    gap: float | None = None
    message: str = ""
    iterations: int = 0
    basis: object = None

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"

    def value_of(self, model: MilpModel, name: str) -> float:
        return self.values[model.var(name).id]

    def named(self, model: MilpModel) -> dict:
        return {v.name: self.values[v.id] for v in model.variables} if self.values else {}

    def to_json(self, model: MilpModel) -> dict:
        return {
            "schema_version": 1,
            "status": self.status,
            "objective": self.objective,
            "bound": self.bound,
            "gap": self.gap,
            "nodes": self.nodes,
            "values": self.named(model),
        }
