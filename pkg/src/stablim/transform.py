"""Semantics-preserving rewriting of limit expressions.

The pipeline applied before linearization is fixed as::

    normalize -> prune (to a fixpoint, re-normalizing) -> factor_common

``bounds`` is plain interval arithmetic; it is sound but not tight when a
variable appears more than once, which is one reason ``normalize`` merges
affine terms over the same variable.
"""

from __future__ import annotations

import hashlib
import logging
import math
import os
from dataclasses import dataclass, field
from typing import Mapping

from .expr import (
    Add, Const, LimitExpr, Max, Min, Mul, Neg, Var, canonical, children,
    node_count, substitute, to_text,
)

log = logging.getLogger(__name__)

DEFAULT_DOMAIN = (-1e9, 1e9)
DOMINANCE_TOL = 1e-9


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def __add__(self, other: "Interval") -> "Interval":
        return Interval(self.lo + other.lo, self.hi + other.hi)

    def __neg__(self) -> "Interval":
        return Interval(-self.hi, -self.lo)

    def scale(self, c: float) -> "Interval":
        a, b = c * self.lo, c * self.hi
        return Interval(min(a, b), max(a, b))

    def contains(self, v: float, tol: float = 0.0) -> bool:
        return self.lo - tol <= v <= self.hi + tol


def default_domain() -> Interval:
    """Fallback domain, overridable via ``STABLIM_DEFAULT_DOMAIN="lo,hi"``."""
    raw = os.environ.get("STABLIM_DEFAULT_DOMAIN")
    if raw:
        lo, hi = (float(x) for x in raw.split(","))
        return Interval(lo, hi)
    return Interval(*DEFAULT_DOMAIN)


@dataclass
class DomainMap:
    """Variable domains with a default for unlisted names.

    Names that fell back to the default are collected in ``defaulted`` so
    callers can report them.
    """

    domains: dict = field(default_factory=dict)
    default: Interval | None = None
    defaulted: set = field(default_factory=set)

    def __post_init__(self):
        self.domains = {
            k: v if isinstance(v, Interval) else Interval(*v)
            for k, v in self.domains.items()
        }
        if self.default is None:
            self.default = default_domain()

    def __getitem__(self, name: str) -> Interval:
        try:
            return self.domains[name]
        except KeyError:
            if name not in self.defaulted:
                log.warning("no domain for %s; using [%g, %g]", name, self.default.lo, self.default.hi)
                self.defaulted.add(name)
            return self.default

    def __contains__(self, name: str) -> bool:
        return name in self.domains

    def with_entries(self, extra: Mapping[str, Interval]) -> "DomainMap":
        merged = dict(self.domains)
        merged.update(extra)
        out = DomainMap(merged, self.default)
        out.defaulted = self.defaulted
        return out


def _as_domains(d) -> DomainMap:
    return d if isinstance(d, DomainMap) else DomainMap(dict(d))


# ---------------------------------------------------------------------------
# bounds


def bounds(e: LimitExpr, d) -> Interval:
    d = _as_domains(d)
    return _bounds(e, d)


def _bounds(e: LimitExpr, d: DomainMap) -> Interval:
    if isinstance(e, Const):
        return Interval(e.value, e.value)
    if isinstance(e, Var):
        return d[e.name]
    if isinstance(e, Neg):
        return -_bounds(e.child, d)
    if isinstance(e, Mul):
        return _bounds(e.child, d).scale(e.scalar)
    kids = [_bounds(k, d) for k in e.children]
    if isinstance(e, Add):
        return Interval(math.fsum(k.lo for k in kids), math.fsum(k.hi for k in kids))
    if isinstance(e, Min):
        return Interval(min(k.lo for k in kids), min(k.hi for k in kids))
    if isinstance(e, Max):
        return Interval(max(k.lo for k in kids), max(k.hi for k in kids))
    raise TypeError(f"not a limit expression: {e!r}")


# ---------------------------------------------------------------------------
# normalize


def _neg_push(e: LimitExpr) -> LimitExpr:
    """Normalized negation of an already normalized expression."""
    if isinstance(e, Const):
        return Const(-e.value + 0.0)
    if isinstance(e, Var):
        return Neg(e)
    if isinstance(e, Neg):
        return e.child
    if isinstance(e, Mul):
        return _scale(-e.scalar, e.child)
    if isinstance(e, Add):
        return _make_add([_neg_push(k) for k in e.children])
    if isinstance(e, Min):
        return _make_minmax(Max, [_neg_push(k) for k in e.children])
    if isinstance(e, Max):
        return _make_minmax(Min, [_neg_push(k) for k in e.children])
    raise TypeError(e)


def _scale(c: float, e: LimitExpr) -> LimitExpr:
    """Normalized ``c * e`` for normalized ``e``."""
    c = float(c) + 0.0
    if c == 0.0:
        return Const(0.0)
    if c == 1.0:
        return e
    if c == -1.0:
        return _neg_push(e)
    if isinstance(e, Const):
        return Const(c * e.value + 0.0)
    if isinstance(e, Var):
        return Mul(c, e)
    if isinstance(e, Neg):
        return _scale(-c, e.child)
    if isinstance(e, Mul):
        return _scale(c * e.scalar, e.child)
    if isinstance(e, Add):
        return _make_add([_scale(c, k) for k in e.children])
    if isinstance(e, (Min, Max)):
        kids = [_scale(c, k) for k in e.children]
        if c > 0:
            return _make_minmax(type(e), kids)
        return _make_minmax(Max if isinstance(e, Min) else Min, kids)
    raise TypeError(e)


def _affine_term(e: LimitExpr):
    """(name, coefficient) when ``e`` is ``x``, ``-x`` or ``c*x``."""
    if isinstance(e, Var):
        return e.name, 1.0
    if isinstance(e, Neg) and isinstance(e.child, Var):
        return e.child.name, -1.0
    if isinstance(e, Mul) and isinstance(e.child, Var):
        return e.child.name, e.scalar
    return None


def _term(name: str, coef: float) -> LimitExpr:
    if coef == 1.0:
        return Var(name)
    if coef == -1.0:
        return Neg(Var(name))
    return Mul(coef, Var(name))


def _make_add(kids) -> LimitExpr:
    flat: list[LimitExpr] = []
    stack = list(kids)
    while stack:
        k = stack.pop(0)
        if isinstance(k, Add):
            stack[:0] = list(k.children)
        else:
            flat.append(k)
    consts: list[float] = []
    coefs: dict[str, list[float]] = {}
    order: list[str] = []
    rest: list[LimitExpr] = []
    for k in flat:
        if isinstance(k, Const):
            consts.append(k.value)
            continue
        t = _affine_term(k)
        if t is not None:
            if t[0] not in coefs:
                coefs[t[0]] = []
                order.append(t[0])
            coefs[t[0]].append(t[1])
        else:
            rest.append(k)
    out: list[LimitExpr] = []
    const = math.fsum(consts) + 0.0
    if const != 0.0:
        out.append(Const(const))
    for name in order:
        c = math.fsum(coefs[name]) + 0.0
        if c != 0.0:
            out.append(_term(name, c))
    out.extend(rest)
    if not out:
        return Const(0.0)
    if len(out) == 1:
        return out[0]
    return canonical(Add(tuple(out)))


def _make_minmax(cls, kids) -> LimitExpr:
    flat: list[LimitExpr] = []
    stack = list(kids)
    while stack:
        k = stack.pop(0)
        if isinstance(k, cls):
            stack[:0] = list(k.children)
        else:
            flat.append(k)
    consts = [k.value for k in flat if isinstance(k, Const)]
    rest = [k for k in flat if not isinstance(k, Const)]
    out: list[LimitExpr] = []
    if consts:
        out.append(Const(min(consts) if cls is Min else max(consts)))
    seen = set()
    for k in rest:
        if k not in seen:
            seen.add(k)
            out.append(k)
    if len(out) == 1:
        return out[0]
    return canonical(cls(tuple(out)))


def _normalize_once(e: LimitExpr) -> LimitExpr:
    if isinstance(e, (Const, Var)):
        return e
    if isinstance(e, Neg):
        return _neg_push(_normalize_once(e.child))
    if isinstance(e, Mul):
        return _scale(e.scalar, _normalize_once(e.child))
    kids = [_normalize_once(k) for k in e.children]
    if isinstance(e, Add):
        return _make_add(kids)
    return _make_minmax(type(e), kids)


def normalize(e: LimitExpr) -> LimitExpr:
    """Push negations to the leaves, flatten, merge constants, dedupe.

    Scalars are distributed over sums and moved inside min/max (flipping
    min and max for negative scalars), so after normalization ``Neg`` only
    wraps variables and ``Mul`` only wraps variables.
    """
    e = canonical(e)
    while True:
        nxt = _normalize_once(e)
        if nxt == e:
            return e
        e = nxt


# ---------------------------------------------------------------------------
# prune


@dataclass
class PruneStats:
    removed_children: int = 0
    nodes_before: int = 0
    nodes_after: int = 0


def _prune_node(e: LimitExpr, d: DomainMap, stats: PruneStats, tol: float) -> LimitExpr:
    if isinstance(e, (Const, Var)):
        return e
    if isinstance(e, Neg):
        return Neg(_prune_node(e.child, d, stats, tol))
    if isinstance(e, Mul):
        return Mul(e.scalar, _prune_node(e.child, d, stats, tol))
    kids = [_prune_node(k, d, stats, tol) for k in e.children]
    if isinstance(e, Add):
        return Add(tuple(kids))
    ivs = [_bounds(k, d) for k in kids]
    is_min = isinstance(e, Min)
    alive = [True] * len(kids)
    # latest sibling first, so ties keep the earliest in canonical order
    for j in reversed(range(len(kids))):
        for i in range(len(kids)):
            if i == j or not alive[i]:
                continue
            if is_min:
                dominated = ivs[i].hi <= ivs[j].lo + tol
            else:
                dominated = ivs[i].lo >= ivs[j].hi - tol
            if dominated:
                alive[j] = False
                stats.removed_children += 1
                break
    kept = [k for k, a in zip(kids, alive) if a]
    if len(kept) == 1:
        return kept[0]
    return type(e)(tuple(kept))


def prune(e: LimitExpr, d, tol: float = DOMINANCE_TOL, stats: PruneStats | None = None) -> LimitExpr:
    """Drop min/max children dominated on the domain, to a fixpoint.

    Within a ``Min`` a child is removed when another child's upper bound is
    at most its lower bound (dually for ``Max``).  Each round re-normalizes,
    which can expose further dominated branches.
    """
    d = _as_domains(d)
    stats = stats if stats is not None else PruneStats()
    e = normalize(e)
    stats.nodes_before = node_count(e)
    while True:
        nxt = normalize(_prune_node(e, d, stats, tol))
        if nxt == e:
            break
        e = nxt
    stats.nodes_after = node_count(e)
    return e


# ---------------------------------------------------------------------------
# common subtrees


def _key(e: LimitExpr) -> str:
    return hashlib.sha1(to_text(e).encode()).hexdigest()


def factor_common(e: LimitExpr, prefix: str = "__cse") -> tuple[LimitExpr, list[tuple[str, LimitExpr]]]:
    """Replace every composite subtree occurring twice or more by a variable.

    Subtrees are grouped by a hash of their canonical text; groups are split
    by full structural comparison so a hash collision cannot merge distinct
    subtrees.  Definitions come back inner-first, so each one only refers to
    names defined before it.
    """
    buckets: dict[str, list[list]] = {}

    def count(node):
        for k in children(node):
            count(k)
        if not children(node):
            return
        group = buckets.setdefault(_key(node), [])
        for entry in group:
            if entry[0] == node:
                entry[1] += 1
                return
        group.append([node, 1])

    count(e)
    repeated = {}
    for group in buckets.values():
        for node, n in group:
            if n >= 2:
                repeated[node] = None
    if not repeated:
        return e, []

    names: dict = {}
    defs: list[tuple[str, LimitExpr]] = []

    def rewrite(node):
        kids = children(node)
        if not kids:
            return node
        if isinstance(node, Neg):
            new = Neg(rewrite(node.child))
        elif isinstance(node, Mul):
            new = Mul(node.scalar, rewrite(node.child))
        else:
            new = type(node)(tuple(rewrite(k) for k in kids))
        if node in repeated:
            if node not in names:
                names[node] = f"{prefix}_{len(defs)}"
                defs.append((names[node], canonical(new)))
            return Var(names[node])
        return new

    out = canonical(rewrite(e))
    return out, defs


def expand(e: LimitExpr, defs) -> LimitExpr:
    """Substitute factored definitions back into ``e``."""
    for name, body in reversed(list(defs)):
        e = substitute(e, {name: body})
    return canonical(e)


# ---------------------------------------------------------------------------
# pipeline


@dataclass
class Simplified:
    expr: LimitExpr
    definitions: list
    nodes_before: int
    nodes_after: int
    pruned_children: int
    defaulted: list

    def report(self) -> dict:
        return {
            "nodes_before": self.nodes_before,
            "nodes_after": self.nodes_after,
            "pruned_children": self.pruned_children,
            "pruned_nodes": max(self.nodes_before - self.nodes_after, 0),
            "common_subtrees": len(self.definitions),
            "defaulted_domains": self.defaulted,
        }


def simplify(e: LimitExpr, d, factor: bool = True, prefix: str = "__cse") -> Simplified:
    d = _as_domains(d)
    before = node_count(e)
    stats = PruneStats()
    pruned = prune(e, d, stats=stats)
    defs: list = []
    if factor:
        pruned, defs = factor_common(pruned, prefix)
    return Simplified(pruned, defs, before, node_count(pruned), stats.removed_children, sorted(d.defaulted))
