"""CPLEX-style LP text: deterministic writer plus a reader for the same subset."""

from __future__ import annotations

import re

from .model import INF, LinExpr, MilpModel, ModelError

TERMS_PER_LINE = 8
CONST_NAME = "__const"

_BAD = re.compile(r"[^A-Za-z0-9!\"#$%&()/,.;?@_`'{}|~]")
_NUMLIKE = re.compile(r"^[eE][0-9+\-.]")


def fmt(v: float) -> str:
    if v == 0:
        return "0"
    return f"{v:.12g}"


def lp_names(model: MilpModel) -> list[str]:
    """LP-safe, unique variable names in registry order."""
    out, seen = [], set()
    for v in model.variables:
        n = _BAD.sub("_", v.name)
        if not n or n[0].isdigit() or n[0] == "." or _NUMLIKE.match(n):
            n = "v_" + n
        base, k = n, 1
        while n in seen:
            n = f"{base}_{k}"
            k += 1
        seen.add(n)
        out.append(n)
    return out


def _terms(pairs, names) -> list[str]:
    out = []
    for i, (k, c) in enumerate(pairs):
        sign = "-" if c < 0 else "+"
        mag = abs(c)
        coef = "" if mag == 1 else fmt(mag) + " "
        if i == 0:
            out.append(("-" if c < 0 else "") + coef + names[k])
        else:
            out.append(f"{sign} {coef}{names[k]}")
    return out


def _wrap(head: str, parts: list[str], tail: str = "") -> list[str]:
    lines = []
    for i in range(0, max(len(parts), 1), TERMS_PER_LINE):
        chunk = " ".join(parts[i : i + TERMS_PER_LINE])
        lines.append((" " + head + " " if i == 0 else "   ") + chunk)
    if tail:
        lines[-1] += " " + tail
    return lines


def export_lp(model: MilpModel) -> str:
    names = lp_names(model)
    const = model.objective.constant
    has_const = const != 0.0 or not model.variables
    if has_const:
        cname = CONST_NAME
        while cname in names:
            cname = "_" + cname
        names = names + [cname]
    cid = len(model.variables)

    lines = [f"\\ Model {model.name}"]
    lines.append("Maximize" if model.sense == "max" else "Minimize")
    obj = [(k, c) for k, c in sorted(model.objective.terms.items()) if c != 0.0]
    if has_const:
        obj.append((cid, const))
    if not obj:
        obj = [(0, 0.0)]
    lines += _wrap("obj:", _terms(obj, names) if obj[0][1] != 0.0 else [f"0 {names[0]}"])

    lines.append("Subject To")
    rel = {"<=": "<=", ">=": ">=", "==": "="}
    for row in model.constraints:
        pairs = sorted(row.coefs.items())
        parts = _terms(pairs, names) if pairs else [f"0 {names[0]}"]
        label = _BAD.sub("_", row.name) + ":"
        lines += _wrap(label, parts, f"{rel[row.sense]} {fmt(row.rhs)}")

    lines.append("Bounds")
    for v, n in zip(model.variables, names):
        lo, hi = v.lb, v.ub
        if lo == hi:
            lines.append(f" {n} = {fmt(lo)}")
        elif lo == -INF and hi == INF:
            lines.append(f" {n} free")
        elif hi == INF:
            lines.append(f" {n} >= {fmt(lo)}")
        elif lo == -INF:
            lines.append(f" -inf <= {n} <= {fmt(hi)}")
        else:
            lines.append(f" {fmt(lo)} <= {n} <= {fmt(hi)}")
    if has_const:
        lines.append(f" {names[cid]} = 1")

    lines.append("Binary")
    for v, n in zip(model.variables, names):
        if v.is_binary:
            lines.append(f" {n}")
    lines.append("End")
    return "\n".join(lines) + "\n"


# -- reader -------------------------------------------------------------------

_SECTIONS = {
    "maximize": "max", "maximum": "max", "max": "max",
    "minimize": "min", "minimum": "min", "min": "min",
    "subject to": "st", "such that": "st", "st": "st", "s.t.": "st",
    "bounds": "bounds", "bound": "bounds",
    "binary": "bin", "binaries": "bin", "bin": "bin",
    "general": "gen", "generals": "gen", "gen": "gen",
    "end": "end",
}
_TOKEN = re.compile(r"\s*(<=|>=|=<|=>|<|>|=|[+-]|[0-9]*\.?[0-9]+(?:[eE][+-]?[0-9]+)?|[^\s:+\-<>=]+:?)")


class LpParseError(ValueError):
    pass


def _num(tok: str) -> float:
    t = tok.lower()
    if t in ("inf", "+inf", "infinity", "+infinity"):
        return INF
    if t in ("-inf", "-infinity"):
        return -INF
    return float(tok)


def _tokens(text: str, lineno: int) -> list[str]:
    toks, pos = [], 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise LpParseError(f"line {lineno}: cannot read {text[pos:]!r}")
        toks.append(m.group(1))
        pos = m.end()
    return toks


def _linear(toks, lineno):
    """Parse ``[+-] [coef] name ...`` into (name, coef) pairs; returns (pairs, rest)."""
    pairs, i, sign, coef, pending = [], 0, 1.0, None, False
    while i < len(toks):
        t = toks[i]
        if t in ("<=", ">=", "=<", "=>", "<", ">", "="):
            break
        if t in ("+", "-"):
            sign = sign * (-1.0 if t == "-" else 1.0)
            pending = True
        elif re.fullmatch(r"[0-9]*\.?[0-9]+(?:[eE][+-]?[0-9]+)?", t):
            coef = float(t)
        else:
            pairs.append((t, sign * (1.0 if coef is None else coef)))
            sign, coef, pending = 1.0, None, False
        i += 1
    if coef is not None:
        raise LpParseError(f"line {lineno}: dangling number in expression")
    if pending:
        raise LpParseError(f"line {lineno}: dangling sign in expression")
    return pairs, toks[i:]


def read_lp(text: str, name: str = "lp") -> MilpModel:
    model = MilpModel(name)
    section = None
    sense = "min"
    obj_toks: list = []
    rows: list = []  # (label, tokens, lineno)
    pending: list = []
    bounds: list = []
    binaries: list = []
    var_order: list = []
    seen: set = set()

    def note(n):
        if n not in seen:
            seen.add(n)
            var_order.append(n)

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("\\", 1)[0].strip()
        if not line:
            continue
        key = line.lower()
        if key in _SECTIONS:
            if pending:
                rows.append(pending)
                pending = []
            section = _SECTIONS[key]
            if section in ("max", "min"):
                sense = section
                section = "obj"
            if section == "gen":
                raise LpParseError(f"line {lineno}: general integers are not supported")
            if section == "end":
                break
            continue
        if section is None:
            raise LpParseError(f"line {lineno}: text before the objective section")
        if section == "obj":
            obj_toks += _tokens(line, lineno)
        elif section == "st":
            toks = _tokens(line, lineno)
            if toks and toks[0].endswith(":") and pending:
                rows.append(pending)
                pending = []
            if not pending:
                pending = [None, [], lineno]
                if toks and toks[0].endswith(":"):
                    pending[0] = toks[0][:-1]
                    toks = toks[1:]
            pending[1] += toks
            if any(t in ("<=", ">=", "=<", "=>", "<", ">", "=") for t in toks):
                rows.append(pending)
                pending = []
        elif section == "bounds":
            bounds.append((_tokens(line, lineno), lineno))
        elif section == "bin":
            for t in line.split():
                binaries.append(t)
                note(t)

    if obj_toks and obj_toks[0].endswith(":"):
        obj_toks = obj_toks[1:]
    obj_pairs, rest = _linear(obj_toks, 0)
    if rest:
        raise LpParseError("objective contains a relation")
    for n, _ in obj_pairs:
        note(n)
    parsed_rows = []
    for label, toks, lineno in rows:
        pairs, rest = _linear(toks, lineno)
        rest = _merge_signs(rest)
        if len(rest) != 2:
            raise LpParseError(f"line {lineno}: expected '<relation> <rhs>'")
        rel = {"<=": "<=", "=<": "<=", "<": "<=", ">=": ">=", "=>": ">=", ">": ">=", "=": "=="}[rest[0]]
        for n, _ in pairs:
            note(n)
        parsed_rows.append((label, pairs, rel, _num(rest[1])))

    lo: dict = {}
    hi: dict = {}
    bound_order: list = []
    rels = ("<=", ">=", "=<", "=>", "<", ">", "=")
    def isnum(t):
        try:
            _num(t)
            return True
        except ValueError:
            return False

    for toks, lineno in bounds:
        toks = _merge_signs(toks)
        if len(toks) == 2 and toks[1].lower() == "free":
            bound_order.append(toks[0])
            lo[toks[0]], hi[toks[0]] = -INF, INF
        elif len(toks) == 5 and toks[1] in rels and toks[3] in rels:
            n = toks[2]
            bound_order.append(n)
            lo[n], hi[n] = _num(toks[0]), _num(toks[4])
        elif len(toks) == 3 and toks[1] in rels:
            if isnum(toks[0]) and not isnum(toks[2]):
                toks = [toks[2], {"<=": ">=", "=<": ">=", ">=": "<=", "=>": "<=", "=": "="}.get(toks[1], toks[1]), toks[0]]
            n, r, val = toks[0], toks[1], _num(toks[2])
            bound_order.append(n)
            if r == "=":
                lo[n] = hi[n] = val
            elif r in ("<=", "=<", "<"):
                hi[n] = val
            else:
                lo[n] = val
        else:
            raise LpParseError(f"line {lineno}: unreadable bound {' '.join(toks)!r}")

    bset = set(binaries)
    refs = {}
    # registry order: as listed under Bounds, then first appearance elsewhere
    order = list(dict.fromkeys(bound_order + var_order))
    for n in order:
        kind = "binary" if n in bset else "continuous"
        l = lo.get(n, 0.0)
        h = hi.get(n, 1.0 if kind == "binary" else INF)
        try:
            refs[n] = model.add_var(n, l, h, kind)
        except ModelError as exc:
            raise LpParseError(str(exc)) from exc
    model.set_objective(LinExpr.sum(c * refs[n] for n, c in obj_pairs), sense)
    for label, pairs, rel, rhs in parsed_rows:
        model.add_constraint(LinExpr.sum(c * refs[n] for n, c in pairs), rel, rhs, name=label)
    return model


def _merge_signs(toks: list[str]) -> list[str]:
    """Glue a leading sign onto the number or ``inf`` that follows it."""
    out, i = [], 0
    while i < len(toks):
        t = toks[i]
        if t in ("+", "-") and i + 1 < len(toks):
            out.append(t + toks[i + 1] if t == "-" else toks[i + 1])
            i += 2
            continue
        out.append(t)
        i += 1
    return out
