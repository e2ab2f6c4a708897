"""Shared generators and reference implementations for the test suite."""

from __future__ import annotations

import copy
import itertools
import json
import random
from pathlib import Path

import numpy as np

from stablim.expr import Add, Const, Max, Min, Mul, Neg, Var
from stablim.grid import DROP_HEIGHTS, NORMAL_YIELDS, load_snapshot, snapshot_from_dict
from stablim.htscuc import Candidate, build_htscuc_model
from stablim.linearize import SymbolTable, attach_upper
from stablim.transform import bounds, prune
from stablim.milp import LinExpr, MilpModel, solve_lp, solve_milp

FIXTURES = Path(__file__).parent / "fixtures"

VAR_NAMES = ("P_1", "N_2", "N_3", "F")


def fixture(name: str):
    return load_snapshot(FIXTURES / name)


def fixture_dict(name: str) -> dict:
    return json.loads((FIXTURES / name).read_text())


def snap(doc: dict):
    return snapshot_from_dict(doc)


# -- expressions ---------------------------------------------------------------


def random_expr(rng: random.Random, depth: int, names=VAR_NAMES):
    """Random tree of height at most ``depth`` (a leaf has height 1)."""
    if depth <= 1 or rng.random() < 0.2:
        if rng.random() < 0.35:
            return Const(float(rng.randint(-200, 200)))
        return Var(rng.choice(names))
    kind = rng.choices(["add", "mul", "neg", "min", "max"], weights=[3, 2, 1, 3, 3])[0]
    if kind == "neg":
        return Neg(random_expr(rng, depth - 1, names))
    if kind == "mul":
        scalar = rng.choice([-4.0, -2.0, -1.5, -0.5, 0.25, 0.5, 2.0, 3.0, 5.0])
        return Mul(scalar, random_expr(rng, depth - 1, names))
    kids = tuple(random_expr(rng, depth - 1, names) for _ in range(rng.randint(2, 3)))
    return {"add": Add, "min": Min, "max": Max}[kind](kids)


def random_domains(rng: random.Random, names=VAR_NAMES) -> dict:
    out = {}
    for n in names:
        lo = float(rng.randint(-50, 40))
        out[n] = (lo, lo + float(rng.randint(1, 60)))
    return out


def np_eval(e, env: dict):
    """Naive vectorized evaluator, written apart from ``stablim.expr.evaluate``."""
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        return env[e.name]
    if isinstance(e, Neg):
        return -np_eval(e.child, env)
    if isinstance(e, Mul):
        return e.scalar * np_eval(e.child, env)
    vals = [np_eval(k, env) for k in e.children]
    if isinstance(e, Add):
        out = vals[0]
        for v in vals[1:]:
            out = out + v
        return out
    red = np.minimum if isinstance(e, Min) else np.maximum
    out = vals[0]
    for v in vals[1:]:
        out = red(out, v)
    return out


def sample_bindings(rng: np.random.Generator, domains: dict, n: int) -> dict:
    return {k: rng.uniform(lo, hi, n) for k, (lo, hi) in domains.items()}


def envelope_check(rng: random.Random, names=("P_1", "N_2", "N_3"), grid: int = 50,
                   need_binaries: bool = False) -> dict:
    """Maximize ``x`` subject to ``x <= e`` and compare with a grid search and a re-evaluation.

    With ``need_binaries`` the draw is repeated until the compiled rows need selectors.
    """
    while True:
        e = random_expr(rng, rng.randint(2, 5), names)
        d = random_domains(rng, names)
        e = prune(e, d)
        if isinstance(e, Const):
            continue
        used = sorted({n for n in names if n in _names_in(e)})
        iv = bounds(e, d)
        m = MilpModel("envelope")
        x = m.add_var("x", iv.lo - 1.0, iv.hi + 1.0)
        st = SymbolTable()
        for n in used:
            st.bind(n, m.add_var(n, *d[n]))
        lin = attach_upper(m, x, e, st, "env")
        if lin.binaries or not need_binaries:
            break
    m.set_objective(x, "max")
    res = solve_milp(m)
    axes = np.meshgrid(*[np.linspace(*d[n], grid) for n in used], indexing="ij")
    env = {n: a.ravel() for n, a in zip(used, axes)}
    grid_max = float(np.max(np_eval(e, env)))
    at = {n: res.value_of(m, n) for n in used}
    return {
        "expr": e, "status": res.status, "milp": res.objective, "grid": grid_max,
        "x": res.value_of(m, "x"), "eval_at_solution": float(np_eval(e, at)), "binaries": lin.binaries,
    }


def _names_in(e) -> set:
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, Const):
        return set()
    kids = (e.child,) if isinstance(e, (Neg, Mul)) else e.children
    return set().union(*(_names_in(k) for k in kids))


# -- MILP ----------------------------------------------------------------------


def random_milp(rng: random.Random, n_bin: int, n_cont: int, n_rows: int, sense: str = "max") -> MilpModel:
    """Bounded random MILP; some instances are infeasible on purpose."""
    m = MilpModel("rand")
    xs = [m.add_binary(f"b{i}") for i in range(n_bin)]
    xs += [m.add_var(f"x{i}", rng.choice([0.0, -5.0]), rng.choice([5.0, 10.0, 20.0])) for i in range(n_cont)]
    for r in range(n_rows):
        picks = rng.sample(xs, k=min(len(xs), rng.randint(2, 5)))
        lhs = LinExpr.sum(rng.randint(-6, 6) * v for v in picks)
        rel = rng.choice(["<=", "<=", ">=", "=="]) if rng.random() > 0.1 else "=="
        m.add_constraint(lhs, rel, float(rng.randint(-8, 12)), name=f"r{r}")
    m.set_objective(LinExpr.sum(rng.randint(-5, 9) * v for v in xs), sense)
    return m


def planted_milp(rng: random.Random, n_bin: int, n_cont: int, n_rows: int, sense: str = "max") -> MilpModel:
    """Random MILP built around a hidden integer-feasible point, so it is never infeasible."""
    m = MilpModel("planted")
    xs = [m.add_binary(f"b{i}") for i in range(n_bin)]
    point = [float(rng.randint(0, 1)) for _ in range(n_bin)]
    for i in range(n_cont):
        lo, hi = rng.choice([0.0, -5.0]), rng.choice([5.0, 10.0, 20.0])
        xs.append(m.add_var(f"x{i}", lo, hi))
        point.append(rng.uniform(lo, hi))
    for r in range(n_rows):
        picks = rng.sample(range(len(xs)), k=min(len(xs), rng.randint(2, 5)))
        coefs = {k: float(rng.randint(-6, 6)) for k in picks}
        lhs = LinExpr.sum(c * xs[k] for k, c in coefs.items())
        act = sum(c * point[k] for k, c in coefs.items())
        rel = rng.choice(["<=", ">=", "<=", ">=", "=="])
        slack = float(rng.randint(0, 4))
        rhs = act + slack if rel == "<=" else act - slack if rel == ">=" else act
        m.add_constraint(lhs, rel, rhs, name=f"r{r}")
    m.set_objective(LinExpr.sum(rng.randint(-5, 9) * v for v in xs), sense)
    return m


def random_feasible_lp(rng: np.random.Generator, n: int, m_rows: int):
    """``min c x, A x >= b, 0 <= x <= u`` built around a known feasible point."""
    A = rng.integers(-5, 6, size=(m_rows, n)).astype(float)
    u = rng.uniform(1.0, 10.0, n)
    x0 = rng.uniform(0.0, 1.0, n) * u
    b = A @ x0 - rng.uniform(0.0, 3.0, m_rows)
    c = rng.integers(-5, 6, size=n).astype(float)
    return c, A, b, u


def lp_model(c, A, b, u) -> MilpModel:
    m = MilpModel("primal")
    xs = [m.add_var(f"x{j}", 0.0, float(u[j])) for j in range(len(c))]
    for i in range(A.shape[0]):
        m.add_constraint(LinExpr.sum(float(A[i, j]) * xs[j] for j in range(len(c)) if A[i, j]), ">=", float(b[i]), name=f"r{i}")
    m.set_objective(LinExpr.sum(float(c[j]) * xs[j] for j in range(len(c))), "min")
    return m


def dual_model(c, A, b, u) -> MilpModel:
    """Dual of ``lp_model``: ``max b y - u w, A^T y - w <= c, y, w >= 0``."""
    m = MilpModel("dual")
    ys = [m.add_var(f"y{i}", 0.0) for i in range(A.shape[0])]
    ws = [m.add_var(f"w{j}", 0.0) for j in range(len(c))]
    for j in range(len(c)):
        m.add_constraint(LinExpr.sum(float(A[i, j]) * ys[i] for i in range(A.shape[0]) if A[i, j]) - ws[j],
                         "<=", float(c[j]), name=f"d{j}")
    m.set_objective(LinExpr.sum(float(b[i]) * ys[i] for i in range(A.shape[0]))
                    - LinExpr.sum(float(u[j]) * ws[j] for j in range(len(c))), "max")
    return m


# -- snapshots -----------------------------------------------------------------


def curve(q_opt: float) -> dict:
    return {
        "flow": {"min": 0.6 * q_opt, "opt": q_opt, "max": 1.15 * q_opt, "stab": 1.25 * q_opt},
        "eta": {"min": 0.84, "opt": 0.92, "max": 0.90, "stab": 0.88},
        "head": {"low": 90, "high": 100},
    }


def random_fcpl_snapshot(rng: random.Random, n_sets: int) -> dict:
    """South-only system with ``n_sets`` contingency sets over 2-5 plants."""
    n_plants = rng.randint(2, 5)
    plants, gens = [], []
    for p in range(n_plants):
        plants.append({"id": f"p{p}", "zone": "south"})
        for k in range(rng.randint(1, 3)):
            gens.append({"id": f"p{p}g{k}", "plant": f"p{p}", "commit_order": k + 1,
                         "p_min": float(rng.choice([0, 20, 50])), "p_max": float(rng.randint(80, 400)),
                         "vertices": curve(300)})
    ids = [g["id"] for g in gens]
    sets = []
    for f in range(n_sets):
        members = rng.sample(ids, k=rng.randint(1, min(3, len(ids))))
        sets.append({"id": f"f{f}", "generators": sorted(members)})
    cap = sum(g["p_max"] for g in gens)
    return {
        "schema_version": 1, "name": "rand_fcpl", "time": {"durations": [3600]},
        "zones": [{"id": "south", "is_south": True, "net_power": round(rng.uniform(0.3, 0.7) * cap, 1)}],
        "hydro_plants": plants, "generators": gens, "fcpl_sets": sets,
        "reserves": [{"id": "10S"}, {"id": "10NS"}, {"id": "30NS"}],
    }


# -- restoration oracle ------------------------------------------------------------


def _at_step(value, t: int, n_steps: int) -> list:
    seq = list(value) if isinstance(value, list) else [value] * n_steps
    return seq


def apply_actions(doc: dict, actions: list, reserve: str, t: int) -> dict:
    """Copy of ``doc`` with the effects of ``actions`` written into the data itself.

    Load shedding and added power lower the zone's net load, limit
    replacements become the tightest of the chosen alternatives, and a
    dropped reserve loses its contingency sets (only valid when no limit
    reads ``Pworst_north``).
    """
    out = copy.deepcopy(doc)
    n = len(out["time"]["durations"])
    zones = {z["id"]: z for z in out["zones"]}
    links = {l["id"]: l for l in out.get("links", [])}
    alts: dict = {}
    for act in actions:
        for ef in act["effects"]:
            kind = ef["kind"]
            if kind in ("shed_load", "add_zone_power"):
                z = zones[ef["zone"]]
                seq = _at_step(z.get("net_power", 0.0), t, n)
                seq[t] = seq[t] - ef["mw"]
                z["net_power"] = seq
            elif kind == "scale_limit":
                alts.setdefault((ef["link"], ef["limit"]), []).append(ef["expr"])
            elif kind == "drop_reserve" and ef["reserve"] == reserve:
                out["fcpl_sets"] = []
    for (lid, key), exprs in alts.items():
        link = links[lid]
        limits = link.setdefault("limits", {})
        seq = _at_step(limits.get(key), t, n)
        op = "min" if key.endswith("upper") else "max"
        seq[t] = exprs[0] if len(exprs) == 1 else f"{op}({', '.join(exprs)})"
        limits[key] = seq
    return out


def restoration_oracle(doc: dict, t: int, reserves: list) -> dict:
    """Cheapest action subset under which every listed reserve is adequate, by enumeration."""
    from stablim.adequacy import assess

    acts = sorted(doc.get("remedial_actions", []), key=lambda a: a["id"])
    subsets = []
    for k in range(len(acts) + 1):
        subsets.extend(itertools.combinations(acts, k))
    subsets.sort(key=lambda c: (sum(a["priority"] for a in c), len(c), [a["id"] for a in c]))
    best_cost = None
    optimal = []
    seen: dict = {}

    def adequate(r, combo):
        mutated = apply_actions(doc, list(combo), r, t)
        key = (r, json.dumps(mutated, sort_keys=True))
        if key not in seen:
            rep = assess(snapshot_from_dict(mutated), r, t)
            seen[key] = rep.margin is not None and rep.margin >= -1e-7
        return seen[key]

    for combo in subsets:
        cost = sum(a["priority"] for a in combo)
        if best_cost is not None and cost > best_cost + 1e-9:
            break
        if all(adequate(r, combo) for r in reserves):
            best_cost = cost
            optimal.append(sorted(a["id"] for a in combo))
    return {"cost": best_cost, "optimal_sets": optimal}


def random_restoration_doc(rng: random.Random, n_actions: int) -> dict:
    """Two-zone system with a stressed tie and ``n_actions`` relaxing actions."""
    gens = []
    for p, zone, count in (("hpN", "north", rng.randint(2, 3)), ("hpS", "south", rng.randint(1, 2))):
        for k in range(count):
            gens.append({"id": f"{p}_{k}", "plant": p, "commit_order": k + 1,
                         "p_min": float(rng.choice([0, 30])), "p_max": float(rng.randint(150, 400)),
                         "vertices": curve(300)})
    ids = [g["id"] for g in gens]
    sets = [{"id": f"f{i}", "generators": sorted(rng.sample(ids, k=rng.randint(1, 2)))}
            for i in range(rng.randint(1, 4))]
    n_cap = sum(g["p_max"] for g in gens if g["plant"] == "hpN")
    s_cap = sum(g["p_max"] for g in gens if g["plant"] == "hpS")
    tie = round(rng.uniform(0.3, 0.8) * n_cap)
    load = round(rng.uniform(0.75, 0.95) * (tie + s_cap))
    actions = []
    for i in range(n_actions):
        kind = rng.choice(["shed_load", "add_zone_power", "scale_limit", "drop_reserve"])
        if kind == "shed_load":
            ef = {"kind": kind, "zone": "south", "mw": float(rng.randint(10, 150))}
        elif kind == "add_zone_power":
            ef = {"kind": kind, "zone": "south", "mw": float(rng.randint(10, 120))}
        elif kind == "scale_limit":
            extra = rng.randint(20, 200)
            ef = {"kind": kind, "link": "ns", "limit": "in_upper",
                  "expr": rng.choice([f"{tie + extra}", f"min({tie + extra}, {tie + 2 * extra} - 0.2*P[hpN])"])}
        else:
            ef = {"kind": kind, "reserve": rng.choice(["10S", "10NS", "30NS"])}
        actions.append({"id": f"a{i}", "priority": float(rng.randint(1, 9)), "effects": [ef]})
    return {
        "schema_version": 1, "name": "rand_restore", "time": {"durations": [3600]},
        "zones": [{"id": "north", "net_power": 0.0}, {"id": "south", "is_south": True, "net_power": float(load)}],
        "links": [{"id": "ns", "from": "north", "to": "south", "loss": {"a": 0.0, "b": 0.98},
                   "limits": {"in_upper": f"min({tie}, {tie + 150} - 0.3*P[hpN])"}}],
        "hydro_plants": [{"id": "hpN", "zone": "north"}, {"id": "hpS", "zone": "south"}],
        "generators": gens, "fcpl_sets": sets,
        "reserves": [{"id": "10S"}, {"id": "10NS"}, {"id": "30NS"}],
        "remedial_actions": actions,
    }


# -- configuration generation reference ------------------------------------------------
#
# Written straight from the recursive procedure, sharing no code with the package:
# covers are greedy in commitment order over the steps some candidate can serve.


def ref_configs(gens):
    """gens: list of dicts with id, order, avail, forced, restr, cons (bool lists)."""
    gens = sorted(gens, key=lambda g: (g["order"], g["id"]))
    n = len(gens[0]["avail"]) if gens else 0
    forced = frozenset(g["id"] for g in gens if all(g["forced"]))
    unavail = frozenset(g["id"] for g in gens if not any(g["avail"]))
    result = [forced]

    def cover(pool, ok):
        need = set(k for k in range(n) for g in pool if ok(g, k))
        chosen = []
        for g in pool:
            got = set(k for k in need if ok(g, k))
            if got:
                chosen.append(g["id"])
                need -= got
        return chosen

    def extend(cfg, U):
        orders = [g["order"] for g in gens if g["id"] in cfg and g["id"] not in U]
        top = max(orders) if orders else float("-inf")
        pool = [g for g in gens if g["id"] not in U and g["order"] > top]
        add = set(g["id"] for g in pool if any(g["forced"]))
        add |= set(cover(pool, lambda g, k: g["avail"][k]))
        add |= set(cover(pool, lambda g, k: g["avail"][k] and not g["restr"][k]))
        add |= set(cover(pool, lambda g, k: g["avail"][k] and not g["cons"][k]))
        for g in pool:
            if g["id"] in add:
                nxt = cfg | {g["id"]}
                if nxt not in result:
                    result.append(nxt)
                extend(nxt, U)

    extend(forced, unavail | forced)
    return result


def cand(gid, order, avail, forced=None, restr=None, cons=None):
    n = len(avail)
    return Candidate(gid, order, tuple(avail), tuple(forced or [False] * n), tuple(restr or [False] * n),
                     tuple(cons or [False] * n))


def as_ref(c: Candidate):
    return {"id": c.id, "order": c.order, "avail": list(c.available), "forced": list(c.forced),
            "restr": list(c.restricted), "cons": list(c.constrained)}


# -- hydro fixtures ----------------------------------------------------------------------


def spill_doc(spill):
    doc = fixture_dict("vertex_single.json")
    doc["time"]["durations"] = [3600] * 4
    doc["zones"][0]["net_power"] = 100
    doc["rivers"].append({"id": "rv2", "to_reservoir": None, "lags": [0.5, 0.5]})
    doc["spillways"] = [{"id": "sp", "reservoir": "r", "river": "rv2", "v_min": spill, "v_max": spill}]
    return doc


def pinned_vertex_snapshot(dh):
    doc = fixture_dict("vertex_single.json")
    r = doc["reservoirs"][0]
    r["level"] = {"a": r["level_at_dh"][dh], "b": 0.0}
    return snap(doc)


def vertex_recovery_records(dh: str, t: int = 1) -> list[dict]:
    """Fix one pure (config, yield, dh) vertex at a time and read back the recovered values."""
    s = pinned_vertex_snapshot(dh)
    out = []
    for ck in ("g1", "g1+g2"):
        members = ck.split("+")
        for y in NORMAL_YIELDS:
            hm = build_htscuc_model(s)
            m = hm.model
            for (pid, key, tt), a in hm.A.items():
                if tt == t:
                    m.fix(a, 1.0 if key == ck else 0.0)
            lab = None
            for (label, key, yy, dd), w in hm.W.items():
                if label.endswith(f"@{t}") and key == ck:
                    m.fix(w, 1.0 if (yy, dd) == (y, dh) else 0.0)
                    lab = label
            res = solve_milp(m)
            rec = {"config": ck, "yield": y, "dh": dh, "status": res.status, "got": {}, "want": {}}
            if res.values:
                p, f = hm.vertex[(lab, ck, y, dh)][:2]
                rec["want"] = {"P": p, "F": f, "Ptrans": hm.vertex[(lab, ck, "stab@" + y, dh)][0]}
                rec["got"] = {"P": res.values[hm.Php[("hp", t)].id], "F": res.values[hm.Fhp[("hp", t)].id],
                              "Ptrans": res.values[hm.ptrans_sg[lab].id]}
                for gid in members:
                    table = s.generators[gid].vertex_table(frozenset(members))
                    rec["want"][gid] = table[y][dh].p
                    rec["got"][gid] = res.values[hm.Pg[(gid, t)].id]
            out.append(rec)
    return out


def feasible_points(hm):
    """LP optimum for every assignment of the free binaries that admits one."""
    m = hm.model
    _, A, lo, hi, lb, ub = m.arrays()
    free = [v for v in m.binaries if v.lb < v.ub]
    ids = [v.id for v in free]
    fixed = lb == ub
    cols = fixed.copy()
    cols[ids] = True
    # rows over binaries and fixed columns only need no LP
    rows = np.flatnonzero(~(np.abs(A[:, ~cols]) > 0).any(axis=1))
    base = A[np.ix_(rows, np.flatnonzero(fixed))] @ lb[fixed]
    sub = A[np.ix_(rows, ids)]
    for bits in itertools.product((0.0, 1.0), repeat=len(free)):
        act = sub @ np.array(bits) + base
        if ((act < lo[rows] - 1e-9) | (act > hi[rows] + 1e-9)).any():
            continue
        for v, b in zip(free, bits):
            v.lb = v.ub = b
        try:
            res = solve_lp(m)
        finally:
            for v in free:
                v.lb, v.ub = 0.0, 1.0
        if res.status == "optimal":
            yield res.values
