"""Reserve adequacy per (reserve, step) and the remedial-action restoration model.

Each adequacy problem dispatches every resource for one step, picks the
worst and second-worst contingency sets by dispatched power, derives the
reserve requirement from them and maximizes the southern margin left
after serving load plus reserve.  Restoration stacks the per-reserve
blocks of one step, requires every margin to be non-negative and buys
the cheapest set of remedial actions that makes this feasible.
"""

from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

from .expr import Const, LimitExpr, UnboundVariableError, substitute, variables
from .grid import RESERVE_KINDS, GridSnapshot
from .linearize import LinearizeError, SymbolTable, attach_lower, attach_upper
from .milp import LinExpr, Limits, MilpModel, ModelError, VarRef, solve_milp
from .milp.simplex import NumericalInstabilityError
from .transform import Interval, bounds

log = logging.getLogger(__name__)

REPORT_SCHEMA_VERSION = 1
PPM_BOUND = 1e6
FCPL_PAD = 1.0
SWITCH_PAD = 1.0
RESERVE_COEFS = {"10S": (0.25, 0.0), "10NS": (1.0, 0.0), "30NS": (1.0, 0.5)}


class AdequacyError(ValueError):
    pass


def _r(v: float | None, nd: int = 9):
    if v is None:
        return None
    return round(float(v), nd) + 0.0


# -- builder ------------------------------------------------------------------


@dataclass
class _Effects:
    """Remedial terms threaded into one reserve block."""

    zone_power: dict = field(default_factory=dict)  # zone -> LinExpr added on the supply side
    switches: dict = field(default_factory=dict)  # (link, limit key) -> [(gate, expr)]
    drop_gates: list = field(default_factory=list)


@dataclass
class Block:
    reserve: str
    step: int
    prefix: str
    gens: dict = field(default_factory=dict)  # id -> (active, power)
    plant_p: dict = field(default_factory=dict)
    plant_n: dict = field(default_factory=dict)
    ror: dict = field(default_factory=dict)
    gas: dict = field(default_factory=dict)
    ic: dict = field(default_factory=dict)
    ir: dict = field(default_factory=dict)
    fin: dict = field(default_factory=dict)
    fout: dict = field(default_factory=dict)
    mt_in: dict = field(default_factory=dict)
    mt_out: dict = field(default_factory=dict)
    fcpl: list = field(default_factory=list)  # (id, worst binary | None, second binary | None, members)
    pworst: VarRef | None = None
    psnd: VarRef | None = None
    pres: VarRef | None = None
    ppm: VarRef | None = None


def supply_cap(s: GridSnapshot, t: int) -> float:
    """Crude bound on any flow: every source at its maximum plus every load."""
    cap = sum(g.p_max[t] for g in s.generators.values())
    for group in (s.gas, s.interconnectors, s.interruptibles):
        cap += sum(abs(x.p_max[t]) for x in group.values())
    cap += sum(max(p.ror_max[t], 0.0) for p in s.ror_plants())
    cap += sum(abs(z.net_power[t]) for z in s.zones.values())
    return max(cap, 1.0)


def expr_interval(e: LimitExpr, st: SymbolTable) -> Interval:
    consts = {n: Const(float(v)) for n, v in st.entries.items() if not isinstance(v, VarRef)}
    e = substitute(e, consts) if consts else e
    return bounds(e, st.domain_map(variables(e)))


class _Builder:
    def __init__(self, model: MilpModel, s: GridSnapshot, r: str, t: int, prefix: str, effects: _Effects | None = None):
        self.m = model
        self.s = s
        self.r = r
        self.t = t
        self.p = prefix
        self.fx = effects or _Effects()
        self.b = Block(r, t, prefix)
        self.st = SymbolTable()
        self.cap = supply_cap(s, t)

    def var(self, name, lb=0.0, ub=math.inf, kind="continuous"):
        return self.m.add_var(self.p + name, lb, ub, kind)

    def row(self, lhs, sense, rhs, name):
        return self.m.add_constraint(lhs, sense, rhs, name=self.m.unique_row(self.p + name))

    def build(self) -> Block:
        self._generation()
        self._transmission_vars()
        self._bind_symbols()
        self._limits()
        self._balance()
        self._topology()
        self._fcpl()
        self._reserve()
        return self.b

    # generation: per generator on/off and bounds, plant count and power aggregates
    def _generation(self):
        s, t, r, b = self.s, self.t, self.r, self.b
        for plant in s.controllable_plants():
            gens = s.plant_generators(plant.id)
            for g in gens:
                a = self.var(f"a[{g.id}]", kind="binary")
                if not g.available[t]:
                    a.ub = 0.0
                elif g.forced[t]:
                    a.lb = 1.0
                pmin = s.gen_value(g, "p_min", r, t)
                pmax = s.gen_value(g, "p_max", r, t)
                P = self.var(f"P[{g.id}]", 0.0, max(pmax, 0.0))
                self.row(P - pmin * a, ">=", 0.0, f"gen_lo[{g.id}]")
                self.row(P - pmax * a, "<=", 0.0, f"gen_hi[{g.id}]")
                b.gens[g.id] = (a, P)
            n = self.var(f"N[{plant.id}]", 0.0, float(len(gens)))
            self.row(n - LinExpr.sum(b.gens[g.id][0] for g in gens), "==", 0.0, f"n_def[{plant.id}]")
            self.row(LinExpr.of(n), ">=", s.plant_value(plant, "n_min", r, t), f"n_min[{plant.id}]")
            self.row(LinExpr.of(n), "<=", s.plant_value(plant, "n_max", r, t), f"n_max[{plant.id}]")
            hi = sum(s.gen_value(g, "p_max", r, t) for g in gens)
            P = self.var(f"Php[{plant.id}]", 0.0, max(hi, 0.0))
            self.row(P - LinExpr.sum(b.gens[g.id][1] for g in gens), "==", 0.0, f"p_def[{plant.id}]")
            self.row(LinExpr.of(P), ">=", s.plant_value(plant, "p_min", r, t), f"p_min[{plant.id}]")
            self.row(LinExpr.of(P), "<=", s.plant_value(plant, "p_max", r, t), f"p_max[{plant.id}]")
            b.plant_p[plant.id] = P
            b.plant_n[plant.id] = n
        for plant in s.ror_plants():
            b.ror[plant.id] = self.var(f"ror[{plant.id}]", plant.ror_min[t], plant.ror_max[t])
        for key, group, store in (("gas", s.gas, b.gas), ("ic", s.interconnectors, b.ic), ("ir", s.interruptibles, b.ir)):
            for x in group.values():
                store[x.id] = self.var(f"{key}[{x.id}]", x.p_min[t], x.p_max[t])

    def _transmission_vars(self):
        s, t, b = self.s, self.t, self.b
        for l in s.links.values():
            lo = -self.cap if l.bounds[0] is None else float(l.bounds[0])
            hi = self.cap if l.bounds[1] is None else float(l.bounds[1])
            fin = self.var(f"Fin[{l.id}]", lo, hi)
            out_iv = sorted((l.loss(lo), l.loss(hi)))
            fout = self.var(f"Fout[{l.id}]", out_iv[0], out_iv[1])
            self.row(fout - l.loss.b * fin, "==", l.loss.a, f"loss[{l.id}]")
            b.fin[l.id], b.fout[l.id] = fin, fout
        if s.mtdc_terminals:
            pair_vars = []
            for p in s.mtdc_pairs:
                x = self.var(f"mtdc[{p.src}>{p.dst}]", 0.0, self.cap)
                pair_vars.append((p, x))
            for z in sorted(s.mtdc_terminals):
                pin = self.var(f"MtdcIn[{z}]", 0.0, self.cap)
                pout = self.var(f"MtdcOut[{z}]", -self.cap, self.cap)
                self.row(pin - LinExpr.sum(x for p, x in pair_vars if p.src == z), "==", 0.0, f"mtdc_in[{z}]")
                out = LinExpr()
                const = 0.0
                for p, x in pair_vars:
                    if p.dst == z:
                        out.iadd(LinExpr({x.id: p.loss.b}))
                        const += p.loss.a
                self.row(pout - out, "==", const, f"mtdc_out[{z}]")
                b.mt_in[z], b.mt_out[z] = pin, pout

    def _bind_symbols(self):
        s, b, st = self.s, self.b, self.st
        for pid, v in b.plant_p.items():
            st.bind(f"P[{pid}]", v)
            st.bind(f"N[{pid}]", b.plant_n[pid])
        for pid, v in b.ror.items():
            st.bind(f"P[{pid}]", v)
            st.bind(f"N[{pid}]", 0.0)
        for lid, v in b.fin.items():
            st.bind(f"F[{lid}]", v)
        st.bind("Pworst_south", 0.0)

    def _attach(self, x, e, upper: bool, name: str):
        try:
            (attach_upper if upper else attach_lower)(self.m, x, e, self.st, name=self.p + name)
        except UnboundVariableError as exc:
            raise AdequacyError(f"unresolved limit-expression symbol {exc.args[0]!r} in {name}") from None

    def _switched(self, x: VarRef, e: LimitExpr, upper: bool, relax: LinExpr, name: str):
        """``x`` respects limit ``e`` while ``relax`` is 0."""
        try:
            iv = expr_interval(e, self.st)
        except UnboundVariableError as exc:
            raise AdequacyError(f"unresolved limit-expression symbol {exc.args[0]!r} in {name}") from None
        z = self.var(f"lim[{name}]", iv.lo, iv.hi)
        self._attach(z, e, upper, name)
        if upper:
            M = max(x.ub - iv.lo, 0.0) + SWITCH_PAD
            self.row(x - z - M * relax, "<=", 0.0, f"sw[{name}]")
        else:
            M = max(iv.hi - x.lb, 0.0) + SWITCH_PAD
            self.row(x - z + M * relax, ">=", 0.0, f"sw[{name}]")

    def _limit(self, x: VarRef, key: str, base: LimitExpr | None, where: str):
        upper = key.endswith("upper")
        sw = self.fx.switches.get(where, {}).get(key, [])
        name = f"{where}.{key}"
        if not sw:
            if base is not None:
                self._attach(x, base, upper, name)
            return
        if base is not None:
            self._switched(x, base, upper, LinExpr.sum(g for g, _ in sw), name + ".base")
        for i, (gate, e) in enumerate(sw):
            self._switched(x, e, upper, 1.0 - LinExpr.of(gate), f"{name}.alt{i}")

    def _limits(self):
        # link limits may reference Pworst_north; give it a variable up front
        self.b.pworst = self.var("Pworst", 0.0, self._fcpl_bigm())
        self.st.bind("Pworst_north", self.b.pworst)
        t = self.t
        for l in self.s.links.values():
            for key in ("in_lower", "in_upper"):
                self._limit(self.b.fin[l.id], key, l.limits[key][t], l.id)
            for key in ("out_lower", "out_upper"):
                self._limit(self.b.fout[l.id], key, l.limits[key][t], l.id)
        for z, term in sorted(self.s.mtdc_terminals.items()):
            for key in ("in_lower", "in_upper"):
                self._limit(self.b.mt_in[z], key, term.limits[key][t], f"mtdc:{z}")
            for key in ("out_lower", "out_upper"):
                self._limit(self.b.mt_out[z], key, term.limits[key][t], f"mtdc:{z}")

    def _zone_supply(self, z: str, south: bool) -> LinExpr:
        s, b = self.s, self.b
        e = LinExpr()
        for plant in s.controllable_plants():
            if plant.zone == z:
                e.iadd(LinExpr.of(b.plant_p[plant.id]))
        for pid, v in b.ror.items():
            if s.plants[pid].zone == z:
                e.iadd(LinExpr.of(v))
        for group, store in ((s.gas, b.gas), (s.interconnectors, b.ic)):
            for x in group.values():
                if x.zone == z:
                    e.iadd(LinExpr.of(store[x.id]))
        for x in s.interruptibles.values():
            if x.zone == z:
                # plus in the southern balance, minus elsewhere
                e.iadd(LinExpr.of(b.ir[x.id]), 1.0 if south else -1.0)
        for l in s.links.values():
            if l.dst == z:
                e.iadd(LinExpr.of(b.fout[l.id]))
            if l.src == z:
                e.iadd(LinExpr.of(b.fin[l.id]), -1.0)
        if z in b.mt_in:
            e.iadd(LinExpr.of(b.mt_out[z]))
            e.iadd(LinExpr.of(b.mt_in[z]), -1.0)
        if z in self.fx.zone_power:
            e.iadd(self.fx.zone_power[z])
        return e

    def _balance(self):
        b, t = self.b, self.t
        b.pres = self.var("Pres", 0.0, math.inf)
        b.ppm = self.var("PPM", -PPM_BOUND, PPM_BOUND)
        for z in sorted(self.s.zones.values(), key=lambda z: z.id):
            supply = self._zone_supply(z.id, z.is_south)
            if z.is_south:
                self.row(supply - b.pres - b.ppm, "==", z.net_power[t], f"balance_south[{z.id}]")
            else:
                self.row(supply, "==", z.net_power[t], f"balance[{z.id}]")

    def _topology(self):
        for tc in self.s.topology.values():
            members = [self.b.gens[g][1] for g in tc.generators if g in self.b.gens]
            self._attach(LinExpr.sum(members), tc.upper, True, f"tc:{tc.id}")

    def _fcpl_sets(self):
        return self.s.fcpl_active(self.r, self.t)

    def _fcpl_sum(self, f) -> LinExpr:
        return LinExpr.sum(self.b.gens[g][1] for g in f.generators if g in self.b.gens)

    def _fcpl_cap(self, f) -> float:
        return sum(self.s.gen_value(self.s.generators[g], "p_max", self.r, self.t) for g in f.generators if g in self.b.gens)

    def _fcpl_bigm(self) -> float:
        caps = [self._fcpl_cap(f) for f in self._fcpl_sets()]
        return max(caps, default=0.0) + FCPL_PAD

    def _fcpl(self):
        b = self.b
        sets = self._fcpl_sets()
        Mg = self._fcpl_bigm()
        b.psnd = self.var("Psnd", 0.0, Mg)
        if not sets:
            self.row(LinExpr.of(b.pworst), "==", 0.0, "worst_none")
            self.row(LinExpr.of(b.psnd), "==", 0.0, "second_none")
            return
        if len(sets) == 1:
            f = sets[0]
            self.row(b.pworst - self._fcpl_sum(f), "==", 0.0, f"worst_only[{f.id}]")
            self.row(LinExpr.of(b.psnd), "==", 0.0, "second_none")
            b.fcpl.append((f.id, None, None, f.generators))
            return
        ws, ss = [], []
        for f in sets:
            w = self.var(f"w[{f.id}]", kind="binary")
            sb = self.var(f"s[{f.id}]", kind="binary")
            P = self._fcpl_sum(f)
            Mf = self._fcpl_cap(f) + FCPL_PAD
            self.row(b.pworst - P, ">=", 0.0, f"worst_inf[{f.id}]")
            self.row(b.pworst - P + Mg * w, "<=", Mg, f"worst_sup[{f.id}]")
            self.row(b.psnd - P + Mf * w, ">=", 0.0, f"second_inf[{f.id}]")
            self.row(b.psnd - P + Mg * sb, "<=", Mg, f"second_sup[{f.id}]")
            self.row(w + sb, "<=", 1.0, f"unique[{f.id}]")
            ws.append(w)
            ss.append(sb)
            b.fcpl.append((f.id, w, sb, f.generators))
        self.row(LinExpr.sum(ws), "==", 1.0, "worst_one")
        self.row(LinExpr.sum(ss), "==", 1.0, "second_one")

    def _reserve(self):
        b = self.b
        kw, ks = RESERVE_COEFS[self.r]
        formula = kw * LinExpr.of(b.pworst) + ks * LinExpr.of(b.psnd)
        if not self.fx.drop_gates:
            self.row(b.pres - formula, "==", 0.0, f"requirement[{self.r}]")
            return
        M = (kw + ks) * b.pworst.ub + SWITCH_PAD
        gates = LinExpr.sum(self.fx.drop_gates)
        self.row(b.pres - formula + M * gates, ">=", 0.0, f"requirement_lo[{self.r}]")
        self.row(b.pres - formula - M * gates, "<=", 0.0, f"requirement_hi[{self.r}]")


def _check_reserve(s: GridSnapshot, r: str, t: int):
    if r not in RESERVE_COEFS:
        raise AdequacyError(f"unknown reserve {r!r}; expected one of {', '.join(RESERVE_KINDS)}")
    if not 0 <= t < s.n_steps:
        raise AdequacyError(f"step {t} outside the horizon 0..{s.n_steps - 1}")
    if not s.reserve_active(r, t):
        raise AdequacyError(f"reserve {r} is not active at step {t}")


def build_adequacy_block(s: GridSnapshot, r: str, t: int) -> tuple[MilpModel, Block]:
    _check_reserve(s, r, t)
    m = MilpModel(f"adequacy_{r}_t{t}")
    blk = _Builder(m, s, r, t, "").build()
    m.set_objective(LinExpr.of(blk.ppm), "max")
    return m, blk


def build_adequacy(s: GridSnapshot, r: str, t: int) -> MilpModel:
    return build_adequacy_block(s, r, t)[0]


# -- reports --------------------------------------------------------------------


@dataclass
class AdequacyReport:
    reserve: str
    step: int
    status: str
    margin: float | None = None
    required: float | None = None
    worst_fcpl: str | None = None
    worst_mw: float | None = None
    second_fcpl: str | None = None
    second_mw: float | None = None
    dispatch: dict = field(default_factory=dict)
    nodes: int = 0
    message: str = ""

    @property
    def adequate(self) -> bool:
        return self.status == "adequate"

    def to_json(self) -> dict:
        return asdict(self)


def _fcpl_pick(blk: Block, val):
    if not blk.fcpl:
        return None, None
    if len(blk.fcpl) == 1:
        return blk.fcpl[0][0], None
    worst = max(blk.fcpl, key=lambda f: val(f[1]))[0]
    second = max(blk.fcpl, key=lambda f: val(f[2]))[0]
    return worst, second


def _dispatch(blk: Block, val) -> dict:
    out = {}
    for key, store in (("generators", {k: v[1] for k, v in blk.gens.items()}), ("plants", blk.plant_p),
                       ("run_of_river", blk.ror), ("gas", blk.gas), ("interconnectors", blk.ic),
                       ("interruptibles", blk.ir), ("links", blk.fin), ("mtdc_in", blk.mt_in), ("mtdc_out", blk.mt_out)):
        if store:
            out[key] = {k: _r(val(v)) for k, v in sorted(store.items())}
    return out


def assess(s: GridSnapshot, r: str, t: int, limits: Limits | None = None) -> AdequacyReport:
    """Solve one adequacy problem; solver trouble becomes a report status."""
    try:
        m, blk = build_adequacy_block(s, r, t)
        res = solve_milp(m, limits)
    except (AdequacyError, LinearizeError, ModelError, NumericalInstabilityError) as exc:
        return AdequacyReport(r, t, "error", message=str(exc))
    if res.status in ("infeasible", "unbounded") or not res.values:
        return AdequacyReport(r, t, res.status, nodes=res.nodes, message=res.message)

    def val(v):
        return 0.0 if v is None else res.values[v.id]

    worst, second = _fcpl_pick(blk, val)
    margin = val(blk.ppm)
    status = "adequate" if margin >= 0 else "deficit"
    if res.status == "timeout":
        status = "timeout"
    return AdequacyReport(
        reserve=r, step=t, status=status, margin=_r(margin), required=_r(val(blk.pres)),
        worst_fcpl=worst, worst_mw=_r(val(blk.pworst)), second_fcpl=second, second_mw=_r(val(blk.psnd)),
        dispatch=_dispatch(blk, val), nodes=res.nodes, message=res.message,
    )


_WORKER_SNAPSHOT = None


def _init_worker(snapshot):
    global _WORKER_SNAPSHOT
    _WORKER_SNAPSHOT = snapshot


def _assess_cell(args):
    r, t, limits = args
    return assess(_WORKER_SNAPSHOT, r, t, limits)


def monitor_cells(s: GridSnapshot, reserves, steps) -> list[tuple[str, int]]:
    return [(r, t) for r in reserves for t in steps if s.reserve_active(r, t)]


def run_monitor(s: GridSnapshot, reserves, steps, parallelism: int = 1, limits: Limits | None = None) -> list[AdequacyReport]:
    """One report per active (reserve, step), in (reserve, step) order."""
    for r in reserves:
        if r not in RESERVE_COEFS:
            raise AdequacyError(f"unknown reserve {r!r}")
    cells = monitor_cells(s, reserves, steps)
    if parallelism <= 1 or len(cells) <= 1:
        out = [assess(s, r, t, limits) for r, t in cells]
    else:
        with ProcessPoolExecutor(max_workers=parallelism, initializer=_init_worker, initargs=(s,)) as ex:
            out = list(ex.map(_assess_cell, [(r, t, limits) for r, t in cells]))
    order = {r: i for i, r in enumerate(reserves)}
    return sorted(out, key=lambda rep: (order[rep.reserve], rep.step))


def monitor_json(s: GridSnapshot, reports: list[AdequacyReport]) -> str:
    doc = {
        "schema_version": REPORT_SCHEMA_VERSION,
        "kind": "adequacy",
        "snapshot": s.name,
        "reports": [rep.to_json() for rep in reports],
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


# -- restoration -------------------------------------------------------------------


@dataclass
class RestorationPlan:
    step: int
    status: str
    actions: list = field(default_factory=list)
    cost: float | None = None
    margins: dict = field(default_factory=dict)
    nodes: int = 0
    message: str = ""

    def to_json(self) -> dict:
        return {"schema_version": REPORT_SCHEMA_VERSION, "kind": "restoration", **asdict(self)}


@dataclass
class RestorationModel:
    model: MilpModel
    gates: dict  # action id -> binary
    blocks: dict  # reserve -> Block


def build_restoration_model(s: GridSnapshot, t: int, deficits: dict) -> RestorationModel:
    if not deficits or not any(v is not None and v < 0 for v in deficits.values()):
        raise AdequacyError(f"no reserve is in deficit at step {t}; nothing to restore")
    reserves = [r for r in RESERVE_KINDS if r in deficits] + sorted(r for r in deficits if r not in RESERVE_KINDS)
    for r in reserves:
        _check_reserve(s, r, t)
    m = MilpModel(f"restoration_t{t}")
    gates = {a: m.add_var(f"b[{a}]", 0.0, 1.0, "binary") for a in sorted(s.actions)}
    blocks = {}
    for r in reserves:
        fx = _Effects()
        for aid in sorted(s.actions):
            g = gates[aid]
            for ef in s.actions[aid].effects:
                if ef.kind in ("shed_load", "add_zone_power"):
                    fx.zone_power.setdefault(ef.zone, LinExpr()).iadd(LinExpr({g.id: ef.mw}))
                elif ef.kind == "scale_limit":
                    where = fx.switches.setdefault(ef.link, {})
                    where.setdefault(ef.limit, []).append((g, ef.expr))
                elif ef.kind == "drop_reserve" and ef.reserve == r:
                    fx.drop_gates.append(g)
        blk = _Builder(m, s, r, t, f"{r}.", fx).build()
        blk.ppm.lb = 0.0
        blocks[r] = blk
    m.set_objective(LinExpr.sum(s.actions[a].priority * g for a, g in gates.items()), "min")
    return RestorationModel(m, gates, blocks)


def build_restoration(s: GridSnapshot, t: int, deficits: dict) -> MilpModel:
    return build_restoration_model(s, t, deficits).model


def restore(s: GridSnapshot, t: int, deficits: dict, limits: Limits | None = None) -> RestorationPlan:
    rm = build_restoration_model(s, t, deficits)
    # settle the action choice before the dispatch details
    res = solve_milp(rm.model, limits, branch_first=list(rm.gates.values()))
    if res.status == "infeasible":
        return RestorationPlan(t, "unrestorable", nodes=res.nodes, message="infeasible even with every action")
    if not res.values:
        return RestorationPlan(t, res.status, nodes=res.nodes, message=res.message)
    chosen = [a for a, g in rm.gates.items() if res.values[g.id] > 0.5]
    # second pass: with the plan fixed, report the largest margin each reserve can reach
    for a, g in rm.gates.items():
        rm.model.fix(g, 1.0 if a in chosen else 0.0)
    rm.model.set_objective(LinExpr.sum(b.ppm for b in rm.blocks.values()), "max")
    post = solve_milp(rm.model, limits)
    vals = post.values if post.values else res.values
    margins = {r: _r(vals[b.ppm.id]) for r, b in rm.blocks.items()}
    status = "restored" if res.status == "optimal" else res.status
    cost = sum(s.actions[a].priority for a in chosen)
    return RestorationPlan(t, status, chosen, _r(cost), margins, res.nodes + post.nodes, res.message)
