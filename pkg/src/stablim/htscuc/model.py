"""Hydro unit commitment with transient-stability limits.

Step 0 of the snapshot is the known initial state; every later step gets
commitment binaries per plant configuration, production weights over
the (yield, drop height) vertices of each super-generator, hydraulic
routing, frequency-control margins and the zonal transmission rows.  The
objective counts configuration changes and setpoint moves.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from ..expr import Add, Const, LimitExpr, Max, Min, Mul, UnboundVariableError, Var
from ..grid import DROP_HEIGHTS, NORMAL_YIELDS, GridSnapshot
from ..linearize import SymbolTable, attach_abs, attach_gated_abs, attach_lower, attach_upper
from ..milp import LinExpr, Limits, MilpModel, SolveResult, VarRef, solve_milp
from ..adequacy import expr_interval, supply_cap
from .configs import PlantConfig, generate_configs
from .supergen import SuperGenerator, partition_supergenerators

SCHEDULE_SCHEMA_VERSION = 1
LEVEL_PAD = 1.0
BIND_TOL = 1e-6


class HtscucError(ValueError):
    pass


def route(lam, vin) -> list[float]:
    """River outflow per step: out[t] = sum over t' <= t of lam[t'][t] * vin[t']."""
    n = len(vin)
    return [math.fsum(lam[a][t] * vin[a] for a in range(t + 1)) for t in range(n)]


@dataclass
class HtscucModel:
    model: MilpModel
    snapshot: GridSnapshot
    steps: list
    configs: dict  # plant -> [PlantConfig]; admissible aligned with ``steps``
    supergens: dict  # t -> [SuperGenerator]
    A: dict = field(default_factory=dict)  # (plant, cfg key, t) -> VarRef
    W: dict = field(default_factory=dict)  # (sg label, cfg key, y, dh) -> VarRef
    H: dict = field(default_factory=dict)  # sg label -> VarRef
    vertex: dict = field(default_factory=dict)  # (sg label, cfg key, y, dh) -> summed vertex params
    Pg: dict = field(default_factory=dict)
    Psg: dict = field(default_factory=dict)
    sfc_up: dict = field(default_factory=dict)
    sfc_down: dict = field(default_factory=dict)
    ptrans_sg: dict = field(default_factory=dict)
    pfc_sg: dict = field(default_factory=dict)
    Php: dict = field(default_factory=dict)
    Fhp: dict = field(default_factory=dict)
    V: dict = field(default_factory=dict)
    L: dict = field(default_factory=dict)
    Vin: dict = field(default_factory=dict)
    Vout: dict = field(default_factory=dict)
    Vsp: dict = field(default_factory=dict)
    ptrans: dict = field(default_factory=dict)
    pworst: dict = field(default_factory=dict)
    fin: dict = field(default_factory=dict)
    fout: dict = field(default_factory=dict)
    limits: dict = field(default_factory=dict)  # limit label -> Linearization rows

    def config_at(self, plant: str, t: int) -> list[PlantConfig]:
        k = self.steps.index(t)
        return [c for c in self.configs[plant] if c.admissible[k]]

    @property
    def free_binaries(self) -> int:
        return sum(1 for v in self.model.binaries if v.lb < v.ub)


def _vertex_sum(s: GridSnapshot, cfg: PlantConfig, members, y: str, dh: str):
    p = f = up = dn = pfc = 0.0
    for gid in members:
        table = s.generators[gid].vertex_table(cfg.members)
        if table is None:
            raise HtscucError(f"generator {gid}: no vertex table for configuration {cfg.key}")
        v = table[y][dh]
        p, f, up, dn, pfc = p + v.p, f + v.f, up + v.sfc_up, dn + v.sfc_down, pfc + v.pfc
    return p, f, up, dn, pfc


def hydraulic_precheck(s: GridSnapshot, steps, configs) -> None:
    """Reject horizons where a reservoir cannot feed the flows its plants must run."""
    upstream: dict = {}

    def available(re: str, seen=()) -> float:
        if re in upstream:
            return upstream[re]
        r = s.reservoirs[re]
        total = r.v_init - r.v_min + math.fsum(max(r.inflow[t], 0.0) for t in steps)
        for rv in s.rivers.values():
            if rv.to_reservoir != re:
                continue
            for src in _river_sources(s, rv.id):
                if src not in seen:
                    total += max(available(src, seen + (re,)), 0.0)
        upstream[re] = total
        return total

    for re in sorted(s.reservoirs):
        need = 0.0
        for plant in s.controllable_plants():
            if plant.reservoir != re:
                continue
            for k, t in enumerate(steps):
                flows = []
                for cfg in configs[plant.id]:
                    if not cfg.admissible[k]:
                        continue
                    if not cfg.members:
                        flows.append(0.0)
                        continue
                    flows.append(min(_vertex_sum(s, cfg, cfg.members, y, dh)[1] for y in NORMAL_YIELDS for dh in DROP_HEIGHTS))
                need += s.durations[t] * min(flows, default=0.0)
        for sp in s.spillways.values():
            if sp.reservoir == re:
                need += math.fsum(max(sp.v_min[t], 0.0) for t in steps)
        have = available(re)
        if need > have + 1e-6 * max(1.0, have):
            raise HtscucError(
                f"reservoir {re} cannot sustain minimum flows: needs {need:.6g} m3, at most {have:.6g} m3 available"
            )


def _river_sources(s: GridSnapshot, river: str) -> list[str]:
    out = [p.reservoir for p in s.controllable_plants() if p.river == river and p.reservoir]
    out += [sp.reservoir for sp in s.spillways.values() if sp.river == river]
    return sorted(set(out))


class _Build:
    def __init__(self, s: GridSnapshot, horizon: int | None):
        n = s.n_steps if horizon is None else min(int(horizon), s.n_steps)
        if n < 2:
            raise HtscucError("the horizon needs the initial step and at least one future step")
        self.s = s
        self.steps = list(range(1, n))
        self.m = MilpModel(f"htscuc_{s.name}")
        self.hm = None

    def var(self, name, lb=0.0, ub=math.inf, kind="continuous"):
        return self.m.add_var(name, lb, ub, kind)

    def row(self, lhs, sense, rhs, name):
        return self.m.add_constraint(lhs, sense, rhs, name=self.m.unique_row(name))

    def run(self) -> HtscucModel:
        s = self.s
        configs = {}
        for plant in sorted(s.controllable_plants(), key=lambda p: p.id):
            cfgs = generate_configs(s, plant.id, self.steps)
            init = frozenset(plant.initial_config)
            if init not in {c.members for c in cfgs}:
                cfgs.append(PlantConfig(plant.id, init, tuple(False for _ in self.steps)))
            configs[plant.id] = cfgs
        hydraulic_precheck(s, self.steps, configs)
        self.hm = HtscucModel(self.m, s, self.steps, configs, {})
        self._commitment()
        self._water()
        self._stability()
        self._transmission()
        self._objective()
        return self.hm

    # -- commitment, weights and recovery --------------------------------------

    def _commitment(self):
        s, hm = self.s, self.hm
        for k, t in enumerate(self.steps):
            cands = {}
            for pid, cfgs in hm.configs.items():
                adm = [c for c in cfgs if c.admissible[k]]
                if not adm:
                    raise HtscucError(f"plant {pid}: no admissible configuration at step {t}")
                for c in cfgs:
                    a = self.var(f"A[{pid}:{c.key}@{t}]", kind="binary")
                    if not c.admissible[k]:
                        a.ub = 0.0
                    elif len(adm) == 1:
                        a.lb = 1.0
                    hm.A[(pid, c.key, t)] = a
                self.row(LinExpr.sum(hm.A[(pid, c.key, t)] for c in cfgs), "==", 1.0, f"one_config[{pid}@{t}]")
                cands[pid] = sorted({g for c in adm for g in c.members})
            sgs = partition_supergenerators(s, t, cands)
            hm.supergens[t] = sgs
            for sg in sgs:
                self._supergen(sg, k, t)
            for plant in s.controllable_plants():
                gens = s.plant_generators(plant.id)
                P = self.var(f"Php[{plant.id}@{t}]", 0.0, sum(hm.Pg[(g.id, t)].ub for g in gens if (g.id, t) in hm.Pg))
                self.row(P - LinExpr.sum(hm.Pg[(g.id, t)] for g in gens if (g.id, t) in hm.Pg), "==", 0.0, f"php[{plant.id}@{t}]")
                hm.Php[(plant.id, t)] = P
                flows = LinExpr()
                for sg in sgs:
                    if sg.plant == plant.id:
                        for (lab, ck, y, dh), w in hm.W.items():
                            if lab == sg.label:
                                flows.iadd(LinExpr({w.id: hm.vertex[(lab, ck, y, dh)][1]}))
                fmax = sum(v for v in flows.terms.values())
                F = self.var(f"Fhp[{plant.id}@{t}]", 0.0, max(fmax, 0.0))
                self.row(F - flows, "==", 0.0, f"fhp[{plant.id}@{t}]")
                hm.Fhp[(plant.id, t)] = F
            # generators with no super-generator this step run at zero
            for g in s.generators.values():
                if s.plants[g.plant].controllable and (g.id, t) not in hm.Pg:
                    hm.Pg[(g.id, t)] = self.var(f"Pg[{g.id}@{t}]", 0.0, 0.0)

    def _supergen(self, sg: SuperGenerator, k: int, t: int):
        s, hm = self.s, self.hm
        lab = sg.label
        cfgs = [c for c in hm.configs[sg.plant] if c.admissible[k] and c.members & set(sg.members)]
        ws = {}
        for c in cfgs:
            inside = sorted(c.members & set(sg.members))
            for y in NORMAL_YIELDS:
                for dh in DROP_HEIGHTS:
                    w = self.var(f"W[{lab}:{c.key}:{y}:{dh}]", 0.0, 1.0)
                    ws[(c.key, y, dh)] = w
                    hm.W[(lab, c.key, y, dh)] = w
                    hm.vertex[(lab, c.key, y, dh)] = _vertex_sum(s, c, inside, y, dh)
                    stab = _vertex_sum(s, c, inside, "stab", dh)
                    hm.vertex[(lab, c.key, "stab@" + y, dh)] = stab
            self.row(
                LinExpr.sum(ws[(c.key, y, dh)] for y in NORMAL_YIELDS for dh in DROP_HEIGHTS) - hm.A[(sg.plant, c.key, t)],
                "==", 0.0, f"weights[{lab}:{c.key}]",
            )
        H = self.var(f"H[{lab}]", kind="binary")
        hm.H[lab] = H
        if not cfgs:
            H.ub = 0.0
        self.row(H - LinExpr.sum(w for (ck, y, dh), w in ws.items() if y == "max"), ">=", 0.0, f"high_yield[{lab}]")
        self.row(LinExpr.sum(w for (ck, y, dh), w in ws.items() if y == "min") + H, "<=", 1.0, f"low_yield[{lab}]")

        def weighted(idx, stab=False):
            e = LinExpr()
            for (ck, y, dh), w in ws.items():
                key = (lab, ck, "stab@" + y if stab else y, dh)
                e.iadd(LinExpr({w.id: hm.vertex[key][idx]}))
            return e

        def agg(name, e):
            hi = max(sum(c for c in e.terms.values() if c > 0), 0.0)
            v = self.var(f"{name}[{lab}]", 0.0, hi)
            self.row(v - e, "==", 0.0, f"{name}_def[{lab}]")
            return v

        hm.Psg[lab] = agg("Psg", weighted(0))
        hm.sfc_up[lab] = agg("SfcUp", weighted(2))
        hm.sfc_down[lab] = agg("SfcDown", weighted(3))
        hm.pfc_sg[lab] = agg("Pfc", weighted(4))
        hm.ptrans_sg[lab] = agg("PTrans", weighted(0, stab=True))
        for gid in sg.members:
            e = LinExpr()
            for c in cfgs:
                if gid not in c.members:
                    continue
                table = s.generators[gid].vertex_table(c.members)
                for y in NORMAL_YIELDS:
                    for dh in DROP_HEIGHTS:
                        e.iadd(LinExpr({ws[(c.key, y, dh)].id: table[y][dh].p}))
            hm.Pg[(gid, t)] = self._pg(gid, t, e)

    def _pg(self, gid, t, e):
        hi = max(sum(c for c in e.terms.values() if c > 0), 0.0)
        v = self.var(f"Pg[{gid}@{t}]", 0.0, hi)
        self.row(v - e, "==", 0.0, f"pg[{gid}@{t}]")
        return v

    # -- hydraulics --------------------------------------------------------------

    def _water(self):
        s, hm = self.s, self.hm
        for re in sorted(s.reservoirs.values(), key=lambda r: r.id):
            if not math.isfinite(re.v_max):
                raise HtscucError(f"reservoir {re.id}: v_max must be finite for level bounds")
            for t in self.steps:
                hm.V[(re.id, t)] = self.var(f"V[{re.id}@{t}]", re.v_min, re.v_max)
            lv = sorted((re.level(re.v_min), re.level(re.v_max)))
            for t in self.steps:
                hm.L[(re.id, t)] = self.var(f"L[{re.id}@{t}]", lv[0], lv[1])
        for sp in sorted(s.spillways.values(), key=lambda x: x.id):
            for t in self.steps:
                hm.Vsp[(sp.id, t)] = self.var(f"Vsp[{sp.id}@{t}]", sp.v_min[t], sp.v_max[t])
        for rv in sorted(s.rivers.values(), key=lambda x: x.id):
            for t in self.steps:
                hm.Vin[(rv.id, t)] = self.var(f"Vin[{rv.id}@{t}]", 0.0)
                hm.Vout[(rv.id, t)] = self.var(f"Vout[{rv.id}@{t}]", 0.0)
            for t in self.steps:
                e = LinExpr()
                for p in s.controllable_plants():
                    if p.river == rv.id:
                        e.iadd(LinExpr({hm.Fhp[(p.id, t)].id: s.durations[t]}))
                for sp in s.spillways.values():
                    if sp.river == rv.id:
                        e.iadd(LinExpr.of(hm.Vsp[(sp.id, t)]))
                self.row(hm.Vin[(rv.id, t)] - e, "==", 0.0, f"river_in[{rv.id}@{t}]")
                out = LinExpr()
                for a in self.steps:
                    if a <= t and rv.lam[a][t]:
                        out.iadd(LinExpr({hm.Vin[(rv.id, a)].id: rv.lam[a][t]}))
                self.row(hm.Vout[(rv.id, t)] - out, "==", 0.0, f"river_out[{rv.id}@{t}]")
        for re in sorted(s.reservoirs.values(), key=lambda r: r.id):
            for t in self.steps:
                prev = LinExpr(constant=re.v_init) if t == self.steps[0] else LinExpr.of(hm.V[(re.id, t - 1)])
                e = LinExpr.of(hm.V[(re.id, t)]) - prev
                for rv in s.rivers.values():
                    if rv.to_reservoir == re.id:
                        e.iadd(LinExpr.of(hm.Vout[(rv.id, t)]), -1.0)
                for p in s.controllable_plants():
                    if p.reservoir == re.id:
                        e.iadd(LinExpr({hm.Fhp[(p.id, t)].id: s.durations[t]}))
                for sp in s.spillways.values():
                    if sp.reservoir == re.id:
                        e.iadd(LinExpr.of(hm.Vsp[(sp.id, t)]))
                self.row(e, "==", re.inflow[t], f"volume[{re.id}@{t}]")
                avg = 0.5 * (LinExpr.of(hm.V[(re.id, t)]) + prev)
                if 0.0 < abs(re.level.b) < 1.0:
                    # volume units: slopes near 1e-9 m/m3 would sit below pivot and solver drop tolerances
                    k = 1.0 / re.level.b
                    self.row(k * hm.L[(re.id, t)] - avg, "==", k * re.level.a, f"level[{re.id}@{t}]")
                else:
                    self.row(hm.L[(re.id, t)] - re.level.b * avg, "==", re.level.a, f"level[{re.id}@{t}]")
        # the weight split over drop heights must agree with the reservoir level
        for t in self.steps:
            for sg in hm.supergens[t]:
                if sg.reservoir is None:
                    continue
                re = s.reservoirs[sg.reservoir]
                L = hm.L[(re.id, t)]
                ws = [(key, w) for key, w in hm.W.items() if key[0] == sg.label]
                if not ws:
                    continue
                on = LinExpr.sum(hm.A[(sg.plant, ck, t)] for ck in sorted({key[1] for key, _ in ws}))
                e = LinExpr.of(L) - LinExpr.sum(re.level_at_dh[key[3]] * w for key, w in ws)
                M = max(abs(L.lb), abs(L.ub)) + LEVEL_PAD
                self.row(e + M * on, "<=", M, f"level_dh_hi[{sg.label}]")
                self.row(e - M * on, ">=", -M, f"level_dh_lo[{sg.label}]")

    # -- frequency containment -------------------------------------------------------

    def _symbols(self, t: int) -> SymbolTable:
        s, hm = self.s, self.hm
        st = SymbolTable()
        for p in s.plants.values():
            if p.controllable:
                st.bind(f"P[{p.id}]", hm.Php[(p.id, t)])
                st.bind(f"N[{p.id}]", self._count(p.id, t))
            else:
                st.bind(f"P[{p.id}]", p.ror_fixed[t])
                st.bind(f"N[{p.id}]", 0.0)
        if hm.fin:
            for l in s.links:
                st.bind(f"F[{l}]", hm.fin[(l, t)])
        if t in hm.ptrans:
            st.bind("Ptrans", hm.ptrans[t])
        if t in hm.pworst:
            st.bind("Pworst_north", hm.pworst[t])
        st.bind("Pworst_south", self._south.get(t, 0.0))
        return st

    def _count(self, pid: str, t: int) -> VarRef:
        key = ("N", pid, t)
        if key not in self._counts:
            cfgs = self.hm.configs[pid]
            n = self.var(f"N[{pid}@{t}]", 0.0, float(max(len(c.members) for c in cfgs)))
            self.row(n - LinExpr.sum(len(c.members) * self.hm.A[(pid, c.key, t)] for c in cfgs), "==", 0.0, f"count[{pid}@{t}]")
            self._counts[key] = n
        return self._counts[key]

    def _attach(self, x, e: LimitExpr, upper: bool, label: str, t: int):
        try:
            lin = (attach_upper if upper else attach_lower)(self.m, x, e, self._symbols(t), name=label)
        except UnboundVariableError as exc:
            raise HtscucError(f"unresolved limit-expression symbol {exc.args[0]!r} in {label}") from None
        self.hm.limits[label] = lin
        return lin

    def _stability(self):
        s, hm, g = self.s, self.hm, self.s.globals
        self._counts = {}
        self._south = {}
        for t in self.steps:
            sgs = hm.supergens[t]
            up = LinExpr.sum(hm.sfc_up[sg.label] for sg in sgs)
            dn = LinExpr.sum(hm.sfc_down[sg.label] for sg in sgs)
            if g.sfc_up:
                self.row(up, ">=", g.sfc_up, f"sfc_up@{t}")
            if g.sfc_down:
                self.row(dn, ">=", g.sfc_down, f"sfc_down@{t}")
            if g.sfc_total:
                self.row(up + dn, ">=", g.sfc_total, f"sfc_total@{t}")
            ptr = self.var(f"PTrans@{t}", 0.0, sum(hm.ptrans_sg[sg.label].ub for sg in sgs))
            self.row(ptr - LinExpr.sum(hm.ptrans_sg[sg.label] for sg in sgs), "==", 0.0, f"ptrans@{t}")
            hm.ptrans[t] = ptr
            cap = sum(hm.Psg[sg.label].ub + hm.sfc_up[sg.label].ub for sg in sgs)
            pw = self.var(f"Pworst@{t}", 0.0, cap)
            hm.pworst[t] = pw
            for f in s.fcpl_active(None, t):
                inside = [sg for sg in sgs if set(sg.members) <= set(f.generators)]
                self.row(pw - LinExpr.sum(hm.Psg[sg.label] + hm.sfc_up[sg.label] for sg in inside), ">=", 0.0,
                         f"worst_lb[{f.id}@{t}]")
        # transmission variables exist before limits that mention F[...] or P[...]
        self._transmission_vars()
        for t in self.steps:
            if g.south_fcpl is not None:
                st = self._symbols(t)
                try:
                    iv = expr_interval(g.south_fcpl, st)
                except UnboundVariableError as exc:
                    raise HtscucError(f"unresolved limit-expression symbol {exc.args[0]!r} in south_fcpl") from None
                y = self.var(f"Pworst_south@{t}", iv.lo, iv.hi)
                self._attach(y, g.south_fcpl, True, f"south_fcpl_hi@{t}", t)
                self._attach(y, g.south_fcpl, False, f"south_fcpl_lo@{t}", t)
                self._south[t] = y
            sgs = hm.supergens[t]
            if g.upper_north_fcpl is not None:
                self._attach(hm.pworst[t], g.upper_north_fcpl, True, f"upper_north_fcpl@{t}", t)
            if g.pfc_limit is not None:
                self._attach(LinExpr.sum(hm.pfc_sg[sg.label] for sg in sgs), g.pfc_limit, False, f"pfc_limit@{t}", t)
            for sz in sorted(s.stability_zones.values(), key=lambda z: z.id):
                lhs = LinExpr.sum(hm.pfc_sg[sg.label] for sg in sgs if sg.plant in sz.plants)
                e = Min((Const(sz.abs_threshold), Mul(sz.rate, Var("Ptrans"))))
                self._attach(lhs, e, False, f"pfc_zone:{sz.id}@{t}", t)
            for tc in sorted(s.topology.values(), key=lambda c: c.id):
                inside = [sg for sg in sgs if set(sg.members) <= set(tc.generators)]
                lhs = LinExpr.sum(hm.Psg[sg.label] + hm.sfc_up[sg.label] for sg in inside)
                self._attach(lhs, tc.upper, True, f"tc:{tc.id}@{t}", t)

    # -- transmission ---------------------------------------------------------------

    def _transmission_vars(self):
        s, hm = self.s, self.hm
        self._res = {}
        for t in self.steps:
            cap = supply_cap(s, t)
            for l in sorted(s.links.values(), key=lambda l: l.id):
                lo = -cap if l.bounds[0] is None else float(l.bounds[0])
                hi = cap if l.bounds[1] is None else float(l.bounds[1])
                fin = self.var(f"Fin[{l.id}@{t}]", lo, hi)
                o = sorted((l.loss(lo), l.loss(hi)))
                fout = self.var(f"Fout[{l.id}@{t}]", o[0], o[1])
                self.row(fout - l.loss.b * fin, "==", l.loss.a, f"loss[{l.id}@{t}]")
                hm.fin[(l.id, t)], hm.fout[(l.id, t)] = fin, fout
            pairs = [(p, self.var(f"mtdc[{p.src}>{p.dst}@{t}]", 0.0, cap)) for p in s.mtdc_pairs]
            for z in sorted(s.mtdc_terminals):
                pin = self.var(f"MtdcIn[{z}@{t}]", 0.0, cap)
                pout = self.var(f"MtdcOut[{z}@{t}]", -cap, cap)
                self.row(pin - LinExpr.sum(x for p, x in pairs if p.src == z), "==", 0.0, f"mtdc_in[{z}@{t}]")
                out = LinExpr.sum(p.loss.b * x for p, x in pairs if p.dst == z)
                const = sum(p.loss.a for p, _ in pairs if p.dst == z)
                self.row(pout - out, "==", const, f"mtdc_out[{z}@{t}]")
                self._res[("mtdc_in", z, t)] = pin
                self._res[("mtdc_out", z, t)] = pout
            for key, group in (("gas", s.gas), ("ic", s.interconnectors), ("ir", s.interruptibles)):
                for x in sorted(group.values(), key=lambda x: x.id):
                    self._res[(key, x.id, t)] = self.var(f"{key}[{x.id}@{t}]", x.p_min[t], x.p_max[t])

    def _transmission(self):
        s, hm = self.s, self.hm
        for t in self.steps:
            for l in sorted(s.links.values(), key=lambda l: l.id):
                for key in ("in_lower", "in_upper", "out_lower", "out_upper"):
                    e = l.limits[key][t]
                    if e is not None:
                        x = hm.fin[(l.id, t)] if key.startswith("in") else hm.fout[(l.id, t)]
                        self._attach(x, e, key.endswith("upper"), f"{l.id}.{key}@{t}", t)
            for z, term in sorted(s.mtdc_terminals.items()):
                for key in ("in_lower", "in_upper", "out_lower", "out_upper"):
                    e = term.limits[key][t]
                    if e is not None:
                        x = self._res[("mtdc_in" if key.startswith("in") else "mtdc_out", z, t)]
                        self._attach(x, e, key.endswith("upper"), f"mtdc:{z}.{key}@{t}", t)
            for z in sorted(s.zones.values(), key=lambda z: z.id):
                e = LinExpr()
                const = 0.0
                for p in s.plants.values():
                    if p.zone != z.id:
                        continue
                    if p.controllable:
                        e.iadd(LinExpr.of(hm.Php[(p.id, t)]))
                    else:
                        const += p.ror_fixed[t]
                for key, group, sign in (("gas", s.gas, 1.0), ("ic", s.interconnectors, 1.0), ("ir", s.interruptibles, -1.0)):
                    for x in group.values():
                        if x.zone == z.id:
                            e.iadd(LinExpr.of(self._res[(key, x.id, t)]), sign)
                for l in s.links.values():
                    if l.dst == z.id:
                        e.iadd(LinExpr.of(hm.fout[(l.id, t)]))
                    if l.src == z.id:
                        e.iadd(LinExpr.of(hm.fin[(l.id, t)]), -1.0)
                if z.id in s.mtdc_terminals:
                    e.iadd(LinExpr.of(self._res[("mtdc_out", z.id, t)]))
                    e.iadd(LinExpr.of(self._res[("mtdc_in", z.id, t)]), -1.0)
                self.row(e, "==", z.net_power[t] - const, f"balance[{z.id}@{t}]")

    # -- objective --------------------------------------------------------------------

    def _objective(self):
        s, hm, g = self.s, self.hm, self.s.globals
        obj = LinExpr()
        for pid, cfgs in sorted(hm.configs.items()):
            plant = s.plants[pid]
            init = frozenset(plant.initial_config)
            for t in self.steps:
                changes = LinExpr()
                for c in cfgs:
                    a = hm.A[(pid, c.key, t)]
                    prev = LinExpr(constant=1.0 if c.members == init else 0.0) if t == self.steps[0] \
                        else LinExpr.of(hm.A[(pid, c.key, t - 1)])
                    diff = LinExpr.of(a) - prev
                    d = self.var(f"dA[{pid}:{c.key}@{t}]", 0.0, 1.0)
                    attach_abs(self.m, d, diff, name=f"dA[{pid}:{c.key}@{t}]")
                    # with both ends binary these two rows make d exactly |diff|
                    self.row(d - a - prev, "<=", 0.0, f"dA_or[{pid}:{c.key}@{t}]")
                    self.row(d + a + prev, "<=", 2.0, f"dA_nand[{pid}:{c.key}@{t}]")
                    changes.iadd(LinExpr.of(d))
                    if plant.maneuver_cost[t]:
                        obj.iadd(LinExpr({d.id: g.maneuver_weight * plant.maneuver_cost[t]}))
                gate = self.var(f"changed[{pid}@{t}]", 0.0, 1.0)
                self.row(gate - 0.5 * changes, "==", 0.0, f"changed[{pid}@{t}]")
                for gen in s.plant_generators(pid):
                    if not gen.ned or not gen.setpoint_cost[t]:
                        continue
                    P = hm.Pg[(gen.id, t)]
                    prev = LinExpr(constant=gen.initial_power) if t == self.steps[0] else LinExpr.of(hm.Pg[(gen.id, t - 1)])
                    lo_prev = gen.initial_power if t == self.steps[0] else hm.Pg[(gen.id, t - 1)].lb
                    hi_prev = gen.initial_power if t == self.steps[0] else hm.Pg[(gen.id, t - 1)].ub
                    M = max(abs(P.ub - lo_prev), abs(P.lb - hi_prev), 0.0) + 1.0
                    u = self.var(f"dP[{gen.id}@{t}]", 0.0, M)
                    attach_gated_abs(self.m, u, LinExpr.of(P) - prev, gate, M, name=f"dP[{gen.id}@{t}]", implied_binary=True)
                    obj.iadd(LinExpr({u.id: g.setpoint_weight * gen.setpoint_cost[t]}))
        if g.yield_gap_weight:
            for (lab, ck, y, dh), w in hm.W.items():
                if y != "opt":
                    obj.iadd(LinExpr({w.id: g.yield_gap_weight}))
        self.m.set_objective(obj, "min")


def build_htscuc_model(s: GridSnapshot, horizon: int | None = None) -> HtscucModel:
    return _Build(s, horizon).run()


def build_htscuc(s: GridSnapshot, horizon: int | None = None) -> MilpModel:
    return build_htscuc_model(s, horizon).model


# -- solution views -----------------------------------------------------------------


def _r(v: float) -> float:
    return round(float(v), 6) + 0.0


def water_balance(hm: HtscucModel, values) -> dict:
    """Both sides of the system-wide volume identity for one solution.

    initial + inflow = final + left the system + still in a river
    """
    s, steps = hm.snapshot, hm.steps
    last = steps[-1]
    initial = math.fsum(r.v_init for r in s.reservoirs.values())
    inflow = math.fsum(r.inflow[t] for r in s.reservoirs.values() for t in steps)
    final = math.fsum(values[hm.V[(r, last)].id] for r in s.reservoirs)
    left = 0.0
    for rv in s.rivers.values():
        if rv.to_reservoir is None:
            left += math.fsum(values[hm.Vout[(rv.id, t)].id] for t in steps)
    for p in s.controllable_plants():
        if p.reservoir is not None and p.river is None:
            left += math.fsum(s.durations[t] * values[hm.Fhp[(p.id, t)].id] for t in steps)
    for sp in s.spillways.values():
        if sp.river is None:
            left += math.fsum(values[hm.Vsp[(sp.id, t)].id] for t in steps)
    transit = 0.0
    for rv in s.rivers.values():
        transit += math.fsum(values[hm.Vin[(rv.id, t)].id] for t in steps)
        transit -= math.fsum(values[hm.Vout[(rv.id, t)].id] for t in steps)
    lhs = initial + inflow
    rhs = final + left + transit
    return {"initial": initial, "inflow": inflow, "final": final, "left_system": left,
            "in_transit": transit, "lhs": lhs, "rhs": rhs}


def binding_limits(hm: HtscucModel, values) -> list[str]:
    out = []
    for label, lin in sorted(hm.limits.items()):
        for row in lin.rows:
            if row.sense == "==" or "_sel" in row.name:
                continue
            if abs(row.activity(values) - row.rhs) <= BIND_TOL * max(1.0, abs(row.rhs)):
                out.append(label)
                break
    return out


def schedule(hm: HtscucModel, res: SolveResult) -> list[dict]:
    s, v = hm.snapshot, res.values
    out = []
    for t in hm.steps:
        step = {"step": t, "configs": {}, "generators": {}, "plants": {}, "reservoirs": {}, "rivers": {}, "spillways": {}}
        for pid, cfgs in sorted(hm.configs.items()):
            on = [c.key for c in cfgs if v[hm.A[(pid, c.key, t)].id] > 0.5]
            step["configs"][pid] = on[0] if on else None
            step["plants"][pid] = {"P_MW": _r(v[hm.Php[(pid, t)].id]), "F_m3s": _r(v[hm.Fhp[(pid, t)].id])}
        for (gid, tt), var in sorted(hm.Pg.items()):
            if tt == t:
                step["generators"][gid] = _r(v[var.id])
        for r in sorted(s.reservoirs):
            step["reservoirs"][r] = {"V_m3": _r(v[hm.V[(r, t)].id]), "L_m": _r(v[hm.L[(r, t)].id])}
        for rv in sorted(s.rivers):
            step["rivers"][rv] = {"in_m3": _r(v[hm.Vin[(rv, t)].id]), "out_m3": _r(v[hm.Vout[(rv, t)].id])}
        for sp in sorted(s.spillways):
            step["spillways"][sp] = _r(v[hm.Vsp[(sp, t)].id])
        sgs = hm.supergens[t]
        step["margins"] = {
            "sfc_up_MW": _r(sum(v[hm.sfc_up[sg.label].id] for sg in sgs)),
            "sfc_down_MW": _r(sum(v[hm.sfc_down[sg.label].id] for sg in sgs)),
            "pfc_MW": _r(sum(v[hm.pfc_sg[sg.label].id] for sg in sgs)),
            "ptrans_MW": _r(v[hm.ptrans[t].id]),
            "pworst_MW": _r(v[hm.pworst[t].id]),
        }
        step["binding"] = [lab for lab in binding_limits(hm, v) if lab.endswith(f"@{t}")]
        out.append(step)
    return out


@dataclass
class HtscucReport:
    status: str
    objective: float | None
    gap: float | None
    nodes: int
    binaries: int
    schedule: list
    water: dict | None = None
    message: str = ""

    def to_json(self) -> dict:
        return {
            "schema_version": SCHEDULE_SCHEMA_VERSION, "kind": "htscuc", "status": self.status,
            "objective": None if self.objective is None else _r(self.objective),
            "gap": self.gap, "nodes": self.nodes, "free_binaries": self.binaries,
            "water_balance": self.water, "message": self.message, "steps": self.schedule,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n"


def solve_htscuc(s: GridSnapshot, limits: Limits | None = None, horizon: int | None = None) -> tuple[HtscucModel, HtscucReport]:
    hm = build_htscuc_model(s, horizon)
    res = solve_milp(hm.model, limits)
    if not res.values:
        return hm, HtscucReport(res.status, None, None, res.nodes, hm.free_binaries, [], None, res.message)
    wb = {k: _r(x) for k, x in water_balance(hm, res.values).items()}
    gap = None if res.gap is None or not math.isfinite(res.gap) else _r(res.gap)
    return hm, HtscucReport(res.status, res.objective, gap, res.nodes, hm.free_binaries, schedule(hm, res), wb, res.message)
