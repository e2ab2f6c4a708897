"""Grid snapshot: JSON loading, validation and read-only accessors.

One document describes zones, links, plants, generators, hydraulics,
contingency sets and remedial actions for a short horizon.  Per-step
quantities are either a scalar (broadcast) or a list with one entry per
step.  Step 0 is the initial state.  See ``docs/snapshot_schema.md``.

Validation collects every problem it finds and raises them together.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import Any, Mapping

from .expr import ExprSyntaxError, LimitExpr, parse, variables

SCHEMA_VERSION = 1
RHO = 997.0
GRAVITY = 9.81
YIELDS = ("min", "opt", "max", "stab")
NORMAL_YIELDS = ("min", "opt", "max")
DROP_HEIGHTS = ("low", "high")
RESERVE_KINDS = ("10S", "10NS", "30NS")
LIMIT_KEYS = ("in_lower", "in_upper", "out_lower", "out_upper")
EFFECT_KINDS = ("shed_load", "add_zone_power", "scale_limit", "drop_reserve")
LAMBDA_TOL = 1e-9


class SnapshotError(ValueError):
    """Raised with the full list of problems found in a snapshot."""

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors) if self.errors else "invalid snapshot")


class VertexOrderError(ValueError):
    pass


# -- vertex tables ------------------------------------------------------------


@dataclass(frozen=True)
class Vertex:
    p: float
    f: float
    sfc_up: float = 0.0
    sfc_down: float = 0.0
    pfc: float = 0.0


def hydro_power_mw(flow: float, head: float, eta: float) -> float:
    """P = rho g Q H eta, in MW."""
    return RHO * GRAVITY * flow * head * eta / 1e6


def _check_order(table, where: str):
    for dh in DROP_HEIGHTS:
        ps = {y: table[y][dh].p for y in YIELDS}
        if not (ps["stab"] >= ps["max"] - 1e-9 and ps["max"] >= ps["opt"] - 1e-9):
            raise VertexOrderError(
                f"{where}: power must satisfy stab >= max >= opt at drop height {dh} "
                f"(got stab={ps['stab']:g}, max={ps['max']:g}, opt={ps['opt']:g})"
            )


def make_vertex_table(flows: Mapping[str, float], etas: Mapping[str, float], heads: Mapping[str, float], where: str = "generator"):
    """Vertex table over (yield, drop height) from flow, efficiency and head samples.

    Margins are read off the table itself: SFC up is the distance to the
    max-yield vertex, SFC down the distance to the min-yield vertex and
    the PFC margin the distance to the stab vertex.
    """
    for y in YIELDS:
        if not (0.0 < etas[y] < 1.0):
            raise ValueError(f"{where}: efficiency at {y} must lie in (0, 1), got {etas[y]}")
        if flows[y] <= 0:
            raise ValueError(f"{where}: flow at {y} must be positive")
    for dh in DROP_HEIGHTS:
        if heads[dh] <= 0:
            raise ValueError(f"{where}: head at {dh} must be positive")
    p = {y: {dh: hydro_power_mw(flows[y], heads[dh], etas[y]) for dh in DROP_HEIGHTS} for y in YIELDS}
    table = {
        y: {
            dh: Vertex(
                p=p[y][dh],
                f=float(flows[y]),
                sfc_up=max(p["max"][dh] - p[y][dh], 0.0),
                sfc_down=max(p[y][dh] - p["min"][dh], 0.0),
                pfc=max(p["stab"][dh] - p[y][dh], 0.0),
            )
            for dh in DROP_HEIGHTS
        }
        for y in YIELDS
    }
    _check_order(table, where)
    return table


def _vertex_table(raw, where: str, errors: list):
    if raw is None:
        return None
    if "flow" in raw:
        try:
            return make_vertex_table(raw["flow"], raw["eta"], raw["head"], where)
        except (KeyError, ValueError) as exc:
            errors.append(f"{where}: bad curve ({exc})")
            return None
    table = {}
    for y in YIELDS:
        if y not in raw:
            errors.append(f"{where}: missing yield {y!r}")
            return None
        table[y] = {}
        for dh in DROP_HEIGHTS:
            cell = raw[y].get(dh)
            if cell is None:
                errors.append(f"{where}: missing vertex ({y}, {dh})")
                return None
            try:
                table[y][dh] = Vertex(**{k: float(v) for k, v in cell.items()})
            except TypeError as exc:
                errors.append(f"{where}: bad vertex ({y}, {dh}): {exc}")
                return None
    try:
        _check_order(table, where)
    except VertexOrderError as exc:
        errors.append(str(exc))
    return table


# -- components ----------------------------------------------------------------


@dataclass(frozen=True)
class Zone:
    id: str
    is_south: bool
    net_power: tuple


@dataclass(frozen=True)
class Affine:
    a: float = 0.0
    b: float = 1.0

    def __call__(self, x: float) -> float:
        return self.a + self.b * x


@dataclass(frozen=True)
class Link:
    id: str
    src: str
    dst: str
    loss: Affine
    limits: Mapping  # key -> tuple of per-step LimitExpr (or None)
    bounds: tuple


@dataclass(frozen=True)
class MtdcTerminal:
    zone: str
    limits: Mapping


@dataclass(frozen=True)
class MtdcPair:
    src: str
    dst: str
    loss: Affine


@dataclass(frozen=True)
class HydroPlant:
    id: str
    zone: str
    controllable: bool
    reservoir: str | None
    river: str | None
    n_min: tuple
    n_max: tuple
    p_min: tuple
    p_max: tuple
    maneuver_cost: tuple
    initial_config: tuple
    # run-of-river data
    ror_min: tuple = ()
    ror_max: tuple = ()
    ror_fixed: tuple = ()


@dataclass(frozen=True)
class Generator:
    id: str
    plant: str
    commit_order: int
    available: tuple
    forced: tuple
    restricted: tuple
    p_min: tuple
    p_max: tuple
    ned: bool
    setpoint_cost: tuple
    initial_power: float
    vertices: Any
    config_vertices: Mapping

    def vertex_table(self, config: frozenset):
        key = "+".join(sorted(config))
        return self.config_vertices.get(key, self.vertices)


@dataclass(frozen=True)
class Reservoir:
    id: str
    v_init: float
    v_min: float
    v_max: float
    level: Affine
    level_at_dh: Mapping
    inflow: tuple


@dataclass(frozen=True)
class River:
    id: str
    to_reservoir: str | None
    lam: tuple  # lam[t_in][t_out]


@dataclass(frozen=True)
class Spillway:
    id: str
    reservoir: str
    river: str | None
    v_min: tuple
    v_max: tuple


@dataclass(frozen=True)
class FcplSet:
    id: str
    generators: tuple
    windows: Mapping  # reserve -> frozenset of steps; "*" applies to every reserve

    def active(self, reserve: str | None, t: int) -> bool:
        if reserve is None:
            return any(t in steps for steps in self.windows.values())
        steps = self.windows.get(reserve, self.windows.get("*"))
        return steps is not None and t in steps


@dataclass(frozen=True)
class TopologyConstraint:
    id: str
    generators: tuple
    upper: LimitExpr


@dataclass(frozen=True)
class StabilityZone:
    id: str
    plants: tuple
    abs_threshold: float
    rate: float


@dataclass(frozen=True)
class Reserve:
    id: str
    steps: frozenset


@dataclass(frozen=True)
class Effect:
    kind: str
    zone: str | None = None
    mw: float = 0.0
    link: str | None = None
    limit: str | None = None
    expr: LimitExpr | None = None
    reserve: str | None = None


@dataclass(frozen=True)
class RemedialAction:
    id: str
    priority: float
    effects: tuple


@dataclass(frozen=True)
class BoundedResource:
    """Gas plant, interconnector, interruptible load: zone plus per-step range."""

    id: str
    zone: str
    p_min: tuple
    p_max: tuple


@dataclass(frozen=True)
class Globals:
    sfc_up: float = 0.0
    sfc_down: float = 0.0
    sfc_total: float = 0.0
    pfc_limit: LimitExpr | None = None
    upper_north_fcpl: LimitExpr | None = None
    south_fcpl: LimitExpr | None = None
    maneuver_weight: float = 1.0
    setpoint_weight: float = 1.0
    yield_gap_weight: float = 0.0


@dataclass(frozen=True)
class GridSnapshot:
    name: str
    durations: tuple
    zones: Mapping
    links: Mapping
    mtdc_terminals: Mapping
    mtdc_pairs: tuple
    plants: Mapping
    generators: Mapping
    reservoirs: Mapping
    rivers: Mapping
    spillways: Mapping
    fcpl_sets: Mapping
    topology: Mapping
    stability_zones: Mapping
    reserves: Mapping
    actions: Mapping
    gas: Mapping
    interconnectors: Mapping
    interruptibles: Mapping
    overrides: Mapping
    globals: Globals
    source: Any = field(default=None, compare=False, repr=False)
    raw: Any = field(default=None, compare=False, repr=False)

    def __reduce__(self):
        # mapping proxies do not pickle; rebuild from the source document
        return (snapshot_from_dict, (self.raw, self.source))

    # -- horizon ---------------------------------------------------------

    @property
    def n_steps(self) -> int:
        return len(self.durations)

    @property
    def future_steps(self) -> range:
        return range(1, self.n_steps)

    @property
    def south(self) -> Zone:
        return next(z for z in self.zones.values() if z.is_south)

    # -- lookups ---------------------------------------------------------

    def plant_generators(self, plant: str) -> list[Generator]:
        gens = [g for g in self.generators.values() if g.plant == plant]
        return sorted(gens, key=lambda g: (g.commit_order, g.id))

    def controllable_plants(self) -> list[HydroPlant]:
        return [p for p in self.plants.values() if p.controllable]

    def ror_plants(self) -> list[HydroPlant]:
        return [p for p in self.plants.values() if not p.controllable]

    def _override(self, kind: str, ident: str, key: str, reserve: str | None, t: int):
        if reserve is None:
            return None
        ov = self.overrides.get(reserve, {}).get(kind, {}).get(ident, {}).get(key)
        return None if ov is None else ov[t]

    def gen_value(self, g: Generator, key: str, reserve: str | None, t: int) -> float:
        ov = self._override("generators", g.id, key, reserve, t)
        return getattr(g, key)[t] if ov is None else ov

    def plant_value(self, p: HydroPlant, key: str, reserve: str | None, t: int) -> float:
        ov = self._override("plants", p.id, key, reserve, t)
        return getattr(p, key)[t] if ov is None else ov

    def fcpl_active(self, reserve: str | None, t: int) -> list[FcplSet]:
        return [f for f in self.fcpl_sets.values() if f.active(reserve, t)]

    def reserve_active(self, reserve: str, t: int) -> bool:
        r = self.reserves.get(reserve)
        return r is not None and t in r.steps

    def symbol_names(self) -> set[str]:
        names = {"Ptrans", "Pworst_north", "Pworst_south"}
        names |= {f"P[{p}]" for p in self.plants}
        names |= {f"N[{p}]" for p in self.plants}
        names |= {f"F[{l}]" for l in self.links}
        return names


# -- parsing ----------------------------------------------------------------------


class _Reader:
    def __init__(self, raw: Mapping):
        self.raw = raw
        self.errors: list[str] = []
        self.T = 0

    def err(self, msg: str):
        self.errors.append(msg)

    def series(self, value, where: str, default=None, kind=float) -> tuple:
        if value is None:
            value = default
        if value is None:
            self.err(f"{where}: missing value")
            return tuple(kind(0) for _ in range(self.T))
        if isinstance(value, list):
            if len(value) != self.T:
                self.err(f"{where}: expected {self.T} per-step values, got {len(value)}")
                value = (value + [value[-1] if value else 0] * self.T)[: self.T]
            try:
                return tuple(kind(v) for v in value)
            except (TypeError, ValueError):
                self.err(f"{where}: non-numeric entry")
                return tuple(kind(0) for _ in range(self.T))
        try:
            return tuple(kind(value) for _ in range(self.T))
        except (TypeError, ValueError):
            self.err(f"{where}: non-numeric value {value!r}")
            return tuple(kind(0) for _ in range(self.T))

    def expr(self, text, where: str) -> LimitExpr | None:
        if text is None:
            return None
        if isinstance(text, (int, float)):
            text = repr(float(text))
        try:
            return parse(str(text))
        except ExprSyntaxError as exc:
            self.err(f"{where}: {exc}")
            return None

    def expr_series(self, value, where: str) -> tuple:
        if value is None:
            return tuple(None for _ in range(self.T))
        if isinstance(value, list):
            if len(value) != self.T:
                self.err(f"{where}: expected {self.T} per-step expressions, got {len(value)}")
                return tuple(None for _ in range(self.T))
            return tuple(self.expr(v, f"{where}[{i}]") for i, v in enumerate(value))
        e = self.expr(value, where)
        return tuple(e for _ in range(self.T))

    def ids(self, items, where: str) -> list:
        seen, out = set(), []
        for i, it in enumerate(items or []):
            ident = it.get("id") if isinstance(it, dict) else None
            if not isinstance(ident, str) or not ident:
                self.err(f"{where}[{i}]: missing id")
                continue
            if ident in seen:
                self.err(f"{where}: duplicate id {ident!r}")
                continue
            seen.add(ident)
            out.append(it)
        return out


def _freeze(d: dict) -> Mapping:
    return MappingProxyType(dict(d))


def _limits(rd: _Reader, raw: Mapping, where: str) -> Mapping:
    raw = raw or {}
    for k in raw:
        if k not in LIMIT_KEYS:
            rd.err(f"{where}: unknown limit {k!r}")
    return _freeze({k: rd.expr_series(raw.get(k), f"{where}.{k}") for k in LIMIT_KEYS})


def snapshot_from_dict(raw: Mapping, source=None) -> GridSnapshot:
    rd = _Reader(raw)
    version = raw.get("schema_version")
    if version != SCHEMA_VERSION:
        rd.err(f"schema_version must be {SCHEMA_VERSION}, got {version!r}")
    durations = raw.get("time", {}).get("durations")
    if not isinstance(durations, list) or len(durations) < 1:
        raise SnapshotError(["time.durations: need a non-empty list (step 0 is the initial state)"])
    rd.T = len(durations)
    for i, d in enumerate(durations):
        if not isinstance(d, (int, float)) or d <= 0:
            rd.err(f"time.durations[{i}]: must be > 0 seconds")
    T = rd.T

    zones = {}
    for z in rd.ids(raw.get("zones"), "zones"):
        zones[z["id"]] = Zone(z["id"], bool(z.get("is_south", False)), rd.series(z.get("net_power"), f"zone {z['id']}.net_power", 0.0))

    links = {}
    for l in rd.ids(raw.get("links"), "links"):
        loss = Affine(**l.get("loss", {}))
        b = l.get("bounds", [None, None])
        links[l["id"]] = Link(l["id"], l.get("from"), l.get("to"), loss, _limits(rd, l.get("limits"), f"link {l['id']}"), tuple(b))

    mt_raw = raw.get("mtdc") or {}
    terminals = {}
    for i, term in enumerate(mt_raw.get("terminals", [])):
        z = term.get("zone")
        if z in terminals:
            rd.err(f"mtdc.terminals: zone {z!r} listed twice")
        terminals[z] = MtdcTerminal(z, _limits(rd, term.get("limits"), f"mtdc terminal {z}"))
    pairs = tuple(
        MtdcPair(p.get("from"), p.get("to"), Affine(p.get("a", 0.0), p.get("b", 1.0))) for p in mt_raw.get("losses", [])
    )

    plants = {}
    for p in rd.ids(raw.get("hydro_plants"), "hydro_plants"):
        w = f"plant {p['id']}"
        ctrl = bool(p.get("controllable", True))
        plants[p["id"]] = HydroPlant(
            id=p["id"],
            zone=p.get("zone"),
            controllable=ctrl,
            reservoir=p.get("reservoir"),
            river=p.get("river"),
            n_min=rd.series(p.get("n_min"), f"{w}.n_min", 0.0),
            n_max=rd.series(p.get("n_max"), f"{w}.n_max", 1e9),
            p_min=rd.series(p.get("p_min"), f"{w}.p_min", 0.0),
            p_max=rd.series(p.get("p_max"), f"{w}.p_max", 1e9),
            maneuver_cost=rd.series(p.get("maneuver_cost"), f"{w}.maneuver_cost", 0.0),
            initial_config=tuple(sorted(p.get("initial_config", []))),
            ror_min=rd.series(p.get("ror_min"), f"{w}.ror_min", p.get("p_min", 0.0)) if not ctrl else (),
            ror_max=rd.series(p.get("ror_max"), f"{w}.ror_max", p.get("p_max", 0.0)) if not ctrl else (),
            ror_fixed=rd.series(p.get("ror_fixed"), f"{w}.ror_fixed", p.get("p_max", 0.0)) if not ctrl else (),
        )

    generators = {}
    for g in rd.ids(raw.get("generators"), "generators"):
        w = f"generator {g['id']}"
        errs: list = []
        base = _vertex_table(g.get("vertices"), w, errs)
        cfgv = {}
        for key, tab in (g.get("config_vertices") or {}).items():
            cfgv["+".join(sorted(key.split("+")))] = _vertex_table(tab, f"{w} config {key}", errs)
        for e in errs:
            rd.err(e)
        generators[g["id"]] = Generator(
            id=g["id"],
            plant=g.get("plant"),
            commit_order=int(g.get("commit_order", 0)),
            available=rd.series(g.get("available"), f"{w}.available", True, bool),
            forced=rd.series(g.get("forced"), f"{w}.forced", False, bool),
            restricted=rd.series(g.get("restricted"), f"{w}.restricted", False, bool),
            p_min=rd.series(g.get("p_min"), f"{w}.p_min", 0.0),
            p_max=rd.series(g.get("p_max"), f"{w}.p_max"),
            ned=bool(g.get("ned", False)),
            setpoint_cost=rd.series(g.get("setpoint_cost"), f"{w}.setpoint_cost", 0.0),
            initial_power=float(g.get("initial_power", 0.0)),
            vertices=base,
            config_vertices=_freeze(cfgv),
        )

    reservoirs = {}
    for r in rd.ids(raw.get("reservoirs"), "reservoirs"):
        lv = r.get("level", {})
        lad = r.get("level_at_dh", {})
        if set(lad) != set(DROP_HEIGHTS):
            rd.err(f"reservoir {r['id']}: level_at_dh needs keys {list(DROP_HEIGHTS)}")
        reservoirs[r["id"]] = Reservoir(
            r["id"], float(r.get("v_init", 0.0)), float(r.get("v_min", 0.0)), float(r.get("v_max", math.inf)),
            Affine(lv.get("a", 0.0), lv.get("b", 0.0)), _freeze({k: float(v) for k, v in lad.items()}),
            rd.series(r.get("inflow"), f"reservoir {r['id']}.inflow", 0.0),
        )

    rivers = {}
    for r in rd.ids(raw.get("rivers"), "rivers"):
        w = f"river {r['id']}"
        if "lambda" in r:
            lam = r["lambda"]
            if not (isinstance(lam, list) and len(lam) == T and all(isinstance(row, list) and len(row) == T for row in lam)):
                rd.err(f"{w}: lambda must be a {T}x{T} matrix")
                lam = [[0.0] * T for _ in range(T)]
            lam = tuple(tuple(float(v) for v in row) for row in lam)
        else:
            lags = [float(v) for v in r.get("lags", [1.0])]
            lam = tuple(tuple(lags[b - a] if 0 <= b - a < len(lags) else 0.0 for b in range(T)) for a in range(T))
            if abs(sum(lags) - 1.0) > LAMBDA_TOL and sum(lags) < 1.0:
                rd.err(f"{w}: lags sum to {sum(lags):.6g}; a full transit must sum to 1")
        rivers[r["id"]] = River(r["id"], r.get("to_reservoir"), lam)

    spillways = {}
    for s in rd.ids(raw.get("spillways"), "spillways"):
        spillways[s["id"]] = Spillway(
            s["id"], s.get("reservoir"), s.get("river"),
            rd.series(s.get("v_min"), f"spillway {s['id']}.v_min", 0.0),
            rd.series(s.get("v_max"), f"spillway {s['id']}.v_max", 0.0),
        )

    fcpl = {}
    all_steps = frozenset(range(T))
    for f in rd.ids(raw.get("fcpl_sets"), "fcpl_sets"):
        windows = {}
        for wdw in f.get("windows", [{"reserve": "*"}]):
            steps = wdw.get("steps")
            windows[wdw.get("reserve", "*")] = all_steps if steps is None else frozenset(int(s) for s in steps)
        fcpl[f["id"]] = FcplSet(f["id"], tuple(f.get("generators", [])), _freeze(windows))

    topology = {}
    for tc in rd.ids(raw.get("topology_constraints"), "topology_constraints"):
        e = rd.expr(tc.get("upper"), f"topology {tc['id']}.upper")
        if e is None:
            rd.err(f"topology {tc['id']}: missing upper limit")
        topology[tc["id"]] = TopologyConstraint(tc["id"], tuple(tc.get("generators", [])), e)

    szones = {}
    for sz in rd.ids(raw.get("stability_zones"), "stability_zones"):
        szones[sz["id"]] = StabilityZone(sz["id"], tuple(sz.get("plants", [])), float(sz.get("abs", 0.0)), float(sz.get("rate", 0.0)))

    reserves = {}
    for r in rd.ids(raw.get("reserves"), "reserves"):
        if r["id"] not in RESERVE_KINDS:
            rd.err(f"reserve {r['id']!r}: only {', '.join(RESERVE_KINDS)} have requirement formulas")
        steps = r.get("steps")
        reserves[r["id"]] = Reserve(r["id"], all_steps if steps is None else frozenset(int(s) for s in steps))

    actions = {}
    for a in rd.ids(raw.get("remedial_actions"), "remedial_actions"):
        effects = []
        for j, ef in enumerate(a.get("effects", [])):
            kind = ef.get("kind")
            if kind not in EFFECT_KINDS:
                rd.err(f"action {a['id']}.effects[{j}]: unknown kind {kind!r}")
                continue
            effects.append(Effect(
                kind=kind, zone=ef.get("zone"), mw=float(ef.get("mw", 0.0)), link=ef.get("link"),
                limit=ef.get("limit"), expr=rd.expr(ef.get("expr"), f"action {a['id']}.effects[{j}].expr") if "expr" in ef else None,
                reserve=ef.get("reserve"),
            ))
        actions[a["id"]] = RemedialAction(a["id"], float(a.get("priority", 0.0)), tuple(effects))

    def resources(key):
        out = {}
        for x in rd.ids(raw.get(key), key):
            out[x["id"]] = BoundedResource(
                x["id"], x.get("zone"),
                rd.series(x.get("p_min"), f"{key} {x['id']}.p_min", 0.0),
                rd.series(x.get("p_max"), f"{key} {x['id']}.p_max", 0.0),
            )
        return out

    overrides = {}
    for res, groups in (raw.get("overrides") or {}).items():
        og = {}
        for kind, items in groups.items():
            if kind not in ("generators", "plants"):
                rd.err(f"overrides.{res}: unknown group {kind!r}")
                continue
            og[kind] = {
                ident: {k: rd.series(v, f"overrides.{res}.{kind}.{ident}.{k}") for k, v in vals.items()}
                for ident, vals in items.items()
            }
        overrides[res] = og

    gl = raw.get("globals", {})
    sfc = gl.get("sfc", {})
    obj = gl.get("objective", {})
    glob = Globals(
        sfc_up=float(sfc.get("up", 0.0)), sfc_down=float(sfc.get("down", 0.0)), sfc_total=float(sfc.get("total", 0.0)),
        pfc_limit=rd.expr(gl.get("pfc_limit"), "globals.pfc_limit"),
        upper_north_fcpl=rd.expr(gl.get("upper_north_fcpl"), "globals.upper_north_fcpl"),
        south_fcpl=rd.expr(gl.get("south_fcpl"), "globals.south_fcpl"),
        maneuver_weight=float(obj.get("maneuver", 1.0)),
        setpoint_weight=float(obj.get("setpoint", 1.0)),
        yield_gap_weight=float(obj.get("yield_gap", 0.0)),
    )

    snap = GridSnapshot(
        name=str(raw.get("name", "snapshot")),
        durations=tuple(float(d) for d in durations),
        zones=_freeze(zones), links=_freeze(links), mtdc_terminals=_freeze(terminals), mtdc_pairs=pairs,
        plants=_freeze(plants), generators=_freeze(generators), reservoirs=_freeze(reservoirs),
        rivers=_freeze(rivers), spillways=_freeze(spillways), fcpl_sets=_freeze(fcpl), topology=_freeze(topology),
        stability_zones=_freeze(szones), reserves=_freeze(reserves), actions=_freeze(actions),
        gas=_freeze(resources("gas_plants")), interconnectors=_freeze(resources("interconnectors")),
        interruptibles=_freeze(resources("interruptibles")), overrides=_freeze(overrides), globals=glob,
        source=source, raw=copy.deepcopy(dict(raw)),
    )
    errors = rd.errors + validate(snap)
    if errors:
        raise SnapshotError(errors)
    return snap


# -- validation ------------------------------------------------------------------


def _check_symbols(e: LimitExpr | None, names: set, where: str, errors: list):
    if e is None:
        return
    for v in sorted(variables(e)):
        if v not in names:
            errors.append(f"{where}: unknown symbol {v!r}")


def validate(s: GridSnapshot) -> list[str]:
    """Every invariant breach found in ``s`` (empty list when valid)."""
    errors: list[str] = []
    T = s.n_steps
    south = [z.id for z in s.zones.values() if z.is_south]
    if len(south) != 1:
        errors.append(f"zones: exactly one south zone required, found {len(south)}")
    names = s.symbol_names()

    for l in s.links.values():
        for end, z in (("from", l.src), ("to", l.dst)):
            if z not in s.zones:
                errors.append(f"link {l.id}: {end} zone {z!r} does not exist")
        if not (0.0 < l.loss.b <= 1.0):
            errors.append(f"link {l.id}: loss slope must lie in (0, 1], got {l.loss.b}")
        for k, seq in l.limits.items():
            for t, e in enumerate(seq):
                _check_symbols(e, names, f"link {l.id}.{k}[{t}]", errors)
                if t == 0:
                    continue
                if seq[t] is seq[0]:
                    break
    for z, term in s.mtdc_terminals.items():
        if z not in s.zones:
            errors.append(f"mtdc terminal: zone {z!r} does not exist")
        for k, seq in term.limits.items():
            if seq and seq[0] is not None:
                _check_symbols(seq[0], names, f"mtdc terminal {z}.{k}", errors)
    for p in s.mtdc_pairs:
        for z in (p.src, p.dst):
            if z not in s.mtdc_terminals:
                errors.append(f"mtdc loss {p.src}->{p.dst}: {z!r} is not a terminal")
        if not (0.0 < p.loss.b <= 1.0):
            errors.append(f"mtdc loss {p.src}->{p.dst}: slope must lie in (0, 1]")

    for p in s.plants.values():
        if p.zone not in s.zones:
            errors.append(f"plant {p.id}: zone {p.zone!r} does not exist")
        if p.controllable:
            if p.reservoir is not None and p.reservoir not in s.reservoirs:
                errors.append(f"plant {p.id}: reservoir {p.reservoir!r} does not exist")
            if p.river is not None and p.river not in s.rivers:
                errors.append(f"plant {p.id}: river {p.river!r} does not exist")
            for t in range(T):
                if p.n_min[t] > p.n_max[t]:
                    errors.append(f"plant {p.id}: n_min > n_max at step {t}")
                if p.p_min[t] > p.p_max[t]:
                    errors.append(f"plant {p.id}: p_min > p_max at step {t}")
            gens = {g.id for g in s.plant_generators(p.id)}
            for g in p.initial_config:
                if g not in gens:
                    errors.append(f"plant {p.id}: initial_config member {g!r} is not one of its generators")
        else:
            for t in range(T):
                if p.ror_min[t] > p.ror_max[t]:
                    errors.append(f"run-of-river plant {p.id}: min > max at step {t}")

    orders: dict = {}
    for g in s.generators.values():
        plant = s.plants.get(g.plant)
        if plant is None:
            errors.append(f"generator {g.id}: plant {g.plant!r} does not exist")
            continue
        key = (g.plant, g.commit_order)
        if key in orders:
            errors.append(f"generator {g.id}: commit order {g.commit_order} already used by {orders[key]} in plant {g.plant}")
        orders[key] = g.id
        for t in range(T):
            if g.p_min[t] > g.p_max[t]:
                errors.append(f"generator {g.id}: p_min > p_max at step {t}")
            if g.forced[t] and not g.available[t]:
                errors.append(f"generator {g.id}: forced online while unavailable at step {t}")
        if plant.controllable and g.vertices is None and not g.config_vertices:
            errors.append(f"generator {g.id}: no vertex table")

    for r in s.reservoirs.values():
        if not (r.v_min <= r.v_init <= r.v_max):
            errors.append(f"reservoir {r.id}: initial volume outside [v_min, v_max]")
    for rv in s.rivers.values():
        if rv.to_reservoir is not None and rv.to_reservoir not in s.reservoirs:
            errors.append(f"river {rv.id}: destination reservoir {rv.to_reservoir!r} does not exist")
        for a, row in enumerate(rv.lam):
            if any(v < -LAMBDA_TOL for v in row):
                errors.append(f"river {rv.id}: negative lambda in row {a}")
            if any(v != 0.0 for v in row[:a]):
                errors.append(f"river {rv.id}: row {a} routes water to an earlier step")
            total = math.fsum(row)
            if total > 1.0 + LAMBDA_TOL:
                errors.append(f"river {rv.id}: lambda row {a} sums to {total:.6g} > 1")
    for sp in s.spillways.values():
        if sp.reservoir not in s.reservoirs:
            errors.append(f"spillway {sp.id}: reservoir {sp.reservoir!r} does not exist")
        if sp.river is not None and sp.river not in s.rivers:
            errors.append(f"spillway {sp.id}: river {sp.river!r} does not exist")
        for t in range(T):
            if sp.v_min[t] > sp.v_max[t]:
                errors.append(f"spillway {sp.id}: v_min > v_max at step {t}")
    errors += _hydraulic_cycles(s)

    for f in s.fcpl_sets.values():
        if not f.generators:
            errors.append(f"fcpl {f.id}: empty generator set")
        for g in f.generators:
            if g not in s.generators:
                errors.append(f"fcpl {f.id}: generator {g!r} does not exist")
        for r in f.windows:
            if r != "*" and r not in s.reserves:
                errors.append(f"fcpl {f.id}: window for unknown reserve {r!r}")
    for tc in s.topology.values():
        for g in tc.generators:
            if g not in s.generators:
                errors.append(f"topology {tc.id}: generator {g!r} does not exist")
        _check_symbols(tc.upper, names, f"topology {tc.id}.upper", errors)
    for sz in s.stability_zones.values():
        for p in sz.plants:
            if p not in s.plants:
                errors.append(f"stability zone {sz.id}: plant {p!r} does not exist")
    for a in s.actions.values():
        if a.priority <= 0:
            errors.append(f"action {a.id}: priority cost must be > 0")
        for ef in a.effects:
            if ef.kind in ("shed_load", "add_zone_power") and ef.zone not in s.zones:
                errors.append(f"action {a.id}: zone {ef.zone!r} does not exist")
            if ef.kind == "scale_limit":
                if ef.link not in s.links:
                    errors.append(f"action {a.id}: link {ef.link!r} does not exist")
                if ef.limit not in LIMIT_KEYS:
                    errors.append(f"action {a.id}: limit must be one of {', '.join(LIMIT_KEYS)}")
                if ef.expr is None:
                    errors.append(f"action {a.id}: scale_limit needs an expr")
                _check_symbols(ef.expr, names, f"action {a.id}", errors)
            if ef.kind == "drop_reserve" and ef.reserve not in s.reserves:
                errors.append(f"action {a.id}: reserve {ef.reserve!r} does not exist")
    for key, group in (("gas", s.gas), ("interconnector", s.interconnectors), ("interruptible", s.interruptibles)):
        for x in group.values():
            if x.zone not in s.zones:
                errors.append(f"{key} {x.id}: zone {x.zone!r} does not exist")
            for t in range(T):
                if x.p_min[t] > x.p_max[t]:
                    errors.append(f"{key} {x.id}: p_min > p_max at step {t}")
    for res, groups in s.overrides.items():
        if res not in s.reserves:
            errors.append(f"overrides: unknown reserve {res!r}")
        for ident in groups.get("generators", {}):
            if ident not in s.generators:
                errors.append(f"overrides.{res}: generator {ident!r} does not exist")
        for ident in groups.get("plants", {}):
            if ident not in s.plants:
                errors.append(f"overrides.{res}: plant {ident!r} does not exist")
    g = s.globals
    _check_symbols(g.pfc_limit, names, "globals.pfc_limit", errors)
    _check_symbols(g.upper_north_fcpl, names, "globals.upper_north_fcpl", errors)
    _check_symbols(g.south_fcpl, names, "globals.south_fcpl", errors)
    return errors


def _hydraulic_cycles(s: GridSnapshot) -> list[str]:
    """Reservoir -> (plant | spillway) -> river -> reservoir must be acyclic."""
    succ: dict = {r: set() for r in s.reservoirs}
    for p in s.plants.values():
        if p.controllable and p.reservoir in s.reservoirs and p.river in s.rivers:
            dst = s.rivers[p.river].to_reservoir
            if dst in s.reservoirs:
                succ[p.reservoir].add(dst)
    for sp in s.spillways.values():
        if sp.reservoir in s.reservoirs and sp.river in s.rivers:
            dst = s.rivers[sp.river].to_reservoir
            if dst in s.reservoirs:
                succ[sp.reservoir].add(dst)
    state: dict = {}
    cyc: list = []

    def visit(r, stack):
        state[r] = 1
        for n in sorted(succ[r]):
            if state.get(n) == 1:
                cyc.append(" -> ".join(stack + [r, n]))
            elif n not in state:
                visit(n, stack + [r])
        state[r] = 2

    for r in sorted(succ):
        if r not in state:
            visit(r, [])
    return [f"hydraulic graph has a cycle: {c}" for c in cyc]


def load_snapshot(path) -> GridSnapshot:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise SnapshotError([f"{path}: not valid JSON ({exc.msg} at line {exc.lineno})"]) from exc
    if not isinstance(raw, dict):
        raise SnapshotError([f"{path}: top level must be an object"])
    return snapshot_from_dict(raw, source=str(path))
