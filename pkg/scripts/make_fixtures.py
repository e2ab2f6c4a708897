"""Regenerate the JSON snapshots under tests/fixtures.

    python3 scripts/make_fixtures.py [--out tests/fixtures]

The two hand-written fixtures (two_zone.json, huc_two_plant.json) are left
alone; everything else is produced here so the numbers stay traceable.
"""

from __future__ import annotations

import argparse
import json
from pathlib import Path


def curve(q_opt: float, heads=(90, 100)) -> dict:
    """Flow/efficiency samples around a best-efficiency flow."""
    return {
        "flow": {"min": round(0.6 * q_opt, 3), "opt": q_opt, "max": round(1.15 * q_opt, 3), "stab": round(1.25 * q_opt, 3)},
        "eta": {"min": 0.84, "opt": 0.92, "max": 0.90, "stab": 0.88},
        "head": {"low": heads[0], "high": heads[1]},
    }


def gens(plant: str, n: int, p_max: float, q_opt: float, heads=(90, 100), **extra) -> list:
    return [
        {"id": f"{plant}_{i}", "plant": plant, "commit_order": i, "p_max": p_max, "vertices": curve(q_opt, heads), **extra}
        for i in range(1, n + 1)
    ]


def reservoir(rid: str, v_init: float, dh=(90, 100), inflow=0.0) -> dict:
    """Level runs from dh low (empty) to dh high (v_max = 2 v_init)."""
    return {
        "id": rid, "v_init": v_init, "v_min": 0.2 * v_init, "v_max": 2.0 * v_init,
        "level": {"a": dh[0], "b": (dh[1] - dh[0]) / (2.0 * v_init)},
        "level_at_dh": {"low": dh[0], "high": dh[1]}, "inflow": inflow,
    }


def hq_shaped() -> dict:
    """Five zones, six plants (one run-of-river), fourteen generators."""
    steps = 3
    plants = [
        {"id": "lg2", "zone": "north", "reservoir": "rLG2", "river": "rvLG2", "n_max": 3, "maneuver_cost": 50,
         "initial_config": ["lg2_1", "lg2_2"]},
        {"id": "lg1", "zone": "north", "reservoir": "rLG1", "river": "rvLG1", "maneuver_cost": 40,
         "initial_config": ["lg1_1"]},
        {"id": "ma5", "zone": "manic", "reservoir": "rMA5", "river": "rvMA5", "maneuver_cost": 45,
         "initial_config": ["ma5_1", "ma5_2"]},
        {"id": "ma3", "zone": "manic", "reservoir": "rMA3", "river": "rvMA3", "maneuver_cost": 30,
         "initial_config": ["ma3_1"]},
        {"id": "cd", "zone": "central", "reservoir": "rCD", "river": "rvCD", "maneuver_cost": 20,
         "initial_config": ["cd_1", "cd_2"]},
        {"id": "ror", "zone": "south", "controllable": False, "p_min": 50, "p_max": 150, "ror_fixed": [120, 110, 100]},
    ]
    generators = (
        gens("lg2", 3, 400, 450)
        + gens("lg1", 2, 200, 230)
        + gens("ma5", 3, 300, 340)
        + gens("ma3", 2, 250, 285)
        + gens("cd", 4, 150, 170, ned=True, setpoint_cost=0.5)
    )
    for g in generators:
        g["initial_power"] = {"lg2_1": 380, "lg2_2": 380, "lg1_1": 180, "ma5_1": 280, "ma5_2": 280,
                              "ma3_1": 220, "cd_1": 140, "cd_2": 140}.get(g["id"], 0)
    generators[-1]["available"] = [True, True, False]
    reservoirs = [
        reservoir("rLG2", 4e9, inflow=[0, 1.5e6, 1.5e6]),
        reservoir("rLG1", 1e9),
        reservoir("rMA5", 3e9, inflow=[0, 1e6, 1e6]),
        reservoir("rMA3", 8e8),
        reservoir("rCD", 5e8, inflow=[0, 3e5, 3e5]),
    ]
    rivers = [
        {"id": "rvLG2", "to_reservoir": "rLG1", "lags": [0.6, 0.4]},
        {"id": "rvLG1", "to_reservoir": None},
        {"id": "rvMA5", "to_reservoir": "rMA3", "lags": [0.5, 0.3, 0.2]},
        {"id": "rvMA3", "to_reservoir": None},
        {"id": "rvCD", "to_reservoir": None},
    ]
    return {
        "schema_version": 1,
        "name": "hq_shaped",
        "time": {"durations": [3600] * steps},
        "zones": [
            {"id": "north", "net_power": 150},
            {"id": "james", "net_power": [250, 260, 240]},
            {"id": "manic", "net_power": 120},
            {"id": "central", "net_power": [500, 520, 480]},
            {"id": "south", "is_south": True, "net_power": [1900, 2050, 2200]},
        ],
        "links": [
            {"id": "nc", "from": "north", "to": "central", "loss": {"a": 0, "b": 0.97}, "bounds": [0, 1800],
             "limits": {"in_upper": "max(600, min(-P[lg2] + 2400, -2*P[lg2] + 3200, -4*P[lg2] + 5600))"}},
            {"id": "mc", "from": "manic", "to": "central", "loss": {"a": 0, "b": 0.98}, "bounds": [0, 1500],
             "limits": {"in_upper": "min(1300, 1500 - 60*N[ma5])"}},
            {"id": "cs", "from": "central", "to": "south", "loss": {"a": -5, "b": 0.99}, "bounds": [0, 3000],
             "limits": {"in_upper": "min(2600, 2900 - 0.5*Pworst_north)", "out_lower": "0"}},
        ],
        "mtdc": {
            "terminals": [
                {"zone": "north", "limits": {"in_upper": "700"}},
                {"zone": "james", "limits": {"in_upper": "0"}},
                {"zone": "south", "limits": {"out_upper": "600"}},
            ],
            "losses": [
                {"from": "north", "to": "james", "a": 0, "b": 0.97},
                {"from": "north", "to": "south", "a": 0, "b": 0.95},
            ],
        },
        "hydro_plants": plants,
        "generators": generators,
        "reservoirs": reservoirs,
        "rivers": rivers,
        "spillways": [{"id": "spLG2", "reservoir": "rLG2", "river": "rvLG2", "v_min": 0, "v_max": 5e5}],
        "gas_plants": [{"id": "tracy", "zone": "south", "p_min": 0, "p_max": 150}],
        "interconnectors": [{"id": "ontario", "zone": "south", "p_min": -100, "p_max": 250}],
        "interruptibles": [{"id": "smelter", "zone": "south", "p_min": 0, "p_max": 80}],
        "fcpl_sets": [
            {"id": "fLG2", "generators": ["lg2_1", "lg2_2", "lg2_3"]},
            {"id": "fMA5", "generators": ["ma5_1", "ma5_2", "ma5_3"]},
            {"id": "fCD", "generators": ["cd_1", "cd_2"], "windows": [{"reserve": "*", "steps": [0, 1]}]},
        ],
        "topology_constraints": [{"id": "tcMA3", "generators": ["ma3_1", "ma3_2"], "upper": "min(450, 600 - 0.2*P[ma5])"}],
        "stability_zones": [{"id": "szNorth", "plants": ["lg2", "lg1"], "abs": 40, "rate": 0.05}],
        "reserves": [{"id": "10S"}, {"id": "10NS"}, {"id": "30NS", "steps": [0, 1, 2]}],
        "remedial_actions": [
            {"id": "gas_boost", "priority": 3, "effects": [{"kind": "add_zone_power", "zone": "south", "mw": 100}]},
            {"id": "relax_cs", "priority": 5,
             "effects": [{"kind": "scale_limit", "link": "cs", "limit": "in_upper", "expr": "min(2800, 3100 - 0.5*Pworst_north)"}]},
            {"id": "shed_south", "priority": 10, "effects": [{"kind": "shed_load", "zone": "south", "mw": 200}]},
            {"id": "drop_30ns", "priority": 50, "effects": [{"kind": "drop_reserve", "reserve": "30NS"}]},
        ],
        "overrides": {"10S": {"generators": {"lg2_3": {"p_max": 350}}}},
        "globals": {
            "sfc": {"up": 20, "down": 20, "total": 50},
            "pfc_limit": "max(0, 0.1*Pworst_north - 20)",
            "upper_north_fcpl": "1250",
            "south_fcpl": "min(300, 0.1*Ptrans)",
            "objective": {"maneuver": 1, "setpoint": 1, "yield_gap": 0},
        },
    }


def broken_lambda() -> dict:
    doc = json.loads((Path(__file__).resolve().parents[1] / "tests/fixtures/huc_two_plant.json").read_text())
    doc["name"] = "broken_lambda"
    T = len(doc["time"]["durations"])
    lam = [[0.0] * T for _ in range(T)]
    for a in range(T):
        lam[a][a] = 1.0
    lam[1][1], lam[1][2] = 0.7, 0.5  # row 1 sums to 1.2
    doc["rivers"][0] = {"id": "rvA", "to_reservoir": "rB", "lambda": lam}
    return doc


def forced_fcpl() -> dict:
    """Worst contingency pinned at 1000 MW and the second at 600 MW."""
    return {
        "schema_version": 1,
        "name": "forced_fcpl",
        "time": {"durations": [3600]},
        "zones": [{"id": "south", "is_south": True, "net_power": 900}],
        "hydro_plants": [
            {"id": "big", "zone": "south"},
            {"id": "mid", "zone": "south"},
            {"id": "flex", "zone": "south"},
        ],
        "generators": [
            {"id": "big_1", "plant": "big", "commit_order": 1, "p_min": 1000, "p_max": 1000, "forced": True, "vertices": curve(1100)},
            {"id": "mid_1", "plant": "mid", "commit_order": 1, "p_min": 600, "p_max": 600, "forced": True, "vertices": curve(660)},
            {"id": "flex_1", "plant": "flex", "commit_order": 1, "p_min": 0, "p_max": 500, "vertices": curve(550)},
        ],
        "fcpl_sets": [
            {"id": "fBig", "generators": ["big_1"]},
            {"id": "fMid", "generators": ["mid_1"]},
        ],
        "reserves": [{"id": "10S"}, {"id": "10NS"}, {"id": "30NS"}],
    }


def restore_ab() -> dict:
    """Two single-unit contingencies, load 450: 10NS short by exactly 50 MW."""
    return {
        "schema_version": 1,
        "name": "restore_ab",
        "time": {"durations": [3600]},
        "zones": [{"id": "south", "is_south": True, "net_power": 450}],
        "hydro_plants": [{"id": "hp", "zone": "south"}],
        "generators": [
            {"id": "g1", "plant": "hp", "commit_order": 1, "p_max": 400, "vertices": curve(440)},
            {"id": "g2", "plant": "hp", "commit_order": 2, "p_max": 400, "vertices": curve(440)},
        ],
        "fcpl_sets": [{"id": "f1", "generators": ["g1"]}, {"id": "f2", "generators": ["g2"]}],
        "reserves": [{"id": "10S"}, {"id": "10NS"}],
        "remedial_actions": [
            {"id": "A", "priority": 1, "effects": [{"kind": "shed_load", "zone": "south", "mw": 60}]},
            {"id": "B", "priority": 5, "effects": [{"kind": "shed_load", "zone": "south", "mw": 60}]},
        ],
    }


def pfc_stop(with_zone: bool = True) -> dict:
    """Stopping a unit would free costly setpoint moves, but PFC needs both units."""
    doc = {
        "schema_version": 1,
        "name": "pfc_stop" if with_zone else "pfc_stop_free",
        "time": {"durations": [3600, 3600]},
        "zones": [{"id": "south", "is_south": True, "net_power": [200, 150]}],
        "hydro_plants": [{"id": "hp", "zone": "south", "reservoir": "r", "river": "rv", "maneuver_cost": 100,
                          "initial_config": ["g1", "g2"]}],
        "generators": [
            {"id": f"g{i}", "plant": "hp", "commit_order": i, "p_max": 160, "ned": True, "setpoint_cost": 10,
             "initial_power": 100, "vertices": curve(150)}
            for i in (1, 2)
        ],
        # level pinned at the high drop height: one unit alone can carry 150 MW
        "reservoirs": [{"id": "r", "v_init": 1e9, "v_min": 1e8, "v_max": 2e9, "level": {"a": 100, "b": 0.0},
                        "level_at_dh": {"low": 90, "high": 100}}],
        "rivers": [{"id": "rv", "to_reservoir": None}],
        "globals": {"objective": {"maneuver": 1, "setpoint": 1}},
    }
    if with_zone:
        doc["stability_zones"] = [{"id": "sz", "plants": ["hp"], "abs": 60, "rate": 1.0}]
    return doc


def vertex_single() -> dict:
    """One plant, two units with config-specific tables; loose balance."""
    paired = {
        y: {dh: {"p": p + (5 if dh == "high" else 0), "f": f + (2 if dh == "high" else 0)} for dh in ("low", "high")}
        for y, p, f in (("min", 40, 55), ("opt", 70, 80), ("max", 82, 95), ("stab", 90, 104))
    }
    for y in paired:
        for dh in paired[y]:
            c = paired[y][dh]
            c.update({"sfc_up": 0, "sfc_down": 0, "pfc": 0})
    return {
        "schema_version": 1,
        "name": "vertex_single",
        "time": {"durations": [3600, 3600]},
        "zones": [{"id": "south", "is_south": True, "net_power": [100, 100]}],
        "interconnectors": [{"id": "slack", "zone": "south", "p_min": -1000, "p_max": 1000}],
        "hydro_plants": [{"id": "hp", "zone": "south", "reservoir": "r", "river": "rv", "initial_config": ["g1"]}],
        "generators": [
            {"id": "g1", "plant": "hp", "commit_order": 1, "p_max": 100, "vertices": curve(60, (80, 100)),
             "config_vertices": {"g1+g2": paired}},
            {"id": "g2", "plant": "hp", "commit_order": 2, "p_max": 100, "vertices": curve(65, (80, 100)),
             "config_vertices": {"g1+g2": paired}},
        ],
        "reservoirs": [{"id": "r", "v_init": 1e8, "v_min": 1e7, "v_max": 2e8, "level": {"a": 100, "b": 0.0},
                        "level_at_dh": {"low": 80, "high": 100}}],
        "rivers": [{"id": "rv", "to_reservoir": None}],
    }


FIXTURES = {
    "hq_shaped.json": hq_shaped,
    "broken_lambda.json": broken_lambda,
    "forced_fcpl.json": forced_fcpl,
    "restore_ab.json": restore_ab,
    "pfc_stop.json": pfc_stop,
    "vertex_single.json": vertex_single,
}


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default=str(Path(__file__).resolve().parents[1] / "tests" / "fixtures"))
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, make in FIXTURES.items():
        (out / name).write_text(json.dumps(make(), indent=1) + "\n")
        print(f"wrote {out / name}")


if __name__ == "__main__":
    main()
