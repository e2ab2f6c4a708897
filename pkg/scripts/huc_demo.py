"""Solve the hydro commitment model and print a compact schedule.

    python3 scripts/huc_demo.py tests/fixtures/huc_two_plant.json
    python3 scripts/huc_demo.py tests/fixtures/hq_shaped.json --horizon 3 --time-limit 1800

The hq_shaped instance is far harder for the built-in solver than the desk
fixtures; give it a long time limit and expect a timeout report with the
best bound otherwise.
"""

from __future__ import annotations

import argparse
import time
from dataclasses import dataclass

from stablim.grid import load_snapshot
from stablim.htscuc import solve_htscuc
from stablim.milp import Limits


@dataclass
class HucConfig:
    snapshot: str
    horizon: int | None = None
    time_limit: float | None = None
    node_limit: int | None = None


def run(cfg: HucConfig) -> None:
    s = load_snapshot(cfg.snapshot)
    t0 = time.perf_counter()
    hm, rep = solve_htscuc(s, Limits(cfg.time_limit, cfg.node_limit), cfg.horizon)
    el = time.perf_counter() - t0
    m = hm.model
    print(f"{s.name}: {len(m.variables)} vars, {len(m.constraints)} rows, {hm.free_binaries} free binaries")
    print(f"status {rep.status}, objective {rep.objective}, gap {rep.gap}, nodes {rep.nodes}, {el:.1f} s")
    if rep.message:
        print(rep.message)
    for st in rep.schedule:
        plants = ", ".join(f"{p}={c}" for p, c in st["configs"].items())
        print(f"  step {st['step']}: {plants}")
        for p, v in st["plants"].items():
            print(f"    {p}: {v['P_MW']:.2f} MW, {v['F_m3s']:.2f} m3/s")
        mg = st["margins"]
        print(f"    pfc {mg['pfc_MW']:.1f} MW, ptrans {mg['ptrans_MW']:.1f} MW, binding {st['binding']}")
    if rep.water:
        w = rep.water
        print(f"water: {w['lhs']:.6g} in = {w['final']:.6g} stored + {w['left_system']:.6g} out "
              f"+ {w['in_transit']:.6g} in transit")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("snapshot")
    ap.add_argument("--horizon", type=int, default=None)
    ap.add_argument("--time-limit", type=float, default=None)
    ap.add_argument("--node-limit", type=int, default=None)
    a = ap.parse_args()
    run(HucConfig(a.snapshot, a.horizon, a.time_limit, a.node_limit))


if __name__ == "__main__":
    main()
