"""Reserve monitor over a snapshot, with restoration for every step in deficit.

    python3 scripts/monitor_demo.py tests/fixtures/hq_shaped.json --parallelism 4
    python3 scripts/monitor_demo.py tests/fixtures/restore_ab.json
"""

from __future__ import annotations

import argparse
import time
from dataclasses import dataclass

from stablim.adequacy import restore, run_monitor
from stablim.grid import load_snapshot


@dataclass
class MonitorConfig:
    snapshot: str
    reserves: tuple = ("10S", "10NS", "30NS")
    parallelism: int = 1
    restore: bool = True


def run(cfg: MonitorConfig) -> None:
    s = load_snapshot(cfg.snapshot)
    t0 = time.perf_counter()
    reps = run_monitor(s, list(cfg.reserves), range(s.n_steps), cfg.parallelism)
    print(f"{s.name}: {len(reps)} problems in {time.perf_counter() - t0:.2f} s")
    print(f"{'reserve':>7} {'step':>4} {'status':>10} {'margin':>10} {'required':>10}  worst / second")
    for r in reps:
        margin = "-" if r.margin is None else f"{r.margin:.1f}"
        req = "-" if r.required is None else f"{r.required:.1f}"
        print(f"{r.reserve:>7} {r.step:>4} {r.status:>10} {margin:>10} {req:>10}  {r.worst_fcpl} / {r.second_fcpl}")
    if not cfg.restore:
        return
    for t in sorted({r.step for r in reps if r.margin is not None and r.margin < 0}):
        deficits = {r.reserve: r.margin for r in reps if r.step == t}
        plan = restore(s, t, deficits)
        print(f"step {t}: {plan.status}, actions {plan.actions}, cost {plan.cost}, margins {plan.margins}")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("snapshot")
    ap.add_argument("--reserves", default="10S,10NS,30NS")
    ap.add_argument("--parallelism", type=int, default=1)
    ap.add_argument("--no-restore", action="store_true")
    a = ap.parse_args()
    run(MonitorConfig(a.snapshot, tuple(a.reserves.split(",")), a.parallelism, not a.no_restore))


if __name__ == "__main__":
    main()
