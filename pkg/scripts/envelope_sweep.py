"""How much pruning saves when random limit expressions are compiled to MILP rows.

    python3 scripts/envelope_sweep.py --n 300 --seed 1

For each expression: selector binaries and rows with and without the
simplification pass, and whether both compiled forms reach the same optimum.
"""

from __future__ import annotations

import argparse
import random
import statistics
import sys
from dataclasses import dataclass
from pathlib import Path

from stablim.expr import node_count, variables
from stablim.linearize import SymbolTable, attach_upper
from stablim.milp import MilpModel, solve_milp
from stablim.transform import bounds

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))
from support import random_domains, random_expr  # noqa: E402


@dataclass
class SweepConfig:
    n: int = 200
    seed: int = 0
    max_height: int = 6


def compile_once(e, d, simplify_first):
    m = MilpModel("sweep")
    iv = bounds(e, d)
    x = m.add_var("x", iv.lo - 1, iv.hi + 1)
    st = SymbolTable()
    for n in sorted(variables(e)):
        st.bind(n, m.add_var(n, *d[n]))
    lin = attach_upper(m, x, e, st, "c", simplify_first=simplify_first)
    m.set_objective(x, "max")
    return lin, solve_milp(m)


def run(cfg: SweepConfig) -> None:
    rng = random.Random(cfg.seed)
    rows = []
    for _ in range(cfg.n):
        e = random_expr(rng, rng.randint(2, cfg.max_height))
        d = random_domains(rng)
        raw, r_raw = compile_once(e, d, False)
        simp, r_simp = compile_once(e, d, True)
        agree = r_raw.status == r_simp.status and (
            r_raw.objective is None or abs(r_raw.objective - r_simp.objective) <= 1e-6 * max(1, abs(r_raw.objective))
        )
        rows.append((node_count(e), raw.binaries, simp.binaries, len(raw.rows), len(simp.rows), agree))
    print(f"{cfg.n} expressions, height <= {cfg.max_height}, seed {cfg.seed}")
    for label, k in (("binaries", 1), ("rows", 3)):
        before = [r[k] for r in rows]
        after = [r[k + 1] for r in rows]
        print(f"{label:>9}: mean {statistics.mean(before):.2f} -> {statistics.mean(after):.2f}, "
              f"max {max(before)} -> {max(after)}")
    print(f"expressions needing no binaries after pruning: {sum(r[2] == 0 for r in rows)}/{cfg.n}")
    print(f"optima agree: {sum(r[5] for r in rows)}/{cfg.n}")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--max-height", type=int, default=6)
    a = ap.parse_args()
    run(SweepConfig(a.n, a.seed, a.max_height))


if __name__ == "__main__":
    main()
