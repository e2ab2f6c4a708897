"""Hydro plant configurations: which generator subsets a plant may run.

Starting from the always-forced units, a configuration is extended one
unit at a time with units of higher commitment order.  The units tried
at each extension are those forced online at least once, plus greedy
covers over availability, restriction-free steps and steps free of
contingency or topology membership.  The seed itself is kept so that a
plant can always be represented with only its forced units running.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from ..grid import GridSnapshot


@dataclass(frozen=True)
class Candidate:
    """Per-step status of one generator over the horizon being planned."""

    id: str
    order: int
    available: tuple
    forced: tuple = ()
    restricted: tuple = ()
    constrained: tuple = ()  # member of an active FCPL set or of a topology constraint

    def at(self, seq: tuple, k: int, default=False) -> bool:
        return seq[k] if seq else default


@dataclass(frozen=True)
class PlantConfig:
    plant: str
    members: frozenset
    admissible: tuple  # per horizon step

    @property
    def key(self) -> str:
        return "+".join(sorted(self.members)) or "-"

    def admissible_at(self, k: int) -> bool:
        return self.admissible[k]


def _greedy_cover(cands: list[Candidate], usable) -> list[Candidate]:
    """Pick candidates in commitment order until every coverable step is covered."""
    n = len(cands[0].available) if cands else 0
    todo = {k for k in range(n) if any(usable(c, k) for c in cands)}
    picked = []
    for c in cands:
        if not todo:
            break
        hits = {k for k in todo if usable(c, k)}
        if hits:
            picked.append(c)
            todo -= hits
    return picked


def availabilities_cover(cands: list[Candidate]) -> list[Candidate]:
    return _greedy_cover(cands, lambda c, k: c.available[k])


def restrictions_cover(cands: list[Candidate]) -> list[Candidate]:
    return _greedy_cover(cands, lambda c, k: c.available[k] and not c.at(c.restricted, k))


def constraints_cover(cands: list[Candidate]) -> list[Candidate]:
    return _greedy_cover(cands, lambda c, k: c.available[k] and not c.at(c.constrained, k))


def config_sets(cands: Sequence[Candidate]) -> list[frozenset]:
    """Configurations as generator-id sets, in generation order (seed first)."""
    cands = sorted(cands, key=lambda c: (c.order, c.id))
    if not cands:
        return [frozenset()]
    n = len(cands[0].available)
    forced = frozenset(c.id for c in cands if n and all(c.at(c.forced, k) for k in range(n)))
    unavail = frozenset(c.id for c in cands if not any(c.available))
    order = {c.id: c.order for c in cands}
    out: list[frozenset] = [forced]
    seen = {forced}

    def grow(cfg: frozenset, excluded: frozenset):
        free = cfg - excluded
        co_max = max((order[g] for g in free), default=None)
        potential = [c for c in cands if c.id not in excluded and (co_max is None or c.order > co_max)]
        if not potential:
            return
        toadd = {c.id for c in potential if any(c.at(c.forced, k) for k in range(n))}
        for cover in (availabilities_cover, restrictions_cover, constraints_cover):
            toadd |= {c.id for c in cover(potential)}
        for c in potential:
            if c.id not in toadd:
                continue
            nxt = cfg | {c.id}
            if nxt not in seen:
                seen.add(nxt)
                out.append(nxt)
            grow(nxt, excluded)

    grow(forced, unavail | forced)
    return out


def plant_candidates(s: GridSnapshot, plant: str, steps: Sequence[int]) -> list[Candidate]:
    out = []
    for g in s.plant_generators(plant):
        in_tc = any(g.id in tc.generators for tc in s.topology.values())
        constrained = tuple(
            in_tc or any(g.id in f.generators for f in s.fcpl_active(None, t)) for t in steps
        )
        out.append(Candidate(
            id=g.id, order=g.commit_order,
            available=tuple(g.available[t] for t in steps),
            forced=tuple(g.forced[t] for t in steps),
            restricted=tuple(g.restricted[t] for t in steps),
            constrained=constrained,
        ))
    return out


def admissible(s: GridSnapshot, plant: str, members: frozenset, t: int) -> bool:
    """All members available and every unit forced at ``t`` included."""
    for g in s.plant_generators(plant):
        if g.id in members and not g.available[t]:
            return False
        if g.forced[t] and g.id not in members:
            return False
    return True


def generate_configs(s: GridSnapshot, plant: str, steps: Sequence[int] | None = None) -> list[PlantConfig]:
    """Configurations of ``plant`` over ``steps`` (default: every future step)."""
    steps = list(s.future_steps if steps is None else steps)
    sets = config_sets(plant_candidates(s, plant, steps))
    return [PlantConfig(plant, m, tuple(admissible(s, plant, m, t) for t in steps)) for m in sets]
