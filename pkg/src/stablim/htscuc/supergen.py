"""Super-generators: generators of one plant that cannot be told apart at a step.

Two generators are apart when they sit in different plants, when either
is restricted, or when some active contingency set or topology
constraint contains exactly one of them.  Whatever is not apart is
grouped, so the classes are keyed by (plant, restriction, memberships).
"""

from __future__ import annotations

from dataclasses import dataclass

from ..grid import GridSnapshot


@dataclass(frozen=True)
class SuperGenerator:
    id: str
    step: int
    plant: str
    reservoir: str | None
    members: tuple

    @property
    def label(self) -> str:
        return f"{self.id}@{self.step}"


def partition_supergenerators(s: GridSnapshot, t: int, candidates: dict | None = None) -> list[SuperGenerator]:
    """Classes at step ``t``, id = lowest member id, sorted by id.

    ``candidates`` maps plant -> generator ids eligible at ``t``; by default
    every available generator of a controllable plant.
    """
    fcpl = s.fcpl_active(None, t)
    groups: dict = {}
    for plant in sorted(s.controllable_plants(), key=lambda p: p.id):
        gens = s.plant_generators(plant.id)
        if candidates is not None:
            keep = set(candidates.get(plant.id, ()))
            gens = [g for g in gens if g.id in keep]
        else:
            gens = [g for g in gens if g.available[t]]
        for g in gens:
            if g.restricted[t]:
                key = (plant.id, "restricted", g.id)
            else:
                key = (
                    plant.id,
                    frozenset(f.id for f in fcpl if g.id in f.generators),
                    frozenset(tc.id for tc in s.topology.values() if g.id in tc.generators),
                )
            groups.setdefault(key, []).append(g.id)
    out = []
    for key, members in groups.items():
        members = tuple(sorted(members))
        plant = s.plants[key[0]]
        out.append(SuperGenerator(members[0], t, plant.id, plant.reservoir, members))
    return sorted(out, key=lambda sg: sg.id)
