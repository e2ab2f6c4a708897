import itertools
import random

import pytest

from stablim.grid import DROP_HEIGHTS, NORMAL_YIELDS, SnapshotError
from stablim.htscuc import (
    HtscucError, build_htscuc_model, config_sets, generate_configs, partition_supergenerators, route,
    solve_htscuc, water_balance,
)
from stablim.milp import enumerate_oracle, solve_milp

from support import (
    as_ref, cand, fixture, fixture_dict, feasible_points, pinned_vertex_snapshot, ref_configs, snap, spill_doc,
    vertex_recovery_records,
)


def sets(*groups):
    return [frozenset(g) for g in groups]


T, F = True, False


def test_configs_identical_units():
    cs = [cand(f"g{i}", i, [T] * 4) for i in (1, 2, 3)]
    assert config_sets(cs) == sets((), ("g1",), ("g1", "g2"), ("g1", "g2", "g3"))


def test_configs_forced_and_unavailable():
    cs = [cand("g1", 1, [T] * 3, forced=[T] * 3), cand("g2", 2, [T] * 3), cand("g3", 3, [F] * 3)]
    assert config_sets(cs) == sets(("g1",), ("g1", "g2"))


def test_configs_split_availability():
    cs = [cand("g1", 1, [True] * 10 + [False] * 10), cand("g2", 2, [False] * 10 + [True] * 10)]
    out = config_sets(cs)
    assert out == sets((), ("g1",), ("g1", "g2"), ("g2",))
    # each step with demand has an admissible non-empty configuration
    for k in range(20):
        assert any(c and all(x.available[k] for x in cs if x.id in c) for c in out)


def test_configs_restricted_first_unit():
    cs = [cand("g1", 1, [T, T], restr=[T, T]), cand("g2", 2, [T, T]), cand("g3", 3, [T, T])]
    assert config_sets(cs) == sets((), ("g1",), ("g1", "g2"), ("g1", "g2", "g3"), ("g2",), ("g2", "g3"))


def test_configs_forced_once():
    cs = [cand("g1", 1, [T, T]), cand("g2", 2, [T, T], forced=[F, T]), cand("g3", 3, [T, T])]
    assert config_sets(cs) == sets((), ("g1",), ("g1", "g2"), ("g1", "g2", "g3"), ("g2",), ("g2", "g3"))


def test_configs_empty_plant():
    assert config_sets([]) == [frozenset()]


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_ideal_case_one_config_per_count(n):
    out = config_sets([cand(f"g{i}", i, [T] * 3) for i in range(1, n + 1)])
    assert sorted(len(c) for c in out) == list(range(n + 1))
    assert all(a < b for a, b in zip(out, out[1:]))  # a chain


def _random_candidates(rng, n_gens, n_steps):
    out = []
    orders = rng.sample(range(1, 10), n_gens)
    for i, o in enumerate(orders):
        av = [rng.random() < 0.7 for _ in range(n_steps)]
        fo = [a and rng.random() < 0.25 for a in av]
        out.append(cand(f"g{i}", o, av, fo, [rng.random() < 0.3 for _ in range(n_steps)],
                        [rng.random() < 0.3 for _ in range(n_steps)]))
    return out


def test_configs_match_reference_trace():
    rng = random.Random(5)
    for _ in range(600):
        cs = _random_candidates(rng, rng.randint(1, 4), rng.randint(1, 3))
        assert config_sets(cs) == ref_configs([as_ref(c) for c in cs])


def test_configs_exhaustive_two_units_one_step():
    # every status combination of two units on one step
    flags = list(itertools.product([F, T], repeat=4))
    for a, b in itertools.product(flags, repeat=2):
        cs = [cand("g1", 1, [a[0]], [a[0] and a[1]], [a[2]], [a[3]]),
              cand("g2", 2, [b[0]], [b[0] and b[1]], [b[2]], [b[3]])]
        assert config_sets(cs) == ref_configs([as_ref(c) for c in cs])


def test_generate_configs_on_fixture():
    s = fixture("huc_two_plant.json")
    cfgs = generate_configs(s, "hpA", s.future_steps)
    assert [c.key for c in cfgs] == ["-", "a1"]
    steps = list(s.future_steps)
    a1 = cfgs[1]
    assert a1.admissible == tuple(s.generators["a1"].available[t] for t in steps)


# -- super-generators ----------------------------------------------------------------


def test_supergen_different_plants():
    s = fixture("huc_two_plant.json")
    sgs = partition_supergenerators(s, 1)
    assert [sg.members for sg in sgs] == [("a1",), ("b1",)]


def test_supergen_identical_pair():
    s = fixture("vertex_single.json")
    sgs = partition_supergenerators(s, 1)
    assert len(sgs) == 1 and sgs[0].members == ("g1", "g2") and sgs[0].id == "g1"
    assert sgs[0].label == "g1@1"


def test_supergen_fcpl_separates():
    doc = fixture_dict("vertex_single.json")
    doc["fcpl_sets"] = [{"id": "F", "generators": ["g2"]}]
    sgs = partition_supergenerators(snap(doc), 1)
    assert [sg.members for sg in sgs] == [("g1",), ("g2",)]


def test_supergen_restriction_separates():
    doc = fixture_dict("vertex_single.json")
    doc["generators"][0]["restricted"] = True
    sgs = partition_supergenerators(snap(doc), 1)
    assert [sg.members for sg in sgs] == [("g1",), ("g2",)]


def test_supergens_partition_candidates():
    s = fixture("hq_shaped.json")
    for t in s.future_steps:
        sgs = partition_supergenerators(s, t)
        members = [g for sg in sgs for g in sg.members]
        assert len(members) == len(set(members))
        active = {g.id for g in s.generators.values() if s.plants[g.plant].controllable and g.available[t]}
        assert set(members) == active


# -- hydraulics ----------------------------------------------------------------------


def test_route_half_and_half():
    lam = [[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.0, 0.0, 0.5]]
    assert route(lam, [0.0, 100.0, 0.0]) == [0.0, 50.0, 50.0]


def test_model_routes_spill_half_and_half():
    hm, rep = solve_htscuc(snap(spill_doc([0, 100, 0, 0])))
    assert rep.status == "optimal"
    outs = [rep.schedule[k]["rivers"]["rv2"]["out_m3"] for k in range(3)]
    assert outs == [50.0, 50.0, 0.0]
    assert rep.water["lhs"] == rep.water["rhs"]


def test_truncated_tail_stays_in_transit():
    hm, rep = solve_htscuc(snap(spill_doc([0, 0, 0, 100])))
    assert rep.water["in_transit"] == 50.0
    assert rep.water["left_system"] == 50.0
    assert rep.water["lhs"] == pytest.approx(rep.water["rhs"], rel=1e-12)


@pytest.mark.parametrize("name", ["huc_two_plant.json", "pfc_stop.json", "vertex_single.json"])
def test_water_balance_holds(name):
    hm, rep = solve_htscuc(fixture(name))
    assert rep.status == "optimal"
    res = solve_milp(hm.model)
    wb = water_balance(hm, res.values)
    assert abs(wb["lhs"] - wb["rhs"]) <= 1e-6 * abs(wb["lhs"])


def test_river_rows_follow_lags():
    s = fixture("huc_two_plant.json")
    hm = build_htscuc_model(s)
    v = solve_milp(hm.model).values
    ins = [v[hm.Vin[("rvA", t)].id] for t in hm.steps]
    outs = [v[hm.Vout[("rvA", t)].id] for t in hm.steps]
    lam = s.rivers["rvA"].lam
    want = route([[lam[a][b] for b in hm.steps] for a in hm.steps], ins)
    assert outs == pytest.approx(want, rel=1e-9, abs=1e-6)


# -- vertex recovery -----------------------------------------------------------------


def exact(v):
    # equal up to round-off in the simplex updates
    return pytest.approx(v, rel=1e-12, abs=1e-12)


@pytest.mark.parametrize("dh", DROP_HEIGHTS)
def test_pure_vertex_recovers_tables(dh):
    recs = vertex_recovery_records(dh)
    assert len(recs) == 2 * len(NORMAL_YIELDS)
    for rec in recs:
        assert rec["status"] == "optimal", rec
        assert set(rec["got"]) == set(rec["want"])
        for k, want in rec["want"].items():
            assert rec["got"][k] == exact(want), (rec["config"], rec["yield"], dh, k)


def test_every_feasible_point_conserves_water():
    hm = build_htscuc_model(fixture("huc_two_plant.json"))
    n = 0
    for values in feasible_points(hm):
        wb = water_balance(hm, values)
        assert abs(wb["lhs"] - wb["rhs"]) <= 1e-6 * abs(wb["lhs"])
        n += 1
    assert n >= 2


# -- end to end ----------------------------------------------------------------------


def test_two_plant_matches_oracle():
    hm = build_htscuc_model(fixture("huc_two_plant.json"))
    assert hm.free_binaries <= 12
    r, o = solve_milp(hm.model), enumerate_oracle(hm.model)
    assert r.status == o.status == "optimal"
    assert r.objective == pytest.approx(o.objective, abs=1e-6)


def _check_structure(hm, values):
    for (pid, _, t) in hm.A:
        total = sum(values[a.id] for (p, _, tt), a in hm.A.items() if p == pid and tt == t)
        assert total == pytest.approx(1.0, abs=1e-9)
    for t, sgs in hm.supergens.items():
        for sg in sgs:
            ws = {k: values[w.id] for k, w in hm.W.items() if k[0] == sg.label}
            assert all(x >= -1e-9 for x in ws.values())
            for ck in {k[1] for k in ws}:
                on = values[hm.A[(sg.plant, ck, t)].id]
                assert sum(x for k, x in ws.items() if k[1] == ck) == pytest.approx(on, abs=1e-9)
            hi = sum(x for k, x in ws.items() if k[2] == "max")
            lo = sum(x for k, x in ws.items() if k[2] == "min")
            assert not (hi > 1e-9 and lo > 1e-9)


@pytest.mark.parametrize("name", ["huc_two_plant.json", "pfc_stop.json"])
def test_solution_structure(name):
    hm = build_htscuc_model(fixture(name))
    res = solve_milp(hm.model)
    _check_structure(hm, res.values)
    assert hm.model.max_violation(res.values) <= 1e-6


def test_zone_pfc_keeps_unit_online():
    _, kept = solve_htscuc(fixture("pfc_stop.json"))
    assert kept.objective == pytest.approx(500.0)
    assert [st["configs"]["hp"] for st in kept.schedule] == ["g1+g2"]
    doc = fixture_dict("pfc_stop.json")
    doc.pop("stability_zones")
    _, stopped = solve_htscuc(snap(doc))
    assert stopped.objective == pytest.approx(200.0)
    assert [st["configs"]["hp"] for st in stopped.schedule] == ["g1"]


def test_report_json_is_stable():
    _, a = solve_htscuc(fixture("huc_two_plant.json"))
    _, b = solve_htscuc(fixture("huc_two_plant.json"))
    assert a.dumps() == b.dumps()
    doc = a.to_json()
    assert doc["kind"] == "htscuc" and len(doc["steps"]) == 4
    assert {"sfc_up_MW", "pfc_MW", "ptrans_MW"} <= set(doc["steps"][0]["margins"])


def test_missing_vertex_table_rejected():
    doc = fixture_dict("vertex_single.json")
    for g in doc["generators"]:
        g.pop("config_vertices", None)
    doc["generators"][1].pop("vertices")
    # caught while loading, before any model exists
    with pytest.raises(SnapshotError, match="g2"):
        snap(doc)


def test_precheck_rejects_dry_reservoir():
    doc = fixture_dict("pfc_stop.json")
    r = doc["reservoirs"][0]
    r["v_init"] = r["v_min"] + 1.0
    doc["generators"][0]["forced"] = True
    with pytest.raises(HtscucError, match="reservoir r"):
        build_htscuc_model(snap(doc))
