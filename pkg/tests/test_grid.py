import copy
import dataclasses
import pickle

import pytest

from stablim.expr import variables
from stablim.grid import (
    GRAVITY, RHO, SnapshotError, VertexOrderError, hydro_power_mw, load_snapshot, make_vertex_table,
    snapshot_from_dict,
)
from stablim.transform import prune

from support import FIXTURES, fixture, fixture_dict

FLOWS = {"min": 60.0, "opt": 100.0, "max": 115.0, "stab": 125.0}
ETAS = {"min": 0.84, "opt": 0.92, "max": 0.90, "stab": 0.88}
HEADS = {"low": 90.0, "high": 100.0}


def test_two_zone_fixture():
    s = fixture("two_zone.json")
    assert len(s.zones) == 2 and len(s.links) == 1
    assert s.south.is_south


def test_broken_lambda_names_river_and_row():
    with pytest.raises(SnapshotError) as info:
        fixture("broken_lambda.json")
    assert any("rvA" in e and "row 1" in e for e in info.value.errors)


def test_hq_shaped_fixture():
    s = fixture("hq_shaped.json")
    assert len(s.zones) == 5
    assert len(s.plants) == 6
    assert len(s.generators) == 14
    assert sum(1 for z in s.zones.values() if z.is_south) == 1


def test_all_fixtures_limit_expressions_resolve():
    for path in sorted(FIXTURES.glob("*.json")):
        if path.name == "broken_lambda.json":
            continue
        s = load_snapshot(path)
        names = s.symbol_names()
        for link in s.links.values():
            for series in link.limits.values():
                for e in series:
                    if e is not None:
                        assert variables(e) <= names
                        prune(e, {n: (0.0, 1e4) for n in variables(e)})


# -- validation ---------------------------------------------------------------------


def _errors(doc) -> list[str]:
    with pytest.raises(SnapshotError) as info:
        snapshot_from_dict(doc)
    return info.value.errors


def test_validation_collects_every_problem():
    doc = fixture_dict("two_zone.json")
    doc["zones"][0]["is_south"] = True
    doc["zones"][1]["is_south"] = True
    doc["generators"][0]["plant"] = "nowhere"
    errs = _errors(doc)
    assert len(errs) >= 2
    assert any("south" in e for e in errs)
    assert any("nowhere" in e for e in errs)


def test_loss_slope_must_lie_in_unit_interval():
    doc = fixture_dict("two_zone.json")
    doc["links"][0]["loss"] = {"a": 0.0, "b": 1.5}
    assert any("loss" in e for e in _errors(doc))


def test_unknown_symbol_in_limit():
    doc = fixture_dict("two_zone.json")
    doc["links"][0]["limits"] = {"in_upper": "min(2000, P[ghost] + 10)"}
    assert any("P[ghost]" in e for e in _errors(doc))


def test_bad_expression_text_reports_location():
    doc = fixture_dict("two_zone.json")
    doc["links"][0]["limits"] = {"in_upper": "min(2000,"}
    assert any("links" in e or "in_upper" in e for e in _errors(doc))


def test_empty_fcpl_set_rejected():
    doc = fixture_dict("forced_fcpl.json")
    doc["fcpl_sets"][0]["generators"] = []
    assert _errors(doc)


def test_unreadable_json(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(SnapshotError):
        load_snapshot(p)


# -- vertex tables ------------------------------------------------------------------


def test_hydro_power_worked_value():
    assert hydro_power_mw(100.0, 100.0, 0.9) == pytest.approx(997 * 9.81 * 100 * 100 * 0.9 / 1e6)
    assert hydro_power_mw(100.0, 100.0, 0.9) == pytest.approx(88.02, abs=1e-2)
    assert (RHO, GRAVITY) == (997.0, 9.81)


def test_hydro_power_linearity():
    base = hydro_power_mw(80.0, 95.0, 0.5)
    assert hydro_power_mw(80.0, 95.0, 0.75) == pytest.approx(1.5 * base)
    assert hydro_power_mw(160.0, 95.0, 0.5) == pytest.approx(2 * base)


def test_vertex_table_ordering_and_margins():
    table = make_vertex_table(FLOWS, ETAS, HEADS)
    for dh in HEADS:
        p = {y: table[y][dh].p for y in FLOWS}
        assert p["stab"] >= p["max"] >= p["opt"]
        assert table["opt"][dh].sfc_up == pytest.approx(p["max"] - p["opt"])
        assert table["opt"][dh].pfc == pytest.approx(p["stab"] - p["opt"])
        assert table["min"][dh].sfc_down == 0.0
        assert table["opt"][dh].f == FLOWS["opt"]


def test_vertex_table_rejects_inconsistent_inputs():
    with pytest.raises(VertexOrderError):
        make_vertex_table({**FLOWS, "stab": 90.0}, ETAS, HEADS)
    with pytest.raises(ValueError):
        make_vertex_table(FLOWS, {**ETAS, "opt": 1.2}, HEADS)


# -- immutability -------------------------------------------------------------------


def test_snapshot_is_frozen():
    s = fixture("hq_shaped.json")
    with pytest.raises(dataclasses.FrozenInstanceError):
        s.name = "other"
    with pytest.raises(TypeError):
        s.zones["extra"] = None
    z = next(iter(s.zones.values()))
    with pytest.raises(dataclasses.FrozenInstanceError):
        z.id = "x"


def test_building_models_leaves_snapshot_untouched():
    from stablim.adequacy import run_monitor
    s = fixture("hq_shaped.json")
    raw_before = copy.deepcopy(s.raw)
    twin = pickle.loads(pickle.dumps(s))
    run_monitor(s, ["10S", "10NS"], steps=[0])
    assert s == twin and s.raw == raw_before


def test_snapshot_pickles():
    s = fixture("hq_shaped.json")
    back = pickle.loads(pickle.dumps(s))
    assert back == s
