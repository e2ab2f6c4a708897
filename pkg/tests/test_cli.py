import json
import shutil
import subprocess
import sys

import pytest

from stablim.cli import main, parse_steps

from support import FIXTURES

SINGLE_MACHINE = "max(1000, min(-P_m+6000, -2*P_m+7000, -4*P_m+11000))"


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def fx(name):
    return str(FIXTURES / name)


# -- limits ------------------------------------------------------------------------


def test_parse_prints_canonical_text(capsys):
    code, out, _ = run(capsys, "limits", "parse", "min(2*x, 3) + 1")
    assert code == 0 and out.strip() == "1 + min(3, 2*x)"


def test_simplify_single_machine_prunes_nothing(capsys, tmp_path):
    doms = tmp_path / "d.json"
    doms.write_text(json.dumps({"P_m": [0, 3000]}))
    code, out, _ = run(capsys, "limits", "simplify", SINGLE_MACHINE, "--domains", str(doms))
    assert code == 0
    doc = json.loads(out)
    assert doc["schema_version"] == 1
    assert doc["report"]["pruned_children"] == 0
    assert doc["expr"] == doc["input"]


def test_simplify_reads_file(capsys, tmp_path):
    src = tmp_path / "e.txt"
    src.write_text("min(100, -50*P_1 + 22500)")
    doms = tmp_path / "d.json"
    doms.write_text(json.dumps({"P_1": [0, 400]}))
    code, out, _ = run(capsys, "limits", "simplify", "--file", str(src), "--domains", str(doms))
    assert code == 0 and json.loads(out)["expr"] == "100"


def test_default_domain_env(capsys, monkeypatch):
    monkeypatch.setenv("STABLIM_DEFAULT_DOMAIN", "0,10")
    code, out, _ = run(capsys, "limits", "simplify", "max(y, 20)")
    assert code == 0
    doc = json.loads(out)
    assert doc["expr"] == "20" and doc["report"]["defaulted_domains"] == ["y"]


def test_linearize_writes_lp_and_manifest(capsys, tmp_path):
    lp, man = tmp_path / "o.lp", tmp_path / "o.json"
    doms = tmp_path / "d.json"
    doms.write_text(json.dumps({"P_m": [0, 3000]}))
    code, _, _ = run(capsys, "limits", "linearize", SINGLE_MACHINE, "--domains", str(doms), "--out", str(lp),
                     "--manifest", str(man))
    assert code == 0
    assert "Maximize" in lp.read_text()
    assert json.loads(man.read_text())["binaries"] >= 2
    code, out, _ = run(capsys, "solve", str(lp))
    assert code == 0 and json.loads(out)["objective"] == pytest.approx(6000.0)


def test_bad_expression_is_domain_error(capsys):
    code, _, err = run(capsys, "limits", "parse", "min(1,")
    assert code == 1 and "error" in err


def test_expression_twice_is_usage_error(capsys, tmp_path):
    f = tmp_path / "e.txt"
    f.write_text("x")
    assert run(capsys, "limits", "parse", "x", "--file", str(f))[0] == 2


# -- usage errors -----------------------------------------------------------------------


def test_unknown_command(capsys):
    assert run(capsys, "frobnicate")[0] == 2


def test_step_out_of_range(capsys):
    assert run(capsys, "adequacy", "run", "--snapshot", fx("two_zone.json"), "--steps", "0..99")[0] == 2


def test_nonpositive_limits(capsys):
    assert run(capsys, "adequacy", "run", "--snapshot", fx("two_zone.json"), "--time-limit", "0")[0] == 2
    assert run(capsys, "adequacy", "run", "--snapshot", fx("two_zone.json"), "--parallelism", "0")[0] == 2


def test_parse_steps_ranges():
    assert parse_steps("0..2,4,2", 5) == [0, 1, 2, 4]


# -- snapshot ----------------------------------------------------------------------------


def test_validate_ok(capsys):
    code, out, _ = run(capsys, "snapshot", "validate", fx("hq_shaped.json"))
    assert code == 0 and out.startswith("ok: 5 zones")


def test_validate_broken_lambda(capsys):
    code, _, err = run(capsys, "snapshot", "validate", fx("broken_lambda.json"))
    assert code == 1 and "rvA" in err


def test_missing_snapshot_is_domain_error(capsys, tmp_path):
    assert run(capsys, "adequacy", "run", "--snapshot", str(tmp_path / "none.json"))[0] == 1


# -- adequacy and restoration --------------------------------------------------------------


def test_adequacy_run_writes_json_and_csv(capsys, tmp_path):
    out, csv_out = tmp_path / "rep" / "a.json", tmp_path / "a.csv"
    code, _, _ = run(capsys, "adequacy", "run", "--snapshot", fx("two_zone.json"), "--steps", "0..2",
                     "--out", str(out), "--csv", str(csv_out))
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["schema_version"] == 1 and doc["kind"] == "adequacy"
    lines = csv_out.read_text().splitlines()
    assert lines[0] == "reserve,step,status,margin_MW,required_MW" and len(lines) == 1 + 9


def test_adequacy_parallelism_byte_identical(capsys, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    base = ["adequacy", "run", "--snapshot", fx("hq_shaped.json"), "--steps", "0..2"]
    assert run(capsys, *base, "--parallelism", "1", "--out", str(a))[0] == 0
    assert run(capsys, *base, "--parallelism", "4", "--out", str(b))[0] == 0
    assert a.read_bytes() == b.read_bytes()


def test_restore_lists_cheapest_action(capsys, tmp_path):
    code, out, _ = run(capsys, "adequacy", "run", "--snapshot", fx("restore_ab.json"), "--steps", "0")
    assert code == 0
    margins = {r["reserve"]: r["margin"] for r in json.loads(out)["reports"]}
    assert margins["10NS"] < 0
    code, out, _ = run(capsys, "restore", "run", "--snapshot", fx("restore_ab.json"), "--step", "0")
    assert code == 0
    plan = json.loads(out)
    assert plan["status"] == "restored" and plan["actions"] == ["A"]


def test_restore_without_deficit_exits_zero(capsys):
    code, out, _ = run(capsys, "restore", "run", "--snapshot", fx("two_zone.json"), "--step", "0", "--reserves", "10S")
    assert code == 0 and json.loads(out)["status"] == "adequate"


def test_unrestorable_exits_one_with_full_report(capsys, tmp_path):
    doc = json.loads((FIXTURES / "restore_ab.json").read_text())
    doc["zones"][0]["net_power"] = 900.0
    snap = tmp_path / "s.json"
    snap.write_text(json.dumps(doc))
    out = tmp_path / "plan.json"
    code, _, _ = run(capsys, "restore", "run", "--snapshot", str(snap), "--step", "0", "--out", str(out))
    assert code == 1
    assert json.loads(out.read_text())["status"] == "unrestorable"


def test_failed_command_writes_nothing(capsys, tmp_path):
    out = tmp_path / "never.json"
    code, _, _ = run(capsys, "adequacy", "run", "--snapshot", fx("broken_lambda.json"), "--out", str(out))
    assert code == 1
    assert list(tmp_path.iterdir()) == []


# -- unit commitment and raw solve ----------------------------------------------------------


def test_huc_run_schedule(capsys, tmp_path):
    out, lp = tmp_path / "s.json", tmp_path / "m.lp"
    code, _, _ = run(capsys, "huc", "run", "--snapshot", fx("huc_two_plant.json"), "--timeout", "120",
                     "--out", str(out), "--lp", str(lp))
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["status"] == "optimal" and doc["objective"] == pytest.approx(202.857142857, abs=1e-6)
    assert doc["water_balance"]["lhs"] == pytest.approx(doc["water_balance"]["rhs"], rel=1e-9)
    assert "Binary" in lp.read_text()


def test_huc_horizon_too_short(capsys):
    assert run(capsys, "huc", "run", "--snapshot", fx("huc_two_plant.json"), "--horizon", "1")[0] == 2


def test_solve_bad_lp_file(capsys, tmp_path):
    f = tmp_path / "bad.lp"
    f.write_text("Maximize\n obj: 3 x +\nEnd\n")
    assert run(capsys, "solve", str(f))[0] == 1


@pytest.mark.skipif(shutil.which("stablim") is None, reason="console script not installed")
def test_console_script_exit_codes():
    ok = subprocess.run(["stablim", "limits", "parse", "x + 1"], capture_output=True, text=True)
    assert ok.returncode == 0 and ok.stdout.strip() == "1 + x"
    assert subprocess.run(["stablim", "nope"], capture_output=True).returncode == 2
    bad = subprocess.run(["stablim", "snapshot", "validate", fx("broken_lambda.json")], capture_output=True)
    assert bad.returncode == 1


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "stablim.cli", "limits", "parse", "2*y"], capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.strip() == "2*y"
