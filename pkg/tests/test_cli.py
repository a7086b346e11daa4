import io
import json
import subprocess
import sys
from pathlib import Path

import jsonschema
import pytest

from hpnet.cli import run_cli

SCHEMA = json.loads((Path(__file__).parent.parent / "docs" / "report.schema.json").read_text())


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run_cli(list(argv), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def report(*argv):
    code, out, _ = run(*argv, "--json")
    doc = json.loads(out)
    jsonschema.validate(doc, SCHEMA)
    return code, doc


def results(doc):
    return {v["check"]: v["result"] for v in doc["verdicts"]}


def test_analyze_linear():
    code, doc = report("analyze", "fixture:linear")
    assert code == 0 and len(doc["verdicts"]) == 5
    assert set(results(doc).values()) == {"pass"}


def test_schedule_empty_window():
    code, doc = report("schedule", "fixture:empty_window")
    assert code == 1
    (sched, _) = doc["verdicts"]
    assert sched["details"]["violations"][0]["code"] == "EMPTY_WINDOW"
    assert sched["details"]["violations"][0]["transition"] == "t1"


def test_teb_prints_interval():
    assert run("teb", "fixture:seq.pat") == (0, "[3,6]\n", "")


@pytest.mark.parametrize("argv,code,checks", [
    (("analyze", "fixture:healthcare"), 0, {"validate_structure": "pass", "wellformed_workflow": "pass",
                                            "boundedness": "pass", "deadlock_freedom": "pass",
                                            "proper_completion": "pass"}),
    (("analyze", "fixture:deadlock"), 1, {"deadlock_freedom": "fail", "proper_completion": "pass"}),
    (("analyze", "fixture:residual"), 1, {"proper_completion": "fail", "boundedness": "pass"}),
    (("analyze", "fixture:unsafe"), 1, {"boundedness": "fail"}),
    (("schedule", "fixture:healthcare"), 0, {"schedulability": "pass", "time_consistency": "pass"}),
    (("schedule", "fixture:td_overshoot"), 1, {"schedulability": "fail", "time_consistency": "fail"}),
    (("schedule", "fixture:linear", "--deadline", "0"), 0, {"schedulability": "pass"}),
    (("validate", "fixture:healthcare"), 0, {"validate_structure": "pass", "condition_alteration": "pass"}),
    (("oracle-check", "fixture:cond.pat"), 0, {"oracle_check": "pass"}),
    (("oracle-check", "fixture:par.pat"), 0, {"oracle_check": "pass"}),
    (("flatten", "fixture:healthcare"), 0, {"flatten": "pass"}),
])
def test_fixture_exit_codes(argv, code, checks):
    got, doc = report(*argv)
    assert got == code
    assert {k: results(doc)[k] for k in checks} == checks


def test_overshoot_names_producer_and_place():
    _, doc = report("schedule", "fixture:td_overshoot")
    (v,) = doc["verdicts"][1]["details"]["violations"]
    assert (v["code"], v["transition"], v["place"]) == ("TD_OVERSHOOT", "t1", "pb")


def test_truncation_gives_unknown_and_exit_1():
    code, doc = report("analyze", "fixture:healthcare", "--max-states", "5")
    assert code == 1 and "unknown" in results(doc).values()


def test_strict_intervals(tmp_path):
    src = tmp_path / "p.hpn"
    src.write_text("net A { place p entry; place q exit; trans t tc [2,2]; arc p -> t; arc t -> q; }")
    assert run("validate", str(src))[0] == 0
    code, doc = report("validate", str(src), "--strict-intervals")
    assert code == 1
    assert doc["verdicts"][0]["details"]["violations"][0]["code"] == "STRICT_INTERVAL"


def test_parse_error_exit_2(tmp_path):
    src = tmp_path / "bad.hpn"
    src.write_text("net A {\n  trans t tc [5,2];\n}\n")
    code, out, err = run("analyze", str(src))
    assert code == 2 and out == ""
    assert f"{src}:2:14: error INTERVAL_ORDER" in err


def test_usage_errors():
    assert run("analyze", "does/not/exist.hpn")[0] == 2
    assert run("analyze", "fixture:nope")[0] == 2
    assert run("frobnicate", "x")[0] == 2
    assert run()[0] == 2


def test_human_and_json_agree():
    for argv in (("analyze", "fixture:deadlock"), ("schedule", "fixture:healthcare")):
        _, doc = report(*argv)
        _, human, _ = run(*argv)
        lines = [ln for ln in human.splitlines() if not ln.startswith(" ")]
        assert lines == [f"{v['check']}: {v['result'].upper()}" for v in doc["verdicts"]]


def test_flatten_prints_canonical_net():
    code, out, _ = run("flatten", "fixture:healthcare")
    assert code == 0 and "trans HealthService@in;" in out and "place HealthService.hs_in;" in out


def test_json_is_deterministic():
    assert run("schedule", "fixture:healthcare", "--json") == run("schedule", "fixture:healthcare", "--json")


def test_unbound_refinable_warning_in_report(tmp_path):
    src = tmp_path / "w.hpn"
    src.write_text("net A { place p entry; place q exit; trans t refinable; arc p -> t; arc t -> q; }")
    code, doc = report("analyze", str(src))
    assert code == 0 and "UNBOUND_REFINABLE" in doc["warnings"][0]


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "hpnet", "teb", "fixture:loop.pat"],
                          capture_output=True, text=True, check=False)
    assert (proc.returncode, proc.stdout) == (0, "[3,6]\n")
