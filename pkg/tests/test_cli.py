import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

from ucv.cli import run

DATA = Path(__file__).resolve().parent.parent / "demos" / "data"


def d(name):
    return str(DATA / name)


def test_sat_and_unsat():
    code, out, _ = run(["sat", d("no_loops.ucv")])
    assert code == 0 and "verdict: SAT" in out and "E(0,1)." in out and "E(1,0)." in out
    code, out, _ = run(["sat", d("unrealizable.ucv")])
    assert code == 0 and "verdict: UNSAT" in out and "abstraction" in out


def test_unknown_exits_two():
    code, out, _ = run(["sat", d("unrealizable.ucv"), "--no-abstraction", "--max-size", "2"])
    assert code == 2 and "UNKNOWN" in out


def test_structured_output_and_flag_position():
    a = run(["--out", "structured", "sat", d("intro.ucv")])
    b = run(["sat", d("intro.ucv"), "--out", "structured"])
    assert a == b and a[0] == 0
    doc = json.loads(a[1])
    assert doc["status"] == "SAT"


def test_determinism_across_seeds_and_workers():
    outs = {run(["sat", d("intro.ucv"), "--seed", str(s), "--workers", str(w)])[1] for s in (0, 7) for w in (1, 4)}
    assert len(outs) == 1


def test_environment_override(monkeypatch):
    monkeypatch.setenv("UCV_MAX_SIZE", "1")
    code, out, _ = run(["sat", d("no_loops.ucv")])
    assert code == 2
    code, _, _ = run(["sat", d("no_loops.ucv"), "--max-size", "2"])
    assert code == 0


def test_eval_and_check():
    code, out, _ = run(["eval", d("path.ucv"), d("path.facts")])
    assert code == 0 and "0: C_100" in out and "1: C_101" in out
    code, out, _ = run(["check", d("path.ucv"), "--facts", d("path.facts")])
    assert code == 0


def test_views():
    code, out, _ = run(["views", "--vocab", "E/2", "--m", "2"])
    assert code == 0 and out.count("view ") == 3


def test_shrink():
    code, out, _ = run(["shrink", d("path.ucv"), d("small_path.facts")])
    assert code == 0
    code, out, _ = run(["shrink", d("no_loops.ucv"), d("cycle5.facts"), "--copies", "1"])
    assert code == 2 and "subproperty 5" in out


def test_contain_and_imply():
    code, out, _ = run(["contain", d("path.ucv"), "--q1", "V3(x)", "--q2", "V1(x)"])
    assert code == 0 and "COUNTEREXAMPLE" in out
    code, out, _ = run(["imply", d("path.ucv"), "--given", "V2(x) <= V1(x)", "--target", "V2(x) <= V3(x)"])
    assert code == 0 and "IMPLIED" in out


def test_reduce_2cm():
    code, out, _ = run(["reduce-2cm", d("halting.2cm"), "--trace"])
    assert code == 0 and "sentence holds: true" in out
    code, _, err = run(["reduce-2cm", d("looping.2cm"), "--trace", "--max-steps", "20"])
    assert code == 2


def test_inexpress():
    code, out, _ = run(["inexpress", "--vocab", "E/2", "--query", "forall x forall y (E(x,y) -> E(y,x))"])
    assert code == 0 and "E(0,0)" in out


@pytest.mark.parametrize("argv", [["check", "missing.ucv"], ["sat"], ["bogus"], ["views", "--vocab", "E/x", "--m", "2"]])
def test_errors_exit_one(argv):
    code, _, err = run(argv)
    assert code == 1 and err


def test_parse_error_location(tmp_path):
    bad = tmp_path / "bad.ucv"
    bad.write_text("rel E/2.\nview V(x) <- E(y,z).\n")
    code, _, err = run(["check", str(bad)])
    assert code == 1 and "2" in err


def test_console_script_entry_point():
    proc = subprocess.run([sys.executable, "-m", "ucv.cli", "views", "--vocab", "E/2", "--m", "2"],
                          capture_output=True, text=True, env={**os.environ})
    assert proc.returncode == 0 and "E(x,x)" in proc.stdout
