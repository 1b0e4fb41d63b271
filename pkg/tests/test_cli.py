import json
import subprocess
import sys

import pytest

from ugf import corpus
from ugf.cli import main
from ugf.structures import Structure

PR = {"P": 1, "R": 2}


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, *argv):
    code, out, err = run(capsys, "--format", "json", "--no-timings", *argv)
    return code, json.loads(out)


@pytest.fixture
def structures(tmp_path):
    def write(name, S):
        p = tmp_path / f"{name}.json"
        p.write_text(json.dumps(S.to_json()))
        return str(p)
    tri = Structure(PR, [1, 2, 3], {"P": {(1,)}, "R": {(1, 2), (2, 3), (3, 1)}})
    two = Structure(PR, [1, 2], {"P": {(1,)}, "R": {(1, 2), (2, 1)}})
    left = Structure({"R": 2, "P": 1}, [1, 2], {"P": {(1,)}, "R": {(1, 2), (2, 1)}})
    right = Structure({"R": 2, "Q": 1}, [1, 2, 3, 4],
                      {"Q": {(1,)}, "R": {(1, 2), (2, 1), (3, 4), (4, 3)}})
    return {"tri": write("tri", tri), "two": write("two", two),
            "left": write("left", left), "right": write("right", right)}


def test_classify_accepts_example_paths_and_corpus_names(capsys):
    code, out, _ = run(capsys, "classify", "examples/ex1a.gf")
    assert code == 0 and out.strip() == "guarded=T one-dimensional=T uniform=T"
    code, data = run_json(capsys, "classify", "ex1b")
    assert data["result"]["one_dimensional"] is False and data["result"]["uniform"] is True


def test_classify_file(capsys, tmp_path):
    p = tmp_path / "f.gf"
    p.write_text("# comment\nexists x. (P(x) & true)\n")
    assert run(capsys, "classify", str(p))[0] == 0


def test_sat_non_interpolation_pair(capsys):
    code, out, _ = run(capsys, "sat", "prop1_phi_and_psi.gf", "--witness-bound", "3", "--model-bound", "6")
    assert code == 1
    assert "NoWitnessUpToBound" in out and "none up to size 6" in out


def test_sat_certificate_reverifies_in_fresh_process(capsys, tmp_path):
    cert = tmp_path / "cert.json"
    code, data = run_json(capsys, "sat", "prop1_phi", "--model-bound", "3",
                          "--certificate", str(cert), "--depth", "3")
    assert code == 0 and data["result"]["verdict"] == "Satisfiable"
    assert data["result"]["certificate_problems"] == []
    proc = subprocess.run([sys.executable, "-m", "ugf.cli", "verify-cert", str(cert)],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "certificate valid" in proc.stdout


def test_verify_cert_rejects_tampering(capsys, tmp_path):
    cert = tmp_path / "cert.json"
    run(capsys, "sat", "nf_running", "--certificate", str(cert))
    data = json.loads(cert.read_text())
    data["types"] = data["types"][:0]
    cert.write_text(json.dumps(data))
    code, out, _ = run(capsys, "verify-cert", str(cert))
    assert code == 5 and "INVALID" in out


def test_normalize_lists_requirements(capsys):
    code, data = run_json(capsys, "normalize", "u_inner_sentence", "--all")
    assert code == 0 and data["result"]["branches"] == 2
    assert len(data["result"]["shown"]) == 2
    code, data = run_json(capsys, "normalize", "u_inner_sentence", "--branch", "1")
    assert [s["index"] for s in data["result"]["shown"]] == [1]
    assert run(capsys, "normalize", "u_inner_sentence", "--branch", "7")[0] == 5
    assert run(capsys, "normalize", "prop1_phi")[0] == 5


def test_check(capsys, structures):
    code, data = run_json(capsys, "check", structures["tri"], "nf_running")
    assert code == 0 and data["result"]["value"] is False
    code, data = run_json(capsys, "check", structures["tri"], "u_seed_only")
    assert isinstance(data["result"]["value"], bool)


def test_bisim_and_distinguish(capsys, structures):
    code, data = run_json(capsys, "bisim", structures["tri"], structures["two"], "--tuple", "1=1",
                          "--distinguish")
    assert code == 0 and data["result"]["bisimilar"] is False
    assert data["result"]["formula"]
    code, data = run_json(capsys, "bisim", structures["tri"], structures["tri"], "--tuple", "1=1")
    assert data["result"]["bisimilar"] is True
    code, out, _ = run(capsys, "distinguish", structures["tri"], structures["tri"], "--tuple", "2=2")
    assert "none up to depth" in out
    assert run(capsys, "bisim", structures["tri"], structures["two"], "--tuple", "9=1")[0] == 5
    assert run(capsys, "bisim", structures["tri"], structures["two"], "--sigma", "Q")[0] == 5


def test_amalgam(capsys, structures):
    code, data = run_json(capsys, "amalgam", structures["left"], structures["right"])
    assert code == 0
    assert data["result"]["projection_isos"]["passed"]
    assert data["result"]["projection_bisim"]["passed"]
    C = Structure.from_json(data["result"]["structure"])
    assert len(C) == data["result"]["universe_size"] == 8


def test_gen_is_deterministic(capsys):
    first = run(capsys, "gen", "--structures", "--size", "3", "--seed", "7",
                "--format", "json", "--no-timings")[1]
    second = run(capsys, "--format", "json", "--no-timings", "--seed", "7",
                 "gen", "--structures", "--size", "3")[1]
    assert first == second
    parallel = json.loads(run(capsys, "--format", "json", "--no-timings", "--jobs", "2",
                              "gen", "--structures", "--size", "3", "--seed", "7")[1])
    assert parallel["result"] == json.loads(first)["result"]
    assert json.loads(first)["config"]["seed"] == 7
    other = run(capsys, "gen", "--structures", "--size", "3", "--seed", "8",
                "--format", "json", "--no-timings")[1]
    assert other != first


def test_gen_all_and_formulas(capsys):
    code, data = run_json(capsys, "gen", "--structures", "--all", "--size", "2")
    assert len(data["result"]["structures"]) == 40
    code, data = run_json(capsys, "gen", "--formulas", "--count", "4", "--seed", "3")
    assert len(data["result"]["formulas"]) == 4
    assert run(capsys, "gen")[0] == 5


def test_sat_reports_are_byte_identical(capsys):
    a = run(capsys, "--format", "json", "--no-timings", "sat", "nf_running")[1]
    b = run(capsys, "--format", "json", "--no-timings", "sat", "nf_running")[1]
    assert a == b
    assert "timings" not in json.loads(a)
    c = run(capsys, "--format", "json", "sat", "nf_running")[1]
    assert "timings" in json.loads(c)


def test_error_codes(capsys, tmp_path):
    code, _, err = run(capsys, "sat", str(tmp_path / "missing.gf"))
    assert code == 3 and "cannot read" in err
    bad = tmp_path / "bad.gf"
    bad.write_text("exists x (")
    assert run(capsys, "sat", str(bad))[0] == 4
    assert run(capsys, "sat", "nf_running", "--witness-bound", "0")[0] == 5
    junk = tmp_path / "s.json"
    junk.write_text("{not json")
    assert run(capsys, "check", str(junk), "nf_running")[0] == 5


def test_corpus_is_bundled():
    assert {"ex1a", "ex1b", "ex1c", "prop1_phi", "prop1_psi", "prop1_phi_and_psi"} <= set(corpus.names())
