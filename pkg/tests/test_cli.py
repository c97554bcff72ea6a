"""Command surface: exit codes, report determinism, file formats."""

import json

from weylflow import cli
from weylflow import numerics as num


def run(args):
    return cli.main(args)


def test_unknown_system_exits_2(capsys):
    assert run(["verify", "BOGUS", "all"]) == 2
    assert run(["integrate", "--system", "BOGUS"]) == 2
    assert run(["apply", "BOGUS", "s0"]) == 2
    assert run(["ansatz", "BOGUS"]) == 2
    assert run(["export", "BOGUS"]) == 2
    capsys.readouterr()


def test_verify_divisors_passes(tmp_path, capsys):
    out = tmp_path / "report.json"
    assert run(["verify", "A4_2", "divisors", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["passed"] and doc["counts"]["failed"] == 0
    capsys.readouterr()


def test_verify_brackets_pde(tmp_path, capsys):
    out = tmp_path / "report.json"
    assert run(["verify", "PDE_A1_1", "brackets", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    names = {c["name"] for c in doc["checks"]}
    assert {"poisson/{K1,K2}", "poisson/{K1,K3}", "poisson/{K2,K3}"} <= names
    capsys.readouterr()


def test_reports_byte_identical_for_same_config(tmp_path, capsys):
    a = tmp_path / "a.json"
    b = tmp_path / "b.json"
    assert run(["verify", "A1_1", "relations", "--seed", "7",
                "--out", str(a)]) == 0
    assert run(["verify", "A1_1", "relations", "--seed", "7",
                "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    capsys.readouterr()


def test_apply_translation_offsets(capsys):
    assert run(["apply", "A4_2", "s1 s2 s1 s0", "--params"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["parameter_action"]["offset_on_relation"] == ["-2", "1", "0"]
    assert run(["apply", "A1_1", "s1 s0", "--params"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["parameter_action"]["offset_on_relation"] == ["-2", "2"]


def test_apply_involution_on_expression(capsys):
    assert run(["apply", "A4_2", "s0 s0", "--expr", "x"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["image"] == "x"


def test_apply_expression_parse_failure_exits_2(capsys):
    assert run(["apply", "A4_2", "s0", "--expr", "x +"]) == 2
    assert run(["apply", "A4_2", "s0", "--expr", "nope"]) == 2
    assert run(["apply", "A4_2", "s9", "--expr", "x"]) == 2
    capsys.readouterr()


def test_apply_state_and_singular_state(capsys):
    assert run(["apply", "A4_2", "s0", "--state", "x=1,y=0,z=1,w=2,t=0",
                "--alpha", "a0=1,a1=0,a2=0"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["state"]["z"] == "3/2"
    assert doc["parameters"]["a0"] == "-1"
    # w = 0 sits on the s0 pole
    assert run(["apply", "A4_2", "s0", "--state", "x=1,y=0,z=1,w=0,t=0",
                "--alpha", "a0=1,a1=0,a2=0"]) == 1
    capsys.readouterr()


def test_integrate_csv_columns_and_zero_span(tmp_path, capsys):
    out = tmp_path / "traj.csv"
    assert run(["integrate", "--system", "PDE_A1_1", "--time", "t1",
                "--initial", "q1=1,p1=1,q2=1,p2=1",
                "--params", "a0=1/2,a1=-1/2", "--span", "0:0.05",
                "--method", "rk4", "--step", "0.01", "--out", str(out)]) == 0
    header = out.read_text().splitlines()[0].split(",")
    assert header == ["time", "q1", "p1", "q2", "p2", "K1", "K2", "K3",
                      "f0", "f1"]
    out2 = tmp_path / "single.csv"
    assert run(["integrate", "--system", "A4_2",
                "--initial", "x=1,y=0,z=1,w=1",
                "--params", "a0=1/3,a1=1/5,a2=2/15", "--span", "0:0",
                "--out", str(out2)]) == 0
    lines = out2.read_text().strip().splitlines()
    assert len(lines) == 2   # header + one sample
    assert lines[0].split(",")[5:] == ["H", "f0", "f1", "f2"]
    capsys.readouterr()


def test_integrate_config_file_with_flag_override(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "system": "PDE_A1_1", "time": "t1",
        "initial": "q1=1,p1=1,q2=1,p2=1", "params": "a0=1/2,a1=-1/2",
        "span": "0:0.1", "method": "rk4", "step": 0.01, "format": "csv"}))
    out = tmp_path / "traj.json"
    # --format flag wins over the config's csv
    assert run(["integrate", "--config", str(cfg), "--format", "json",
                "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["system"] == "PDE_A1_1"
    assert len(doc["samples"]) == 11
    capsys.readouterr()


def test_integrate_bad_inputs_exit_2(capsys):
    assert run(["integrate", "--system", "PDE_A1_1", "--span", "zzz"]) == 2
    assert run(["integrate", "--system", "PDE_A1_1", "--time", "t9"]) == 2
    assert run(["integrate", "--system", "PDE_A1_1", "--time", "t1",
                "--initial", "q1=1,p1=1,q2=1,p2=1",
                "--params", "a0=1,a1=1", "--span", "0:1"]) == 2
    capsys.readouterr()


def test_integrate_hex_encoding_round_trips(tmp_path, capsys):
    out = tmp_path / "traj.csv"
    assert run(["integrate", "--system", "PDE_A1_1", "--time", "t1",
                "--initial", "q1=1,p1=1,q2=1,p2=1",
                "--params", "a0=1/2,a1=-1/2", "--span", "0:0.05",
                "--method", "rk4", "--step", "0.01",
                "--float-encoding", "hex", "--out", str(out)]) == 0
    times, states, diags = num.trajectory_from_csv(out.read_text())
    assert times[1] == 0.01
    capsys.readouterr()


def test_ansatz_command(tmp_path, capsys):
    out = tmp_path / "ansatz.json"
    assert run(["ansatz", "A1_1", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["membership"] == {"H": True}
    assert doc["nullspace_dimension"] == 3
    assert run(["ansatz", "A4_2", "--alpha", "a0=1,a1=1,a2=1"]) == 2
    capsys.readouterr()


def test_export_command(capsys):
    assert run(["export", "PDE_A1_1"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert sorted(doc["hamiltonians"]) == ["K1", "K2", "K3"]
    assert doc["relation"]["constant"] == "0"
    assert sorted(doc["generators"]) == ["s0", "s1"]
    assert doc["generators"]["s0"]["rules"]["q1"] == "q1"
    assert doc["fields"]["t1"]["components"]["q2"] == "p1*q2 - 1/2*p2"


def test_seed_recorded_in_report(tmp_path, capsys):
    out = tmp_path / "r.json"
    assert run(["verify", "A1_1", "divisors", "--seed", "42",
                "--out", str(out)]) == 0
    assert json.loads(out.read_text())["seed"] == 42
    capsys.readouterr()
