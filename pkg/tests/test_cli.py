import json
import subprocess
import sys

import pytest

from trilab.cli import COMMANDS, build_parser, main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_dims_csv(capsys):
    code, out, _ = run(capsys, "dims", "--triangle", "pascal", "--depth", "4", "--format", "csv")
    assert code == 0
    lines = out.strip().splitlines()
    assert len(lines) == 5 and lines[-1] == "1,4,6,4,1"


def test_extreme_json(capsys):
    code, out, _ = run(capsys, "extreme", "--triangle", "q-pascal", "--q", "1/2", "--point", "m=1", "--depth", "5")
    blob = json.loads(out)
    assert code == 0
    assert [row[0] for row in blob["result"]["rows"]] == [f"1/{2**n}" for n in range(6)]
    assert blob["result"]["coordinate"] == "1/2"
    assert blob["seed"] == 0 and blob["precision"] == "auto"
    assert blob["triangle"] == {"name": "q-pascal", "params": {"q": "1/2"}}


def test_cm_check_exit_codes(capsys):
    code, out, _ = run(capsys, "cm-check", "--triangle", "pascal", "--seq", "1,9/10,1/2")
    assert code == 2 and json.loads(out)["result"]["verdict"] == "REJECT"
    code, out, _ = run(capsys, "cm-check", "--triangle", "q-pascal", "--q", "1/2", "--seq", "1,3/4,5/8,9/16")
    blob = json.loads(out)["result"]
    assert code == 0 and blob["label"] == "consistent up to depth 3"
    assert "cross_check" in blob


@pytest.mark.parametrize(
    "argv",
    [
        ["dims", "--depth", "x"],
        ["dims", "--triangle", "hexagon", "--depth", "2"],
        ["cm-check", "--seq", "1,1/0"],
        ["extreme", "--point", "m=1", "--depth", "3"],
        ["dims", "--left", "n+1", "--depth", "2"],
        ["frobnicate"],
        ["verify", "--depth", "3"],
        ["dims", "--depth", "3", "--precision", "fuzzy"],
    ],
)
def test_usage_errors_exit_one(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == 1 and out == ""
    assert len(err.strip().splitlines()) == 1


def test_every_operation_is_reachable(capsys, tmp_path):
    kernel_file = tmp_path / "k.json"
    calls = {
        "dims": ["--depth", "3"],
        "ext-dims": ["--target", "4,2"],
        "kernel": ["--target", "4,2", "--depth", "5"],
        "extreme": ["--point", "x=1/3", "--depth", "3"],
        "verify": ["--kernel-file", str(kernel_file)],
        "cm-check": ["--seq", "1,1/2,1/3"],
        "transpose": ["--triangle", "eulerian", "--depth", "3"],
        "backtrans": ["--triangle", "eulerian", "--node", "2,1"],
        "marginal": ["--point", "x=1/2", "--level", "3"],
        "sample": ["--start", "6,3", "--size", "4", "--seed", "9"],
        "monotone": ["--nu", "5", "--level", "2"],
        "sweep": ["--triangle", "q-pascal", "--q", "1/2", "--path", "constant:m=1", "--nus", "20,30,40"],
        "discrete-check": ["--triangle", "q-pascal", "--q", "1/2", "--m", "1", "--depth", "6"],
        "martingale": ["--point", "x=1/2", "--nu-max", "100", "--trials", "10"],
        "phase": ["--family", "q-pascal", "--params", "1/2,2", "--path", "constant:m=1", "--nus", "20,30,40"],
        "synth": ["--triangle", "q-pascal", "--q", "1/2", "--points", "m=0,m=1", "--weights", "1/2,1/2", "--depth", "4"],
        "invert": ["--triangle", "q-pascal", "--q", "1/2", "--seq", "1,3/4,5/8,9/16,17/32", "--atoms", "m=0,m=1"],
    }
    assert set(calls) == set(COMMANDS)
    assert set(build_parser()._subparsers._group_actions[0].choices) == set(COMMANDS)
    code, out, _ = run(capsys, "kernel", "--target", "4,2")
    kernel_file.write_text(out)
    for command, args in calls.items():
        code, out, err = run(capsys, command, *args)
        assert code == 0, (command, err)
        assert json.loads(out)["command"] == command


def test_verify_rejects_bad_kernel(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"rows": [["1/1"], ["1/2", "1/4"]]}))
    code, out, _ = run(capsys, "verify", "--kernel-file", str(bad))
    assert code == 2 and json.loads(out)["result"]["ok"] is False


def test_monotone_and_custom_triangle(capsys):
    code, out, _ = run(capsys, "monotone", "--left", "n+k+1", "--right", "2", "--nu", "6", "--level", "2", "--format", "csv")
    assert code == 0
    assert out.splitlines()[0] == "kappa,value"


def test_determinism_and_seed(capsys):
    argv = ["sample", "--start", "12,6", "--size", "5", "--seed", "11"]
    _, first, _ = run(capsys, *argv)
    _, second, _ = run(capsys, *argv)
    assert first == second
    _, other, _ = run(capsys, *argv[:-1], "12")
    assert json.loads(other)["result"]["states"] != json.loads(first)["result"]["states"]
    assert json.loads(first)["seed"] == 11


def test_csv_out_file_with_sidecar(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("TRILAB_DIGITS", "4")
    target = tmp_path / "ext.csv"
    code, out, _ = run(capsys, "kernel", "--target", "3,1", "--format", "csv", "--out", str(target), "--seed", "5")
    assert code == 0 and out == ""
    assert target.read_text().splitlines()[1] == "0.6667,0.3333"
    meta = json.loads((tmp_path / "ext.csv.meta.json").read_text())
    assert meta["seed"] == 5 and meta["command"] == "kernel"
    code, _, _ = run(capsys, "kernel", "--target", "3,1", "--format", "csv", "--out", str(target), "--precision", "float:3")
    assert target.read_text().splitlines()[1] == "0.667,0.333"


def test_spec_file_flag(capsys, tmp_path):
    spec = tmp_path / "tri.json"
    spec.write_text(json.dumps({"name": "custom", "left": "k + 1", "right": "n - k + 1"}))
    code, out, _ = run(capsys, "dims", "--spec", str(spec), "--depth", "3", "--format", "csv")
    assert out.strip().splitlines()[-1] == "1,11,11,1"


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "trilab", "cm-check", "--seq", "1,9/10,1/2", "--format", "csv"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 2
    assert proc.stdout.splitlines()[0] == "verdict,REJECT"
