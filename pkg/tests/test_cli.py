import csv
import json
import subprocess
import sys

import pytest

from latgcb.cli import SCHEMA, main, run

DUALITY = {"experiment": "duality", "seed": 3,
           "params": {"instances": 4, "alphabet": [2, 3], "sites": [1, 2], "p": [1, "3/2", "inf"]}}


def write(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg) if not isinstance(cfg, str) else cfg)
    return path


def test_duality_run_and_determinism(tmp_path):
    cfg = write(tmp_path, DUALITY)
    assert run(cfg, tmp_path / "a") == 0
    assert run(cfg, tmp_path / "b", jobs=2) == 0
    for name in ("summary.json", "duality.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    summary = json.loads((tmp_path / "a" / "summary.json").read_text())
    assert summary["passed"] and summary["seed"] == 3
    rows = list(csv.reader(open(tmp_path / "a" / "duality.csv")))
    assert rows[0][0] == "instance" and len(rows) == 1 + 4 * 3


def test_seed_override_changes_output(tmp_path):
    cfg = write(tmp_path, DUALITY)
    run(cfg, tmp_path / "a")
    run(cfg, tmp_path / "b", seed_override=4)
    a = (tmp_path / "a" / "duality.csv").read_text()
    b = (tmp_path / "b" / "duality.csv").read_text()
    assert a != b
    assert json.loads((tmp_path / "b" / "summary.json").read_text())["seed"] == 4


@pytest.mark.parametrize("cfg", [
    "{not json",
    {"experiment": "duality", "seed": 0},
    {"experiment": "nope", "seed": 0, "params": {}},
    {"experiment": "duality", "seed": 0, "params": {"instances": 1, "alphabet": [2], "sites": [1],
                                                    "p": ["1/2"]}},
    {"experiment": "gcb", "seed": 0, "params": {"process": {"kind": "markov",
                                                            "transition": [[0.5, 0.6], [1, 0]]},
                                                "n": 1, "C": 0.25}},
    {"experiment": "counterexample", "seed": 0, "params": {"L": [5], "extra": 1}},
])
def test_malformed_config_exit_2(tmp_path, cfg):
    path = write(tmp_path, cfg)
    assert run(path, tmp_path / "out") == 2
    assert not (tmp_path / "out").exists()


def test_missing_config_exit_2(tmp_path):
    assert run(tmp_path / "absent.json", tmp_path / "out") == 2


def test_capacity_error_exit_2(tmp_path):
    cfg = {"experiment": "gcb", "seed": 0,
           "params": {"process": {"kind": "iid", "single_site": [0.5, 0.5]}, "n": 12, "C": 0.25}}
    assert run(write(tmp_path, cfg), tmp_path / "out") == 2


def test_check_failure_exit_1(tmp_path):
    cfg = {"experiment": "gcb", "seed": 0,
           "params": {"process": {"kind": "iid", "single_site": [0.5, 0.5], "symbols": [-1, 1]},
                      "n": 1, "C": 0.05}}
    assert run(write(tmp_path, cfg), tmp_path / "out") == 1
    assert json.loads((tmp_path / "out" / "summary.json").read_text())["passed"] is False


@pytest.mark.parametrize("cfg,files", [
    ({"experiment": "edi", "seed": 1, "params": {
        "process": {"kind": "iid", "single_site": [0.5, 0.5]}, "n": 0, "C": 0.1, "trials": 40,
        "expect": "violation"}}, ["edi.csv"]),
    ({"experiment": "thermo", "seed": 0, "params": {
        "process_a": {"kind": "iid", "single_site": [0.5, 0.5]},
        "process_b": {"kind": "iid", "single_site": [0.8, 0.2]},
        "p": [1, 2, "inf"], "n_max": 2, "spread_tolerance": 1e-6}}, ["thermo.csv"]),
    ({"experiment": "dbar", "seed": 0, "params": {
        "process_a": {"kind": "iid", "single_site": [0.5, 0.5]},
        "process_b": {"kind": "iid", "single_site": [0.8, 0.2]},
        "n_max": 1, "mc_steps": 20000, "chains": 100, "burn_in": 100}}, ["dbar.csv"]),
    ({"experiment": "pressure", "seed": 0, "params": {
        "process": {"kind": "iid", "single_site": [0.5, 0.5]}, "C": 0.25, "suite_size": 5}},
     ["pressure.csv"]),
    ({"experiment": "counterexample", "seed": 0, "params": {"L": [10, 100], "n": [1, 2]}},
     ["counterexample.csv"]),
])
def test_other_experiments_pass(tmp_path, cfg, files):
    assert run(write(tmp_path, cfg), tmp_path / "out") == 0
    for name in files + ["summary.json"]:
        assert (tmp_path / "out" / name).exists()


def test_module_entry_point(tmp_path):
    cfg = write(tmp_path, {"experiment": "counterexample", "seed": 0, "params": {"L": [3]}})
    proc = subprocess.run([sys.executable, "-m", "latgcb", "run", "--config", str(cfg),
                           "--out", str(tmp_path / "o"), "--seed-override", "2", "--jobs", "1"],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    out = subprocess.run([sys.executable, "-m", "latgcb", "schema"], capture_output=True, text=True)
    assert json.loads(out.stdout)["config"] == SCHEMA


def test_main_requires_flags():
    with pytest.raises(SystemExit) as exc:
        main(["run", "--out", "x"])
    assert exc.value.code == 2
