import csv
import json
import subprocess
import sys
from pathlib import Path

import pytest

from quasiflat import cli, suites
from quasiflat.config import load_fixture
from quasiflat.families import IneqReport
from quasiflat.suites import SuiteResult

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

RUNS = [
    ("flatness", "flatness_line.json", ["flatness.csv", "flatness.json"]),
    ("qs", "qs_radial.json", ["qs.json"]),
    ("extend", "extend_small.json", ["extend.json", "extend_probes.csv"]),
    ("verify", "verify_sandwich.json", ["verify_betas-sandwich.json"]),
    ("generate", "generate_snowflake.json", ["generated.csv", "generated.json"]),
]


def _run(tmp_path, cmd, cfg, *extra):
    out = tmp_path / cmd
    code = cli.run([cmd, "--config", str(CONFIGS / cfg), "--out", str(out), *extra])
    return code, out


def test_flatness_on_line_fixture_is_zero(tmp_path):
    code, out = _run(tmp_path, "flatness", "flatness_line.json")
    assert code == 0
    with open(out / "flatness.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert rows and all(float(r["beta"]) == 0.0 and float(r["beta_ctr"]) == 0.0 for r in rows)
    keys = [(int(r["point_index"]), float(r["scale"])) for r in rows]
    assert keys == sorted(keys)
    h = json.loads((out / "flatness.json").read_text())["config_hash"]
    assert all(r["config_hash"] == h for r in rows)


def test_qs_matches_golden_value(tmp_path):
    code, out = _run(tmp_path, "qs", "qs_radial.json")
    assert code == 0
    rec = json.loads((out / "qs.json").read_text())
    assert rec["H"] == pytest.approx(load_fixture("radial_qc_08")["golden_H"], rel=1e-12)
    assert rec["dini"][0]["value"] > 0


def test_verify_sandwich_passes(tmp_path, capsys):
    code, out = _run(tmp_path, "verify", "verify_sandwich.json")
    assert code == 0
    assert "PASS betas-sandwich" in capsys.readouterr().out
    rec = json.loads((out / "verify_betas-sandwich.json").read_text())
    assert rec["violations"] == 0 and rec["instances"] > 0


def test_verify_failure_exits_one(tmp_path, monkeypatch, capsys):
    def failing(params, seed):
        return SuiteResult("broken", [IneqReport("x", 2.0, 1.0, -1.0)], 1, 1e-9)
    monkeypatch.setitem(suites.SUITES, "broken", failing)
    code, _ = _run(tmp_path, "verify", "verify_sandwich.json", "--suite", "broken")
    assert code == 1
    assert "FAIL broken" in capsys.readouterr().err


@pytest.mark.parametrize("args", [
    ["flatness", "--config", "/nonexistent.json"],
    ["verify", "--config", str(CONFIGS / "verify_sandwich.json"), "--suite", "nope"],
    ["qs", "--config", str(CONFIGS / "flatness_line.json")],
    ["extend", "--config", str(CONFIGS / "extend_small.json"), "--seed", "-1"],
])
def test_bad_input_exits_two(tmp_path, args, capsys):
    assert cli.run(args + ["--out", str(tmp_path)]) == 2
    assert "error" in capsys.readouterr().err


def test_bad_json_and_sections(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert cli.run(["generate", "--config", str(bad), "--out", str(tmp_path)]) == 2
    bad.write_text(json.dumps({"wrong": {}}))
    assert cli.run(["generate", "--config", str(bad), "--out", str(tmp_path)]) == 2


def test_seed_override_changes_hash(tmp_path):
    _, a = _run(tmp_path / "a", "generate", "generate_snowflake.json")
    _, b = _run(tmp_path / "b", "generate", "generate_snowflake.json", "--seed", "5")
    ha = json.loads((a / "generated.json").read_text())["config_hash"]
    hb = json.loads((b / "generated.json").read_text())["config_hash"]
    assert ha != hb


@pytest.mark.parametrize("cmd,cfg,files", RUNS)
def test_repeated_runs_are_byte_identical(tmp_path, cmd, cfg, files):
    code1, out1 = _run(tmp_path / "1", cmd, cfg)
    code2, out2 = _run(tmp_path / "2", cmd, cfg)
    assert code1 == code2 == 0
    for name in files:
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "quasiflat", "generate", "--config",
                           str(CONFIGS / "generate_snowflake.json"), "--out", str(tmp_path)],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert (tmp_path / "generated.csv").read_text().startswith("x0,x1,config_hash")
