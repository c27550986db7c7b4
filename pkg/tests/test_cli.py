from __future__ import annotations

import io
import json
import subprocess
import sys

from test_orchestrator import small_config

from shelora.cli import main
from shelora.orchestrator import ExperimentConfig


def _config_file(tmp_path, **changes):
    path = tmp_path / "cfg.json"
    path.write_text(small_config(**changes).to_json())
    return str(path)


def test_default_config_round_trips():
    out = io.StringIO()
    assert main(["default-config"], out=out) == 0
    assert ExperimentConfig.from_json(out.getvalue()) == ExperimentConfig()


def test_run_writes_reports(tmp_path):
    cfg = _config_file(tmp_path)
    out = io.StringIO()
    code = main(["run", "--config", cfg, "--rounds", "2", "--seed", "3", "--out", str(tmp_path / "o")], out=out)
    assert code == 0 and "2 rounds" in out.getvalue()
    lines = (tmp_path / "o" / "reports.jsonl").read_text().splitlines()
    assert len(lines) == 2
    saved = json.loads((tmp_path / "o" / "config.json").read_text())
    assert saved["seed"] == 3 and saved["rounds"] == 2


def test_negotiate_only(tmp_path):
    out = io.StringIO()
    assert main(["negotiate-only", "--config", _config_file(tmp_path)], out=out) == 0
    doc = json.loads(out.getvalue())
    assert doc["k"] == len(doc["res"]) == 12
    assert sorted(doc["perm"]) == list(range(64))
    assert doc["perm"][-12:] == doc["res"]


def test_metrics_csv():
    out = io.StringIO()
    assert main(["metrics", "--curve", "max", "--gammas", "0,0.5,1", "--rows", "8", "--cols", "16", "--heavy", "2"], out=out) == 0
    rows = out.getvalue().splitlines()
    assert rows[0] == "gamma,mi_bits" and len(rows) == 4
    assert abs(float(rows[-1].split(",")[1])) < 1e-9


def test_bad_inputs_exit_two(tmp_path, capsys):
    assert main(["run", "--config", str(tmp_path / "missing.json")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text('{"rounds": 2, "colour": 1}')
    assert main(["negotiate-only", "--config", str(bad)]) == 2
    assert main(["metrics", "--curve", "max", "--gammas", "0.5,0.1"]) == 2
    assert main(["metrics", "--curve", "max", "--gammas", "x"]) == 2
    assert "error:" in capsys.readouterr().err


def test_module_entry_point():
    done = subprocess.run([sys.executable, "-m", "shelora.cli", "default-config"], capture_output=True, text=True, check=True)
    assert json.loads(done.stdout)["n_clients"] == 50
