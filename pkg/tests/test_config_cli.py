import json
import subprocess
import sys
from pathlib import Path

import pytest

from tfim.cli import main
from tfim.config import ConfigError, load_config, parse_config_json, parse_config_text

TEXT_CONFIG = """
# comment line
kind = correlation
d = 1
n = 1
beta = 1.0
bc_space = f
bc_time = p
lam = 0.5, 1.0
delta = 1.0
n_samples = 200
n_chains = 2
seed = 7
point_site = 1
point_time = 0.0
"""


def test_parse_text_config():
    cfg = parse_config_text(TEXT_CONFIG)
    assert cfg.kind == "correlation"
    assert cfg.lam_grid == [0.5, 1.0]
    assert cfg.point_site == (1,)
    assert cfg.n_chains == 2


def test_parse_json_config():
    payload = {"kind": "correlation", "beta": 1.0, "lam_grid": [1.0],
               "seed": 3, "n_samples": 100, "point_site": [1]}
    cfg = parse_config_json(json.dumps(payload))
    assert cfg.lam_grid == [1.0]
    assert cfg.point_site == (1,)


@pytest.mark.parametrize("mutation,message", [
    ({"lam_grid": []}, "empty coupling grid"),
    ({"lam_grid": [1.0, 0.5]}, "strictly increasing"),
    ({"seed": None}, "seed"),
    ({"kind": "nonsense"}, "unknown experiment kind"),
])
def test_validation_errors(mutation, message):
    payload = {"kind": "correlation", "beta": 1.0, "lam_grid": [1.0],
               "seed": 3, "point_site": [1]}
    payload.update(mutation)
    with pytest.raises(ConfigError, match=message):
        parse_config_json(json.dumps(payload))


def test_unknown_key_rejected():
    with pytest.raises(ConfigError, match="unknown config key"):
        parse_config_text("kind = correlation\nwibble = 3\nseed = 1\nlam = 1.0\nbeta=1")


def _write_config(tmp_path, text=TEXT_CONFIG, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_cli_run_produces_deterministic_csv(tmp_path):
    cfg = _write_config(tmp_path)
    out1 = tmp_path / "o1"
    out2 = tmp_path / "o2"
    assert main(["run", "--config", str(cfg), "--out", str(out1)]) == 0
    assert main(["run", "--config", str(cfg), "--out", str(out2), "--workers", "2"]) == 0
    a = (out1 / "run-correlation.csv").read_bytes()
    b = (out2 / "run-correlation.csv").read_bytes()
    assert a == b
    header = a.decode().splitlines()[0]
    assert header.startswith("kind,method,d,n,r,bc_space,bc_time,lam,delta,estimate")


def test_cli_bad_config_exits_two(tmp_path):
    cfg = _write_config(tmp_path, TEXT_CONFIG.replace("lam = 0.5, 1.0", "lam ="))
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2


def test_cli_missing_file_exits_two(tmp_path):
    assert main(["run", "--config", str(tmp_path / "nope.cfg"),
                 "--out", str(tmp_path / "o")]) == 2


def test_cli_seed_override(tmp_path):
    cfg = _write_config(tmp_path)
    out1 = tmp_path / "s1"
    out2 = tmp_path / "s2"
    main(["run", "--config", str(cfg), "--out", str(out1), "--seed", "99"])
    main(["run", "--config", str(cfg), "--out", str(out2), "--seed", "100"])
    a = (out1 / "run-correlation.csv").read_text()
    b = (out2 / "run-correlation.csv").read_text()
    assert a != b


def test_cli_switching_verify_exit_zero(tmp_path):
    cfg = _write_config(tmp_path, """
kind = switching-verify
d = 1
n = 1
beta = 1.0
bc_space = w
bc_time = p
lam = 1.0
delta = 1.0
n_samples = 2000
seed = 5
point_site = 1
point_time = 0.25
""", name="sw.cfg")
    out = tmp_path / "sw"
    assert main(["run", "--config", str(cfg), "--out", str(out)]) == 0
    rows = json.loads((out / "run-switching-verify.json").read_text())["rows"]
    exact = [r for r in rows if r["mode"] == "exact"]
    assert exact and all(r["gap"] <= 1e-12 for r in exact)


def test_cli_json_config_and_entry_point(tmp_path):
    payload = {"kind": "correlation", "beta": 1.0, "lam_grid": [1.0], "seed": 11,
               "n_samples": 100, "n_chains": 1, "point_site": [1],
               "point_time": 0.0, "d": 1, "n": 1}
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps(payload))
    out = tmp_path / "oj"
    r = subprocess.run([sys.executable, "-m", "tfim.cli", "run", "--config",
                        str(cfg), "--out", str(out), "--format", "json"],
                       capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
    data = json.loads((out / "run-correlation.json").read_text())
    assert data["ok"] is True
    methods = {row["method"] for row in data["rows"]}
    assert {"spin", "random-parity", "oracle"} <= methods
