import json
import math

import pytest
import yaml
from hypothesis import given, settings, strategies as st

from renflow.cli import main, parse_model
from renflow.config import DEFAULTS, ExperimentConfig
from renflow.errors import ConfigError


def run(tmp_path, *argv):
    code = main([*argv, "--out", str(tmp_path)])
    csvs = sorted(p for p in tmp_path.glob("*.csv"))
    manifests = sorted(tmp_path.glob("*_manifest.json"))
    return code, csvs, manifests


def test_renlen_example(tmp_path):
    code, csvs, manifests = run(tmp_path, "renlen", "--model", "disk", "--p", "0",
                                "--q", "3.14159265", "--eps0", "0.02", "--levels", "5")
    assert code == 0
    lines = csvs[0].read_text().splitlines()
    assert lines[0] == "model,p,q,winding,L,err,eps0,levels"
    assert float(lines[1].split(",")[4]) == pytest.approx(1.386294, abs=1e-6)
    man = json.loads(manifests[0].read_text())
    assert man["config_hash"] in csvs[0].name
    assert man["config"]["seed"] == 0
    assert "tolerances" in man["defaults"]


def test_theta_identity_example(tmp_path):
    code, csvs, _ = run(tmp_path, "theta", "--g1", "disk", "--g2", "disk", "--eps", "0.02",
                        "--ntheta", "16", "--samples", "100000", "--seed", "7")
    assert code == 0
    profile = [p for p in csvs if not p.name.endswith("_report.csv")][0]
    rows = [l.split(",") for l in profile.read_text().splitlines()[1:]]
    assert len(rows) == 16
    for _, th, val, err, n in rows:
        assert abs(float(val) - float(th)) <= 3 * float(err) + 1e-9
        assert int(n) == 100000
    report = json.loads(next(tmp_path.glob("*_report.json")).read_text())
    assert report["sup_dev"] <= 1e-9


def test_outputs_are_deterministic(tmp_path):
    argv = ["theta", "--g1", "disk", "--g2", "perturbed_disk", "--eps", "0.05", "--ntheta", "4",
            "--samples", "300", "--seed", "3"]
    sums = []
    for sub in ("a", "b"):
        out = tmp_path / sub
        assert main([*argv, "--out", str(out)]) == 0
        man = json.loads(next(out.glob("*_manifest.json")).read_text())
        sums.append(man["checksums"])
    assert sums[0] == sums[1]


def test_config_file_and_flags(tmp_path):
    cfg = ExperimentConfig("escape", [{"kind": "cylinder", "neck_length": 1.0}],
                           {"eps": 0.1, "samples": 2000, "tmax": 4.0}, seed=5)
    path = tmp_path / "escape.yaml"
    path.write_text(cfg.to_yaml())
    code, csvs, manifests = run(tmp_path, "escape", "--config", str(path), "--samples", "3000")
    assert code == 0
    man = json.loads(manifests[0].read_text())
    assert man["config"]["params"]["samples"] == 3000
    assert man["config"]["seed"] == 5
    text = csvs[0].read_text()
    assert text.startswith("eps,T,V,mc_err\n")
    assert "Q,window_lo,window_hi" in text


def test_config_errors_exit_2(tmp_path, capsys):
    assert main(["renlen", "--model", "sphere", "--out", str(tmp_path)]) == 2
    assert main(["renlen", "--model", "disk", "--p", "1", "--q", "1", "--out", str(tmp_path)]) == 2
    assert main(["renlen", "--config", str(tmp_path / "missing.yaml")]) == 2
    bad = tmp_path / "bad.yaml"
    bad.write_text("command: renlen\nmodels: [{kind: disk}]\nparams: {bogus: 1}\n")
    assert main(["renlen", "--config", str(bad)]) == 2
    assert "configuration error" in capsys.readouterr().err


def test_numerical_failure_exit_3(tmp_path, capsys):
    # a nearly flat incoming ray on the truncated half-plane never returns in time
    assert main(["scatter", "--model", "half_plane", "--p", "0", "--eta", "1e-4",
                 "--out", str(tmp_path)]) == 3
    assert "numerical failure" in capsys.readouterr().err


def test_scatter_and_deviate(tmp_path):
    code, csvs, _ = run(tmp_path, "scatter", "--model", "disk", "--p", "0", "1", "--eta", "0", "0")
    assert code == 0
    rows = csvs[0].read_text().splitlines()
    assert rows[0] == "model,p,eta,exit_y,exit_eta,exit_end"
    assert len(rows) == 3
    code, csvs, _ = run(tmp_path / "d", "deviate", "--g1", "disk", "--g2", "disk", "--theta", "1.0")
    assert code == 0
    row = csvs[0].read_text().splitlines()[1].split(",")
    assert float(row[-1]) == pytest.approx(1.0, abs=1e-6)


def test_verify_subset(tmp_path, capsys):
    assert main(["verify", "--only", "12", "--out", str(tmp_path)]) == 0
    assert "PASS 12" in capsys.readouterr().out


def test_parse_model():
    assert parse_model("disk") == {"kind": "disk"}
    d = parse_model("cylinder:neck_length=2")
    assert d["kind"] == "cylinder" and d["neck_length"] == 2.0
    d = parse_model("perturbed_disk:amplitude=0.1", "constant:0.5")
    assert d["bump"]["amplitude"] == 0.1 and d["bdf_shift"] == "constant:0.5"


def test_config_validation():
    with pytest.raises(ConfigError):
        ExperimentConfig("renlen", [], {})
    with pytest.raises(ConfigError):
        ExperimentConfig("renlen", [{"kind": "disk"}], {"levels": 2.5})
    with pytest.raises(ConfigError):
        ExperimentConfig("nope", [], {})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_yaml("command: [unclosed")


params_strategy = st.fixed_dictionaries({}, optional={
    "eps": st.floats(0.005, 0.1),
    "ntheta": st.integers(1, 64),
    "samples": st.integers(1, 10 ** 6),
    "hinge": st.floats(0.0, math.pi),
})


@settings(max_examples=50)
@given(params_strategy, st.integers(0, 2 ** 31), st.sampled_from(["disk", "perturbed_disk"]))
def test_config_round_trip(params, seed, kind):
    cfg = ExperimentConfig("theta", [{"kind": "disk"}, {"kind": kind}], params, seed, "out")
    again = ExperimentConfig.from_yaml(cfg.to_yaml())
    assert again.to_dict() == cfg.to_dict()
    assert again.config_hash() == cfg.config_hash()
    assert yaml.safe_load(again.to_yaml()) == yaml.safe_load(cfg.to_yaml())


def test_defaults_cover_every_command():
    for command, table in DEFAULTS.items():
        assert isinstance(table, dict), command


def test_shipped_configs_validate():
    from pathlib import Path
    root = Path(__file__).resolve().parent.parent / "configs"
    files = sorted(root.glob("*.yaml"))
    assert files
    for path in files:
        cfg = ExperimentConfig.from_yaml(path.read_text())
        cfg.build_models()
