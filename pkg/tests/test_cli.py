import json

import pytest

from eeg.cli import main

from conftest import FAST


@pytest.fixture
def cfg_file(tmp_path):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(FAST))
    return p


def test_cli_run(cfg_file, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["run", "--config", str(cfg_file), "--out-dir", str(out), "--seed", "1"]) == 0
    assert '"auc"' in capsys.readouterr().out
    cfg = json.loads((out / "config.json").read_text())
    assert cfg["seed"] == 1


def test_cli_set_override_and_config_error(cfg_file, capsys):
    assert main(["run", "--config", str(cfg_file), "--set", "q_grid=[0.2, 1.0]"]) == 1
    assert "[config]" in capsys.readouterr().err


def test_cli_stage_error(cfg_file, tmp_path, capsys):
    code = main(["run", "--config", str(cfg_file), "--data-source", "csv",
                 "--csv-path", str(tmp_path / "missing.csv"), "--out-dir", str(tmp_path / "o")])
    assert code == 1
    assert "[data]" in capsys.readouterr().err


def test_cli_gen_data_then_csv_run(cfg_file, tmp_path):
    data = tmp_path / "syn.csv"
    assert main(["gen-data", "--out", str(data), "--n", "300", "--seed", "2"]) == 0
    assert data.read_text().splitlines()[0] == "x1,x2,y"
    assert main(["run", "--config", str(cfg_file), "--data-source", "csv", "--csv-path", str(data),
                 "--out-dir", str(tmp_path / "o")]) == 0


def test_cli_verify(capsys):
    assert main(["verify"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 6 and all(l.startswith("PASS") for l in lines)


def test_cli_replicate_and_ablations(cfg_file, tmp_path, capsys):
    out = tmp_path / "r"
    assert main(["replicate", "--config", str(cfg_file), "--out-dir", str(out)]) == 0
    assert (out / "replicate_report.json").exists()
    assert main(["ablate-features", "--config", str(cfg_file), "--out-dir", str(out),
                 "--ablation-feature-sets", '["x", "x,d_mse"]']) == 0
    assert main(["ablate-components", "--config", str(cfg_file), "--out-dir", str(out)]) == 0
    assert (out / "ablation_components.json").exists()


def test_cli_requires_command():
    with pytest.raises(SystemExit):
        main([])
