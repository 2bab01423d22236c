import subprocess
import sys

import yaml

from fedcontinual.cli import main
from fedcontinual.harness import ENV_OUTPUT_DIR, ENV_THREADS

from .conftest import tiny_raw_config


def write_config(path, **overrides):
    path.write_text(yaml.safe_dump(tiny_raw_config(**overrides)))
    return path


def test_run_and_report(tmp_path):
    cfg = write_config(tmp_path / "c.yaml")
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "out")]) == 0
    assert (tmp_path / "out" / "aggregate.csv").exists()
    assert main(["report", "--results", str(tmp_path / "out"), "--scale", "1"]) == 0
    assert "RMSE x 1" in (tmp_path / "out" / "summary.txt").read_text()


def test_config_errors_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    raw = tiny_raw_config()
    raw.pop("methods")
    bad.write_text(yaml.safe_dump(raw))
    assert main(["run", "--config", str(bad)]) == 2
    assert "methods" in capsys.readouterr().err
    assert main(["run", "--config", str(tmp_path / "missing.yaml")]) == 2
    cfg = write_config(tmp_path / "c.yaml")
    assert main(["sweep", "--config", str(cfg), "--param", "bogus", "--values", "1"]) == 2


def test_env_overrides(tmp_path, monkeypatch):
    cfg = write_config(tmp_path / "c.yaml")
    monkeypatch.setenv(ENV_OUTPUT_DIR, str(tmp_path / "env_out"))
    monkeypatch.setenv(ENV_THREADS, "2")
    assert main(["run", "--config", str(cfg)]) == 0
    saved = yaml.safe_load((tmp_path / "env_out" / "config.yaml").read_text())
    assert saved["threads"] == 2


def test_sweep_command(tmp_path):
    cfg = write_config(tmp_path / "c.yaml", methods=["Replay"])
    out = tmp_path / "sw"
    assert main(["sweep", "--config", str(cfg), "--param", "replay_ratio",
                 "--values", "0.1,0.3", "--out", str(out)]) == 0
    assert len((out / "sweep.csv").read_text().splitlines()) == 3


def test_synth_command(tmp_path):
    cfg = write_config(tmp_path / "c.yaml")
    assert main(["synth", "--config", str(cfg), "--out", str(tmp_path / "csv")]) == 0
    assert len(list((tmp_path / "csv").glob("*.csv"))) == 2


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "fedcontinual", "--help"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "run" in proc.stdout


def test_synth_output_feeds_csv_runs(tmp_path):
    cfg = write_config(tmp_path / "c.yaml")
    main(["synth", "--config", str(cfg), "--out", str(tmp_path / "csv")])
    raw = tiny_raw_config()
    raw["data"] = {"source": "csv", "csv_dir": "csv", "features": ["TEMP", "DEWP"]}
    (tmp_path / "csv.yaml").write_text(yaml.safe_dump(raw))
    assert main(["run", "--config", str(tmp_path / "csv.yaml"),
                 "--out", str(tmp_path / "o")]) == 0
    assert len(list((tmp_path / "o").rglob("performance_matrix.csv"))) == 1
