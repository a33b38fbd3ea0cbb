# test_cli.py
"""
End-to-end runs of the command line on the bundled Hamiltonian.
"""
import json

import pandas as pd
import pytest

import cli
from cli import EXIT_ESTIMATION, EXIT_SIMULATION, EXIT_VALIDATION, exit_code_for, main
from errors import ConfigError, DegenerateRatio, DimensionTooLarge, HamiltonianParseError


def write_config(tmp_path, text: str) -> str:
    path = tmp_path / "run.cfg"
    path.write_text(text, encoding="utf-8")
    return str(path)


def only_run_directory(root, command: str):
    (directory,) = root.glob(f"{command}_*")
    return directory


def read_manifest(directory) -> dict:
    return json.loads((directory / "manifest.json").read_text(encoding="utf-8"))


def test_validate_bundled_hamiltonian(capsys):
    assert main(["validate"]) == 0
    out = capsys.readouterr().out
    assert any(line.split() == ["Terms:", "41"] for line in out.splitlines())
    assert "All checks passed" in out


def test_validate_missing_file():
    assert main(["validate", "no_such_hamiltonian.txt"]) == EXIT_VALIDATION


def test_validate_fails_when_a_symmetry_is_broken(tmp_path, capsys):
    path = tmp_path / "broken.txt"
    path.write_text("0.1\n0.5 XI\n0.3 ZZ\n", encoding="utf-8")
    assert main(["validate", str(path)]) == EXIT_VALIDATION
    assert "Validation failed" in capsys.readouterr().out


def test_validate_fails_when_hartree_fock_is_below_the_ground_state(monkeypatch, capsys):
    monkeypatch.setattr(cli, "exact_ground_state", lambda *args, **kwargs: (0.0, None))
    assert main(["validate"]) == EXIT_VALIDATION
    out = capsys.readouterr().out
    assert "E_HF is not an upper bound to E_GS" in out
    assert "hartree-fock upper bound" in out


def test_bad_config_key(tmp_path):
    config = write_config(tmp_path, "n_circuits = 4\nwobble = 1\n")
    assert main(["run", "--config", config, "--out", str(tmp_path)]) == EXIT_VALIDATION


def test_infinite_shot_run(tmp_path):
    out = tmp_path / "runs"
    config = write_config(tmp_path, "n_circuits = 4\ninfinite_shots = true\n")
    assert main(["run", "--preset", "h3plus-quick", "--config", config, "--out", str(out)]) == 0

    directory = only_run_directory(out, "run")
    manifest = read_manifest(directory)
    assert manifest["status"] == "ok"
    assert manifest["failed_stage"] is None
    assert manifest["config"]["n_circuits"] == 4
    assert manifest["headline"]["mode"] == "hf"
    for name in ("ensemble.json", "ensemble_stats.csv", "expectations.json", "rho.csv", "estimates.csv",
                 "curve_raw.csv", "curve_parity.csv", "curve_hf.csv"):
        assert (directory / name).exists()
        assert name in manifest["artifacts"]
    assert not (directory / "shots.jsonl").exists()

    estimates = pd.read_csv(directory / "estimates.csv")
    assert list(estimates["mode"]) == ["raw", "parity", "hf"]
    assert len(pd.read_csv(directory / "curve_raw.csv")) == 4


def test_shot_run_then_stats(tmp_path):
    out = tmp_path / "runs"
    config = write_config(tmp_path, "n_circuits = 4\nshots = 50\n")
    argv = ["run", "--preset", "h3plus-quick", "--config", config, "--out", str(out), "--repetitions", "2"]
    assert main(argv) == 0

    directory = only_run_directory(out, "run")
    manifest = read_manifest(directory)
    assert manifest["status"] == "ok"
    assert set(manifest["repetitions"]) == {"raw", "parity", "hf"}
    shots = directory / "shots.jsonl"
    assert sum(1 for _ in shots.open(encoding="utf-8")) == 4 * 2 * 50 * 2
    stats = pd.read_csv(directory / "measurement_stats.csv")
    assert (stats["total_zeros"] + stats["total_ones"] == 800).all()

    stats_root = tmp_path / "stats"
    assert main(["stats", str(shots), "--out", str(stats_root), "--mode", "parity"]) == 0
    selected = pd.read_csv(only_run_directory(stats_root, "stats") / "measurement_stats.csv")
    assert len(selected) == 7
    assert (selected["total_zeros"] + selected["total_ones"] <= 800).all()


def test_same_settings_reuse_the_run_directory(tmp_path):
    config = write_config(tmp_path, "n_circuits = 2\ninfinite_shots = true\n")
    argv = ["run", "--preset", "h3plus-quick", "--config", config, "--out", str(tmp_path / "runs")]
    assert main(argv) == 0
    assert main(argv + ["--jobs", "1"]) == 0
    only_run_directory(tmp_path / "runs", "run")


def test_failed_stage_is_recorded(tmp_path):
    out = tmp_path / "runs"
    config = write_config(tmp_path, "n_circuits = 2\nhf_bits = 1,1,0,0\n")
    assert main(["run", "--preset", "h3plus-quick", "--config", config, "--out", str(out)]) == EXIT_VALIDATION
    manifest = read_manifest(only_run_directory(out, "run"))
    assert manifest["status"] == "failed"
    assert manifest["failed_stage"] == "load"
    assert "MismatchedQubitCount" in manifest["error"]


def test_shift_optimize(tmp_path):
    assert main(["shift-optimize", "--out", str(tmp_path)]) == 0
    directory = only_run_directory(tmp_path, "shift")
    shift = json.loads((directory / "shift.json").read_text(encoding="utf-8"))
    assert shift["mu_i_after"] <= shift["mu_i_before"] + 1e-9
    assert shift["sector"] == [1, 1, 2]
    assert (directory / "shifted_hamiltonian.txt").read_text(encoding="utf-8").startswith("#")


@pytest.mark.slow
def test_baselines(tmp_path):
    assert main(["baselines", "--out", str(tmp_path), "--monte-carlo-shots", "1000"]) == 0
    report = json.loads((only_run_directory(tmp_path, "baselines") / "baselines.json").read_text(encoding="utf-8"))
    assert report["trotter_full"]["tqg"] == 1336
    assert report["direct_sampling"]["monte_carlo"]["shots"] == 1000


def test_exit_codes():
    assert exit_code_for(HamiltonianParseError("bad", 3)) == EXIT_VALIDATION
    assert exit_code_for(ConfigError("bad")) == EXIT_VALIDATION
    assert exit_code_for(DimensionTooLarge("big")) == EXIT_SIMULATION
    assert exit_code_for(DegenerateRatio("flat")) == EXIT_ESTIMATION
    assert exit_code_for(RuntimeError("other")) == 1
