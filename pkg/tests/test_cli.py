"""CLI subcommands and exit codes."""

import json

import pytest

from cavityprobe.cli import EXIT_CONFIG, EXIT_IO, EXIT_NUMERIC, EXIT_OK, main


CONFIG_TEXT = """\
name: cli-test
seed: 3
state: {kind: coherent, dim: 32, alpha: 2.0}
protocol: {transition: one_photon, entry: excited}
grid: {t_end: 120.0, points: 2401}
transforms:
  - {moment: adagger}
"""


@pytest.fixture
def config_path(tmp_path):
    path = tmp_path / "config.yaml"
    path.write_text(CONFIG_TEXT)
    return path


def test_check_accepts_valid_config(config_path, capsys):
    assert main(["check", "--config", str(config_path)]) == EXIT_OK
    out = capsys.readouterr().out
    assert "config OK" in out
    assert "alpha" in out


def test_check_rejects_invalid_config(tmp_path, capsys):
    path = tmp_path / "bad.yaml"
    path.write_text(CONFIG_TEXT + "unknown_key: 1\n")
    assert main(["check", "--config", str(path)]) == EXIT_CONFIG
    assert "config error" in capsys.readouterr().err


def test_check_rejects_unparsable_yaml(tmp_path, capsys):
    path = tmp_path / "broken.yaml"
    path.write_text("state: [unclosed\n")
    assert main(["check", "--config", str(path)]) == EXIT_CONFIG
    assert "config error" in capsys.readouterr().err


def test_missing_config_file_is_io_error(tmp_path, capsys):
    assert main(["check", "--config", str(tmp_path / "nope.yaml")]) == EXIT_IO
    assert main(["run", "--config", str(tmp_path / "nope.yaml"), "--out", str(tmp_path)]) == EXIT_IO


def test_usage_errors_exit_2(capsys):
    assert main([]) == 2
    assert main(["run", "--config"]) == 2
    assert main(["frobnicate"]) == 2


def test_run_writes_outputs(config_path, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["run", "--config", str(config_path), "--out", str(out)]) == EXIT_OK
    text = capsys.readouterr().out
    assert "adagger:" in text
    assert (out / "result.json").exists()
    assert (out / "signal_one_photon.csv").exists()
    doc = json.loads((out / "result.json").read_text())
    assert doc["name"] == "cli-test"
    assert doc["estimates"][0]["moment"] == "adagger"


def test_run_format_json_only(config_path, tmp_path):
    out = tmp_path / "json-only"
    assert main(
        ["run", "--config", str(config_path), "--out", str(out), "--format", "json"]
    ) == EXIT_OK
    assert (out / "result.json").exists()
    assert not (out / "signal_one_photon.csv").exists()


def test_run_figures_flag(config_path, tmp_path):
    out = tmp_path / "figs"
    assert main(
        [
            "run",
            "--config",
            str(config_path),
            "--out",
            str(out),
            "--format",
            "csv",
            "--figures",
        ]
    ) == EXIT_OK
    png = out / "signal_one_photon.png"
    assert png.exists() and png.stat().st_size > 0


def test_run_seed_override_controls_noise(tmp_path, capsys):
    path = tmp_path / "noisy.yaml"
    path.write_text(CONFIG_TEXT + "noise: {shots_per_point: 200}\n")
    outs = []
    for name, seed in (("a", "17"), ("b", "17"), ("c", "23")):
        out = tmp_path / name
        assert main(
            ["run", "--config", str(path), "--out", str(out), "--seed", seed, "--format", "json"]
        ) == EXIT_OK
        outs.append((out / "result.json").read_bytes())
    assert outs[0] == outs[1]
    assert outs[0] != outs[2]


def test_calibrate_fails_dispersion_gate(capsys):
    code = main(["calibrate", "--dim", "96"])
    out = capsys.readouterr().out
    assert code == EXIT_NUMERIC
    assert "dispersion" in out
    assert "FAILED" in out


def test_calibrate_writes_record(tmp_path, capsys):
    record_path = tmp_path / "k2.json"
    code = main(["calibrate", "--dim", "96", "--out", str(record_path)])
    assert code == EXIT_NUMERIC
    doc = json.loads(record_path.read_text())
    assert set(doc) >= {"k2", "dispersion", "ratios", "state_labels", "candidates"}
    assert len(doc["ratios"]) == 3
    assert doc["dispersion"] > 0.05


def test_identities_pass(capsys):
    assert main(["identities", "--pairs", "2", "--seed", "1"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "all identity checks passed" in out
