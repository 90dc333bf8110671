"""
Tests for the qtomo command line.
"""

import json

import pytest
from typer.testing import CliRunner

from qtomo import __version__
from qtomo.cli.main import _capacity, _n_grid, app
from qtomo.core.errors import ConfigError
from tests.conftest import HETEROGENEOUS_STAR

runner = CliRunner()


def test_version():
    result = runner.invoke(app, ["version"])
    assert result.exit_code == 0
    assert f"Qtomo version {__version__}" in result.output


def test_capacity_parsing():
    assert _capacity(None) is None
    assert _capacity("minimal") == "minimal"
    assert _capacity("5") == 5
    assert _capacity("3,6") == [3, 6]
    assert _n_grid("100,1000") == [100, 1000]
    assert _n_grid(None) is None


def test_optimize_writes_bundle(tmp_path, star_file):
    network = star_file(HETEROGENEOUS_STAR, "star10")
    out = tmp_path / "bundle"

    result = runner.invoke(app, ["optimize", str(network), "-m", "2", "--objective", "QMF", "-o", str(out)])

    assert result.exit_code == 0, result.output
    assert "optimize report written" in result.output
    assert (out / "plan_QMF_m2.json").exists()
    assert json.loads((out / "metrics.json").read_text(encoding="utf-8"))["kind"] == "optimize"


def test_library_error_is_json(tmp_path):
    """Library errors exit with code 2 and a JSON document naming the error class."""
    network = tmp_path / "broken.yaml"
    network.write_text("nodes: [a, b]\nlinks: [{a: a, b: c, w: 0.9}]\n", encoding="utf-8")

    result = runner.invoke(app, ["star-fast", str(network), "-m", "1", "-o", str(tmp_path / "out")])

    assert result.exit_code == 2
    document = json.loads(result.output.strip().splitlines()[-1])
    assert document["error"] == "UnknownNode"
    assert "message" in document and "context" in document


def test_mse_study_requires_seed(star_file):
    result = runner.invoke(app, ["mse-study", str(star_file([0.9, 0.8])), "-m", "1"])
    assert result.exit_code != 0


def test_plot_data_missing_bundle(tmp_path):
    result = runner.invoke(app, ["plot-data", str(tmp_path)])
    assert result.exit_code == 2
    assert "MissingReport" in result.output


def test_run_scenario_file(tmp_path, star_file):
    star_file([0.9, 0.9, 0.8], name="star4")
    scenario = tmp_path / "fast.yaml"
    scenario.write_text(
        "network: star4.yaml\ntask: star-fast\nmonitors: 2\noutput_dir: " + str(tmp_path / "fast") + "\n",
        encoding="utf-8",
    )

    result = runner.invoke(app, ["run", str(scenario)])

    assert result.exit_code == 0, result.output
    assert (tmp_path / "fast" / "plan_star-fast_m2.json").exists()


def test_bad_capacity_is_config_error(tmp_path, star_file):
    network = star_file(HETEROGENEOUS_STAR, "star10")

    with pytest.raises(ConfigError):
        _capacity("three")

    result = runner.invoke(app, ["star-fast", str(network), "-m", "2", "--capacity", "three", "-o", str(tmp_path / "out")])

    assert result.exit_code == 2
    document = json.loads(result.output.strip().splitlines()[-1])
    assert document["error"] == "ConfigError"
    assert document["context"] == {"option": "capacity", "value": "three"}
