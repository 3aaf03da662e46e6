"""Tests for the CLI interface."""

import csv
import json
from pathlib import Path

import pytest
from typer.testing import CliRunner

from linclt.cli.config import DEFAULT_OUT_DIR, OUT_DIR_ENV, load_config, resolve_output_dir
from linclt.cli.main import EXIT_CERTIFICATION, EXIT_CHECK_FAILED, EXIT_CONFIG, app

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"

SMALL_CLT = {
    "experiment": "clt",
    "model": {"kind": "iid", "distribution": "normal"},
    "weights": {"kind": "partial-sum-delta"},
    "n": 64,
    "replicates": 400,
    "seed": 3,
    "target": {"kind": "normal", "variance": 1.0},
    "tolerances": {"ks_threshold": 0.1},
}


@pytest.fixture
def cli_runner():
    """Create a CLI runner for testing."""
    return CliRunner()


@pytest.mark.unit
def test_app_callback(cli_runner):
    """Test the app callback function."""
    result = cli_runner.invoke(app, ["--help"])
    assert result.exit_code == 0
    assert "list-models" in result.stdout
    assert "run" in result.stdout


@pytest.mark.unit
def test_list_models(cli_runner):
    """The catalog names every model kind, map and psi sequence."""
    result = cli_runner.invoke(app, ["list-models"])
    assert result.exit_code == 0
    for name in ("causal-linear", "nonergodic-scale", "bernoulli-shift", "inverse-log"):
        assert name in result.stdout
    assert "x^{-p}[1+log(2/x)]^{-a} sin(1/x)" in result.stdout


@pytest.mark.unit
class TestConfig:
    def test_unknown_field_rejected(self, write_config, cli_runner):
        """Unknown fields are rejected and named."""
        path = write_config({**SMALL_CLT, "replicate": 10})
        result = cli_runner.invoke(app, ["run", str(path)])
        assert result.exit_code == EXIT_CONFIG
        assert "replicate" in result.stdout

    def test_malformed_json(self, tmp_path, cli_runner):
        """Malformed JSON exits with the config error code."""
        path = tmp_path / "broken.json"
        path.write_text('{"experiment": "clt",', encoding="utf-8")
        result = cli_runner.invoke(app, ["run", str(path)])
        assert result.exit_code == EXIT_CONFIG

    def test_missing_file(self, tmp_path, cli_runner):
        """A missing config file exits with the config error code."""
        result = cli_runner.invoke(app, ["run", str(tmp_path / "absent.json")])
        assert result.exit_code == EXIT_CONFIG

    def test_required_fields(self, write_config, cli_runner):
        """Fields required by the experiment kind are enforced."""
        path = write_config({"experiment": "clt"})
        result = cli_runner.invoke(app, ["run", str(path)])
        assert result.exit_code == EXIT_CONFIG
        assert "model" in result.stdout

    def test_output_dir_precedence(self, write_config, tmp_path, monkeypatch):
        """Flag, environment and default output directories apply in that order."""
        config = load_config(write_config(SMALL_CLT))
        monkeypatch.delenv(OUT_DIR_ENV, raising=False)
        assert resolve_output_dir(config, None) == Path(DEFAULT_OUT_DIR)
        monkeypatch.setenv(OUT_DIR_ENV, str(tmp_path / "env"))
        assert resolve_output_dir(config, None) == tmp_path / "env"
        assert resolve_output_dir(config, tmp_path / "flag") == tmp_path / "flag"

    def test_lemma_and_ratio_defaults(self, write_config):
        """Block size stays fixed along a trace; the Monte Carlo ratio bound defaults to 3%."""
        document = {
            "experiment": "lemmas",
            "weights": {"kind": "geometric", "ratio": 0.5},
            "n_list": [64],
        }
        config = load_config(write_config(document))
        assert config.block_size == 8
        assert config.tolerances.variance_ratio_rel_tol == 0.03

    @pytest.mark.parametrize(
        "name, bound",
        [("exact-normal.json", 0.03), ("geometric-clt.json", 0.03), ("bernoulli-clt.json", 0.05)],
    )
    def test_shipped_variance_ratio_bounds(self, name, bound):
        """Every shipped CLT config that checks the variance ratio states its bound."""
        config = load_config(CONFIG_DIR / name)
        assert config.check_variance_ratio
        assert config.tolerances.variance_ratio_rel_tol == bound

    @pytest.mark.parametrize("path", sorted(CONFIG_DIR.glob("*.json")), ids=lambda p: p.stem)
    def test_shipped_configs_validate(self, path):
        """Every shipped config validates."""
        assert load_config(path).name


@pytest.mark.integration
class TestRun:
    def test_clt_run_writes_outputs(self, write_config, tmp_path, cli_runner):
        """A CLT run writes its report, replicates and metadata."""
        out = tmp_path / "out"
        result = cli_runner.invoke(app, ["run", str(write_config(SMALL_CLT)), "--out", str(out)])
        assert result.exit_code == 0, result.stdout
        assert "✅" in result.stdout
        report = json.loads((out / "report.json").read_text())
        assert report["passed"] is True
        assert report["report"]["clt"]["pass"] is True
        with (out / "replicates.csv").open() as handle:
            rows = list(csv.DictReader(handle))
        assert len(rows) == 400
        assert "runtime_ms" in json.loads((out / "metadata.json").read_text())

    def test_reports_are_deterministic_across_workers(self, write_config, tmp_path, cli_runner):
        """Replicate files are identical for any worker count."""
        path = write_config(SMALL_CLT)
        first, second = tmp_path / "a", tmp_path / "b"
        assert cli_runner.invoke(app, ["run", str(path), "-o", str(first)]).exit_code == 0
        result = cli_runner.invoke(app, ["run", str(path), "-o", str(second), "-w", "4"])
        assert result.exit_code == 0
        for name in ("report.json", "replicates.csv"):
            assert (first / name).read_bytes() == (second / name).read_bytes()

    def test_seed_override(self, write_config, tmp_path, cli_runner):
        """The seed flag changes the replicates."""
        path = write_config(SMALL_CLT)
        cli_runner.invoke(app, ["run", str(path), "-o", str(tmp_path / "a")])
        cli_runner.invoke(app, ["run", str(path), "-o", str(tmp_path / "b"), "--seed", "99"])
        a = (tmp_path / "a" / "replicates.csv").read_bytes()
        b = (tmp_path / "b" / "replicates.csv").read_bytes()
        assert a != b

    def test_failed_expectation_exits_one(self, write_config, tmp_path, cli_runner):
        """An unmet expected verdict exits with code 1."""
        path = write_config(
            {
                "experiment": "conditions",
                "model": {
                    "kind": "causal-linear",
                    "coefficients": {"kind": "geometric", "ratio": 0.5},
                },
                "expected_verdicts": {"eq4-projective": "violated"},
            }
        )
        result = cli_runner.invoke(app, ["run", str(path), "-o", str(tmp_path)])
        assert result.exit_code == EXIT_CHECK_FAILED
        assert "❌" in result.stdout

    def test_precondition_failure_exits_two(self, write_config, tmp_path, cli_runner):
        """An invalid shell exponent exits with code 2."""
        path = write_config(
            {"experiment": "conditions", "map": {"name": "linear"}, "shell_t": 1.0, "bit_cap": 4}
        )
        result = cli_runner.invoke(app, ["run", str(path), "-o", str(tmp_path)])
        assert result.exit_code == EXIT_CONFIG

    def test_certification_failure_exits_three(self, write_config, tmp_path, cli_runner):
        """Sampling past the materialized counterexample exits with code 3."""
        document = {
            **SMALL_CLT,
            "model": {
                "kind": "causal-linear",
                "coefficients": {"kind": "counterexample", "psi": "zero", "cutoff": 100},
            },
            "replicates": 3,
        }
        result = cli_runner.invoke(app, ["run", str(write_config(document)), "-o", str(tmp_path)])
        assert result.exit_code == EXIT_CERTIFICATION
        assert "replicate 0" in result.stdout

    def test_geometric_conditions(self, tmp_path, cli_runner):
        """Geometric innovations satisfy all four projective conditions."""
        config = CONFIG_DIR / "geometric-conditions.json"
        result = cli_runner.invoke(app, ["run", str(config), "-o", str(tmp_path)])
        assert result.exit_code == 0, result.stdout

    def test_mixing_pair(self, tmp_path, cli_runner):
        """Summable mixing passes and divergent mixing fails."""
        for name in ("mixing.json", "mixing-divergent.json"):
            result = cli_runner.invoke(app, ["run", str(CONFIG_DIR / name), "-o", str(tmp_path)])
            assert result.exit_code == 0, result.stdout

    def test_variance_trace(self, tmp_path, cli_runner):
        """The variance trace approaches the long-run variance."""
        config = CONFIG_DIR / "geometric-variance.json"
        result = cli_runner.invoke(app, ["run", str(config), "-o", str(tmp_path)])
        assert result.exit_code == 0, result.stdout
        assert (tmp_path / "variance_trace.csv").exists()


@pytest.mark.slow
class TestAcceptanceRuns:
    def test_counterexample(self, tmp_path, cli_runner):
        """The counterexample report carries the expected verdicts and witness."""
        result = cli_runner.invoke(
            app, ["run", str(CONFIG_DIR / "counterexample.json"), "-o", str(tmp_path)]
        )
        assert result.exit_code == 0, result.stdout
        report = json.loads((tmp_path / "report.json").read_text())["report"]
        assert report["projective_sum"]["verdict"] == "violated"
        assert report["projective_sum"]["related"][0]["verdict"] == "satisfied"
        assert report["maxwell_woodroofe"]["related"][0]["verdict"] == "satisfied"
        assert report["spectral"]["verdict"] == "possibly unbounded"

    def test_lemmas(self, tmp_path, cli_runner):
        """Both smoothness traces fall at a fixed block size and the inequality always holds."""
        config = CONFIG_DIR / "lemmas.json"
        result = cli_runner.invoke(app, ["run", str(config), "-o", str(tmp_path)])
        assert result.exit_code == 0, result.stdout
        with (tmp_path / "lemma_ratios.csv").open() as handle:
            reader = csv.reader(handle)
            header = next(reader)
            rows = [dict(zip(header, map(float, row))) for row in reader]
        assert header == ["n", "p", "r1", "r2", "s1", "s2", "mass_ratio"]
        assert {row["p"] for row in rows} == {8.0}
        for key in ("r1", "s1"):
            trace = [row[key] for row in rows]
            assert all(b <= a + 1e-9 for a, b in zip(trace, trace[1:])), key
            assert trace[-1] < 0.02
        wu = json.loads((tmp_path / "report.json").read_text())["report"]["wu_inequality"]
        assert wu["instances"] == 100
        assert wu["held"] == 100
        assert wu["worst_ratio"] <= 1.0 + 1e-9

    @pytest.mark.parametrize(
        "name",
        ["bernoulli-conditions.json", "bernoulli-oscillating.json", "bernoulli-log-singular.json"],
    )
    def test_bernoulli_conditions(self, name, tmp_path, cli_runner):
        """The Bernoulli-shift configs reach their expected verdicts."""
        result = cli_runner.invoke(app, ["run", str(CONFIG_DIR / name), "-o", str(tmp_path)])
        assert result.exit_code == 0, result.stdout

    @pytest.mark.parametrize(
        "name",
        [
            "exact-normal.json",
            "geometric-clt.json",
            "long-memory-clt.json",
            "scale-mixture.json",
            "bernoulli-clt.json",
        ],
    )
    def test_clt_configs(self, name, tmp_path, cli_runner):
        """Each shipped CLT config passes its checks."""
        result = cli_runner.invoke(
            app, ["run", str(CONFIG_DIR / name), "-o", str(tmp_path), "-w", "4"]
        )
        assert result.exit_code == 0, result.stdout
