"""Command-line runner: config resolution, output files, determinism and
error reporting.  Experiments are exercised with deliberately small
iteration counts; statistical quality is the acceptance suite's job."""

import json
import os
import subprocess
import sys

import pytest

from bayescomp.cli import ConfigError, main, resolve_config, run_experiment


def run_cli(tmp_path, experiment, config=None, extra=None, subdir="out"):
    out = tmp_path / subdir
    argv = [experiment, "--out", str(out)]
    if config is not None:
        cfg = tmp_path / f"{subdir}.json"
        cfg.write_text(json.dumps(config))
        argv += ["--config", str(cfg)]
    argv += extra or []
    code = main(argv)
    return code, out


class TestResolveConfig:
    def test_defaults_filled_in(self):
        config = resolve_config("gibbs", {})
        assert config["iterations"] == 10_000
        assert config["covariates"] == ["glu", "bp", "ped"]
        assert config["seed"] == 0 and config["replicates"] == 1

    def test_overrides_win(self):
        config = resolve_config("gibbs", {"iterations": 50, "seed": 9})
        assert config["iterations"] == 50 and config["seed"] == 9

    def test_unknown_keys_rejected_by_name(self):
        with pytest.raises(ConfigError, match="iterations_typo"):
            resolve_config("gibbs", {"iterations_typo": 50})

    def test_keys_of_other_experiments_rejected(self):
        with pytest.raises(ConfigError):
            resolve_config("mle", {"iterations": 50})

    def test_unknown_experiment_rejected(self):
        with pytest.raises(ConfigError, match="experiment"):
            resolve_config("frequentist", {})

    def test_replicate_and_postprocess_bounds(self):
        with pytest.raises(ConfigError):
            resolve_config("mle", {"replicates": 0})
        with pytest.raises(ConfigError):
            resolve_config("gibbs", {"burn_in": -1})
        with pytest.raises(ConfigError):
            resolve_config("gibbs", {"thin": 0})


class TestOutputs:
    def test_mle_summary_schema(self, tmp_path):
        code, out = run_cli(tmp_path, "mle")
        assert code == 0
        summary = json.loads((out / "summary.json").read_text())
        assert summary["schema_version"] == 1
        assert summary["experiment"] == "mle"
        for key in ("coef_glu", "coef_bp", "coef_ped",
                    "residual_deviance", "null_deviance"):
            assert key in summary["estimates"]
        assert set(summary["standard_errors"]) == {
            "coef_glu", "coef_bp", "coef_ped"}
        assert summary["diagnostics"]["n_obs"] == 332
        assert summary["runtime_seconds"] >= 0.0
        assert not (out / "draws.csv").exists()  # no chain to dump

    def test_chain_experiment_writes_draws(self, tmp_path):
        code, out = run_cli(tmp_path, "gibbs",
                            {"iterations": 200, "burn_in": 50, "thin": 3})
        assert code == 0
        lines = (out / "draws.csv").read_text().splitlines()
        assert lines[0] == "glu,bp,ped"
        assert len(lines) == 1 + len(range(50, 200, 3))
        # floats round-trip exactly through repr
        first = [float(v) for v in lines[1].split(",")]
        assert all(repr(v) == s for v, s in zip(first, lines[1].split(",")))

    def test_byte_identical_determinism(self, tmp_path):
        outputs = []
        for subdir in ("a", "b"):
            code, out = run_cli(tmp_path, "mh",
                                {"iterations": 300, "seed": 7}, subdir=subdir)
            assert code == 0
            summary = json.loads((out / "summary.json").read_text())
            del summary["runtime_seconds"]
            outputs.append((json.dumps(summary, sort_keys=True),
                            (out / "draws.csv").read_bytes()))
        assert outputs[0] == outputs[1]

    def test_seed_changes_the_draws(self, tmp_path):
        blobs = []
        for seed, subdir in ((1, "s1"), (2, "s2")):
            code, out = run_cli(tmp_path, "mh",
                                {"iterations": 300, "seed": seed},
                                subdir=subdir)
            assert code == 0
            blobs.append((out / "draws.csv").read_bytes())
        assert blobs[0] != blobs[1]

    def test_replicates_recorded_with_distinct_estimates(self, tmp_path):
        code, out = run_cli(tmp_path, "gibbs",
                            {"iterations": 200, "replicates": 3})
        assert code == 0
        summary = json.loads((out / "summary.json").read_text())
        stats = summary["replicates"]
        assert stats["count"] == 3 and stats["failed"] == 0
        assert stats["sd"]["mean_glu"] > 0.0  # streams genuinely differ
        lines = (out / "replicates.csv").read_text().splitlines()
        assert len(lines) == 4
        assert lines[0].startswith("replicate,status,")
        means = {line.split(",")[2] for line in lines[1:]}
        assert len(means) == 3

    def test_cli_flags_override_config(self, tmp_path):
        code, out = run_cli(tmp_path, "gibbs", {"iterations": 200, "seed": 1},
                            extra=["--seed", "5"])
        assert code == 0
        summary = json.loads((out / "summary.json").read_text())
        assert summary["seed"] == 5 and summary["config"]["seed"] == 5


class TestErrors:
    def test_unknown_key_fails_with_json_error(self, tmp_path, capsys):
        code, _ = run_cli(tmp_path, "mle", {"bogus": 1})
        assert code == 1
        err = json.loads(capsys.readouterr().err.strip())
        assert err["error"] == "ConfigError"
        assert "bogus" in err["message"]

    def test_missing_data_file_reported(self, tmp_path, capsys):
        code, _ = run_cli(tmp_path, "mle", extra=["--data", "/no/such.csv"])
        assert code == 1
        err = json.loads(capsys.readouterr().err.strip())
        assert "message" in err

    def test_config_must_be_an_object(self, tmp_path, capsys):
        cfg = tmp_path / "bad.json"
        cfg.write_text("[1, 2]")
        code = main(["mle", "--config", str(cfg), "--out", str(tmp_path / "o")])
        assert code == 1
        err = json.loads(capsys.readouterr().err.strip())
        assert err["error"] == "ConfigError"

    def test_single_replicate_cannot_use_replicate_runner(self):
        from bayescomp.cli import replicate
        with pytest.raises(ConfigError):
            replicate("mle", resolve_config("mle", {}))


class TestEntrypoint:
    def test_console_script_runs(self, tmp_path):
        env = dict(os.environ)
        proc = subprocess.run(
            [sys.executable, "-m", "bayescomp.cli", "mle",
             "--out", str(tmp_path / "o")],
            capture_output=True, text=True, env=env)
        assert proc.returncode == 0
        assert (tmp_path / "o" / "summary.json").exists()


class TestRunners:
    """Smoke-level checks that every experiment produces the documented
    estimate keys at small sizes."""

    @pytest.mark.parametrize("experiment,config,keys", [
        ("mwg", {"iterations": 300}, ["mean_beta", "mean_sigma2"]),
        ("pmc", {"particles": 200, "generations": 2, "n_data": 100},
         ["mean_mu1", "mean_mu2"]),
        ("capture", {"iterations": 300}, ["mean_N", "mean_p", "mean_q"]),
        ("mixture-demo", {"iterations": 200},
         ["min_distance_to_major_mode", "escaped"]),
        ("abc", {"particles": 150, "generations": 2, "quantile": 0.5},
         ["mean_glu", "mean_bp", "mean_ped"]),
    ])
    def test_estimate_keys(self, experiment, config, keys):
        resolved = resolve_config(experiment, config)
        estimates, _, diagnostics, _ = run_experiment(experiment, resolved)
        for key in keys:
            assert key in estimates, (experiment, key, sorted(estimates))

    def test_evidence_methods_all_run(self):
        for method in ("prior-mc", "importance", "harmonic-gd",
                       "harmonic-nr", "chib", "bridge-embedded"):
            resolved = resolve_config("evidence",
                                      {"method": method, "n_draws": 400})
            estimates, se, diagnostics, _ = run_experiment("evidence", resolved)
            assert "log_b10" in estimates, (method, sorted(estimates))
            assert diagnostics["method"] == method
