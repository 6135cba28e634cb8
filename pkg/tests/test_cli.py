import json

import numpy as np
import pytest

from tabsynth import data_model
from tabsynth.cli import RunConfig, main

FAST_RUN = {
    "seed": 0,
    "sim": {},
    "transform": {
        "boxcox": {"max_iter": 30},
        "power": {"rounds": 2, "epochs": 20},
    },
    "train": {"epochs": 3},
    "generate": {"n": 150},
    "evaluate": {"n_perm": 4},
}


def run(argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def sim_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("sim")
    assert run(["simulate", "--n", 150, "--seed", 0, "--out", out]) == 0
    return out


@pytest.fixture(scope="module")
def fit_dir(sim_dir, tmp_path_factory):
    out = tmp_path_factory.mktemp("fit")
    cfg = tmp_path_factory.mktemp("cfg") / "run.json"
    cfg.write_text(json.dumps(FAST_RUN))
    rc = run(
        ["fit", "--data", sim_dir / "data.csv", "--schema", sim_dir / "schema.json",
         "--config", cfg, "--out", out]
    )
    assert rc == 0
    return out


class TestSimulate:
    def test_outputs_exist(self, sim_dir):
        for name in ("data.csv", "schema.json", "sim_config.json"):
            assert (sim_dir / name).exists()

    def test_data_matches_schema(self, sim_dir):
        schema = data_model.load_schema(sim_dir / "schema.json")
        data = data_model.load_csv(sim_dir / "data.csv", schema)
        assert data.values.shape == (150, 21)

    def test_refuses_overwrite(self, sim_dir, capsys):
        assert run(["simulate", "--n", 10, "--out", sim_dir]) == 1
        assert "refusing to overwrite" in capsys.readouterr().err

    def test_force_overwrites(self, tmp_path):
        assert run(["simulate", "--n", 10, "--seed", 1, "--out", tmp_path]) == 0
        assert run(["simulate", "--n", 10, "--seed", 1, "--out", tmp_path, "--force"]) == 0


class TestFit:
    def test_outputs_exist(self, fit_dir):
        for name in ("transform_model.json", "vae_model.json", "loss_trace.csv"):
            assert (fit_dir / name).exists()

    def test_loss_trace_rows(self, fit_dir):
        lines = (fit_dir / "loss_trace.csv").read_text().strip().splitlines()
        assert lines[0] == "epoch,mean_loss"
        assert len(lines) == 1 + FAST_RUN["train"]["epochs"]

    def test_scaling_only_flag(self, sim_dir, tmp_path):
        cfg = tmp_path / "run.json"
        cfg.write_text(json.dumps(FAST_RUN))
        out = tmp_path / "out"
        rc = run(
            ["fit", "--data", sim_dir / "data.csv", "--schema", sim_dir / "schema.json",
             "--config", cfg, "--scaling-only", "--out", out]
        )
        assert rc == 0
        model = json.loads((out / "transform_model.json").read_text())
        assert all(col["lambda1"] == 1.0 for col in model.values())

    def test_missing_data_file_errors(self, sim_dir, tmp_path, capsys):
        rc = run(
            ["fit", "--data", tmp_path / "nope.csv", "--schema", sim_dir / "schema.json",
             "--out", tmp_path / "x"]
        )
        assert rc == 1
        assert "error:" in capsys.readouterr().err


class TestGenerate:
    def test_generates_rows(self, sim_dir, fit_dir, tmp_path):
        rc = run(
            ["generate", "--data", sim_dir / "data.csv", "--schema", sim_dir / "schema.json",
             "--transform-model", fit_dir / "transform_model.json",
             "--vae-model", fit_dir / "vae_model.json",
             "--n", 40, "--seed", 2, "--out", tmp_path]
        )
        assert rc == 0
        schema = data_model.load_schema(sim_dir / "schema.json")
        syn = data_model.load_csv(tmp_path / "synthetic.csv", schema)
        assert syn.values.shape == (40, 21)
        assert set(np.unique(syn.column("v01"))) <= {0.0, 1.0}
        assert np.array_equal(syn.column("v19"), np.round(syn.column("v19")))

    def test_posterior_mode(self, sim_dir, fit_dir, tmp_path):
        rc = run(
            ["generate", "--data", sim_dir / "data.csv", "--schema", sim_dir / "schema.json",
             "--transform-model", fit_dir / "transform_model.json",
             "--vae-model", fit_dir / "vae_model.json",
             "--n", 20, "--mode", "posterior", "--out", tmp_path]
        )
        assert rc == 0


class TestEvaluate:
    def test_report_and_marginals(self, sim_dir, fit_dir, tmp_path):
        gen = tmp_path / "gen"
        run(
            ["generate", "--data", sim_dir / "data.csv", "--schema", sim_dir / "schema.json",
             "--transform-model", fit_dir / "transform_model.json",
             "--vae-model", fit_dir / "vae_model.json", "--out", gen]
        )
        out = tmp_path / "eval"
        rc = run(
            ["evaluate", "--original", sim_dir / "data.csv",
             "--synthetic", gen / "synthetic.csv", "--schema", sim_dir / "schema.json",
             "--n-perm", 4, "--seed", 0, "--out", out]
        )
        assert rc == 0
        report = json.loads((out / "report.json").read_text())
        assert report["n_perm"] == 4
        assert report["pmse"] >= 0
        assert (out / "marginals" / "v21.csv").exists()


@pytest.fixture(scope="module")
def pipe_out(tmp_path_factory):
    from tabsynth.simgen import config_to_dict, default_config

    cfg = tmp_path_factory.mktemp("pcfg") / "run.json"
    # shrink the simulated dataset so the end-to-end run stays fast
    sim = config_to_dict(default_config(n=200, seed=3))
    cfg.write_text(json.dumps({**FAST_RUN, "sim": sim}))
    out = tmp_path_factory.mktemp("pipe")
    assert run(["pipeline", "--config", cfg, "--out", out]) == 0
    return out


class TestPipeline:
    def test_both_variants_written(self, pipe_out):
        for variant in ("ptvae", "vae"):
            sub = pipe_out / variant
            for name in (
                "transform_model.json",
                "vae_model.json",
                "loss_trace.csv",
                "synthetic.csv",
                "report.json",
            ):
                assert (sub / name).exists()
            assert (sub / "marginals").is_dir()

    def test_baseline_is_scaling_only(self, pipe_out):
        base = json.loads((pipe_out / "vae" / "transform_model.json").read_text())
        full = json.loads((pipe_out / "ptvae" / "transform_model.json").read_text())
        assert all(c["lambda1"] == 1.0 for c in base.values())
        assert any(c["lambda1"] != 1.0 for c in full.values())


class TestRunConfig:
    def test_unknown_keys_rejected(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"seed": 1, "bogus": 2}))
        with pytest.raises(ValueError, match="bogus"):
            RunConfig.load(path)

    def test_stage_seeds_deterministic_and_distinct(self):
        a = RunConfig(seed=5).stage_seeds()
        b = RunConfig(seed=5).stage_seeds()
        assert a == b
        assert len(set(a.values())) == len(a)
        assert RunConfig(seed=6).stage_seeds() != a
