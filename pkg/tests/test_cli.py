"""Command-line entry points and their exit-code contract."""

import json

import numpy as np
import pytest
from click.testing import CliRunner

from hierbench import fileio
from hierbench.cli import main


@pytest.fixture
def runner():
    return CliRunner()


def write_config(path, **kw):
    base = dict(h=2, margin=16.0, dim=8, per_cluster=15, eval_n=None,
                repeats=2, seed=0)
    base.update(kw)
    path.write_text(json.dumps(base))
    return path


class TestGenerate:
    def test_writes_embedding_and_labels(self, runner, tmp_path):
        cfg = write_config(tmp_path / "cfg.json")
        result = runner.invoke(main, ["--config", str(cfg),
                                      "--out", str(tmp_path / "out"),
                                      "generate"])
        assert result.exit_code == 0, result.output
        points, labels = fileio.read_embedding(tmp_path / "out" / "data.emb1")
        assert points.shape == (60, 8)
        flat, levels = fileio.read_labels(tmp_path / "out" / "labels.csv")
        assert np.array_equal(flat, labels)
        assert levels.shape == (60, 2)

    def test_bad_config_json_exits_one(self, runner, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text("{broken")
        result = runner.invoke(main, ["--config", str(cfg), "generate"])
        assert result.exit_code == 1
        assert "config error" in result.output

    def test_unknown_config_field_exits_one(self, runner, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"no_such_field": 1}))
        result = runner.invoke(main, ["--config", str(cfg), "generate"])
        assert result.exit_code == 1


class TestEmbedCommand:
    def generated(self, runner, tmp_path):
        cfg = write_config(tmp_path / "cfg.json")
        out = tmp_path / "out"
        runner.invoke(main, ["--config", str(cfg), "--out", str(out),
                             "generate"])
        return cfg, out

    def test_pca(self, runner, tmp_path):
        cfg, out = self.generated(runner, tmp_path)
        result = runner.invoke(main, [
            "--config", str(cfg), "--out", str(out), "embed",
            "--input", str(out / "data.emb1"), "--mode", "pca"])
        assert result.exit_code == 0, result.output
        points, _ = fileio.read_embedding(out / "embedded.emb1")
        assert points.shape == (60, 2)

    def test_rescale_fits_and_saves_gmm(self, runner, tmp_path):
        cfg, out = self.generated(runner, tmp_path)
        result = runner.invoke(main, [
            "--config", str(cfg), "--out", str(out), "embed",
            "--input", str(out / "data.emb1"), "--mode", "rescale",
            "--gmm-k", "4"])
        assert result.exit_code == 0, result.output
        assert (out / "gmm.json").exists()
        assert (out / "embedded.emb1").exists()

    def test_rescale_without_gmm_exits_one(self, runner, tmp_path):
        cfg, out = self.generated(runner, tmp_path)
        result = runner.invoke(main, [
            "--config", str(cfg), "--out", str(out), "embed",
            "--input", str(out / "data.emb1"), "--mode", "rescale"])
        assert result.exit_code == 1

    def test_corrupt_input_exits_two(self, runner, tmp_path):
        cfg, out = self.generated(runner, tmp_path)
        bad = tmp_path / "bad.emb1"
        bad.write_bytes(b"XXXX garbage")
        result = runner.invoke(main, [
            "--config", str(cfg), "--out", str(out), "embed",
            "--input", str(bad), "--mode", "pca"])
        assert result.exit_code == 2
        assert "i/o error" in result.output


class TestClusterAndEval:
    def test_cluster_writes_merge_list(self, runner, tmp_path):
        cfg = write_config(tmp_path / "cfg.json")
        out = tmp_path / "out"
        runner.invoke(main, ["--config", str(cfg), "--out", str(out),
                             "generate"])
        result = runner.invoke(main, ["--out", str(out), "cluster",
                                      "--input", str(out / "data.emb1")])
        assert result.exit_code == 0, result.output
        lines = (out / "dendrogram.csv").read_text().splitlines()
        assert lines[0] == "left,right,height,size"
        assert len(lines) == 60  # header plus n-1 merges

    def test_eval_reports_metrics(self, runner, tmp_path):
        cfg = write_config(tmp_path / "cfg.json")
        out = tmp_path / "out"
        runner.invoke(main, ["--config", str(cfg), "--out", str(out),
                             "generate"])
        result = runner.invoke(main, [
            "--out", str(out), "eval",
            "--input", str(out / "data.emb1"),
            "--labels", str(out / "labels.csv")])
        assert result.exit_code == 0, result.output
        row = json.loads((out / "eval.json").read_text())
        assert 0.0 <= row["dp"] <= 1.0


class TestPipelineCommand:
    def test_outputs_and_determinism(self, runner, tmp_path):
        cfg = write_config(tmp_path / "cfg.json", eval_n=40, repeats=3)
        a, b = tmp_path / "a", tmp_path / "b"
        ra = runner.invoke(main, ["--config", str(cfg), "--out", str(a),
                                  "pipeline"])
        rb = runner.invoke(main, ["--config", str(cfg), "--out", str(b),
                                  "pipeline"])
        assert ra.exit_code == 0, ra.output
        assert rb.exit_code == 0
        for name in ("runs.csv", "aggregate.json", "config.json"):
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_seed_flag_overrides_config(self, runner, tmp_path):
        cfg = write_config(tmp_path / "cfg.json", eval_n=40, repeats=2)
        a, b = tmp_path / "a", tmp_path / "b"
        runner.invoke(main, ["--config", str(cfg), "--out", str(a),
                             "--seed", "1", "pipeline"])
        runner.invoke(main, ["--config", str(cfg), "--out", str(b),
                             "pipeline"])
        assert (a / "runs.csv").read_bytes() != (b / "runs.csv").read_bytes()


class TestCheckCommand:
    def test_reports_printed(self, runner, tmp_path):
        cfg = write_config(tmp_path / "cfg.json")
        result = runner.invoke(main, ["--config", str(cfg), "check"])
        assert result.exit_code == 0, result.output
        for name in ("theorem1", "theorem2", "corollary"):
            assert name in result.output


class TestSweepCommand:
    def test_grid_rows(self, runner, tmp_path):
        cfg = write_config(tmp_path / "cfg.json", per_cluster=10)
        out = tmp_path / "out"
        result = runner.invoke(main, [
            "--config", str(cfg), "--out", str(out), "sweep",
            "--separations", "0,30", "--trials", "3"])
        assert result.exit_code == 0, result.output
        lines = (out / "sweep.csv").read_text().splitlines()
        assert len(lines) == 3


class TestCompareLinkageCommand:
    def test_all_methods_reported(self, runner, tmp_path):
        cfg = write_config(tmp_path / "cfg.json", per_cluster=10)
        out = tmp_path / "out"
        result = runner.invoke(main, ["--config", str(cfg), "--out", str(out),
                                      "compare-linkage"])
        assert result.exit_code == 0, result.output
        for method in ("ward", "single", "complete", "average", "centroid"):
            assert method in result.output
