import csv
import json

import numpy as np
import pytest

from catenc.cli import EXIT_ALL_FAILED, EXIT_CONFIG_ERROR, EXIT_OK, main
from catenc.evaluation import read_records


def write_benchmark_inputs(tmp_path, rng, n_datasets=1):
    names = []
    for d in range(n_datasets):
        codes = np.repeat(np.arange(30), 4)
        rng.shuffle(codes)
        effects = rng.normal(0, 2, 30)
        y = effects[codes] + rng.normal(0, 1, len(codes))
        lines = ["x,z,y"]
        for c, v in zip(codes, y):
            lines.append(f"l{c},{rng.normal():.4f},{v:.6f}")
        (tmp_path / f"d{d}.csv").write_text("\n".join(lines) + "\n")
        schema = {"columns": [{"name": "x", "kind": "cat"},
                              {"name": "z", "kind": "num"},
                              {"name": "y", "kind": "num"}],
                  "target": "y"}
        (tmp_path / f"d{d}.schema.json").write_text(json.dumps(schema))
        names.append(f"d{d}")
    return names


def write_config(tmp_path, names, **overrides):
    lines = [
        f"seed = {overrides.get('seed', 3)}",
        "folds = 3",
        f"record_timings = {str(overrides.get('record_timings', True)).lower()}",
        f"output_dir = \"{tmp_path / overrides.get('outdir', 'results')}\"",
        "",
        "[encoders]",
        f"strategies = {overrides.get('strategies', ['one_hot', 'impact'])}",
        "hct = [25]",
        "",
    ]
    for name in names:
        lines += ["[[datasets]]",
                  f"name = \"{name}\"",
                  f"csv = \"{name}.csv\"",
                  f"schema = \"{name}.schema.json\"",
                  ""]
    lines += ["[[learners]]", "kind = \"featureless\"", "",
              "[[learners]]", "kind = \"ridge\""]
    path = tmp_path / overrides.get("config_name", "config.toml")
    path.write_text("\n".join(lines).replace("'", '"') + "\n")
    return path


class TestRun:
    def test_full_run(self, tmp_path, rng, capsys):
        names = write_benchmark_inputs(tmp_path, rng)
        config = write_config(tmp_path, names)
        assert main(["run", str(config)]) == EXIT_OK
        outdir = tmp_path / "results"
        records = read_records(outdir / "records.jsonl")
        # 2 conditions x 2 learners x 3 folds
        assert len(records) == 12
        assert all(not r.failed for r in records)
        assert (outdir / "manifest.json").exists()
        manifest = json.loads((outdir / "manifest.json").read_text())
        assert manifest["n_records"] == 12
        assert manifest["n_failed"] == 0

    def test_missing_config(self, tmp_path, capsys):
        assert main(["run", str(tmp_path / "nope.toml")]) \
            == EXIT_CONFIG_ERROR

    def test_bad_toml(self, tmp_path, capsys):
        bad = tmp_path / "bad.toml"
        bad.write_text("datasets = [ oops\n")
        assert main(["run", str(bad)]) == EXIT_CONFIG_ERROR

    def test_no_datasets(self, tmp_path, capsys):
        cfg = tmp_path / "empty.toml"
        cfg.write_text("seed = 1\n")
        assert main(["run", str(cfg)]) == EXIT_CONFIG_ERROR

    def test_all_skipped_conditions(self, tmp_path, rng, capsys):
        # 30-level column is below hct=125, so impact is infeasible
        names = write_benchmark_inputs(tmp_path, rng)
        cfg = tmp_path / "skip.toml"
        cfg.write_text("\n".join([
            "folds = 3",
            f'output_dir = "{tmp_path / "skipres"}"',
            "[encoders]",
            'strategies = ["impact"]',
            "hct = [125]",
            "[[datasets]]",
            'name = "d0"', 'csv = "d0.csv"', 'schema = "d0.schema.json"',
        ]) + "\n")
        assert main(["run", str(cfg)]) == EXIT_ALL_FAILED

    def test_replay_from_resolved_config(self, tmp_path, rng, capsys):
        names = write_benchmark_inputs(tmp_path, rng)
        config = write_config(tmp_path, names, record_timings=False)
        assert main(["run", str(config)]) == EXIT_OK
        outdir = tmp_path / "results"
        first = (outdir / "records.jsonl").read_bytes()
        resolved = json.loads((outdir / "resolved-config.json").read_text())
        resolved["output_dir"] = str(tmp_path / "replay")
        replay_cfg = tmp_path / "resolved.json"
        replay_cfg.write_text(json.dumps(resolved))
        assert main(["run", str(replay_cfg)]) == EXIT_OK
        second = (tmp_path / "replay" / "records.jsonl").read_bytes()
        assert first == second


class TestReport:
    def run_and_report(self, tmp_path, rng, capsys):
        names = write_benchmark_inputs(tmp_path, rng, n_datasets=2)
        config = write_config(tmp_path, names)
        assert main(["run", str(config)]) == EXIT_OK
        outdir = tmp_path / "results"
        assert main(["report", str(outdir)]) == EXIT_OK
        return outdir

    def test_report_outputs(self, tmp_path, rng, capsys):
        outdir = self.run_and_report(tmp_path, rng, capsys)
        with open(outdir / "performance_summary.csv") as fh:
            rows = list(csv.DictReader(fh))
        # 2 datasets x 2 conditions x 2 learners
        assert len(rows) == 8
        assert {r["metric"] for r in rows} == {"rmse"}
        rankings = json.loads(
            (outdir / "consensus_rankings.json").read_text())
        assert set(rankings) == {"featureless", "ridge"}
        for entry in rankings.values():
            assert sorted(entry["labels"]) == ["impact", "one_hot"]
            assert len(entry["tiers"]) == 2
        with open(outdir / "runtime_ratios.csv") as fh:
            ratios = list(csv.DictReader(fh))
        onehot = [r for r in ratios if r["condition"] == "one_hot"]
        assert onehot and all(float(r["median"]) == 1.0 for r in onehot)
        dendro = json.loads((outdir / "dendrogram.json").read_text())
        assert dendro["datasets"] == ["d0", "d1"]

    def test_report_missing_dir(self, tmp_path, capsys):
        assert main(["report", str(tmp_path / "nothing")]) \
            == EXIT_CONFIG_ERROR


class TestProfile:
    def test_profile_from_config(self, tmp_path, rng, capsys):
        names = write_benchmark_inputs(tmp_path, rng)
        config = write_config(tmp_path, names)
        out = tmp_path / "profile.json"
        assert main(["profile", "d0", "--config", str(config),
                     "--out", str(out)]) == EXIT_OK
        profile = json.loads(out.read_text())
        assert profile["name"] == "d0"
        assert profile["n_rows"] == 120
        assert profile["task"] == "regression"
        x = next(c for c in profile["categorical"] if c["name"] == "x")
        assert x["n_levels"] == 30
        assert 0.0 < x["normalized_entropy"] <= 1.0

    def test_profile_direct_files(self, tmp_path, rng, capsys):
        write_benchmark_inputs(tmp_path, rng)
        assert main(["profile", "anything",
                     "--csv", str(tmp_path / "d0.csv"),
                     "--schema", str(tmp_path / "d0.schema.json")]) == EXIT_OK
        out = capsys.readouterr().out
        assert json.loads(out)["name"] == "anything"

    def test_profile_unknown_dataset(self, tmp_path, rng, capsys):
        names = write_benchmark_inputs(tmp_path, rng)
        config = write_config(tmp_path, names)
        assert main(["profile", "missing", "--config", str(config)]) \
            == EXIT_CONFIG_ERROR
