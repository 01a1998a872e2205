"""Command-line front end: `catenc run <config>`, `catenc report <dir>`,
`catenc profile <name>`.

Configs are TOML for human authoring; a resolved JSON snapshot with all
defaults and seeds materialized is written next to the records and can be
passed back to `run` for byte-identical reproduction (when timing capture is
disabled). Exit codes: 0 ok, 1 config error, 2 all conditions failed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path

from . import __version__
from .encoders import EncoderSpec
from .evaluation import run_benchmark, write_records, read_records
from .learners import LearnerSpec
from .reports import (consensus_rankings, dataset_dendrogram,
                      performance_summary, runtime_ratios)
from .tabular import DEFAULT_NA_VALUES, load_dataset, profile_table

EXIT_OK = 0
EXIT_CONFIG_ERROR = 1
EXIT_ALL_FAILED = 2

GLMM_DEFAULT_FOLDS = (0, 5, 10)


class ConfigError(Exception):
    pass


def _load_config(path: Path) -> dict:
    try:
        if path.suffix == ".json":
            with open(path, "rb") as fh:
                return json.load(fh)
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except (OSError, tomllib.TOMLDecodeError, json.JSONDecodeError) as exc:
        raise ConfigError(f"{path}: {exc}")


def _resolve_config(raw: dict, config_dir: Path) -> dict:
    if "datasets" not in raw or not raw["datasets"]:
        raise ConfigError("config needs at least one [[datasets]] entry")
    datasets = []
    for d in raw["datasets"]:
        for key in ("name", "csv", "schema"):
            if key not in d:
                raise ConfigError(f"dataset entry missing {key!r}: {d}")
        datasets.append({"name": d["name"],
                         "csv": str((config_dir / d["csv"]).resolve()),
                         "schema": str((config_dir / d["schema"]).resolve())})

    enc = raw.get("encoders", {})
    strategies = enc.get("strategies", ["one_hot"])
    hcts = enc.get("hct", [10, 25, 125])
    glmm_folds = enc.get("glmm_folds", list(GLMM_DEFAULT_FOLDS))
    # resolved snapshots store conditions at top level
    conditions = raw.get("conditions", enc.get("conditions"))
    if conditions is None:
        conditions = []
        for strategy in strategies:
            for hct in hcts:
                if strategy == "glmm":
                    for folds in glmm_folds:
                        conditions.append({"strategy": strategy, "hct": hct,
                                           "glmm_folds": folds})
                else:
                    conditions.append({"strategy": strategy, "hct": hct,
                                       "glmm_folds": 0})

    learners = raw.get("learners") or [{"kind": "featureless"}]
    resolved_learners = []
    for spec in learners:
        if "kind" not in spec:
            raise ConfigError(f"learner entry missing 'kind': {spec}")
        kind = spec["kind"]
        resolved_learners.append({
            "kind": kind,
            "k": spec.get("k", 15),
            "filter_top": spec.get("filter_top", 25 if kind == "knn" else None),
            "ridge_cv_folds": spec.get("ridge_cv_folds", 5),
        })

    workers_default = int(os.environ.get("CATENC_WORKERS", "1"))
    resolved = {
        "tool_version": __version__,
        "seed": int(raw.get("seed", 0)),
        "folds": int(raw.get("folds", 5)),
        "workers": int(raw.get("workers", workers_default)),
        "na_values": list(raw.get("na_values", DEFAULT_NA_VALUES)),
        "record_timings": bool(raw.get("record_timings", True)),
        "output_dir": raw.get("output_dir", "catenc-results"),
        "datasets": datasets,
        "conditions": conditions,
        "learners": resolved_learners,
    }
    if resolved["folds"] < 2:
        raise ConfigError("folds must be >= 2")
    if not resolved["conditions"]:
        raise ConfigError("config needs at least one encoder condition")
    return resolved


def _build_specs(resolved):
    enc_specs = [EncoderSpec(c["strategy"], hct=int(c["hct"]),
                             glmm_folds=int(c.get("glmm_folds", 0)))
                 for c in resolved["conditions"]]
    learner_specs = [LearnerSpec(l["kind"], k=int(l["k"]),
                                 filter_top=l["filter_top"],
                                 ridge_cv_folds=int(l["ridge_cv_folds"]))
                     for l in resolved["learners"]]
    return enc_specs, learner_specs


def cmd_run(config_path: str) -> int:
    path = Path(config_path)
    try:
        raw = _load_config(path)
        resolved = _resolve_config(raw, path.parent)
        tables = []
        for d in resolved["datasets"]:
            tables.append((d["name"], load_dataset(
                d["csv"], d["schema"], na_values=tuple(resolved["na_values"]))))
        enc_specs, learner_specs = _build_specs(resolved)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR

    outdir = Path(resolved["output_dir"])
    outdir.mkdir(parents=True, exist_ok=True)
    records, skipped = run_benchmark(
        tables, enc_specs, learner_specs, resolved["folds"], resolved["seed"],
        record_timings=resolved["record_timings"],
        workers=resolved["workers"])
    write_records(records, outdir / "records.jsonl")
    with open(outdir / "resolved-config.json", "w", encoding="utf-8") as fh:
        json.dump(resolved, fh, indent=2, sort_keys=True)
        fh.write("\n")
    manifest = {
        "tool_version": __version__,
        "n_records": len(records),
        "n_failed": sum(r.failed for r in records),
        "skipped": skipped,
    }
    with open(outdir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {len(records)} records to {outdir / 'records.jsonl'} "
          f"({manifest['n_failed']} failed, {len(skipped)} conditions skipped)")
    if records and all(r.failed for r in records):
        return EXIT_ALL_FAILED
    if not records:
        return EXIT_ALL_FAILED
    return EXIT_OK


def _write_csv(path, rows, fields):
    import csv

    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def cmd_report(results_dir: str) -> int:
    outdir = Path(results_dir)
    records_path = outdir / "records.jsonl"
    if not records_path.exists():
        print(f"config error: {records_path} not found", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    records = read_records(records_path)
    if not records:
        print("config error: records.jsonl is empty", file=sys.stderr)
        return EXIT_CONFIG_ERROR

    summary = performance_summary(records)
    _write_csv(outdir / "performance_summary.csv", summary,
               ["dataset", "condition", "learner", "metric", "hct",
                "mean", "min", "max"])
    rankings = consensus_rankings(records)
    with open(outdir / "consensus_rankings.json", "w", encoding="utf-8") as fh:
        json.dump(rankings, fh, indent=2, sort_keys=True)
        fh.write("\n")
    ratios = runtime_ratios(records)
    _write_csv(outdir / "runtime_ratios.csv", ratios,
               ["learner", "condition", "median", "min", "max", "n_datasets"])
    try:
        dendro = dataset_dendrogram(records)
    except ValueError:
        dendro = None
    if dendro is not None:
        with open(outdir / "dendrogram.json", "w", encoding="utf-8") as fh:
            json.dump(dendro, fh, indent=2, sort_keys=True)
            fh.write("\n")
    print(f"report written to {outdir}")
    return EXIT_OK


def cmd_profile(name: str, config: str | None, csv_path: str | None,
                schema_path: str | None, out: str | None) -> int:
    try:
        if csv_path is not None and schema_path is not None:
            table = load_dataset(csv_path, schema_path)
        else:
            cfgpath = Path(config or "config.toml")
            raw = _load_config(cfgpath)
            resolved = _resolve_config(raw, cfgpath.parent)
            entry = next((d for d in resolved["datasets"]
                          if d["name"] == name), None)
            if entry is None:
                raise ConfigError(f"dataset {name!r} not in {cfgpath}")
            table = load_dataset(entry["csv"], entry["schema"],
                                 na_values=tuple(resolved["na_values"]))
    except (ConfigError, ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    profile = profile_table(table)
    profile["name"] = name
    text = json.dumps(profile, indent=2, sort_keys=True) + "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="catenc",
        description="Benchmark harness for categorical feature encoders")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a benchmark config")
    p_run.add_argument("config", help="TOML config or resolved JSON snapshot")

    p_report = sub.add_parser("report", help="summarize a results directory")
    p_report.add_argument("results_dir")

    p_profile = sub.add_parser("profile", help="profile one dataset")
    p_profile.add_argument("name", help="dataset name from the config "
                           "(or any label when --csv/--schema are given)")
    p_profile.add_argument("--config", default=None)
    p_profile.add_argument("--csv", default=None)
    p_profile.add_argument("--schema", default=None)
    p_profile.add_argument("--out", default=None)

    args = parser.parse_args(argv)
    if args.command == "run":
        return cmd_run(args.config)
    if args.command == "report":
        return cmd_report(args.results_dir)
    return cmd_profile(args.name, args.config, args.csv, args.schema,
                       args.out)


if __name__ == "__main__":
    sys.exit(main())
