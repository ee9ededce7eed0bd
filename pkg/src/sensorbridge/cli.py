"""Command-line front end.

Subcommands: validate, synth, run, grid, inspect. Every behavior here is
a thin shell over library calls; runs write a config echo next to their
outputs. Exit codes: 0 success, 1 validation/config error, 2 runtime
failure.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import yaml

from .config import ConfigError, load_experiment_config, load_grid_config, synthetic_spec_from_dict
from .evaluate import build_feature_table, compare_runs, run_experiment
from .ingest import SchemaError, generate_synthetic, load_dataset, load_manifest, save_dataset
from .serialize import load_model

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2


def _say(args, message: str) -> None:
    if not args.quiet:
        print(message)


def cmd_validate(args) -> int:
    try:
        manifest = load_manifest(args.config)
    except (OSError, SchemaError) as exc:
        print(f"FAIL manifest {args.config}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    _say(args, f"OK manifest {args.config}")
    status = EXIT_OK
    try:
        ds = load_dataset(manifest)
    except (OSError, SchemaError, ValueError) as exc:
        print(f"FAIL dataset: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for path in manifest.sample_files:
        _say(args, f"OK samples {path}")
    _say(args, f"OK labels {manifest.label_file}")
    _say(args, f"OK dataset: {len(ds.subjects)} subject(s), "
               f"{len(ds.sensor_ids)} sensor(s), {len(ds.class_set)} class(es)")
    return status


def cmd_synth(args) -> int:
    try:
        with open(args.config) as fh:
            raw = yaml.safe_load(fh)
        spec = synthetic_spec_from_dict(raw)
    except (OSError, ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.seed is not None:
        spec = synthetic_spec_from_dict({**raw, "seed": args.seed})
    try:
        ds = generate_synthetic(spec)
        manifest_path = save_dataset(ds, args.out, name="synthetic")
        _echo_config(args.out, raw if args.seed is None else {**raw, "seed": args.seed})
    except (OSError, ValueError) as exc:
        print(f"generation failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    _say(args, f"wrote {manifest_path}")
    return EXIT_OK


def _echo_config(out_dir: str, raw: dict) -> None:
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "config_echo.yaml"), "w") as fh:
        yaml.safe_dump(raw, fh, sort_keys=True)


def cmd_run(args) -> int:
    try:
        config = load_experiment_config(args.config, seed_override=args.seed)
    except (OSError, ConfigError, SchemaError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        report = run_experiment(config)
    except Exception as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    os.makedirs(args.out, exist_ok=True)
    _echo_config(args.out, config.echo())
    report_path = os.path.join(args.out, "report.json")
    with open(report_path, "w") as fh:
        fh.write(report.to_json())
    _say(args, f"pooled micro-F1 {report.pooled_micro_f1:.4f} "
               f"({len(report.folds)} folds, {report.wall_time_s:.1f}s)")
    _say(args, f"wrote {report_path}")
    return EXIT_OK


def cmd_grid(args) -> int:
    try:
        grid = load_grid_config(args.config, seed_override=args.seed)
        prepared = build_feature_table(grid.base)
    except (OSError, ConfigError, SchemaError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    cells = grid.cells()

    def run_cell(config):
        try:
            return config, run_experiment(config, prepared=prepared), None
        except Exception as exc:  # cell failures must not kill the grid
            return config, None, exc

    workers = max(1, args.workers)
    if workers == 1:
        results = [run_cell(c) for c in cells]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_cell, cells))

    os.makedirs(args.out, exist_ok=True)
    _echo_config(args.out, {
        "config": args.config,
        "test_sensors": list(grid.test_sensors),
        "variants": list(grid.variants),
        "seed": grid.base.seed,
    })
    reports = []
    failed = []
    for config, report, exc in results:
        name = f"report_{config.test_sensor}_{config.variant}.json"
        if report is None:
            failed.append((config, exc))
            print(f"FAIL {config.test_sensor}/{config.variant}: {exc}",
                  file=sys.stderr)
            continue
        reports.append(report)
        with open(os.path.join(args.out, name), "w") as fh:
            fh.write(report.to_json())
        _say(args, f"{config.test_sensor:>12} {config.variant:<8} "
                   f"micro-F1 {report.pooled_micro_f1:.4f}")
    if reports:
        table = compare_runs(reports)
        with open(os.path.join(args.out, "comparison.csv"), "w") as fh:
            fh.write(table.to_csv())
        with open(os.path.join(args.out, "comparison.txt"), "w") as fh:
            fh.write(table.to_text())
        _say(args, "\n" + table.to_text())
    return EXIT_RUNTIME if failed else EXIT_OK


def cmd_inspect(args) -> int:
    try:
        model = load_model(args.config)
    except (OSError, ValueError) as exc:
        print(f"cannot load model: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    payload = json.loads(open(args.config).read())
    kind = payload["kind"]
    print(f"kind: {kind} (format v{payload['format_version']})")
    if kind == "representation":
        for sensor, centroids in model.centroids_.items():
            print(f"  {sensor}: {len(centroids)} centroids x {centroids.shape[1]} dims")
        print(f"  encoding: {model.encoding_mode}, d = {model.output_dim}")
    elif kind == "mapping":
        print(f"  {model.kind} mapping: {model.n_inputs_} -> {model.output_dim}")
    elif kind == "classifier":
        print(f"  classes: {', '.join(model.classes_)}")
        print(f"  inputs: {model.coef_.shape[0]}")
    elif kind == "boosted":
        print(f"  classes: {', '.join(model.classes_)}")
        print(f"  stage alphas: {model.alphas_[0]:.4f}, {model.alphas_[1]:.4f}")
        print(f"  stage train errors: {model.train_errors_[0]:.4f}, "
              f"{model.train_errors_[1]:.4f}")
    elif kind == "standardizer":
        print(f"  columns: {len(model.mean_)}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sensorbridge",
        description="Single-sensor activity recognition trained from "
                    "multi-sensor data.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, needs_out: bool):
        p.add_argument("--config", required=True, help="config file path")
        if needs_out:
            p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="seed override")
        p.add_argument("--quiet", action="store_true")

    p = sub.add_parser("validate", help="check a dataset manifest and its files")
    add_common(p, needs_out=False)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    add_common(p, needs_out=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("run", help="run one experiment (one sensor, one variant)")
    add_common(p, needs_out=True)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("grid", help="run a (sensor x variant) comparison grid")
    add_common(p, needs_out=True)
    p.add_argument("--workers", type=int, default=1, help="concurrent grid cells")
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("inspect", help="summarize a serialized model file")
    add_common(p, needs_out=False)
    p.set_defaults(func=cmd_inspect)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
