"""Command-line pipeline for the benchmark toolkit.

Subcommands: ``synth`` (build the synthetic image dataset),
``enumerate`` (list shift configurations), ``generate`` (sample split
manifests), ``verify`` (statistically check manifests), ``run`` (train
and evaluate the reference classifier), and ``aggregate`` (produce
comparison views). Exit codes: 0 on success, 1 on validation or
verification failure, 2 on I/O or schema errors.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import aggregate as agg
from . import refmodel, synth, verify
from .catalog import CONTROLLED_DATASETS, builtin_schema
from .errors import SchemaError, ShiftBenchError
from .schema import AnnotationTable, AttributeSchema, load_schema, load_table
from .shiftgen import (
    AUTO,
    SamplingParams,
    enumerate_configs,
    load_manifest,
    manifest_filename,
    sample_split,
    save_manifest,
)


def _resolve_schema(value: str) -> AttributeSchema:
    path = Path(value)
    if path.is_file():
        return load_schema(path)
    try:
        return builtin_schema(value)
    except SchemaError:
        raise SchemaError(
            f"{value!r} is neither a schema file nor a built-in dataset "
            f"(known: {', '.join(CONTROLLED_DATASETS + ('synth',))})"
        ) from None


def _parse_seeds(value: str) -> list[int]:
    try:
        seeds = [int(part) for part in value.split(",") if part.strip() != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"seeds must be comma-separated ints, got {value!r}")
    if not seeds:
        raise argparse.ArgumentTypeError("at least one seed is required")
    return seeds


def _parse_test_per_cell(value: str) -> int | None:
    if value.lower() == "auto":
        return AUTO
    try:
        return int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer or 'auto', got {value!r}")


def _parse_learning_rates(value: str) -> tuple[float, ...]:
    try:
        rates = tuple(float(part) for part in value.split(",") if part.strip() != "")
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated floats, got {value!r}")
    if not rates:
        raise argparse.ArgumentTypeError("at least one learning rate is required")
    return rates


def _params_from_args(args: argparse.Namespace) -> SamplingParams:
    return SamplingParams(
        source_size=args.source_size,
        val_fraction=args.val_fraction,
        counterexample_fraction=args.epsilon,
        ldd_decay=args.ldd_decay,
        ldd_label_skew=args.ldd_skew,
        uds_holdout_count=args.uds_holdout,
        test_per_cell=args.test_per_cell,
    )


def _map(fn, items, jobs: int):
    if jobs <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


# -- workers (top level so they pickle for --jobs) ---------------------------


def _generate_one(payload) -> tuple[str, dict, str]:
    table, config, out_dir = payload
    manifest = sample_split(table, config)
    filename = manifest_filename(config)
    save_manifest(manifest, Path(out_dir) / filename)
    return config.config_id, manifest.counts, filename


def _verify_one(payload) -> tuple[str, bool, str]:
    table, manifest_path, report_dir = payload
    manifest = load_manifest(manifest_path)
    report = verify.verify_manifest(manifest, table)
    if report_dir is not None:
        verify.save_report(report, Path(report_dir) / f"{Path(manifest_path).stem}.report.json")
    return report.config_id, report.passed, verify.format_report(report)


def _run_one(payload) -> tuple[dict, str, "refmodel.GridResult"]:
    table, manifest_path, image_dir, rates, max_iterations = payload
    manifest = load_manifest(manifest_path)
    config = manifest.config
    if config.dataset_name != table.schema.dataset_name:
        raise SchemaError(
            f"manifest {config.config_id} is for {config.dataset_name!r}, "
            f"annotations are for {table.schema.dataset_name!r}"
        )
    result = refmodel.grid_search(
        table,
        manifest,
        image_dir,
        seed=config.seed,
        learning_rates=rates,
        max_iterations=max_iterations,
    )
    attributes = "+".join(a for _, a in config.assignments) or "-"
    record = dict(
        dataset=config.dataset_name,
        config_id=config.config_id,
        shift_set=config.shift_set,
        attributes=attributes,
        algorithm="logreg",
        pretrained=False,
        seed=config.seed,
        split="test",
        accuracy=result.test_accuracy,
    )
    return record, Path(manifest_path).stem, result


# -- subcommands --------------------------------------------------------------


def cmd_synth(args: argparse.Namespace) -> int:
    spec = synth.SynthSpec(
        image_side=args.image_side,
        per_cell=args.per_cell,
        jitter_seed=args.jitter_seed,
        max_jitter=args.max_jitter,
    )
    table = synth.generate_dataset(spec, args.out)
    print(f"wrote {table.n} images ({spec.per_cell} per combination) to {args.out}")
    return 0


def cmd_enumerate(args: argparse.Namespace) -> int:
    schema = _resolve_schema(args.schema)
    params = _params_from_args(args)
    total = 0
    for seed in args.seeds:
        configs = enumerate_configs(schema, params, seed)
        for config in configs:
            print(config.config_id)
        total += len(configs)
    per_seed = total // len(args.seeds)
    print(
        f"total: {total} configs ({per_seed - 1} shifted + 1 uniform per seed, "
        f"{len(args.seeds)} seed(s))"
    )
    return 0


def _load_inputs(args: argparse.Namespace) -> tuple[AttributeSchema, AnnotationTable]:
    schema = _resolve_schema(args.schema)
    table = load_table(args.annotations, schema)
    return schema, table


def cmd_generate(args: argparse.Namespace) -> int:
    schema, table = _load_inputs(args)
    params = _params_from_args(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    tasks = [
        (table, config, str(out))
        for seed in args.seeds
        for config in enumerate_configs(schema, params, seed)
    ]
    results = _map(_generate_one, tasks, args.jobs)
    for config_id, counts, filename in results:
        print(
            f"{config_id}: train={counts['train']} val={counts['val']} "
            f"test={counts['test']} -> {filename}"
        )
    print(f"wrote {len(results)} manifests to {out}")
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    _, table = _load_inputs(args)
    out = Path(args.out)
    manifest_paths = sorted(p for p in out.glob("*.json") if p.is_file())
    if not manifest_paths:
        print(f"error: no manifest files in {out}", file=sys.stderr)
        return 2
    report_dir = Path(args.report_dir) if args.report_dir else out / "reports"
    report_dir.mkdir(parents=True, exist_ok=True)
    results = _map(
        _verify_one,
        [(table, str(p), str(report_dir)) for p in manifest_paths],
        args.jobs,
    )
    failures = 0
    for _, passed, text in results:
        print(text)
        failures += 0 if passed else 1
    print(f"verified {len(results)} manifests: {len(results) - failures} PASS, {failures} FAIL")
    return 1 if failures else 0


def cmd_run(args: argparse.Namespace) -> int:
    _, table = _load_inputs(args)
    manifest_paths = sorted(p for p in Path(args.out).glob("*.json") if p.is_file())
    if not manifest_paths:
        print(f"error: no manifest files in {args.out}", file=sys.stderr)
        return 2
    results_path = Path(args.results)
    results_path.parent.mkdir(parents=True, exist_ok=True)
    history_dir = results_path.parent / "histories"
    history_dir.mkdir(parents=True, exist_ok=True)
    outputs = _map(
        _run_one,
        [
            (table, str(p), args.images, args.learning_rates, args.max_iterations)
            for p in manifest_paths
        ],
        args.jobs,
    )
    records = []
    for fields, stem, grid_result in outputs:
        records.append(agg.ResultRecord(**fields))
        refmodel.save_history(grid_result, history_dir / f"{stem}.json")
        print(
            f"{fields['config_id']}: lr={grid_result.learning_rate:g} "
            f"val={grid_result.val_accuracy:.4f} test={grid_result.test_accuracy:.4f}"
        )
    agg.write_results(records, results_path)
    print(f"wrote {len(records)} result rows to {results_path}")
    return 0


def cmd_aggregate(args: argparse.Namespace) -> int:
    records = agg.load_results(args.results)
    agg.emit_views(records, args.out, args.baseline)
    for view in agg.shift_type_means(records):
        shift_set = dict(view.keys)["shift_set"]
        print(f"{shift_set:<12} mean={view.mean:.4f} sem={view.sem:.4f} n={view.n}")
    print(f"views written to {args.out}")
    return 0


# -- parser -------------------------------------------------------------------


def _add_sampling_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--source-size", type=int, default=100,
                        help="total train+val instances (default 100)")
    parser.add_argument("--val-fraction", type=float, default=0.20,
                        help="validation share of the source (default 0.20)")
    parser.add_argument("--epsilon", type=float, default=0.01,
                        help="SC counterexample fraction (default 0.01)")
    parser.add_argument("--ldd-decay", type=float, default=0.5,
                        help="LDD geometric marginal decay (default 0.5)")
    parser.add_argument("--ldd-skew", type=float, default=4.0,
                        help="LDD within-value label skew (default 4)")
    parser.add_argument("--uds-holdout", type=int, default=1,
                        help="UDS held-out value count (default 1)")
    parser.add_argument("--test-per-cell", type=_parse_test_per_cell, default=AUTO,
                        help="test instances per combination, or 'auto' (default)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shiftbench",
        description="Construct, verify, and evaluate controlled distribution-shift benchmarks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate the synthetic image dataset")
    p.add_argument("--out", required=True, help="output dataset directory")
    p.add_argument("--per-cell", type=int, default=20)
    p.add_argument("--image-side", type=int, default=64)
    p.add_argument("--jitter-seed", type=int, default=0)
    p.add_argument("--max-jitter", type=int, default=None)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("enumerate", help="list shift configurations")
    p.add_argument("--schema", required=True, help="schema JSON path or built-in name")
    p.add_argument("--seeds", type=_parse_seeds, default=[0, 1, 2])
    _add_sampling_flags(p)
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("generate", help="sample split manifests")
    p.add_argument("--schema", required=True)
    p.add_argument("--annotations", required=True)
    p.add_argument("--out", required=True, help="manifest output directory")
    p.add_argument("--seeds", type=_parse_seeds, default=[0, 1, 2])
    p.add_argument("--jobs", type=int, default=1)
    _add_sampling_flags(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("verify", help="verify manifests against annotations")
    p.add_argument("--schema", required=True)
    p.add_argument("--annotations", required=True)
    p.add_argument("--out", required=True, help="directory holding the manifests")
    p.add_argument("--report-dir", default=None)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("run", help="train and evaluate the reference classifier")
    p.add_argument("--schema", required=True)
    p.add_argument("--annotations", required=True)
    p.add_argument("--images", required=True, help="directory of <id>.png images")
    p.add_argument("--out", required=True, help="directory holding the manifests")
    p.add_argument("--results", required=True, help="output results CSV path")
    p.add_argument("--learning-rates", type=_parse_learning_rates,
                   default=refmodel.LR_GRID)
    p.add_argument("--max-iterations", type=int, default=10000)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("aggregate", help="aggregate results into comparison views")
    p.add_argument("--results", required=True, help="results CSV path")
    p.add_argument("--out", required=True, help="view output directory")
    p.add_argument("--baseline", default=None, help="baseline algorithm name")
    p.set_defaults(func=cmd_aggregate)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ShiftBenchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
