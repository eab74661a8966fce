"""Enumerate shift configurations, sample splits, and verify them.

Starting from the annotations written by demo 01, this walks the full
configuration space (one uniform control plus every combination of the
three shift kinds over the three non-label attributes), samples a few
of the resulting manifests, and runs the statistical verifier on them.
"""

from pathlib import Path

from shiftbench.schema import load_schema, load_table
from shiftbench.shiftgen import (
    SamplingParams,
    enumerate_configs,
    sample_split,
    save_manifest,
    manifest_filename,
)
from shiftbench.verify import format_report, verify_manifest

DATASET = Path(__file__).parent / "demo_output" / "synth"
OUT = Path(__file__).parent / "demo_output" / "manifests"


def main() -> None:
    schema = load_schema(DATASET / "schema.json")
    table = load_table(DATASET / "annotations.csv", schema)
    params = SamplingParams(source_size=108)

    configs = enumerate_configs(table.schema, params, seed=0)
    print(f"{len(configs)} configurations for {table.schema.dataset_name}:")
    for config in configs[:6]:
        print(f"  {config.config_id}")
    print(f"  ... and {len(configs) - 6} more")

    OUT.mkdir(parents=True, exist_ok=True)
    picks = [configs[0], configs[1], configs[-1]]  # control, one single, the triple
    for config in picks:
        manifest = sample_split(table, config)
        save_manifest(manifest, OUT / manifest_filename(config))
        print(
            f"\n{config.config_id}: train={len(manifest.train_ids)} "
            f"val={len(manifest.val_ids)} test={len(manifest.test_ids)}"
        )
        print(format_report(verify_manifest(manifest, table)))


if __name__ == "__main__":
    main()
