"""Train the reference linear classifier and expose a shortcut.

Uses the manifests from demo 02.  Validation data follows the same
distribution as training, so under the correlated source a model can
score highly by reading the correlated attribute instead of the label's
own attribute.  The uniform test split takes that shortcut away: a
large drop from validation to test accuracy is the shortcut's
signature, and the uniform control shows no such drop.
"""

from pathlib import Path

from shiftbench.refmodel import grid_search
from shiftbench.schema import load_schema, load_table
from shiftbench.shiftgen import load_manifest

DATASET = Path(__file__).parent / "demo_output" / "synth"
MANIFESTS = Path(__file__).parent / "demo_output" / "manifests"


def main() -> None:
    schema = load_schema(DATASET / "schema.json")
    table = load_table(DATASET / "annotations.csv", schema)
    results = {}
    for name in sorted(p.name for p in MANIFESTS.glob("*.json")):
        manifest = load_manifest(MANIFESTS / name)
        result = grid_search(
            table,
            manifest,
            DATASET / "images",
            seed=manifest.config.seed,
            learning_rates=(1e-2,),
            max_iterations=2000,
        )
        results[manifest.config.shift_set] = result
        print(
            f"{manifest.config.config_id}: "
            f"val={result.val_accuracy:.3f} test={result.test_accuracy:.3f} "
            f"({len(result.history)} evaluations)"
        )

    print("\nvalidation-to-test drop (the shortcut signature):")
    for shift_set, result in sorted(results.items()):
        drop = result.val_accuracy - result.test_accuracy
        print(f"  {shift_set:<12} {drop:+.3f}")


if __name__ == "__main__":
    main()
