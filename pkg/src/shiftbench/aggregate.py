"""Aggregation of evaluation results into comparison views.

Consumes flat result records (one accuracy per dataset, config,
algorithm, pretraining arm, seed, and split) and produces the standard
comparisons: per-shift-set means with dispersion, mean deltas against a
baseline algorithm, difficulty as a function of the number of
concurrent shifts, and scratch-versus-pretrained pairings. All views
aggregate test-split records only; train/val rows ride along in the CSV
for bookkeeping.
"""

from __future__ import annotations

import csv
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

from .errors import MissingArmError, MissingBaselineError, SchemaError
from .shiftgen import SHIFT_SET_ORDER

RESULTS_HEADER = (
    "dataset",
    "config_id",
    "shift_set",
    "attributes",
    "algorithm",
    "pretrained",
    "seed",
    "split",
    "accuracy",
)

SPLITS = ("train", "val", "test")


@dataclass(frozen=True)
class ResultRecord:
    dataset: str
    config_id: str
    shift_set: str
    attributes: str
    algorithm: str
    pretrained: bool
    seed: int
    split: str
    accuracy: float

    def __post_init__(self) -> None:
        if self.shift_set not in SHIFT_SET_ORDER:
            raise SchemaError(f"unknown shift set token {self.shift_set!r}")
        if self.split not in SPLITS:
            raise SchemaError(f"split must be one of {SPLITS}, got {self.split!r}")
        if not 0.0 <= self.accuracy <= 1.0:
            raise SchemaError(f"accuracy must be in [0,1], got {self.accuracy}")

    @property
    def shift_count(self) -> int:
        return 0 if self.shift_set == "UNIFORM" else self.shift_set.count("+") + 1


@dataclass(frozen=True)
class AggregateView:
    keys: tuple[tuple[str, str], ...]
    mean: float
    sem: float
    n: int

    def __post_init__(self) -> None:
        if self.n < 1:
            raise SchemaError("an aggregate view needs at least one record")
        if self.sem < 0:
            raise SchemaError("dispersion cannot be negative")


def _mean_sem(values: list[float]) -> tuple[float, float]:
    n = len(values)
    mean = sum(values) / n
    if n == 1:
        return mean, 0.0
    var = sum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(var) / math.sqrt(n)


def _test_records(records: list[ResultRecord]) -> list[ResultRecord]:
    return [r for r in records if r.split == "test"]


def _ordered_shift_sets(records: list[ResultRecord]) -> list[str]:
    present = {r.shift_set for r in records}
    return [s for s in SHIFT_SET_ORDER if s in present]


def shift_type_means(records: list[ResultRecord]) -> list[AggregateView]:
    """Mean accuracy with standard error per shift set, canonical order."""
    tests = _test_records(records)
    views = []
    for shift_set in _ordered_shift_sets(tests):
        values = [r.accuracy for r in tests if r.shift_set == shift_set]
        mean, sem = _mean_sem(values)
        views.append(
            AggregateView(keys=(("shift_set", shift_set),), mean=mean, sem=sem, n=len(values))
        )
    return views


def difficulty_by_count(records: list[ResultRecord]) -> list[AggregateView]:
    """Mean accuracy per number of concurrent shifts (0 = no shift)."""
    tests = _test_records(records)
    views = []
    for count in (0, 1, 2, 3):
        values = [r.accuracy for r in tests if r.shift_count == count]
        if not values:
            continue
        mean, sem = _mean_sem(values)
        views.append(
            AggregateView(keys=(("shift_count", str(count)),), mean=mean, sem=sem, n=len(values))
        )
    return views


def _arms(records: list[ResultRecord]) -> list[tuple[str, bool]]:
    seen = []
    for r in records:
        arm = (r.algorithm, r.pretrained)
        if arm not in seen:
            seen.append(arm)
    return sorted(seen)


def delta_vs_baseline(
    records: list[ResultRecord], baseline_algorithm: str
) -> dict[tuple[str, bool, str], float]:
    """Mean accuracy change of each arm over the baseline, per shift set.

    An arm is an (algorithm, pretrained) pair and is compared against
    the baseline algorithm in the same pretraining regime over the same
    (dataset, config, seed) cells. The delta is the difference of the
    two means over those matched cells.
    """
    tests = _test_records(records)
    by_cell: dict[tuple, ResultRecord] = {}
    for r in tests:
        by_cell[(r.algorithm, r.pretrained, r.dataset, r.config_id, r.seed)] = r
    deltas: dict[tuple[str, bool, str], float] = {}
    for algorithm, pretrained in _arms(tests):
        arm_records = [
            r for r in tests if r.algorithm == algorithm and r.pretrained == pretrained
        ]
        for shift_set in _ordered_shift_sets(arm_records):
            matched = [r for r in arm_records if r.shift_set == shift_set]
            base_values = []
            for r in matched:
                base = by_cell.get(
                    (baseline_algorithm, pretrained, r.dataset, r.config_id, r.seed)
                )
                if base is None:
                    raise MissingBaselineError(
                        f"no {baseline_algorithm!r} (pretrained={pretrained}) result for "
                        f"{r.dataset}/{r.config_id}/seed {r.seed}"
                    )
                base_values.append(base.accuracy)
            arm_mean = sum(r.accuracy for r in matched) / len(matched)
            base_mean = sum(base_values) / len(base_values)
            deltas[(algorithm, pretrained, shift_set)] = arm_mean - base_mean
    return deltas


def format_delta(delta: float) -> str:
    """Render an accuracy delta in percentage points, e.g. ``+9.04``."""
    return f"{delta * 100:+.2f}"


@dataclass(frozen=True)
class ArmComparison:
    algorithm: str
    scratch_mean: float
    pretrained_mean: float
    n_scratch: int
    n_pretrained: int

    @property
    def better(self) -> str:
        if self.pretrained_mean > self.scratch_mean:
            return "pretrained"
        if self.scratch_mean > self.pretrained_mean:
            return "scratch"
        return "tie"


def scratch_vs_pretrained(
    records: list[ResultRecord], strict: bool = True
) -> list[ArmComparison]:
    """Side-by-side means per algorithm, better arm flagged.

    With ``strict`` (the default) an algorithm missing either arm is an
    error; otherwise it is skipped with a warning on stderr.
    """
    tests = _test_records(records)
    comparisons = []
    for algorithm in sorted({r.algorithm for r in tests}):
        scratch = [r.accuracy for r in tests if r.algorithm == algorithm and not r.pretrained]
        pre = [r.accuracy for r in tests if r.algorithm == algorithm and r.pretrained]
        if not scratch or not pre:
            if strict:
                raise MissingArmError(
                    f"algorithm {algorithm!r} lacks a "
                    f"{'scratch' if not scratch else 'pretrained'} arm"
                )
            print(
                f"warning: skipping {algorithm!r}: only one pretraining arm present",
                file=sys.stderr,
            )
            continue
        comparisons.append(
            ArmComparison(
                algorithm=algorithm,
                scratch_mean=sum(scratch) / len(scratch),
                pretrained_mean=sum(pre) / len(pre),
                n_scratch=len(scratch),
                n_pretrained=len(pre),
            )
        )
    return comparisons


# -- results CSV -------------------------------------------------------------


def write_results(records: list[ResultRecord], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RESULTS_HEADER)
        for r in records:
            writer.writerow(
                [
                    r.dataset,
                    r.config_id,
                    r.shift_set,
                    r.attributes,
                    r.algorithm,
                    "true" if r.pretrained else "false",
                    r.seed,
                    r.split,
                    f"{r.accuracy:.6f}",
                ]
            )


def load_results(path: str | Path) -> list[ResultRecord]:
    with Path(path).open(encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty results file") from None
        if tuple(header) != RESULTS_HEADER:
            raise SchemaError(
                f"{path}: header {header} does not match {list(RESULTS_HEADER)}"
            )
        records = []
        seen = set()
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(RESULTS_HEADER):
                raise SchemaError(f"{path}:{lineno}: expected {len(RESULTS_HEADER)} fields")
            if row[5] not in ("true", "false"):
                raise SchemaError(f"{path}:{lineno}: pretrained must be true/false")
            try:
                record = ResultRecord(
                    dataset=row[0],
                    config_id=row[1],
                    shift_set=row[2],
                    attributes=row[3],
                    algorithm=row[4],
                    pretrained=row[5] == "true",
                    seed=int(row[6]),
                    split=row[7],
                    accuracy=float(row[8]),
                )
            except ValueError as exc:
                raise SchemaError(f"{path}:{lineno}: {exc}") from exc
            key = (
                record.dataset,
                record.config_id,
                record.algorithm,
                record.pretrained,
                record.seed,
                record.split,
            )
            if key in seen:
                raise SchemaError(f"{path}:{lineno}: duplicate result for {key}")
            seen.add(key)
            records.append(record)
    return records


# -- view emission -----------------------------------------------------------


def _write_views_csv(views: list[AggregateView], key_name: str, path: Path) -> None:
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([key_name, "mean", "sem", "n"])
        for view in views:
            writer.writerow(
                [dict(view.keys)[key_name], f"{view.mean:.6f}", f"{view.sem:.6f}", view.n]
            )


def emit_views(
    records: list[ResultRecord],
    out_dir: str | Path,
    baseline_algorithm: str | None = None,
) -> None:
    """Write every applicable view as CSV plus a heatmap plot-data JSON."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_views_csv(shift_type_means(records), "shift_set", out / "shift_type_means.csv")
    _write_views_csv(
        difficulty_by_count(records), "shift_count", out / "difficulty_by_count.csv"
    )

    tests = _test_records(records)
    arms = _arms(tests)
    if baseline_algorithm is None and arms:
        baseline_algorithm = arms[0][0]
    if baseline_algorithm is not None and tests:
        deltas = delta_vs_baseline(records, baseline_algorithm)
        with (out / "delta_vs_baseline.csv").open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["algorithm", "pretrained", "shift_set", "delta"])
            for (algorithm, pretrained, shift_set), delta in sorted(
                deltas.items(),
                key=lambda kv: (kv[0][0], kv[0][1], SHIFT_SET_ORDER.index(kv[0][2])),
            ):
                writer.writerow(
                    [
                        algorithm,
                        "true" if pretrained else "false",
                        shift_set,
                        f"{delta:.6f}",
                    ]
                )
        heatmap = {
            "baseline": baseline_algorithm,
            "rows": [s for s in SHIFT_SET_ORDER if any(k[2] == s for k in deltas)],
            "columns": [
                f"{algorithm}{'(pretrained)' if pretrained else ''}"
                for algorithm, pretrained in arms
            ],
            "cells": [
                {
                    "algorithm": algorithm,
                    "pretrained": pretrained,
                    "shift_set": shift_set,
                    "delta": delta,
                    "label": format_delta(delta),
                }
                for (algorithm, pretrained, shift_set), delta in sorted(
                    deltas.items(),
                    key=lambda kv: (kv[0][0], kv[0][1], SHIFT_SET_ORDER.index(kv[0][2])),
                )
            ],
        }
        with (out / "heatmap.json").open("w", encoding="utf-8") as fh:
            json.dump(heatmap, fh, indent=2, sort_keys=True)
            fh.write("\n")

    comparisons = scratch_vs_pretrained(records, strict=False)
    if comparisons:
        with (out / "scratch_vs_pretrained.csv").open(
            "w", encoding="utf-8", newline=""
        ) as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["algorithm", "scratch_mean", "pretrained_mean", "better", "n_scratch", "n_pretrained"]
            )
            for c in comparisons:
                writer.writerow(
                    [
                        c.algorithm,
                        f"{c.scratch_mean:.6f}",
                        f"{c.pretrained_mean:.6f}",
                        c.better,
                        c.n_scratch,
                        c.n_pretrained,
                    ]
                )

    views_json = {
        "shift_type_means": [
            {"shift_set": dict(v.keys)["shift_set"], "mean": v.mean, "sem": v.sem, "n": v.n}
            for v in shift_type_means(records)
        ],
        "difficulty_by_count": [
            {"shift_count": int(dict(v.keys)["shift_count"]), "mean": v.mean, "sem": v.sem, "n": v.n}
            for v in difficulty_by_count(records)
        ],
    }
    with (out / "views.json").open("w", encoding="utf-8") as fh:
        json.dump(views_json, fh, indent=2, sort_keys=True)
        fh.write("\n")
