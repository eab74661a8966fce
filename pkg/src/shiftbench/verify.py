"""Statistical verification of split manifests against annotation tables.

Every measured value is recounted from the manifest's id lists and the
annotation table; nothing numeric is trusted from the manifest body.
Expected values are recomputed here from the declared parameters with
this module's own closed-form formulas. The verifier deliberately never
calls the generator's weight, composition, or apportionment code, so
the two sides can only agree when both are right.

Tolerances are expressed in counts: largest-remainder apportionment
puts every cell within one unit of its exact quota, so a check that
aggregates k cells tolerates a deviation of about k counts.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    DegenerateTableError,
    NotAnLDDConfigError,
    NotAnSCConfigError,
    NotAUDSConfigError,
)
from .schema import AnnotationTable, Combination
from .shiftgen import ShiftConfig, ShiftKind, SplitManifest, manifest_checksum

_EPS = 1e-9


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    measured: float
    expected: float
    tolerance: float
    detail: str = ""

    @property
    def status(self) -> str:
        return "PASS" if self.passed else "FAIL"


@dataclass(frozen=True)
class VerificationReport:
    config_id: str
    checks: tuple[CheckResult, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


def _within(measured: float, expected: float, tolerance: float) -> bool:
    return abs(measured - expected) <= tolerance + _EPS


def _row_lookup(table: AnnotationTable) -> dict[str, dict[str, str]]:
    return {instance_id: assignment for instance_id, assignment in table.rows}


def _cell_counts(
    ids: tuple[str, ...], table: AnnotationTable, rows: dict[str, dict[str, str]]
) -> Counter:
    counts: Counter = Counter()
    for instance_id in ids:
        assignment = rows.get(instance_id)
        if assignment is not None:
            counts[table.combination_of(assignment)] += 1
    return counts


# -- expectations, recomputed from params only ------------------------------


def expected_cell_weights(config: ShiftConfig, schema) -> dict[Combination, float]:
    """The verifier's own source distribution over full combinations.

    Scalar per-combination products; the geometric series is summed in
    closed form. Normalized to 1.
    """
    params = config.params
    assigned = {attr: kind for kind, attr in config.assignments}
    label_card = schema.label.cardinality
    weights: dict[Combination, float] = {}
    for combo in schema.combinations():
        i = schema.label.index_of(combo[0])
        w = 1.0
        for pos, attr in enumerate(schema.shift_attributes, start=1):
            j = attr.index_of(combo[pos])
            card = attr.cardinality
            kind = assigned.get(attr.name)
            if kind is None:
                w *= 1.0 / card
            elif kind is ShiftKind.SC:
                eps = params.counterexample_fraction
                if i == j:
                    w *= (1.0 - eps) / label_card
                else:
                    w *= eps / (label_card * (card - 1))
            elif kind is ShiftKind.LDD:
                g, r = params.ldd_decay, params.ldd_label_skew
                if g == 1.0:
                    marginal = 1.0 / card
                else:
                    marginal = g**j * (1.0 - g) / (1.0 - g**card)
                favored = r if (j % label_card) == i else 1.0
                w *= marginal * favored / (r + label_card - 1.0)
            elif kind is ShiftKind.UDS:
                kept = card - params.uds_holdout_count
                w *= 0.0 if j >= kept else 1.0 / (label_card * kept)
        weights[combo] = w
    total = sum(weights.values())
    return {combo: w / total for combo, w in weights.items()}


def _expected_pair_weights(
    config: ShiftConfig, schema, attr_name: str
) -> np.ndarray:
    """Expected (label, attribute) joint, marginalized from the full joint."""
    attr = schema.shift_attribute(attr_name)
    joint = np.zeros((schema.label.cardinality, attr.cardinality))
    pos = 1 + [a.name for a in schema.shift_attributes].index(attr_name)
    for combo, w in expected_cell_weights(config, schema).items():
        joint[schema.label.index_of(combo[0]), attr.index_of(combo[pos])] += w
    return joint


def _pair_counts(
    counts: Counter, schema, attr_name: str
) -> np.ndarray:
    attr = schema.shift_attribute(attr_name)
    pos = 1 + [a.name for a in schema.shift_attributes].index(attr_name)
    table = np.zeros((schema.label.cardinality, attr.cardinality))
    for combo, n in counts.items():
        table[schema.label.index_of(combo[0]), attr.index_of(combo[pos])] += n
    return table


def cramers_v_table(counts: np.ndarray) -> float:
    """Bias-uncorrected Cramér's V of a contingency table."""
    counts = np.asarray(counts, dtype=float)
    n = counts.sum()
    row = counts.sum(axis=1)
    col = counts.sum(axis=0)
    if n <= 0 or (row > 0).sum() < 2 or (col > 0).sum() < 2:
        raise DegenerateTableError("both variables need at least two observed levels")
    expected = np.outer(row, col) / n
    mask = expected > 0
    chi2 = ((counts[mask] - expected[mask]) ** 2 / expected[mask]).sum()
    k = min((row > 0).sum(), (col > 0).sum())
    return math.sqrt(chi2 / n / (k - 1))


def cramers_v(
    manifest: SplitManifest,
    table: AnnotationTable,
    attr_name: str,
    split: str = "source",
) -> float:
    """Cramér's V between the label and an attribute on one split."""
    ids = {
        "source": manifest.source_ids,
        "train": manifest.train_ids,
        "val": manifest.val_ids,
        "test": manifest.test_ids,
    }[split]
    rows = _row_lookup(table)
    counts = _cell_counts(ids, table, rows)
    return cramers_v_table(_pair_counts(counts, table.schema, attr_name))


def _require_kind(config: ShiftConfig, kind: ShiftKind) -> str:
    for k, attr in config.assignments:
        if k is kind:
            return attr
    exc = {
        ShiftKind.SC: NotAnSCConfigError,
        ShiftKind.LDD: NotAnLDDConfigError,
        ShiftKind.UDS: NotAUDSConfigError,
    }[kind]
    raise exc(f"config {config.config_id} has no {kind.value} assignment")


# -- individual checks -------------------------------------------------------


def check_checksum(manifest: SplitManifest) -> CheckResult:
    recomputed = manifest_checksum(manifest)
    ok = recomputed == manifest.checksum
    return CheckResult(
        "checksum",
        ok,
        measured=1.0 if ok else 0.0,
        expected=1.0,
        tolerance=0.0,
        detail=f"declared {manifest.checksum[:12]}.., recomputed {recomputed[:12]}..",
    )


def check_membership(manifest: SplitManifest, table: AnnotationTable) -> CheckResult:
    rows = _row_lookup(table)
    splits = {
        "train": manifest.train_ids,
        "val": manifest.val_ids,
        "test": manifest.test_ids,
    }
    problems = []
    for name, ids in splits.items():
        unknown = sum(1 for i in ids if i not in rows)
        if unknown:
            problems.append(f"{unknown} unknown ids in {name}")
        if len(set(ids)) != len(ids):
            problems.append(f"duplicate ids within {name}")
    for (a, ids_a), (b, ids_b) in (
        (("train", splits["train"]), ("val", splits["val"])),
        (("train", splits["train"]), ("test", splits["test"])),
        (("val", splits["val"]), ("test", splits["test"])),
    ):
        overlap = len(set(ids_a) & set(ids_b))
        if overlap:
            problems.append(f"{overlap} ids shared by {a} and {b}")
    return CheckResult(
        "membership_disjointness",
        not problems,
        measured=float(len(problems)),
        expected=0.0,
        tolerance=0.0,
        detail="; ".join(problems) if problems else "splits disjoint, all ids known",
    )


def check_quota_fidelity(manifest: SplitManifest, table: AnnotationTable) -> CheckResult:
    """Recounted source cells against this module's own exact quotas."""
    config = manifest.config
    params = config.params
    rows = _row_lookup(table)
    counts = _cell_counts(manifest.source_ids, table, rows)
    expected = expected_cell_weights(config, table.schema)
    total = sum(counts.values())
    # one extra rounding stage when the counterexample mass is fractional
    tol = 1.0
    if any(k is ShiftKind.SC for k, _ in config.assignments):
        mass = params.counterexample_fraction * params.source_size
        if abs(mass - round(mass)) > _EPS:
            tol = 2.0
    worst = 0.0
    problems = []
    for combo, weight in expected.items():
        deviation = abs(counts.get(combo, 0) - weight * params.source_size)
        worst = max(worst, deviation)
    if total != params.source_size:
        problems.append(f"source size {total} != declared {params.source_size}")
    declared = manifest.cell_quotas
    for combo in expected:
        key = "|".join(combo)
        if key not in declared:
            problems.append(f"cell {key} missing from cell_quotas")
            continue
        target, achieved = declared[key]
        if achieved != counts.get(combo, 0) or target != achieved:
            problems.append(f"cell {key} quotas disagree with recount")
    ok = not problems and worst <= tol + _EPS
    return CheckResult(
        "quota_fidelity",
        ok,
        measured=worst,
        expected=0.0,
        tolerance=tol,
        detail="; ".join(problems) if problems else f"max per-cell deviation {worst:.3f}",
    )


def check_val_split(manifest: SplitManifest, table: AnnotationTable) -> CheckResult:
    """Validation split mirrors the source distribution per cell."""
    params = manifest.config.params
    rows = _row_lookup(table)
    source = _cell_counts(manifest.source_ids, table, rows)
    val = _cell_counts(manifest.val_ids, table, rows)
    worst = 0.0
    for combo, n_source in source.items():
        worst = max(worst, abs(val.get(combo, 0) - params.val_fraction * n_source))
    stray = sum(n for combo, n in val.items() if combo not in source)
    total_dev = abs(len(manifest.val_ids) - params.val_fraction * params.source_size)
    # +-1 largest-remainder per cell, +-0.5 from rounding the val total
    ok = stray == 0 and worst <= 1.5 + _EPS and total_dev <= 0.5 + _EPS
    return CheckResult(
        "val_same_distribution",
        ok,
        measured=worst,
        expected=0.0,
        tolerance=1.5,
        detail=f"val size {len(manifest.val_ids)}, max per-cell deviation {worst:.3f}",
    )


def check_test_uniformity(manifest: SplitManifest, table: AnnotationTable) -> CheckResult:
    """Every declared combination present in test, all with equal counts."""
    rows = _row_lookup(table)
    counts = _cell_counts(manifest.test_ids, table, rows)
    combos = table.schema.combinations()
    observed = np.array([counts.get(c, 0) for c in combos], dtype=float)
    mean = observed.mean() if observed.size else 0.0
    chi2 = float(((observed - mean) ** 2 / mean).sum()) if mean > 0 else math.inf
    ok = observed.size > 0 and observed.min() >= 1 and observed.min() == observed.max()
    return CheckResult(
        "test_uniformity",
        bool(ok),
        measured=chi2,
        expected=0.0,
        tolerance=0.0,
        detail=(
            f"{len(combos)} cells, counts {int(observed.min())}..{int(observed.max())}, "
            f"chi-square {chi2:.3f}"
        ),
    )


def check_counterexample_rate(manifest: SplitManifest, table: AnnotationTable) -> CheckResult:
    """Source fraction of off-diagonal (label, SC attribute) pairs."""
    config = manifest.config
    attr_name = _require_kind(config, ShiftKind.SC)
    schema = table.schema
    attr = schema.shift_attribute(attr_name)
    pos = 1 + [a.name for a in schema.shift_attributes].index(attr_name)
    rows = _row_lookup(table)
    counts = _cell_counts(manifest.source_ids, table, rows)
    off = sum(
        n
        for combo, n in counts.items()
        if schema.label.index_of(combo[0]) != attr.index_of(combo[pos])
    )
    n_source = config.params.source_size
    measured = off / n_source
    expected = config.params.counterexample_fraction
    tolerance = 1.5 / n_source
    return CheckResult(
        f"sc_counterexample_rate[{attr_name}]",
        _within(measured, expected, tolerance),
        measured=measured,
        expected=expected,
        tolerance=tolerance,
        detail=f"{off} counterexamples in {n_source} source instances",
    )


def check_sc_association(manifest: SplitManifest, table: AnnotationTable) -> CheckResult:
    """Cramér's V between label and SC attribute matches the declared coupling."""
    config = manifest.config
    attr_name = _require_kind(config, ShiftKind.SC)
    rows = _row_lookup(table)
    counts = _cell_counts(manifest.source_ids, table, rows)
    observed = _pair_counts(counts, table.schema, attr_name)
    measured = cramers_v_table(observed)
    ideal = _expected_pair_weights(config, table.schema, attr_name)
    expected = cramers_v_table(ideal * config.params.source_size)
    return CheckResult(
        f"sc_association[{attr_name}]",
        _within(measured, expected, 0.05),
        measured=measured,
        expected=expected,
        tolerance=0.05,
        detail=f"Cramér's V {measured:.4f} vs ideal {expected:.4f}",
    )


def check_ldd(manifest: SplitManifest, table: AnnotationTable) -> list[CheckResult]:
    """Geometric attribute marginal and cyclic label skew, in counts."""
    config = manifest.config
    attr_name = _require_kind(config, ShiftKind.LDD)
    schema = table.schema
    attr = schema.shift_attribute(attr_name)
    params = config.params
    rows = _row_lookup(table)
    counts = _cell_counts(manifest.source_ids, table, rows)
    observed = _pair_counts(counts, schema, attr_name)
    expected = _expected_pair_weights(config, schema, attr_name) * params.source_size

    n_cells = len(schema.combinations())
    cells_per_value = n_cells // attr.cardinality
    marginal_dev = float(np.abs(observed.sum(axis=0) - expected.sum(axis=0)).max())
    marginal = CheckResult(
        f"ldd_marginal[{attr_name}]",
        marginal_dev <= cells_per_value + _EPS,
        measured=marginal_dev,
        expected=0.0,
        tolerance=float(cells_per_value),
        detail=(
            "value counts "
            + "/".join(str(int(c)) for c in observed.sum(axis=0))
            + ", targets "
            + "/".join(f"{c:.1f}" for c in expected.sum(axis=0))
        ),
    )
    cells_per_pair = n_cells // (attr.cardinality * schema.label.cardinality)
    skew_dev = float(np.abs(observed - expected).max())
    skew = CheckResult(
        f"ldd_skew[{attr_name}]",
        skew_dev <= cells_per_pair + _EPS,
        measured=skew_dev,
        expected=0.0,
        tolerance=float(cells_per_pair),
        detail=f"max (label, value) count deviation {skew_dev:.3f}",
    )
    return [marginal, skew]


def check_uds(manifest: SplitManifest, table: AnnotationTable) -> list[CheckResult]:
    """Held-out values absent from source, present in test."""
    config = manifest.config
    attr_name = _require_kind(config, ShiftKind.UDS)
    schema = table.schema
    attr = schema.shift_attribute(attr_name)
    pos = 1 + [a.name for a in schema.shift_attributes].index(attr_name)
    held = set(range(attr.cardinality - config.params.uds_holdout_count, attr.cardinality))
    rows = _row_lookup(table)

    def value_counts(ids: tuple[str, ...]) -> Counter:
        out: Counter = Counter()
        for combo, n in _cell_counts(ids, table, rows).items():
            out[attr.index_of(combo[pos])] += n
        return out

    source = value_counts(manifest.source_ids)
    test = value_counts(manifest.test_ids)
    leaked = sum(source.get(j, 0) for j in held)
    min_test = min(test.get(j, 0) for j in held)
    held_names = ",".join(attr.values[j] for j in sorted(held))
    exclusion = CheckResult(
        f"uds_source_exclusion[{attr_name}]",
        leaked == 0,
        measured=float(leaked),
        expected=0.0,
        tolerance=0.0,
        detail=f"held-out values {{{held_names}}} occur {leaked}x in train+val",
    )
    presence = CheckResult(
        f"uds_test_presence[{attr_name}]",
        min_test >= 1,
        measured=float(min_test),
        expected=1.0,
        tolerance=0.0,
        detail=f"min test occurrences over held-out values: {min_test}",
    )
    return [exclusion, presence]


def verify_manifest(manifest: SplitManifest, table: AnnotationTable) -> VerificationReport:
    """Run every check implied by the manifest's shift set."""
    checks: list[CheckResult] = [
        check_checksum(manifest),
        check_membership(manifest, table),
        check_quota_fidelity(manifest, table),
        check_val_split(manifest, table),
        check_test_uniformity(manifest, table),
    ]
    kinds = {k for k, _ in manifest.config.assignments}
    if ShiftKind.SC in kinds:
        checks.append(check_counterexample_rate(manifest, table))
        checks.append(check_sc_association(manifest, table))
    if ShiftKind.LDD in kinds:
        checks.extend(check_ldd(manifest, table))
    if ShiftKind.UDS in kinds:
        checks.extend(check_uds(manifest, table))
    return VerificationReport(manifest.config.config_id, tuple(checks))


# -- report emission ---------------------------------------------------------


def report_to_dict(report: VerificationReport) -> dict:
    return {
        "config_id": report.config_id,
        "passed": report.passed,
        "checks": [
            {
                "name": c.name,
                "status": c.status,
                "measured": c.measured,
                "expected": c.expected,
                "tolerance": c.tolerance,
                "detail": c.detail,
            }
            for c in report.checks
        ],
    }


def save_report(report: VerificationReport, path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        json.dump(report_to_dict(report), fh, indent=2, sort_keys=True)
        fh.write("\n")


def format_report(report: VerificationReport) -> str:
    """Human-readable fixed-width table, one line per check."""
    lines = [f"{report.config_id}: {'PASS' if report.passed else 'FAIL'}"]
    for c in report.checks:
        lines.append(
            f"  {c.status}  {c.name:<40} measured={c.measured:<12.6g} "
            f"expected={c.expected:<12.6g} tol={c.tolerance:.6g}"
        )
        if not c.passed and c.detail:
            lines.append(f"        {c.detail}")
    return "\n".join(lines)
