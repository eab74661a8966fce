"""Shift configuration enumeration and deterministic split sampling.

The source distribution of a configuration is built as a product of
per-shift factor matrices over (label, attribute-value) cells:

* spurious correlation (SC): nearly all mass on the identity pairing of
  classes to attribute values, a small counterexample fraction spread
  over the remaining cells;
* low data drift (LDD): geometrically decaying attribute marginals with
  a cyclic label skew inside each attribute value;
* unseen data shift (UDS): the highest-index attribute values carry zero
  source mass and reappear only in the test split.

Unassigned attributes stay uniform. The empty shift set is the UNIFORM
control configuration. Integer cell quotas come from largest-remainder
apportionment, and instances are drawn per cell with a counter-based
PRNG keyed by (seed, config id, cell), so a manifest is a pure function
of (table, config).
"""

from __future__ import annotations

import enum
import hashlib
import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    CardinalityMismatchError,
    EmptyTestCellError,
    HoldoutTooLargeError,
    InsufficientPoolError,
    SchemaError,
    ShiftBenchError,
)
from .rng import keyed_generator
from .schema import AnnotationTable, AttributeSchema, Combination, cell_index


class ShiftKind(enum.Enum):
    SC = "SC"
    LDD = "LDD"
    UDS = "UDS"


KIND_ORDER: tuple[ShiftKind, ...] = (ShiftKind.SC, ShiftKind.LDD, ShiftKind.UDS)

#: Canonical ordering of shift sets, matching the aggregation row order.
SHIFT_SET_ORDER: tuple[str, ...] = (
    "UNIFORM",
    "SC",
    "LDD",
    "UDS",
    "SC+LDD",
    "SC+UDS",
    "LDD+UDS",
    "SC+LDD+UDS",
)

AUTO = None
"""Sentinel for test_per_cell: size test cells to the minimum availability."""


@dataclass(frozen=True)
class SamplingParams:
    """Knobs of the split sampler.

    ``source_size`` is the total train+val count. ``test_per_cell`` of
    ``AUTO`` (None) sizes the test split to the minimum per-cell
    availability after source sampling, which guarantees exact test
    uniformity.
    """

    source_size: int
    val_fraction: float = 0.20
    counterexample_fraction: float = 0.01
    ldd_decay: float = 0.5
    ldd_label_skew: float = 4.0
    uds_holdout_count: int = 1
    test_per_cell: int | None = AUTO

    def __post_init__(self) -> None:
        if self.source_size < 1:
            raise ShiftBenchError(f"source_size must be positive, got {self.source_size}")
        if not 0.0 < self.val_fraction < 1.0:
            raise ShiftBenchError(f"val_fraction must be in (0,1), got {self.val_fraction}")
        if not 0.0 <= self.counterexample_fraction < 1.0:
            raise ShiftBenchError(
                f"counterexample_fraction must be in [0,1), got {self.counterexample_fraction}"
            )
        if not 0.0 < self.ldd_decay <= 1.0:
            raise ShiftBenchError(f"ldd_decay must be in (0,1], got {self.ldd_decay}")
        if self.ldd_label_skew < 1.0:
            raise ShiftBenchError(f"ldd_label_skew must be >= 1, got {self.ldd_label_skew}")
        if self.uds_holdout_count < 1:
            raise ShiftBenchError(
                f"uds_holdout_count must be positive, got {self.uds_holdout_count}"
            )
        if self.test_per_cell is not None and self.test_per_cell < 1:
            raise ShiftBenchError(f"test_per_cell must be positive, got {self.test_per_cell}")


def shift_set_token(kinds: tuple[ShiftKind, ...]) -> str:
    """Canonical token for a shift set: ``SC+LDD``, or ``UNIFORM`` when empty."""
    if not kinds:
        return "UNIFORM"
    ordered = sorted(kinds, key=KIND_ORDER.index)
    return "+".join(k.value for k in ordered)


@dataclass(frozen=True)
class ShiftConfig:
    """One (source, target) distribution pair.

    ``assignments`` maps each shift kind to the attribute it acts on;
    the empty tuple denotes the UNIFORM control. Kinds are kept in
    canonical SC < LDD < UDS order.
    """

    config_id: str
    dataset_name: str
    assignments: tuple[tuple[ShiftKind, str], ...]
    params: SamplingParams
    seed: int

    def __post_init__(self) -> None:
        ordered = tuple(sorted(self.assignments, key=lambda a: KIND_ORDER.index(a[0])))
        object.__setattr__(self, "assignments", ordered)
        kinds = [k for k, _ in ordered]
        attrs = [a for _, a in ordered]
        if len(ordered) > 3:
            raise ShiftBenchError("a config carries at most three shifts")
        if len(set(kinds)) != len(kinds):
            raise ShiftBenchError(f"shift kinds must be distinct, got {kinds}")
        if len(set(attrs)) != len(attrs):
            raise ShiftBenchError(f"no attribute carries two shifts, got {attrs}")

    @classmethod
    def build(
        cls,
        dataset_name: str,
        assignments: tuple[tuple[ShiftKind, str], ...],
        params: SamplingParams,
        seed: int,
    ) -> "ShiftConfig":
        ordered = tuple(sorted(assignments, key=lambda a: KIND_ORDER.index(a[0])))
        kinds_tok = shift_set_token(tuple(k for k, _ in ordered))
        attrs_tok = "+".join(a for _, a in ordered) if ordered else "-"
        config_id = f"{dataset_name}/{kinds_tok}/{attrs_tok}/{seed}"
        return cls(config_id, dataset_name, ordered, params, seed)

    @property
    def kinds(self) -> tuple[ShiftKind, ...]:
        return tuple(k for k, _ in self.assignments)

    @property
    def shift_set(self) -> str:
        return shift_set_token(self.kinds)

    def attribute_for(self, kind: ShiftKind) -> str:
        for k, attr in self.assignments:
            if k is kind:
                return attr
        raise ShiftBenchError(f"config {self.config_id} has no {kind.value} assignment")


def validate_config(config: ShiftConfig, schema: AttributeSchema) -> None:
    """Check a config against a schema; raises on any violation."""
    if config.dataset_name != schema.dataset_name:
        raise SchemaError(
            f"config is for {config.dataset_name!r}, schema is {schema.dataset_name!r}"
        )
    for kind, attr_name in config.assignments:
        attr = schema.shift_attribute(attr_name)
        if kind is ShiftKind.SC and schema.label.cardinality > attr.cardinality:
            raise CardinalityMismatchError(
                f"SC pairing needs label cardinality {schema.label.cardinality} "
                f"<= attribute cardinality {attr.cardinality} ({attr_name})"
            )
        if kind is ShiftKind.UDS and config.params.uds_holdout_count >= attr.cardinality:
            raise HoldoutTooLargeError(
                f"holdout {config.params.uds_holdout_count} must be < "
                f"cardinality {attr.cardinality} of {attr_name!r}"
            )


def enumerate_configs(
    schema: AttributeSchema, params: SamplingParams, seed: int
) -> list[ShiftConfig]:
    """All shift configurations for a schema, in canonical order.

    Order: the UNIFORM control; each single kind over each attribute;
    each kind pair over each ordered attribute pair; the kind triple
    over each ordered attribute triple. With A attributes that is
    1 + 3A + 3A(A-1) + A(A-1)(A-2) configs (34 when A=3).
    """
    attrs = [a.name for a in schema.shift_attributes]
    if not attrs:
        raise SchemaError(f"schema {schema.dataset_name!r} has no shift attributes")

    def mk(assignments: tuple[tuple[ShiftKind, str], ...]) -> ShiftConfig:
        return ShiftConfig.build(schema.dataset_name, assignments, params, seed)

    configs = [mk(())]
    for kind in KIND_ORDER:
        for attr in attrs:
            configs.append(mk(((kind, attr),)))
    for k1, k2 in itertools.combinations(KIND_ORDER, 2):
        for a1, a2 in itertools.permutations(attrs, 2):
            configs.append(mk(((k1, a1), (k2, a2))))
    for a1, a2, a3 in itertools.permutations(attrs, 3):
        configs.append(
            mk(((ShiftKind.SC, a1), (ShiftKind.LDD, a2), (ShiftKind.UDS, a3)))
        )
    return configs


def sc_weights(label_card: int, attr_card: int, epsilon: float) -> np.ndarray:
    """Spurious-correlation factor over (label, attribute value) cells.

    Class i is paired with attribute value i (identity on canonical
    order). The diagonal shares total weight 1 - epsilon equally; the
    remaining cells share epsilon equally.
    """
    if label_card > attr_card:
        raise CardinalityMismatchError(
            f"cannot pair {label_card} classes with {attr_card} values injectively"
        )
    w = np.full((label_card, attr_card), 0.0)
    off_cells = label_card * attr_card - label_card
    if off_cells and epsilon > 0.0:
        w[:] = epsilon / off_cells
    idx = np.arange(label_card)
    w[idx, idx] = (1.0 - epsilon) / label_card
    return w


def ldd_weights(label_card: int, attr_card: int, decay: float, label_skew: float) -> np.ndarray:
    """Low-data-drift factor over (label, attribute value) cells.

    Attribute value j carries marginal weight proportional to decay**j;
    within value j, label j mod C is favored by label_skew over the
    others. All cells stay strictly positive.
    """
    j = np.arange(attr_card)
    marginal = decay**j
    marginal /= marginal.sum()
    cond = np.ones((label_card, attr_card))
    cond[j % label_card, j] = label_skew
    cond /= cond.sum(axis=0, keepdims=True)
    return cond * marginal


def uds_mask(attr_card: int, holdout: int) -> frozenset[int]:
    """Indices of the held-out attribute values: the ``holdout`` highest."""
    if not 1 <= holdout < attr_card:
        raise HoldoutTooLargeError(
            f"holdout must satisfy 1 <= h < {attr_card}, got {holdout}"
        )
    return frozenset(range(attr_card - holdout, attr_card))


def _uds_weights(label_card: int, attr_card: int, holdout: int) -> np.ndarray:
    """Unseen-data factor: zero on held-out values, uniform elsewhere."""
    held = uds_mask(attr_card, holdout)
    w = np.full((label_card, attr_card), 1.0 / (label_card * (attr_card - holdout)))
    w[:, sorted(held)] = 0.0
    return w


_FACTOR_BUILDERS = {
    ShiftKind.SC: lambda C, V, p: sc_weights(C, V, p.counterexample_fraction),
    ShiftKind.LDD: lambda C, V, p: ldd_weights(C, V, p.ldd_decay, p.ldd_label_skew),
    ShiftKind.UDS: lambda C, V, p: _uds_weights(C, V, p.uds_holdout_count),
}


def compose_source_weights(config: ShiftConfig, schema: AttributeSchema) -> np.ndarray:
    """Source weight tensor over all full attribute combinations.

    Shape is (label cardinality, attr1 cardinality, ...) with axes in
    schema order. Each assigned shift contributes its factor matrix on
    the (label, attribute) pair; unassigned attributes contribute a
    uniform factor. The UNIFORM config yields a constant tensor. Zero
    weights arise only from UDS holdouts.
    """
    validate_config(config, schema)
    cards = [a.cardinality for a in schema.attributes]
    if not config.assignments:
        return np.full(cards, 1.0 / np.prod(cards))
    assigned = {attr: kind for kind, attr in config.assignments}
    tensor = np.ones(cards)
    for axis, attr in enumerate(schema.shift_attributes, start=1):
        if attr.name in assigned:
            kind = assigned[attr.name]
            factor = _FACTOR_BUILDERS[kind](
                schema.label.cardinality, attr.cardinality, config.params
            )
            shape = [1] * len(cards)
            shape[0] = schema.label.cardinality
            shape[axis] = attr.cardinality
            tensor = tensor * factor.reshape(shape)
        else:
            tensor = tensor / attr.cardinality
    return tensor


def largest_remainder(weights: np.ndarray, total: int) -> np.ndarray:
    """Apportion ``total`` integer units proportionally to ``weights``.

    Hamilton's method: floor the exact quotas, then hand the leftover
    units to the largest fractional remainders, breaking ties in flat
    (row-major) index order. Every cell ends within 1 of its exact
    quota, and zero-weight cells receive nothing.
    """
    flat = np.asarray(weights, dtype=float).ravel()
    if total < 0:
        raise ShiftBenchError(f"total must be >= 0, got {total}")
    if np.any(flat < 0) or flat.sum() <= 0:
        raise ShiftBenchError("weights must be non-negative with positive sum")
    quota = flat / flat.sum() * total
    base = np.floor(quota).astype(np.int64)
    frac = quota - base
    frac[flat == 0] = -1.0  # never top up a zero-weight cell
    units = int(total - base.sum())
    if units:
        order = np.argsort(-frac, kind="stable")
        base[order[:units]] += 1
    return base.reshape(np.shape(weights))


def source_quotas(config: ShiftConfig, schema: AttributeSchema) -> np.ndarray:
    """Integer per-cell source quotas, flat in combination order.

    Largest-remainder apportionment of source_size over the composed
    weights. With an SC assignment the apportionment runs in two
    stages: the diagonal mass 1 - epsilon and the counterexample mass
    epsilon are apportioned against each other first, then the cells
    within each group. A single flat pass would let the tiny
    off-diagonal remainders lose every leftover unit to the diagonal
    cells whenever another shift skews the weights, silently dropping
    all counterexamples; the two-stage form keeps the realized
    counterexample count within 1 of epsilon * source_size under any
    composition.
    """
    weights = compose_source_weights(config, schema)
    flat = weights.ravel()
    total = config.params.source_size
    sc_attr = next((a for k, a in config.assignments if k is ShiftKind.SC), None)
    if sc_attr is None:
        return largest_remainder(flat, total)
    cards = [a.cardinality for a in schema.attributes]
    axis = 1 + [a.name for a in schema.shift_attributes].index(sc_attr)
    idx = np.unravel_index(np.arange(flat.size), cards)
    diag = idx[0] == idx[axis]
    alloc = largest_remainder(np.array([flat[diag].sum(), flat[~diag].sum()]), total)
    quotas = np.zeros(flat.size, dtype=np.int64)
    for mask, units in ((diag, int(alloc[0])), (~diag, int(alloc[1]))):
        if units:
            quotas[mask] = largest_remainder(flat[mask], units)
    return quotas


@dataclass(frozen=True)
class SplitManifest:
    """Deterministic instance-id lists realizing one config's splits."""

    config: ShiftConfig
    train_ids: tuple[str, ...] = field(repr=False)
    val_ids: tuple[str, ...] = field(repr=False)
    test_ids: tuple[str, ...] = field(repr=False)
    cell_quotas: dict[str, tuple[int, int]] = field(repr=False)
    checksum: str

    @property
    def source_ids(self) -> tuple[str, ...]:
        return self.train_ids + self.val_ids

    @property
    def counts(self) -> dict[str, int]:
        return {
            "train": len(self.train_ids),
            "val": len(self.val_ids),
            "test": len(self.test_ids),
        }


def cell_key(combo: Combination) -> str:
    """Serialize a combination as a manifest/cell-quota key."""
    return "|".join(combo)


def sample_split(table: AnnotationTable, config: ShiftConfig) -> SplitManifest:
    """Sample the train/val/test splits realizing a config.

    Per-cell source quotas come from source_quotas. Instances are drawn
    without replacement per cell in an order fixed by a PRNG keyed on
    (seed, config id, cell); the validation split takes a per-cell
    val_fraction share of the source; the test split takes the same
    number of leftover instances from every declared combination.
    """
    schema = table.schema
    params = config.params
    combos = schema.combinations()
    quotas = source_quotas(config, schema)

    pool = cell_index(table)
    picked: dict[Combination, list[str]] = {}
    leftover: dict[Combination, list[str]] = {}
    for combo, quota in zip(combos, quotas):
        avail = pool.get(combo, [])
        if quota > len(avail):
            raise InsufficientPoolError(
                f"cell {cell_key(combo)} needs {quota} instances, pool has {len(avail)}"
            )
        order = keyed_generator(config.seed, config.config_id, cell_key(combo))
        perm = order.permutation(len(avail))
        drawn = [avail[i] for i in perm]
        picked[combo] = drawn[: int(quota)]
        leftover[combo] = drawn[int(quota) :]

    val_total = int(round(params.val_fraction * params.source_size))
    val_counts = largest_remainder(quotas.astype(float), val_total)

    m = params.test_per_cell
    if m is AUTO:
        m = min(len(leftover[c]) for c in combos)
    for combo in combos:
        if not leftover[combo]:
            raise EmptyTestCellError(
                f"no instances left for test in cell {cell_key(combo)}"
            )
        if len(leftover[combo]) < m:
            raise InsufficientPoolError(
                f"test needs {m} per cell, cell {cell_key(combo)} has {len(leftover[combo])}"
            )

    train_ids: list[str] = []
    val_ids: list[str] = []
    test_ids: list[str] = []
    cell_quotas: dict[str, tuple[int, int]] = {}
    for combo, quota, n_val in zip(combos, quotas, val_counts):
        source = picked[combo]
        val_ids.extend(source[: int(n_val)])
        train_ids.extend(source[int(n_val) :])
        test_ids.extend(leftover[combo][: int(m)])
        cell_quotas[cell_key(combo)] = (int(quota), len(source))

    manifest = SplitManifest(
        config=config,
        train_ids=tuple(train_ids),
        val_ids=tuple(val_ids),
        test_ids=tuple(test_ids),
        cell_quotas=cell_quotas,
        checksum="",
    )
    return SplitManifest(
        config=config,
        train_ids=manifest.train_ids,
        val_ids=manifest.val_ids,
        test_ids=manifest.test_ids,
        cell_quotas=manifest.cell_quotas,
        checksum=manifest_checksum(manifest),
    )


# -- serialization ----------------------------------------------------------


def params_to_dict(params: SamplingParams) -> dict:
    return {
        "source_size": params.source_size,
        "val_fraction": params.val_fraction,
        "counterexample_fraction": params.counterexample_fraction,
        "ldd_decay": params.ldd_decay,
        "ldd_label_skew": params.ldd_label_skew,
        "uds_holdout_count": params.uds_holdout_count,
        "test_per_cell": params.test_per_cell,
    }


def params_from_dict(data: dict) -> SamplingParams:
    return SamplingParams(**data)


def config_to_dict(config: ShiftConfig) -> dict:
    return {
        "config_id": config.config_id,
        "dataset": config.dataset_name,
        "assignments": [[k.value, a] for k, a in config.assignments],
        "params": params_to_dict(config.params),
        "seed": config.seed,
    }


def config_from_dict(data: dict) -> ShiftConfig:
    return ShiftConfig(
        config_id=data["config_id"],
        dataset_name=data["dataset"],
        assignments=tuple((ShiftKind(k), a) for k, a in data["assignments"]),
        params=params_from_dict(data["params"]),
        seed=data["seed"],
    )


def manifest_to_dict(manifest: SplitManifest) -> dict:
    return {
        "config": config_to_dict(manifest.config),
        "counts": manifest.counts,
        "train_ids": list(manifest.train_ids),
        "val_ids": list(manifest.val_ids),
        "test_ids": list(manifest.test_ids),
        "cell_quotas": {k: list(v) for k, v in manifest.cell_quotas.items()},
        "checksum": manifest.checksum,
    }


def manifest_from_dict(data: dict) -> SplitManifest:
    return SplitManifest(
        config=config_from_dict(data["config"]),
        train_ids=tuple(data["train_ids"]),
        val_ids=tuple(data["val_ids"]),
        test_ids=tuple(data["test_ids"]),
        cell_quotas={k: (v[0], v[1]) for k, v in data["cell_quotas"].items()},
        checksum=data["checksum"],
    )


def manifest_checksum(manifest: SplitManifest) -> str:
    """SHA-256 of the canonical serialization minus the checksum field."""
    payload = manifest_to_dict(manifest)
    payload.pop("checksum")
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def save_manifest(manifest: SplitManifest, path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        json.dump(manifest_to_dict(manifest), fh, sort_keys=True, indent=2)
        fh.write("\n")


def load_manifest(path: str | Path) -> SplitManifest:
    with Path(path).open(encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: invalid JSON: {exc}") from exc
    return manifest_from_dict(data)


def manifest_filename(config: ShiftConfig) -> str:
    """Filesystem-safe file name for a config's manifest."""
    safe = config.config_id.replace("/", "__").replace(" ", "_")
    return f"{safe}.json"
