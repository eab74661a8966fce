"""Attribute schemas and annotation tables.

An :class:`AttributeSchema` names the label attribute and the shift
attributes of a dataset, each with its canonical (declaration-ordered)
value list. An :class:`AnnotationTable` is the instance pool: one row
per instance id, assigning every schema attribute to a declared value.

Values are compared as exact strings throughout; there is no numeric
coercion, so e.g. azimuth values "0" and "80" stay strings. Canonical
value order is declaration order, and all deterministic tie-breaking
downstream relies on it.
"""

from __future__ import annotations

import csv
import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import (
    DuplicateIdError,
    MissingColumnError,
    MissingRowsError,
    SchemaError,
    UnknownValueError,
)

Combination = tuple[str, ...]
"""One full attribute combination: (label value, shift attr values...) in schema order."""


@dataclass(frozen=True)
class AttributeDef:
    """A named attribute with its ordered set of values."""

    name: str
    values: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.name:
            raise SchemaError("attribute name must be non-empty")
        if len(self.values) < 2:
            raise SchemaError(f"attribute {self.name!r} needs >= 2 values")
        if len(set(self.values)) != len(self.values):
            raise SchemaError(f"attribute {self.name!r} has duplicate values")
        object.__setattr__(self, "values", tuple(self.values))

    @property
    def cardinality(self) -> int:
        return len(self.values)

    def index_of(self, value: str) -> int:
        """Canonical index of a value (declaration order)."""
        try:
            return self.values.index(value)
        except ValueError:
            raise UnknownValueError(
                f"value {value!r} not declared for attribute {self.name!r}"
            ) from None


@dataclass(frozen=True)
class AttributeSchema:
    """Label plus shift attributes of one dataset."""

    dataset_name: str
    label: AttributeDef
    shift_attributes: tuple[AttributeDef, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "shift_attributes", tuple(self.shift_attributes))
        names = [self.label.name] + [a.name for a in self.shift_attributes]
        if len(set(names)) != len(names):
            raise SchemaError(f"attribute names must be unique, got {names}")

    @property
    def attributes(self) -> tuple[AttributeDef, ...]:
        """All attributes, label first, then shift attributes in order."""
        return (self.label,) + self.shift_attributes

    @property
    def attribute_names(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.attributes)

    def shift_attribute(self, name: str) -> AttributeDef:
        for a in self.shift_attributes:
            if a.name == name:
                return a
        raise SchemaError(f"{name!r} is not a shift attribute of {self.dataset_name!r}")

    def combinations(self) -> list[Combination]:
        """All full combinations in canonical row-major order (label varies slowest)."""
        return list(itertools.product(*(a.values for a in self.attributes)))


@dataclass(frozen=True)
class AnnotationTable:
    """Validated instance pool: ids plus per-instance attribute assignments."""

    schema: AttributeSchema
    rows: tuple[tuple[str, dict[str, str]], ...] = field(repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "rows", tuple(self.rows))
        if not self.rows:
            raise MissingRowsError("annotation table has no rows")
        seen: set[str] = set()
        names = set(self.schema.attribute_names)
        for instance_id, assignment in self.rows:
            if instance_id in seen:
                raise DuplicateIdError(f"duplicate instance id {instance_id!r}")
            seen.add(instance_id)
            if set(assignment) != names:
                raise SchemaError(
                    f"row {instance_id!r} assigns {sorted(assignment)}, "
                    f"schema declares {sorted(names)}"
                )
            for attr in self.schema.attributes:
                attr.index_of(assignment[attr.name])

    @property
    def n(self) -> int:
        return len(self.rows)

    def combination_of(self, assignment: dict[str, str]) -> Combination:
        return tuple(assignment[a.name] for a in self.schema.attributes)


CellIndex = dict[Combination, list[str]]


def cell_index(table: AnnotationTable) -> CellIndex:
    """Group instance ids by full attribute combination.

    Every instance lands in exactly one cell; within a cell, ids keep
    table row order. Only observed combinations appear as keys.
    """
    cells: CellIndex = {}
    for instance_id, assignment in table.rows:
        cells.setdefault(table.combination_of(assignment), []).append(instance_id)
    return cells


def load_table(path: str | Path, schema: AttributeSchema) -> AnnotationTable:
    """Load and validate an annotation CSV.

    Expected header: ``instance_id,<attr1>,...,<attrK>`` with the schema's
    attributes present by name (extra columns are rejected to catch typos).
    Row order is preserved.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        if "instance_id" not in header:
            raise MissingColumnError(f"{path}: missing column 'instance_id'")
        for name in schema.attribute_names:
            if name not in header:
                raise MissingColumnError(f"{path}: missing column {name!r}")
        extra = set(header) - {"instance_id", *schema.attribute_names}
        if extra:
            raise SchemaError(f"{path}: unexpected columns {sorted(extra)}")
        rows = [
            (row["instance_id"], {n: row[n] for n in schema.attribute_names})
            for row in reader
        ]
    if not rows:
        raise MissingRowsError(f"{path}: header only, no rows")
    return AnnotationTable(schema=schema, rows=tuple(rows))


def write_table(table: AnnotationTable, path: str | Path) -> None:
    """Write an annotation table as CSV (inverse of :func:`load_table`)."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(("instance_id",) + table.schema.attribute_names)
        for instance_id, assignment in table.rows:
            writer.writerow(
                (instance_id,) + tuple(assignment[n] for n in table.schema.attribute_names)
            )


def schema_to_dict(schema: AttributeSchema) -> dict:
    return {
        "dataset": schema.dataset_name,
        "label": {"name": schema.label.name, "values": list(schema.label.values)},
        "attributes": [
            {"name": a.name, "values": list(a.values)} for a in schema.shift_attributes
        ],
    }


def schema_from_dict(data: dict) -> AttributeSchema:
    try:
        label = AttributeDef(data["label"]["name"], tuple(data["label"]["values"]))
        attrs = tuple(
            AttributeDef(a["name"], tuple(a["values"])) for a in data["attributes"]
        )
        return AttributeSchema(data["dataset"], label, attrs)
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"malformed schema document: {exc}") from exc


def load_schema(path: str | Path) -> AttributeSchema:
    """Load a schema JSON file (see :func:`schema_to_dict` for the layout)."""
    with Path(path).open(encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: invalid JSON: {exc}") from exc
    return schema_from_dict(data)


def save_schema(schema: AttributeSchema, path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        json.dump(schema_to_dict(schema), fh, indent=2)
        fh.write("\n")
