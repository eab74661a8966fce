"""Shared fixtures: annotation pools and rendered datasets at several scales.

Most statistical tests only need annotation rows, so the big pools are built
in memory without touching the renderer.  Image-backed fixtures are generated
once per session into a temporary directory.
"""

from __future__ import annotations

import pytest

from shiftbench.catalog import builtin_schema
from shiftbench.schema import AnnotationTable
from shiftbench.shiftgen import SamplingParams
from shiftbench.synth import SynthSpec, generate_dataset, instance_id_for


def pool_table_for(schema, per_cell):
    """Annotation-only pool with `per_cell` rows per attribute combination."""
    rows = []
    names = schema.attribute_names
    for combo in schema.combinations():
        for k in range(per_cell):
            rows.append((instance_id_for(combo, k), dict(zip(names, combo))))
    return AnnotationTable(schema=schema, rows=tuple(rows))


@pytest.fixture(scope="session")
def synth_schema():
    return builtin_schema("synth")


@pytest.fixture(scope="session")
def pool20(synth_schema):
    """1620-row pool (20 per combination), matching the default renderer size."""
    return pool_table_for(synth_schema, 20)


@pytest.fixture(scope="session")
def small_dataset(tmp_path_factory):
    """Tiny rendered dataset (8 per combination) for model and CLI tests."""
    out = tmp_path_factory.mktemp("synth-small")
    spec = SynthSpec(per_cell=8, max_jitter=2)
    table = generate_dataset(spec, out)
    return out, table


@pytest.fixture(scope="session")
def accept_dataset(tmp_path_factory):
    """Full-size rendered dataset used by the difficulty-ordering acceptance test."""
    out = tmp_path_factory.mktemp("synth-full")
    spec = SynthSpec(per_cell=130, max_jitter=2)
    table = generate_dataset(spec, out)
    return out, table


def default_params(**overrides):
    base = dict(source_size=100)
    base.update(overrides)
    return SamplingParams(**base)
