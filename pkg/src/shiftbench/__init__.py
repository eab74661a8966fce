"""Benchmark construction and evaluation for controlled distribution shifts.

Build split manifests that realize spurious correlation (SC), low data
drift (LDD), and unseen data shift (UDS) — alone or concurrently — from
any multi-attribute annotated dataset; verify the statistical
properties of every split independently; train a small reference
classifier; and aggregate accuracies into comparison views. A
self-contained synthetic image dataset makes the whole pipeline runnable
in minutes with no external data.
"""

from .aggregate import (
    AggregateView,
    ArmComparison,
    ResultRecord,
    delta_vs_baseline,
    difficulty_by_count,
    emit_views,
    format_delta,
    load_results,
    scratch_vs_pretrained,
    shift_type_means,
    write_results,
)
from .catalog import (
    CELEBA,
    CONTROLLED_DATASETS,
    DEEPFASHION,
    DSPRITES,
    SHAPES3D,
    SMALLNORB,
    SYNTH,
    builtin_schema,
)
from .errors import ShiftBenchError
from .refmodel import (
    LR_GRID,
    GridResult,
    LinearModel,
    TrainConfig,
    evaluate,
    featurize,
    grid_search,
    loss_and_grad,
    train,
)
from .schema import (
    AnnotationTable,
    AttributeDef,
    AttributeSchema,
    cell_index,
    load_schema,
    load_table,
    save_schema,
    write_table,
)
from .shiftgen import (
    AUTO,
    SHIFT_SET_ORDER,
    SamplingParams,
    ShiftConfig,
    ShiftKind,
    SplitManifest,
    compose_source_weights,
    enumerate_configs,
    largest_remainder,
    ldd_weights,
    load_manifest,
    sample_split,
    save_manifest,
    sc_weights,
    source_quotas,
    uds_mask,
)
from .synth import SynthSpec, generate_dataset, render
from .verify import (
    CheckResult,
    VerificationReport,
    cramers_v,
    cramers_v_table,
    format_report,
    save_report,
    verify_manifest,
)

__version__ = "0.1.0"

__all__ = [
    "AggregateView",
    "AnnotationTable",
    "ArmComparison",
    "AttributeDef",
    "AttributeSchema",
    "AUTO",
    "builtin_schema",
    "CELEBA",
    "cell_index",
    "CheckResult",
    "compose_source_weights",
    "CONTROLLED_DATASETS",
    "cramers_v",
    "cramers_v_table",
    "DEEPFASHION",
    "delta_vs_baseline",
    "difficulty_by_count",
    "DSPRITES",
    "emit_views",
    "enumerate_configs",
    "evaluate",
    "featurize",
    "format_delta",
    "format_report",
    "generate_dataset",
    "GridResult",
    "grid_search",
    "largest_remainder",
    "ldd_weights",
    "LinearModel",
    "load_manifest",
    "load_results",
    "load_schema",
    "load_table",
    "loss_and_grad",
    "LR_GRID",
    "render",
    "ResultRecord",
    "sample_split",
    "SamplingParams",
    "save_manifest",
    "save_report",
    "save_schema",
    "sc_weights",
    "scratch_vs_pretrained",
    "SHAPES3D",
    "shift_type_means",
    "ShiftBenchError",
    "ShiftConfig",
    "ShiftKind",
    "SHIFT_SET_ORDER",
    "SMALLNORB",
    "source_quotas",
    "SplitManifest",
    "SYNTH",
    "SynthSpec",
    "train",
    "TrainConfig",
    "uds_mask",
    "VerificationReport",
    "verify_manifest",
    "write_results",
    "write_table",
]
