"""Exception types raised across the package.

Grouped here so callers (and the CLI exit-code mapping) can catch by
family: ``SchemaError`` covers malformed input files and annotation
tables, everything else derives from ``ShiftBenchError`` directly.
"""


class ShiftBenchError(Exception):
    """Base class for all package errors."""


class SchemaError(ShiftBenchError):
    """Malformed schema file, annotation table, or result log."""


class MissingColumnError(SchemaError):
    """A schema attribute has no matching column in the annotation CSV."""


class UnknownValueError(SchemaError):
    """A cell holds a value not declared by the attribute definition."""


class DuplicateIdError(SchemaError):
    """Two rows share the same instance id."""


class MissingRowsError(SchemaError):
    """The annotation table has a header but no rows."""


class CardinalityMismatchError(ShiftBenchError):
    """More classes than attribute values; no injective pairing exists."""


class HoldoutTooLargeError(ShiftBenchError):
    """Holdout count must leave at least one attribute value in the source."""


class InsufficientPoolError(ShiftBenchError):
    """A cell's sampling quota exceeds the instances available in the pool."""


class EmptyTestCellError(ShiftBenchError):
    """A declared attribute combination has no instances left for the test split."""


class NotAnSCConfigError(ShiftBenchError):
    """Check requires a config with a spurious-correlation assignment."""


class NotAnLDDConfigError(ShiftBenchError):
    """Check requires a config with a low-data-drift assignment."""


class NotAUDSConfigError(ShiftBenchError):
    """Check requires a config with an unseen-data assignment."""


class DegenerateTableError(ShiftBenchError):
    """Association statistic undefined: a variable is constant in the split."""


class JitterOutOfRangeError(ShiftBenchError):
    """Requested position jitter exceeds the renderer's bound."""


class SizeMismatchError(ShiftBenchError):
    """Image dimensions do not match the model's configured input size."""


class EmptySplitError(ShiftBenchError):
    """Training, validation, or test split has no instances."""


class MissingBaselineError(ShiftBenchError):
    """Baseline algorithm has no record for a compared (dataset, config, seed)."""


class MissingArmError(ShiftBenchError):
    """Algorithm lacks one of the scratch/pretrained arms being compared."""
