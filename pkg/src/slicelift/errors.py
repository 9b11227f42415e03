"""Exception hierarchy shared across the pipeline.

All data-level failures derive from SliceliftError so the CLI can map
them to a single exit code.
"""


class SliceliftError(Exception):
    pass


# volume I/O
class CorruptHeader(SliceliftError):
    pass


class UnsupportedDatatype(SliceliftError):
    pass


class TruncatedData(SliceliftError):
    pass


class BadDimension(SliceliftError):
    pass


class IoFailure(SliceliftError):
    pass


class ValueOverflow(SliceliftError):
    pass


class IndexOutOfRange(SliceliftError):
    pass


# preprocessing
class NonFiniteInput(SliceliftError):
    pass


# detections interchange
class SchemaViolation(SliceliftError):
    pass


class BoundsViolation(SchemaViolation):
    pass


class EmptyScanId(SchemaViolation):
    pass


# lifting / evaluation
class MixedSlices(SliceliftError):
    pass


class EmptyInput(SliceliftError):
    pass


class ScanMismatch(SliceliftError):
    pass


# phantom generation
class SpecOutOfBounds(SliceliftError):
    pass
