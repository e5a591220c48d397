"""Exception hierarchy shared across the package."""


class FabSearchError(Exception):
    """Base class for all errors raised by this package."""


class MalformedFile(FabSearchError):
    """A mesh file does not conform to its declared format."""


class EmptyMesh(FabSearchError):
    """A mesh file parsed cleanly but contains no usable triangles."""


class SchemaError(FabSearchError):
    """A part-metadata document is missing required fields or has bad values."""


class DegenerateGeometry(FabSearchError):
    """Mesh normalization is undefined (all vertices coincide)."""


class DomainError(FabSearchError):
    """Numeric argument outside the mathematical domain."""


class ShapeMismatch(FabSearchError):
    """Two signatures have different (n_shells, n_freq) dimensions."""


class DuplicateId(FabSearchError):
    """A part id is already present in the repository."""


class DimensionMismatch(FabSearchError):
    """A signature's dimensions disagree with the repository's."""


class CorruptIndex(FabSearchError):
    """An index or signature file failed magic/version/length validation."""


class TooFewRecords(FabSearchError):
    """Not enough records to build the requested structure."""


class InvalidParams(FabSearchError):
    """Shape-family parameters outside the configured ranges."""


class DegenerateData(FabSearchError):
    """Too few distinct values to cluster."""


class UnservableProcess(FabSearchError):
    """A part's process has no specializing manufacturer configured."""


class UnknownPart(FabSearchError):
    """A part id not present in the repository."""
