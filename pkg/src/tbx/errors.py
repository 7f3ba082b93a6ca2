"""Exception taxonomy.

Two broad families matter to callers: data errors (bad input files,
malformed queries, broken references) and external-service errors
(the extraction endpoint misbehaving). The CLI maps them to exit
codes 2 and 3 respectively.
"""


class TbxError(Exception):
    """Base class for all package errors."""


class DataError(TbxError):
    """Invalid or inconsistent input data."""


class ExternalServiceError(TbxError):
    """The remote extraction service failed."""


class ParseError(DataError):
    """Malformed record in an input file, with a position."""

    def __init__(self, message: str, *, line: int | None = None, field: str | None = None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        suffix = f" ({', '.join(where)})" if where else ""
        super().__init__(f"{message}{suffix}")


class InvalidCategory(DataError):
    """Category string outside the four known drawing regions."""


class ConfidenceOutOfRange(DataError):
    """Detection confidence not in [0, 1]."""


class OutOfBounds(DataError):
    """Requested region does not intersect the image."""


class UnknownLabel(DataError):
    """Markup shape label maps to no known category."""


class RectOutOfBounds(DataError):
    """Markup rectangle exceeds its page bounds."""


class ValidationError(DataError):
    """Dataset failed validation."""


class FixtureMissing(DataError):
    """No extraction fixture exists for the requested drawing."""


class EmptyExtraction(DataError):
    """Extractor response contained no key-value pairs."""


class MissingGroundTruth(DataError):
    """Prediction refers to a drawing absent from the ground truth."""


class QuerySyntaxError(DataError):
    """Query text failed to parse.

    Carries the byte offset of the failure and a description of what
    was expected there.
    """

    def __init__(self, message: str, offset: int, expected: str | None = None):
        self.offset = offset
        self.expected = expected
        detail = f" at offset {offset}"
        if expected:
            detail += f", expected {expected}"
        super().__init__(f"{message}{detail}")


class UnknownKey(DataError):
    """Key resolves to no canonical id in the dictionary."""


class BadTemplate(DataError):
    """Rename template references an unknown placeholder."""


class PersistenceError(TbxError):
    """Journal write failed; in-memory state was left unchanged."""


class TransportError(ExternalServiceError):
    """Extraction endpoint unreachable or persistently failing."""


class AuthError(ExternalServiceError):
    """Extraction endpoint rejected the credentials."""
