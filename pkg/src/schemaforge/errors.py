"""Exception hierarchy shared by every stage of the pipeline."""

from __future__ import annotations


class SchemaForgeError(Exception):
    """Base class for all errors raised by schemaforge."""


class IngestError(SchemaForgeError):
    pass


class MalformedLine(IngestError):
    def __init__(self, file, line_no: int, reason: str = "unparseable input"):
        self.file = str(file)
        self.line_no = line_no
        super().__init__(f"{self.file}:{line_no}: {reason}")


class DuplicateObjectId(IngestError):
    def __init__(self, object_id: str, line_no: int | None = None):
        self.object_id = object_id
        where = f" (line {line_no})" if line_no is not None else ""
        super().__init__(f"duplicate JSON object id {object_id!r}{where}")


class ConfigError(SchemaForgeError):
    pass


class ThresholdTooSmall(SchemaForgeError):
    def __init__(self, band: str, needed: int, threshold: int):
        self.band = band
        super().__init__(
            f"{band} ids overflow their band: need {needed} ids below {threshold}"
        )


class NameCollision(SchemaForgeError):
    pass


class UnknownKey(SchemaForgeError):
    pass


class UnknownPredicate(SchemaForgeError):
    pass


class MissingKeyColumn(SchemaForgeError):
    pass


class MalformedEncoding(SchemaForgeError):
    pass


class ActionNotSingleton(SchemaForgeError):
    pass


class UnknownTarget(SchemaForgeError):
    pass


class IncompatibleEntityDomains(SchemaForgeError):
    pass


class UnknownAttribute(SchemaForgeError):
    pass


class EmptyActionSpace(SchemaForgeError):
    pass


class NoJoinCandidate(SchemaForgeError):
    pass


class SqlError(SchemaForgeError):
    def __init__(self, query_id: str, message: str):
        self.query_id = query_id
        super().__init__(f"query {query_id}: {message}")


class Timeout(SchemaForgeError):
    def __init__(self, query_id: str, message: str = "timed out"):
        self.query_id = query_id
        super().__init__(f"query {query_id}: {message}")
