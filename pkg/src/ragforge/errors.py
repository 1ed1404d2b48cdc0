"""Exception hierarchy shared across the engine."""


class RagforgeError(Exception):
    """Base class for all engine errors."""


class SchemaError(RagforgeError):
    """A file does not parse against its documented schema."""


class CorpusValidationError(RagforgeError):
    """Parsed data violates a corpus invariant (duplicate keys, dangling labels...)."""


class TransportError(RagforgeError):
    """A remote endpoint could not be reached."""


class ProtocolError(RagforgeError):
    """A remote endpoint answered with a malformed or inconsistent payload."""


class ConfigError(RagforgeError):
    """Inconsistent configuration (provider mismatch, conflicting toggles...)."""


class IndexFormatError(RagforgeError):
    """A persisted index bundle is unreadable: bad magic, wrong version, corrupt data."""


class IntegrityError(RagforgeError):
    """Internal linkage is broken, e.g. a child chunk pointing at a missing parent."""


class GenerationError(RagforgeError):
    """Answer generation failed after exhausting retries."""


class JudgeParseError(RagforgeError):
    """The judge completion did not contain a usable 1-5 score."""


class MetricUnavailableError(RagforgeError):
    """A metric could not be computed (e.g. embedding provider down); never fabricated."""


class PipelineStageError(RagforgeError):
    """Wraps a failure inside the retrieval pipeline with its stage label."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage '{stage}': {cause}")
        self.stage = stage
        self.cause = cause
