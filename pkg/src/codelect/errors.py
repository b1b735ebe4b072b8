"""Exception types shared across the pipeline.

Exit-code mapping for the CLI: ValidationError subclasses exit 1,
PipelineIOError subclasses exit 2.
"""


class CodelectError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(CodelectError):
    """Bad inputs, unsatisfiable requests, malformed data. CLI exit 1."""


class PipelineIOError(CodelectError):
    """Filesystem or subprocess/protocol failure. CLI exit 2."""


class LexError(ValidationError):
    def __init__(self, message, position=None):
        super().__init__(message)
        self.position = position


class ParseError(ValidationError):
    """Source does not satisfy the language's structural grammar."""


class AnalysisUnavailable(ValidationError):
    """Syntactic analysis could not be produced (unit does not parse)."""


class EmptyCorpus(ValidationError):
    """Ingest finished with zero surviving units."""


class TokenizeError(ValidationError):
    pass


class TooShort(ValidationError):
    """Unit has too few tokens to emit a training example."""


class InconsistentRecord(ValidationError):
    """A perturbation record does not agree with the unit it claims to describe."""


class AlignmentSkipped(ValidationError):
    """External-mode token counts of base and obfuscated variant differ."""


class WrongKind(ValidationError):
    pass


class NothingToObfuscate(ValidationError):
    pass


class NoValidShuffle(ValidationError):
    """No (span, permutation) draw produced a dependency-violating shuffle."""


class NothingToShuffle(ValidationError):
    pass


class NothingToReplace(ValidationError):
    pass


class Underfull(ValidationError):
    """Requested more triplets than the corpus admits."""

    def __init__(self, requested, feasible):
        super().__init__(
            f"requested {requested} triplets but only {feasible} are feasible"
        )
        self.requested = requested
        self.feasible = feasible


class ShapeError(ValidationError):
    pass


class DomainError(ValidationError):
    pass


class ZeroVector(ValidationError):
    pass


class EmbedError(PipelineIOError):
    """Embedder protocol violation, dims mismatch, or timeout."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        # Vectors successfully received before the failure.
        self.partial = partial or []


class NoData(ValidationError):
    pass
