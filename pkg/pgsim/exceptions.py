"""
Custom exceptions for pgsim
"""


class PgsimError(Exception):
    """Base exception for pgsim errors"""
    pass


class InvalidParameterError(PgsimError, ValueError):
    """Raised when an argument is outside its documented range"""
    pass


class GraphError(PgsimError):
    """Raised when a deterministic graph violates its structural invariants"""
    pass


class CanonicalCodeError(PgsimError):
    """Raised when a canonical code cannot be computed within its caps"""
    pass


class EmbeddingBudgetExceeded(PgsimError):
    """Raised when embedding enumeration passes its cap"""

    def __init__(self, message: str, partial_count: int):
        super().__init__(message)
        self.partial_count = partial_count


class ValidationError(PgsimError):
    """Raised when a probabilistic graph is structurally malformed"""

    def __init__(self, message: str, violations=()):
        super().__init__(message)
        self.violations = list(violations)


class InferenceBudgetExceeded(PgsimError):
    """Raised when exact inference would build a factor beyond the budget; use sampling mode"""
    pass


class UndefinedConditionalError(PgsimError):
    """Raised when conditioning on an event of probability zero"""
    pass


class OracleScaleError(PgsimError):
    """Raised when a graph is too large for possible-world enumeration"""
    pass


class EstimationError(PgsimError):
    """Raised when a sampled conditional saw no conditioning world"""
    pass


class CutFamilyIncomplete(PgsimError):
    """Raised when the minimal embedding cut family cannot be enumerated completely"""
    pass


class FeatureNotEmbeddedError(PgsimError):
    """Raised when a feature has no embedding in the skeleton it is bounded against"""
    pass


class IndexFormatError(PgsimError):
    """Base class for PMI file problems"""
    pass


class CorruptIndexError(IndexFormatError):
    """Raised when a PMI file cannot be parsed"""
    pass


class IndexVersionError(IndexFormatError):
    """Raised when a PMI file was written by a newer format version"""
    pass


class IntegrityError(PgsimError):
    """Raised when a PMI was not built over the database it is queried with"""
    pass


class DocumentError(PgsimError):
    """Raised when an input document is malformed; the message names the offending field"""
    pass
