"""Exception and warning types shared across the toolkit."""


class PipelineError(Exception):
    """Base class for all toolkit errors."""


class DuplicateDate(PipelineError):
    """Two observations share the same calendar date."""


class NonFiniteValue(PipelineError):
    """A series value is NaN or infinite."""


class DegenerateRange(PipelineError):
    """min == max, so 0-100 normalization is undefined."""


class SeriesTooShort(PipelineError):
    """Not enough observations for the requested operation."""


class EmptyIntersection(PipelineError):
    """No common dates (or regions) between inputs."""


class RegionMismatch(PipelineError):
    """Series carry different region tags."""


class LengthMismatch(PipelineError):
    """Paired series do not share the same date vector."""


class ZeroVariance(PipelineError):
    """A series is constant where variation is required."""


class DomainError(PipelineError):
    """Argument outside the mathematical domain of a function."""


class SingularDesign(PipelineError):
    """Regression design matrix is rank-deficient within tolerance."""


class TooFewSamples(PipelineError):
    """Supervised set too small to split or evaluate."""


class ShapeMismatch(PipelineError):
    """Array shape incompatible with the network configuration."""


class NumericalDivergence(PipelineError):
    """Training produced a non-finite loss or parameter."""


class ParseError(PipelineError):
    """Malformed input file; message carries file, row and column."""


class ValueOutOfRange(PipelineError):
    """Input value violates a documented range constraint."""


class InvalidSpec(PipelineError):
    """Synthetic-generator specification is inconsistent."""


class DataWarning(UserWarning):
    """Recoverable data issue (skipped row, clamped value, dropped region)."""


class StillNonStationary(UserWarning):
    """Differencing hit max order without the unit-root test rejecting."""
