"""Exception hierarchy.

Every error raised deliberately by this package derives from FlexAftError
so callers (and the CLI) can map failure classes to exit codes without
string matching.
"""


class FlexAftError(Exception):
    """Base class for all package errors."""


class DataValidationError(FlexAftError):
    """Input data violates a structural requirement (shape, sign, order)."""


class KnotError(FlexAftError):
    """Knot construction failed or produced a degenerate vector."""


class IdentifiabilityError(FlexAftError):
    """The requested model has more parameters than the data can support."""


class ParameterError(FlexAftError):
    """A parameter value is outside its valid domain."""


class UndefinedScoreError(FlexAftError):
    """Score requested at a point where the log-likelihood is -inf."""


class GenerationError(FlexAftError):
    """A simulation request cannot be satisfied (e.g. unreachable target)."""


class ModelFileError(FlexAftError):
    """A persisted model file is malformed, stale or inconsistent."""


class ConfigError(FlexAftError):
    """A scenario or study configuration file is malformed."""
