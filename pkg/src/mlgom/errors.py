"""Exception hierarchy for mlgom."""


class MLGoMError(Exception):
    """Base class for all package errors."""


class ParameterError(MLGoMError, ValueError):
    """Model parameters violate the model's constraints."""


class DomainError(MLGoMError, ValueError):
    """An argument lies outside the domain of a function."""


class DegenerateInputError(MLGoMError):
    """Input lacks the rank or spread an algorithm needs."""


class VertexDegeneracyError(DegenerateInputError):
    """The selected simplex vertices form a (numerically) singular matrix."""


class EstimationError(MLGoMError):
    """A least-squares step could not be carried out."""


class ConfigError(MLGoMError, ValueError):
    """An experiment configuration is invalid."""


class BundleFormatError(MLGoMError, ValueError):
    """A dataset bundle or results file could not be parsed."""
