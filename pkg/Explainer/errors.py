"""Exception types shared across the explainer modules.

Each error maps to a CLI exit code through `EXIT_CODES`; library code only
raises, the CLI decides how to report.
"""


class ExplainerError(Exception):
    """Base class for every error raised on purpose by this project."""


class ConfigError(ExplainerError, ValueError):
    """A hyperparameter or flag lies outside its documented domain."""


class DataFormatError(ExplainerError, ValueError):
    """Input data could not be parsed into a dataset."""


class DimensionMismatchError(ExplainerError, ValueError):
    """Query dimension does not match the model dimension."""

    def __init__(self, expected, got):
        super().__init__(f"dimension mismatch: model expects {expected} features, got {got}")
        self.expected = expected
        self.got = got


class ModelInvariantError(ExplainerError, ValueError):
    """Model parameters violate an invariant required downstream."""


class IncompatibleMethodError(ExplainerError, TypeError):
    """Explanation method does not apply to this model kind."""


class GradientInapplicableError(IncompatibleMethodError):
    """Gradient requested for a non-differentiable (KNN) model."""

    MESSAGE = "gradient-based explanations are inapplicable"

    def __init__(self, detail=None):
        msg = self.MESSAGE if detail is None else f"{self.MESSAGE}: {detail}"
        super().__init__(msg)


class NumericalError(ExplainerError, ArithmeticError):
    """Solver failure, singular system or non-finite result."""

    def __init__(self, message, residual=None):
        if residual is not None:
            message = f"{message} (residual={residual:.3e})"
        super().__init__(message)
        self.residual = residual


EXIT_CODES = {
    ConfigError: 2,
    DataFormatError: 2,
    DimensionMismatchError: 2,
    IncompatibleMethodError: 3,
    ModelInvariantError: 3,
    NumericalError: 4,
}


def exit_code_for(exc):
    """Return the CLI exit code for an exception (1 for anything unexpected)."""
    for cls in type(exc).__mro__:
        if cls in EXIT_CODES:
            return EXIT_CODES[cls]
    return 1
