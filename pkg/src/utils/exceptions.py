"""
Exceptions Module

Error hierarchy for the cocycle laboratory. Every class subclasses the builtin
exception a caller would naturally expect, so ``except ValueError`` keeps
working, and the CLI maps the two top-level kinds onto exit codes.
"""


class CocycleLabError(Exception):
    """Base class for all laboratory errors."""


class ConfigurationError(CocycleLabError, ValueError):
    """A configuration document is missing fields or has invalid values (exit code 2)."""


class BudgetExceededError(CocycleLabError, RuntimeError):
    """An enumeration or iteration would exceed the configured step budget (exit code 3)."""


class NonPrimitiveSubstitutionError(CocycleLabError, ValueError):
    """A substitution rule is not primitive."""


class IllegalWindowError(CocycleLabError, KeyError):
    """A window word is not a legal factor of the subshift."""

    def __init__(self, window):
        self.window = window
        super().__init__(f"Illegal window: '{window}' is not a legal factor")

    def __str__(self):
        return self.args[0]


class InsufficientConfigurationError(CocycleLabError, ValueError):
    """A configuration word is too short for the requested product."""

    def __init__(self, needed, available):
        self.needed = needed
        self.available = available
        super().__init__(
            f"Configuration too short: need {needed} symbols, got {available}; "
            f"pass a longer prefix"
        )


class DegenerateSingularValuesError(CocycleLabError, ArithmeticError):
    """The singular gap of a product is below gap_tol (no hyperbolic splitting at this scale)."""


class DeterminantError(CocycleLabError, ArithmeticError):
    """A blended matrix has nonpositive determinant and cannot be renormalized."""


class CoverRefinementError(CocycleLabError, RuntimeError):
    """The energy cover could not be refined enough to meet the requested error."""
