"""Exception types shared across the package.

The CLI maps these onto exit codes: domain and regime failures exit 3,
non-convergence exits 4 after writing the flagged result.
"""


class DomainError(ValueError):
    """An argument lies outside the documented domain."""


class FeasibilityError(DomainError):
    """A constraint set is empty for the requested parameters."""


class RegimeError(DomainError):
    """The requested closed form does not apply in this parameter regime."""


class CalibrationError(RuntimeError):
    """A scalar calibration target is outside the empirically observed range."""
