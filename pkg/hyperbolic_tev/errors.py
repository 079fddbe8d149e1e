"""
Exception hierarchy for hyperbolic_tev
"""

from typing import Any, Dict, Optional


class HyperbolicTevError(Exception):
    """Base class for every error raised by the package"""


class InvalidPointError(HyperbolicTevError, ValueError):
    """Point outside the domain of its model"""


class ParameterError(HyperbolicTevError, ValueError):
    """Parameter outside its admissible range"""


class EnvelopeError(ParameterError):
    """Request outside the accuracy envelope of the hypergeometric engine"""


class AdmissibilityError(ParameterError):
    """Direction rho0 is not admissible for the requested cone"""


class NumericFailure(HyperbolicTevError, ArithmeticError):
    """
    A numerical procedure did not deliver a trustworthy result

    Args:
        message: Human readable description
        diagnostics: Free-form values describing the failed computation
    """

    def __init__(self, message: str, diagnostics: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})

    def __str__(self) -> str:
        base = super().__str__()
        if not self.diagnostics:
            return base
        details = ", ".join(f"{k}={v!r}" for k, v in sorted(self.diagnostics.items()))
        return f"{base} ({details})"


class FitConditioningError(NumericFailure):
    """Least-squares Taylor fit too ill-conditioned at the requested order"""


class ContractError(HyperbolicTevError):
    """Violated pre- or post-condition of an operation"""
