"""
Hyperbolic transmission eigenvalues
Autovalores de transmissão e energias de não espalhamento no espaço hiperbólico H^n
Transmission eigenvalues and non-scattering energies for potentials on H^n,
operator identity checks and the corner-scattering Laplace transform criterion.
"""

__version__ = "0.1.0"

from .corner_laplace import HarmonicPolynomial, harmonic_basis, laplace_transform, nonvanishing_scan
from .errors import (
    AdmissibilityError,
    ContractError,
    EnvelopeError,
    FitConditioningError,
    HyperbolicTevError,
    InvalidPointError,
    NumericFailure,
    ParameterError,
)
from .models import BallPoint, ConeSpec, EigenvalueList, HalfSpacePoint, HypergeometricInput, RadialProblem
from .radial_tev import determinant, find_eigenvalues
from .settings import Settings
from .special_functions import gauss_2f1
from .spectral_curves import assemble, eigencurves

__all__ = [
    "AdmissibilityError",
    "BallPoint",
    "ConeSpec",
    "ContractError",
    "EigenvalueList",
    "EnvelopeError",
    "FitConditioningError",
    "HalfSpacePoint",
    "HarmonicPolynomial",
    "HyperbolicTevError",
    "HypergeometricInput",
    "InvalidPointError",
    "NumericFailure",
    "ParameterError",
    "RadialProblem",
    "Settings",
    "assemble",
    "determinant",
    "eigencurves",
    "find_eigenvalues",
    "gauss_2f1",
    "harmonic_basis",
    "laplace_transform",
    "nonvanishing_scan",
]
