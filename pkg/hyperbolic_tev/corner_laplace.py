"""
Laplace transforms of harmonic polynomials over corners
Harmonic homogeneous polynomials, admissible isotropic directions rho0 and the
transform int_C exp(rho0 . x) P(x) dx over 2D sectors and (rotated) orthants.
"""

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache, reduce
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import sympy
from scipy import integrate

from .errors import AdmissibilityError, FitConditioningError, ParameterError
from .models import AdmissibleDirection, ConeSpec, ScanReport
from .operators import coordinate_symbols

logger = logging.getLogger(__name__)

MultiIndex = Tuple[int, ...]
Coefficient = Union[int, float, complex, sympy.Expr]

ISOTROPY_TOL = 1e-14
SCAN_THRESHOLD = 1e-6
MAX_CONDITION = 1e12


@lru_cache(maxsize=None)
def multi_indices(n: int, degree: int) -> Tuple[MultiIndex, ...]:
    """Multi-indices of total degree `degree` in graded lexicographic order"""
    if degree < 0:
        return ()
    if n == 1:
        return ((degree,),)
    out = []
    for first in range(degree, -1, -1):
        for rest in multi_indices(n - 1, degree - first):
            out.append((first,) + rest)
    return tuple(out)


@lru_cache(maxsize=None)
def laplacian_matrix(n: int, degree: int) -> sympy.Matrix:
    """Integer matrix of Lap from degree-N coefficients to degree-(N-2) coefficients"""
    rows = multi_indices(n, degree - 2)
    cols = multi_indices(n, degree)
    position = {alpha: i for i, alpha in enumerate(rows)}
    D = sympy.zeros(max(len(rows), 1), len(cols))
    for j, alpha in enumerate(cols):
        for axis in range(n):
            if alpha[axis] >= 2:
                target = list(alpha)
                target[axis] -= 2
                D[position[tuple(target)], j] += alpha[axis] * (alpha[axis] - 1)
    return D


@dataclass
class HarmonicPolynomial:
    """
    Homogeneous polynomial of degree N in n variables

    Coefficients are keyed by multi-index; missing keys are zero. Harmonicity
    is a checked property, see laplacian_defect.
    """
    n: int
    degree: int
    coefficients: Dict[MultiIndex, Coefficient] = field(default_factory=dict)

    def __post_init__(self):
        if self.n < 1 or self.degree < 0:
            raise ParameterError(f"Invalid polynomial shape n={self.n}, N={self.degree}")
        clean = {}
        for alpha, value in self.coefficients.items():
            alpha = tuple(int(a) for a in alpha)
            if len(alpha) != self.n or sum(alpha) != self.degree or min(alpha) < 0:
                raise ParameterError(f"Multi-index {alpha} is not of degree {self.degree} in {self.n} variables")
            if value != 0:
                clean[alpha] = value
        self.coefficients = clean

    def vector(self) -> List[Coefficient]:
        """Coefficients in graded lexicographic order"""
        return [self.coefficients.get(alpha, 0) for alpha in multi_indices(self.n, self.degree)]

    def norm(self) -> float:
        return float(np.linalg.norm(np.array([complex(v) for v in self.vector()])))

    def is_zero(self) -> bool:
        return not self.coefficients

    def laplacian_defect(self) -> float:
        """||Lap P|| over the coefficient vector; exact zero for exact harmonic input"""
        if self.degree < 2 or self.is_zero():
            return 0.0
        D = laplacian_matrix(self.n, self.degree)
        values = self.vector()
        if all(isinstance(v, (int, sympy.Integer, sympy.Rational)) for v in values):
            lap = D * sympy.Matrix(values)
            return float(sum(abs(v) for v in lap))
        D_num = np.array(D.tolist(), dtype=float)
        return float(np.linalg.norm(D_num @ np.array([complex(v) for v in values])))

    def to_sympy(self, symbols: Optional[Sequence[sympy.Symbol]] = None) -> sympy.Expr:
        x = symbols or coordinate_symbols(self.n)
        return sum((sympy.sympify(c) * sympy.prod([x[i] ** a for i, a in enumerate(alpha)])
                    for alpha, c in self.coefficients.items()), sympy.Integer(0))

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        """Values at points of shape (..., n)"""
        points = np.asarray(points)
        total = np.zeros(points.shape[:-1], dtype=complex)
        for alpha, c in self.coefficients.items():
            total = total + complex(c) * np.prod(points ** np.array(alpha), axis=-1)
        return total

    def rotated(self, rotation: Sequence[Sequence[float]]) -> "HarmonicPolynomial":
        """The polynomial y -> P(Q y)"""
        Q = sympy.Matrix(rotation)
        x = coordinate_symbols(self.n)
        image = Q * sympy.Matrix(x)
        expr = sympy.expand(self.to_sympy().subs(dict(zip(x, image)), simultaneous=True))
        return HarmonicPolynomial.from_sympy(expr, self.n, self.degree)

    @classmethod
    def from_sympy(cls, expr, n: int, degree: Optional[int] = None) -> "HarmonicPolynomial":
        x = coordinate_symbols(n)
        poly = sympy.Poly(sympy.expand(expr), *x)
        if poly.is_zero:
            return cls(n=n, degree=degree or 0, coefficients={})
        degrees = {sum(m) for m in poly.monoms()}
        if len(degrees) != 1:
            raise ParameterError(f"Expression is not homogeneous: degrees {sorted(degrees)}")
        found = degrees.pop()
        return cls(n=n, degree=found if degree is None else degree, coefficients=dict(poly.terms()))

    def __add__(self, other: "HarmonicPolynomial") -> "HarmonicPolynomial":
        if (self.n, self.degree) != (other.n, other.degree):
            raise ParameterError("Can only add polynomials of equal shape")
        keys = set(self.coefficients) | set(other.coefficients)
        return HarmonicPolynomial(self.n, self.degree, {
            k: self.coefficients.get(k, 0) + other.coefficients.get(k, 0) for k in keys
        })

    def __rmul__(self, scalar: Coefficient) -> "HarmonicPolynomial":
        return HarmonicPolynomial(self.n, self.degree, {k: scalar * v for k, v in self.coefficients.items()})

    def label(self) -> str:
        return str(self.to_sympy())


def harmonic_basis(n: int, degree: int) -> List[HarmonicPolynomial]:
    """
    Basis of the harmonic homogeneous polynomials of the given degree

    Exact kernel of the Laplacian coefficient map, scaled to integer
    coefficients.
    """
    if n < 2 or degree < 0:
        raise ParameterError(f"Need n >= 2 and N >= 0, got n={n}, N={degree}")
    cols = multi_indices(n, degree)
    if degree < 2:
        return [HarmonicPolynomial(n, degree, {alpha: 1}) for alpha in cols]
    basis = []
    for vec in laplacian_matrix(n, degree).nullspace():
        denominators = [sympy.fraction(sympy.nsimplify(v))[1] for v in vec]
        scale = reduce(sympy.ilcm, denominators, 1)
        coeffs = {alpha: int(v * scale) for alpha, v in zip(cols, vec) if v != 0}
        basis.append(HarmonicPolynomial(n, degree, coeffs))
    logger.debug("harmonic basis n=%d N=%d has dimension %d", n, degree, len(basis))
    return basis


def _rotation(cone: ConeSpec) -> np.ndarray:
    return np.array(cone.rotation, dtype=float)


def check_admissible(cone: ConeSpec, rho0: Sequence[complex]) -> AdmissibleDirection:
    """
    Validates rho0 against the cone and returns it with its margin gamma

    Raises:
        AdmissibilityError: rho0 not isotropic, not of unit length, or
            Re rho0 . x not bounded by -gamma |x| with gamma > 0
    """
    rho = np.asarray(rho0, dtype=complex)
    if rho.shape != (cone.n,):
        raise AdmissibilityError(f"rho0 must have {cone.n} components")
    if abs(np.sum(rho * rho)) > 1e-12 or abs(np.linalg.norm(rho) - 1.0) > 1e-12:
        raise AdmissibilityError("rho0 must satisfy rho0 . rho0 = 0 and |rho0| = 1")
    if cone.kind == "sector":
        rays = np.array([[math.cos(t), math.sin(t)] for t in (cone.theta1, cone.theta2)])
        gamma = float(np.min(-(rays @ rho.real)))
    else:
        gamma = float(np.min(-(_rotation(cone).T @ rho).real))
    if gamma <= 0:
        raise AdmissibilityError(f"rho0 is not admissible for the {cone.kind} (margin {gamma:.3e})")
    return AdmissibleDirection(rho0=tuple(complex(v) for v in rho), gamma=gamma)


def _isotropic(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = a / np.linalg.norm(a)
    b = b - (b @ a) * a
    b = b / np.linalg.norm(b)
    return (a + 1j * b) / math.sqrt(2.0)


def sample_admissible(cone: ConeSpec, count: int, seed: Optional[int] = None,
                      rng: Optional[np.random.Generator] = None) -> List[AdmissibleDirection]:
    """
    Random admissible directions rho0 = (a + i b)/sqrt(2), a and b orthonormal

    Sectors draw the direction of -a strictly inside the arc of directions
    within pi/2 of both rays; orthants draw a with negative coordinates in the
    rotated frame.
    """
    if count < 1:
        raise ParameterError(f"count must be positive, got {count}")
    rng = rng if rng is not None else np.random.default_rng(seed)
    samples = []
    while len(samples) < count:
        if cone.kind == "sector":
            lo = cone.theta2 - math.pi / 2.0
            hi = cone.theta1 + math.pi / 2.0
            # interior of the admissible arc, trimmed so the margin stays positive
            pad = 0.02 * (hi - lo)
            phi = rng.uniform(lo + pad, hi - pad)
            a = -np.array([math.cos(phi), math.sin(phi)])
            sign = 1.0 if rng.random() < 0.5 else -1.0
            rho = _isotropic(a, sign * np.array([-math.sin(phi), math.cos(phi)]))
        else:
            a = -np.abs(rng.standard_normal(cone.n)) - 0.05
            b = rng.standard_normal(cone.n)
            if abs(b @ a) > 0.999 * np.linalg.norm(a) * np.linalg.norm(b):
                continue
            rho = _rotation(cone) @ _isotropic(a, b)
        direction = check_admissible(cone, rho)
        assert abs(np.sum(rho * rho)) < ISOTROPY_TOL and abs(np.linalg.norm(rho) - 1.0) < ISOTROPY_TOL
        samples.append(direction)
    return samples


def _frame(P: HarmonicPolynomial, rho0: Sequence[complex], cone: Optional[ConeSpec]) -> Tuple[HarmonicPolynomial, np.ndarray]:
    """Polynomial and direction expressed in the coordinates of the standard orthant"""
    rho = np.asarray(rho0, dtype=complex)
    if cone is None or np.allclose(_rotation(cone), np.eye(cone.n)):
        return P, rho
    Q = _rotation(cone)
    return P.rotated(Q), Q.T @ rho


def laplace_orthant_closed_form(P: HarmonicPolynomial, rho0: Sequence[complex],
                                cone: Optional[ConeSpec] = None) -> complex:
    """
    int over the orthant of exp(rho0 . x) P(x) dx in closed form

    sum_alpha c_alpha prod_j alpha_j! / (-rho_j)^(alpha_j + 1), after rotating
    into the standard orthant when the cone carries a rotation.
    """
    if cone is not None and (cone.kind != "orthant" or cone.n != P.n):
        raise ParameterError("Closed form needs an orthant of the polynomial's dimension")
    poly, rho = _frame(P, rho0, cone)
    if rho.shape != (P.n,):
        raise ParameterError(f"rho0 must have {P.n} components")
    if np.any(rho.real >= 0):
        raise AdmissibilityError("Orthant transform needs Re rho0_j < 0 for every axis")
    total = 0j
    for alpha, c in poly.coefficients.items():
        term = complex(c)
        for j, a in enumerate(alpha):
            term *= math.factorial(a) / (-rho[j]) ** (a + 1)
        total += term
    return complex(total)


def laplace_sector(P: HarmonicPolynomial, rho0: Sequence[complex], sector: ConeSpec) -> complex:
    """
    int over the sector of exp(rho0 . x) P(x) dx

    The radial integral is exact, (N+1)! (-rho0 . theta)^(-N-2); the angular
    integral of P(theta) times that factor is done by adaptive quadrature.
    """
    if sector.kind != "sector" or P.n != 2:
        raise ParameterError("laplace_sector needs a planar polynomial and a sector")
    check_admissible(sector, rho0)
    rho = np.asarray(rho0, dtype=complex)
    N = P.degree
    factor = math.factorial(N + 1)

    def integrand(theta: float) -> complex:
        unit = np.array([math.cos(theta), math.sin(theta)])
        return complex(P.evaluate(unit)) * factor * (-(rho @ unit)) ** (-N - 2)

    opts = dict(epsabs=0.0, epsrel=1e-13, limit=200)
    re = integrate.quad(lambda t: integrand(t).real, sector.theta1, sector.theta2, **opts)[0]
    im = integrate.quad(lambda t: integrand(t).imag, sector.theta1, sector.theta2, **opts)[0]
    return complex(re, im)


def laplace_transform(P: HarmonicPolynomial, rho0: Sequence[complex], cone: ConeSpec) -> complex:
    """Dispatches to the orthant closed form or the sector quadrature"""
    if cone.kind == "orthant":
        return laplace_orthant_closed_form(P, rho0, cone)
    return laplace_sector(P, rho0, cone)


def _truncation_radius(power: int, decay: float) -> float:
    """Smallest X past the peak with X^power exp(-decay X) below 1e-16 of the peak"""
    peak_x = power / decay
    peak = power * math.log(peak_x) - decay * peak_x if power > 0 else 0.0
    x = max(peak_x, 1.0)
    while (power * math.log(x) if power > 0 else 0.0) - decay * x > peak + math.log(1e-16):
        x *= 1.25
    return x


def _moment(power: int, rho: complex) -> complex:
    """int_0^X x^power exp(rho x) dx by adaptive quadrature, X from _truncation_radius"""
    X = _truncation_radius(power, -rho.real)
    opts = dict(epsabs=1e-15, epsrel=1e-13, limit=500)
    re = integrate.quad(lambda x: x ** power * math.exp(rho.real * x) * math.cos(rho.imag * x), 0.0, X, **opts)[0]
    im = integrate.quad(lambda x: x ** power * math.exp(rho.real * x) * math.sin(rho.imag * x), 0.0, X, **opts)[0]
    return complex(re, im)


def orthant_quadrature_oracle(P: HarmonicPolynomial, rho0: Sequence[complex],
                              cone: Optional[ConeSpec] = None) -> complex:
    """Separable quadrature of the orthant transform, one 1D integral per monomial factor"""
    poly, rho = _frame(P, rho0, cone)
    if np.any(rho.real >= 0):
        raise AdmissibilityError("Orthant transform needs Re rho0_j < 0 for every axis")
    total = 0j
    for alpha, c in poly.coefficients.items():
        term = complex(c)
        for j, a in enumerate(alpha):
            term *= _moment(a, complex(rho[j]))
        total += term
    return total


def laplace_quadrature_2d(P: HarmonicPolynomial, rho0: Sequence[complex], cone: ConeSpec) -> complex:
    """Two-dimensional adaptive quadrature of the transform over a planar cone in polar coordinates"""
    if P.n != 2 or cone.n != 2:
        raise ParameterError("2D quadrature needs n = 2")
    direction = check_admissible(cone, rho0)
    rho = np.asarray(direction.rho0, dtype=complex)
    if cone.kind == "sector":
        t1, t2 = cone.theta1, cone.theta2
    else:
        Q = _rotation(cone)
        start = math.atan2(Q[1, 0], Q[0, 0])
        det = Q[0, 0] * Q[1, 1] - Q[0, 1] * Q[1, 0]
        t1, t2 = (start, start + math.pi / 2.0) if det > 0 else (start - math.pi / 2.0, start)
    r_max = _truncation_radius(P.degree + 1, direction.gamma)

    def integrand(r: float, theta: float) -> complex:
        point = r * np.array([math.cos(theta), math.sin(theta)])
        return complex(P.evaluate(point)) * complex(np.exp(rho @ point)) * r

    opts = dict(epsabs=1e-13, epsrel=1e-11)
    re = integrate.dblquad(lambda r, t: integrand(r, t).real, t1, t2, 0.0, r_max, **opts)[0]
    im = integrate.dblquad(lambda r, t: integrand(r, t).imag, t1, t2, 0.0, r_max, **opts)[0]
    return complex(re, im)


def nonvanishing_scan(P: HarmonicPolynomial, cone: ConeSpec, sample_count: int = 100,
                      seed: Optional[int] = None, threshold: Optional[float] = None) -> ScanReport:
    """
    Largest and smallest |L(rho0)| over random admissible directions

    The default pass threshold is 1e-6 times the coefficient norm of P; it is
    a heuristic witness level, not a bound.
    """
    if P.is_zero():
        raise ParameterError("Nonvanishing scan needs a nonzero polynomial")
    if P.n != cone.n:
        raise ParameterError(f"Polynomial has n={P.n}, cone has n={cone.n}")
    directions = sample_admissible(cone, sample_count, seed=seed)
    values = [laplace_transform(P, d.rho0, cone) for d in directions]
    mags = np.abs(np.array(values))
    best = int(np.argmax(mags))
    threshold = SCAN_THRESHOLD * P.norm() if threshold is None else threshold
    report = ScanReport(
        coefficients=dict(P.coefficients), cone=cone, samples=sample_count,
        max_abs=float(mags[best]), min_abs=float(np.min(mags)),
        witness=directions[best], witness_value=complex(values[best]), threshold=threshold,
    )
    logger.info(f"Scan of {P.label()} over {cone.kind}: max |L| = {report.max_abs:.4g}")
    return report


@dataclass
class LeadingTerm:
    """Lowest nonvanishing homogeneous Taylor part of a sampled function"""
    degree: int
    coefficients: Dict[MultiIndex, complex]
    harmonicity_defect: float
    consistent: bool
    amplitudes: List[List[float]]

    def polynomial(self) -> HarmonicPolynomial:
        return HarmonicPolynomial(len(next(iter(self.coefficients), (0, 0))), self.degree, self.coefficients)


def _stencil(n: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """Points in the closed unit ball: the origin, sphere shells and interior samples"""
    direction = rng.standard_normal((count, n))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    radius = rng.uniform(0.0, 1.0, count) ** (1.0 / n)
    radius[: count // 3] = 1.0
    return np.vstack([np.zeros(n), direction * radius[:, None]])


def _fit(w: Callable[[np.ndarray], np.ndarray], x0: np.ndarray, radius: float, max_degree: int,
         stencil: np.ndarray) -> List[np.ndarray]:
    n = len(x0)
    columns, blocks = [], []
    for d in range(max_degree + 1):
        alphas = multi_indices(n, d)
        blocks.append(len(alphas))
        for alpha in alphas:
            columns.append(np.prod(stencil ** np.array(alpha), axis=1))
    A = np.stack(columns, axis=1)
    cond = np.linalg.cond(A)
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise FitConditioningError("Taylor fit is ill-conditioned", {"condition": cond, "max_degree": max_degree})
    values = np.asarray(w(x0 + radius * stencil))
    coef = np.linalg.lstsq(A, values.astype(complex), rcond=None)[0]
    out, start = [], 0
    for size in blocks:
        out.append(coef[start:start + size])
        start += size
    return out


def leading_term_check(w: Callable[[np.ndarray], np.ndarray], x0: Sequence[float], expected_N: Optional[int] = None,
                       radius: float = 0.1, max_degree: int = 4, rel_tol: float = 1e-6,
                       points: Optional[int] = None, seed: int = 0) -> LeadingTerm:
    """
    Lowest homogeneous part of the Taylor expansion of w at x0

    Fits a polynomial of degree max_degree by least squares on stencils of
    radius r, r/2 and r/4 (coordinates scaled by the stencil radius). The
    observed degree is the lowest d whose scaled coefficient block exceeds
    rel_tol times the largest block; the coefficients of that part are taken
    from the smallest stencil and their Laplacian defect is reported
    relative to their norm.

    Raises:
        FitConditioningError: the least-squares system is ill-conditioned
    """
    x0 = np.asarray(x0, dtype=float)
    n = len(x0)
    if max_degree < 0 or radius <= 0:
        raise ParameterError("Need max_degree >= 0 and radius > 0")
    size = sum(len(multi_indices(n, d)) for d in range(max_degree + 1))
    rng = np.random.default_rng(seed)
    stencil = _stencil(n, points or 4 * size + 8, rng)

    degrees, amplitudes, fits = [], [], []
    for r in (radius, radius / 2.0, radius / 4.0):
        blocks = _fit(w, x0, r, max_degree, stencil)
        amp = [float(np.linalg.norm(b)) for b in blocks]
        top = max(amp)
        observed = next((d for d, a in enumerate(amp) if a > rel_tol * top), max_degree)
        degrees.append(observed)
        amplitudes.append(amp)
        fits.append((r, blocks))
    consistent = len(set(degrees)) == 1
    N = degrees[-1]
    if expected_N is not None and N != expected_N:
        logger.warning(f"Leading term degree {N} differs from the expected {expected_N}")
    r, blocks = fits[-1]
    coeffs = {alpha: complex(c) / r ** N for alpha, c in zip(multi_indices(n, N), blocks[N])}
    values = np.array(list(coeffs.values()))
    norm = float(np.linalg.norm(values))
    if N >= 2 and norm > 0:
        D = np.array(laplacian_matrix(n, N).tolist(), dtype=float)
        defect = float(np.linalg.norm(D @ values)) / norm
    else:
        defect = 0.0
    return LeadingTerm(degree=N, coefficients=coeffs, harmonicity_defect=defect,
                       consistent=consistent, amplitudes=amplitudes)
