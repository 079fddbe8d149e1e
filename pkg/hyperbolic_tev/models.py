"""
Data models for hyperbolic transmission eigenvalue computations
Modelos de dados compartilhados entre os módulos numéricos e a linha de comando
"""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

from .errors import InvalidPointError, ParameterError


def _jsonable(value: Any) -> Any:
    """Converts numpy scalars, tuples and complex numbers to JSON-safe values"""
    if isinstance(value, complex):
        return [value.real, value.imag]
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if hasattr(value, "item") and not isinstance(value, (str, bytes)):
        return _jsonable(value.item())
    return value


def _complex(value: Any) -> complex:
    if isinstance(value, (list, tuple)):
        return complex(value[0], value[1])
    return complex(value)


@dataclass
class HalfSpacePoint:
    """Point <x', x_n> of the upper half-space model"""
    x_prime: Tuple[float, ...]
    x_n: float

    def __post_init__(self):
        self.x_prime = tuple(float(v) for v in self.x_prime)
        self.x_n = float(self.x_n)
        if not math.isfinite(self.x_n) or self.x_n <= 0:
            raise InvalidPointError(f"Half-space height must be positive, got x_n={self.x_n}")
        if not all(math.isfinite(v) for v in self.x_prime):
            raise InvalidPointError(f"Non-finite horizontal coordinate in {self.x_prime}")

    @property
    def n(self) -> int:
        return len(self.x_prime) + 1

    def coordinates(self) -> Tuple[float, ...]:
        return self.x_prime + (self.x_n,)

    @classmethod
    def from_coordinates(cls, coords: Sequence[float]) -> "HalfSpacePoint":
        coords = [float(v) for v in coords]
        if len(coords) < 2:
            raise InvalidPointError(f"Need at least 2 coordinates, got {len(coords)}")
        return cls(x_prime=tuple(coords[:-1]), x_n=coords[-1])

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "HalfSpacePoint":
        return cls(x_prime=tuple(data.get("x_prime", ())), x_n=data["x_n"])

    def to_dict(self) -> Dict[str, Any]:
        return {"model": "half_space", "x_prime": list(self.x_prime), "x_n": self.x_n}


@dataclass
class BallPoint:
    """Point y of the unit ball model"""
    y: Tuple[float, ...]

    def __post_init__(self):
        self.y = tuple(float(v) for v in self.y)
        if len(self.y) < 2:
            raise InvalidPointError(f"Need at least 2 coordinates, got {len(self.y)}")
        norm2 = sum(v * v for v in self.y)
        if not math.isfinite(norm2) or norm2 >= 1.0:
            raise InvalidPointError(f"Ball point must satisfy |y| < 1, got |y|^2={norm2}")

    @property
    def n(self) -> int:
        return len(self.y)

    def coordinates(self) -> Tuple[float, ...]:
        return self.y

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "BallPoint":
        return cls(y=tuple(data["y"]))

    def to_dict(self) -> Dict[str, Any]:
        return {"model": "ball", "y": list(self.y)}


@dataclass
class RadialCoordinate:
    """Geodesic radius r together with the algebraic radius rho, cosh r = 2 rho + 1"""
    r: float
    rho: float

    def __post_init__(self):
        if self.r < 0 or self.rho < 0:
            raise ParameterError(f"Radial coordinates must be nonnegative, got r={self.r}, rho={self.rho}")
        if not math.isclose(math.cosh(self.r), 2.0 * self.rho + 1.0, rel_tol=1e-12, abs_tol=1e-15):
            raise ParameterError(f"cosh r != 2 rho + 1 for r={self.r}, rho={self.rho}")

    def to_dict(self) -> Dict[str, Any]:
        return {"r": self.r, "rho": self.rho}


@dataclass
class HypergeometricInput:
    """
    Parameters of 2F1(s - i t, s + i t; c; x)

    With imaginary=True the parameter t stands for i*t, i.e. the pair is the
    real couple s + t, s - t (signed t squared equal to -t^2).
    """
    s: float
    t: float
    c: float
    x: float
    imaginary: bool = False

    def __post_init__(self):
        self.s, self.t, self.c, self.x = float(self.s), float(self.t), float(self.c), float(self.x)
        if self.t < 0:
            raise ParameterError(f"t must be nonnegative, got {self.t}")
        if self.c <= 0 and float(self.c).is_integer():
            raise ParameterError(f"c must not be a nonpositive integer, got {self.c}")
        if self.x > 0:
            raise ParameterError(f"Argument must satisfy x <= 0, got {self.x}")

    @property
    def t_squared(self) -> float:
        """Signed square: (a - s)(s - b) with a, b the conjugate pair"""
        return -self.t * self.t if self.imaginary else self.t * self.t

    @property
    def ab(self) -> float:
        """Product of the upper parameters, s^2 + t^2"""
        return self.s * self.s + self.t_squared

    @property
    def a(self) -> complex:
        return complex(self.s + self.t, 0.0) if self.imaginary else complex(self.s, -self.t)

    @property
    def b(self) -> complex:
        return complex(self.s - self.t, 0.0) if self.imaginary else complex(self.s, self.t)

    def shifted(self) -> "HypergeometricInput":
        """Parameters of the derivative series (a+1, b+1; c+1)"""
        return HypergeometricInput(self.s + 1.0, self.t, self.c + 1.0, self.x, self.imaginary)

    def with_x(self, x: float) -> "HypergeometricInput":
        return HypergeometricInput(self.s, self.t, self.c, x, self.imaginary)

    @classmethod
    def from_t_squared(cls, s: float, t_squared: float, c: float, x: float) -> "HypergeometricInput":
        """Builds the input from a signed t^2"""
        if t_squared >= 0:
            return cls(s, math.sqrt(t_squared), c, x)
        return cls(s, math.sqrt(-t_squared), c, x, imaginary=True)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "HypergeometricInput":
        return cls(
            s=data["s"],
            t=data.get("t", 0.0),
            c=data["c"],
            x=data.get("x", 0.0),
            imaginary=bool(data.get("imaginary", False)),
        )

    def to_dict(self) -> Dict[str, Any]:
        return {"s": self.s, "t": self.t, "c": self.c, "x": self.x, "imaginary": self.imaginary}


@dataclass(frozen=True)
class RadialProblem:
    """
    Ball transmission problem with a constant potential

    n: dimension, R: hyperbolic radius, V0: constant potential,
    nu: 1 for the Helmholtz flavor, 0 for the Schrodinger flavor.
    """
    n: int
    R: float
    V0: float
    nu: int = 1

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ParameterError(f"Dimension must be an integer >= 2, got n={self.n}")
        if not (self.R > 0 and math.isfinite(self.R)):
            raise ParameterError(f"Radius must be positive, got R={self.R}")
        if self.nu not in (0, 1):
            raise ParameterError(f"nu must be 0 or 1, got nu={self.nu}")
        if self.V0 == 0 or not math.isfinite(self.V0):
            raise ParameterError(f"V0 must be a nonzero real, got V0={self.V0}")
        if self.nu == 1 and self.V0 >= 1:
            raise ParameterError(f"Helmholtz flavor needs V0 < 1, got V0={self.V0}")

    @property
    def s(self) -> float:
        return (self.n - 1) / 2.0

    @property
    def c(self) -> float:
        return self.n / 2.0

    @property
    def cap_radius(self) -> float:
        """P = (cosh R - 1)/2"""
        return math.sinh(self.R / 2.0) ** 2

    def potential_term(self, lam: float) -> float:
        """lambda^nu * V0 (lambda^0 = 1)"""
        return (lam ** self.nu) * self.V0

    def t_squared_v(self, lam: float) -> float:
        return lam - self.potential_term(lam)

    def t_squared_w(self, lam: float) -> float:
        return float(lam)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RadialProblem":
        return cls(
            n=int(data["n"]),
            R=float(data["R"]),
            V0=float(data["V0"]),
            nu=int(data.get("nu", 1)),
        )

    def to_dict(self) -> Dict[str, Any]:
        return {"n": self.n, "R": self.R, "V0": self.V0, "nu": self.nu}


@dataclass
class DeterminantSample:
    """Matching determinant F_v c_w G_w - F_w c_v G_v at rho = P"""
    lam: float
    det_value: float
    F_v: float
    F_w: float
    cG_v: float
    cG_w: float
    imag_shadow: Optional[float] = None
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None and math.isfinite(self.det_value)

    @property
    def scale(self) -> float:
        """Magnitude of the two products entering the determinant"""
        return max(abs(self.F_v * self.cG_w), abs(self.F_w * self.cG_v))

    def to_dict(self) -> Dict[str, Any]:
        return _jsonable({
            "lambda": self.lam,
            "det": self.det_value,
            "components": [self.F_v, self.F_w, self.cG_v, self.cG_w],
            "imag_shadow": self.imag_shadow,
            "error": self.error,
        })


@dataclass
class RefinedRoot:
    """A bisection-refined sign change of the determinant"""
    index: int
    lam: float
    bracket: Tuple[float, float]
    iterations: int
    residual: float
    converged: bool = True

    @property
    def sqrt_lambda(self) -> float:
        return math.sqrt(self.lam)

    def to_dict(self) -> Dict[str, Any]:
        return _jsonable({
            "index": self.index,
            "lambda": self.lam,
            "sqrt_lambda": self.sqrt_lambda,
            "det_residual": self.residual,
            "bracket": self.bracket,
            "iterations": self.iterations,
            "converged": self.converged,
        })


@dataclass
class EigenvalueList:
    """Sorted determinant roots with refinement metadata"""
    problem: RadialProblem
    roots: List[RefinedRoot]
    lambda_max: float
    scan_step: float
    coarse_grid: bool = False

    def __post_init__(self):
        values = [r.lam for r in self.roots]
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ParameterError("Eigenvalues must be strictly increasing")

    @property
    def values(self) -> List[float]:
        return [r.lam for r in self.roots]

    def __len__(self) -> int:
        return len(self.roots)

    def to_rows(self) -> List[Dict[str, Any]]:
        """Rows with the stable CSV columns index, lambda, sqrt_lambda, det_residual"""
        return [
            {"index": r.index, "lambda": r.lam, "sqrt_lambda": r.sqrt_lambda, "det_residual": r.residual}
            for r in self.roots
        ]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "problem": self.problem.to_dict(),
            "lambda_max": self.lambda_max,
            "scan_step": self.scan_step,
            "coarse_grid": self.coarse_grid,
            "roots": [r.to_dict() for r in self.roots],
        }


@dataclass
class CurveCrossing:
    """Zero of the eigencurve with the given (0-based, sorted) index"""
    curve: int
    lam: float
    bracket: Tuple[float, float]
    iterations: int
    multiplicity: int = 1

    def to_dict(self) -> Dict[str, Any]:
        return _jsonable({
            "curve": self.curve,
            "lambda": self.lam,
            "bracket": self.bracket,
            "iterations": self.iterations,
            "multiplicity": self.multiplicity,
        })


@dataclass
class EigencurveTable:
    """Lowest generalized eigenvalues mu_l(lambda) sampled on a lambda grid"""
    lambdas: List[float]
    mu: List[List[float]]
    crossings: List[CurveCrossing] = field(default_factory=list)
    incomplete: List[int] = field(default_factory=list)

    @property
    def count(self) -> int:
        return len(self.mu[0]) if self.mu else 0

    def crossing_values(self) -> List[float]:
        out = []
        for c in self.crossings:
            out.extend([c.lam] * c.multiplicity)
        return sorted(out)

    def to_rows(self) -> List[Dict[str, Any]]:
        """Rows with columns lambda, mu_1..mu_L"""
        rows = []
        for lam, values in zip(self.lambdas, self.mu):
            row = {"lambda": lam}
            row.update({f"mu_{k + 1}": v for k, v in enumerate(values)})
            rows.append(row)
        return rows

    def to_dict(self) -> Dict[str, Any]:
        return _jsonable({
            "lambdas": self.lambdas,
            "mu": self.mu,
            "crossings": [c.to_dict() for c in self.crossings],
            "incomplete": self.incomplete,
        })


@dataclass
class CrossingComparison:
    """Matching of determinant roots against eigencurve crossings"""
    pairs: List[Tuple[float, float, float]]
    unmatched_roots: List[float]
    unmatched_crossings: List[float]
    rel_tol: float

    @property
    def max_gap(self) -> float:
        return max((gap for _, _, gap in self.pairs), default=0.0)

    @property
    def passed(self) -> bool:
        return not self.unmatched_roots and not self.unmatched_crossings

    def to_dict(self) -> Dict[str, Any]:
        return _jsonable({
            "pairs": [{"root": a, "crossing": b, "rel_gap": g} for a, b, g in self.pairs],
            "unmatched_roots": self.unmatched_roots,
            "unmatched_crossings": self.unmatched_crossings,
            "rel_tol": self.rel_tol,
            "passed": self.passed,
        })


@dataclass
class FlavorEquivalence:
    """Helmholtz problem at lambda0 next to the Schrodinger problem with potential lambda0*V0"""
    helmholtz: RadialProblem
    schrodinger: RadialProblem
    lam: float
    det_helmholtz: float
    det_schrodinger: float

    @property
    def difference(self) -> float:
        return abs(self.det_helmholtz - self.det_schrodinger)

    @property
    def relative_difference(self) -> float:
        scale = max(abs(self.det_helmholtz), abs(self.det_schrodinger))
        return self.difference / scale if scale > 0 else 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "helmholtz": self.helmholtz.to_dict(),
            "schrodinger": self.schrodinger.to_dict(),
            "lambda": self.lam,
            "det_helmholtz": self.det_helmholtz,
            "det_schrodinger": self.det_schrodinger,
            "difference": self.difference,
        }


@dataclass
class DecayReport:
    """Far-field check of |w(rho)|^2 rho^(n-1) on a log grid"""
    lam: float
    rho: List[float]
    quantity: List[float]
    sup: float
    slope: float
    slope_tol: float

    @property
    def bounded(self) -> bool:
        return self.slope <= self.slope_tol

    def to_dict(self) -> Dict[str, Any]:
        return _jsonable({
            "lambda": self.lam,
            "sup": self.sup,
            "slope": self.slope,
            "slope_tol": self.slope_tol,
            "bounded": self.bounded,
        })


@dataclass
class ConeSpec:
    """
    Cone geometry: a 2D sector between the rays at theta1 < theta2, or the
    image of the positive orthant under an orthogonal matrix
    """
    kind: str
    n: int = 2
    theta1: Optional[float] = None
    theta2: Optional[float] = None
    rotation: Optional[Tuple[Tuple[float, ...], ...]] = None

    def __post_init__(self):
        if self.kind == "sector":
            if self.n != 2:
                raise ParameterError(f"Sectors live in the plane, got n={self.n}")
            if self.theta1 is None or self.theta2 is None:
                raise ParameterError("Sector needs theta1 and theta2")
            opening = self.theta2 - self.theta1
            if not 0 < opening < math.pi:
                raise ParameterError(f"Sector opening must lie in (0, pi), got {opening}")
        elif self.kind == "orthant":
            if self.n < 2:
                raise ParameterError(f"Orthant dimension must be >= 2, got n={self.n}")
            if self.rotation is None:
                self.rotation = tuple(
                    tuple(1.0 if i == j else 0.0 for j in range(self.n)) for i in range(self.n)
                )
            self.rotation = tuple(tuple(float(v) for v in row) for row in self.rotation)
            if len(self.rotation) != self.n or any(len(row) != self.n for row in self.rotation):
                raise ParameterError(f"Rotation must be {self.n}x{self.n}")
            for i in range(self.n):
                for j in range(self.n):
                    dot = sum(self.rotation[k][i] * self.rotation[k][j] for k in range(self.n))
                    if abs(dot - (1.0 if i == j else 0.0)) > 1e-10:
                        raise ParameterError("Orthant rotation must be orthogonal")
        else:
            raise ParameterError(f"Unknown cone kind: {self.kind!r}")

    @property
    def opening(self) -> Optional[float]:
        if self.kind == "sector":
            return self.theta2 - self.theta1
        return None

    @classmethod
    def sector(cls, theta1: float, theta2: float) -> "ConeSpec":
        return cls(kind="sector", n=2, theta1=float(theta1), theta2=float(theta2))

    @classmethod
    def orthant(cls, n: int, rotation: Optional[Sequence[Sequence[float]]] = None) -> "ConeSpec":
        rot = tuple(tuple(row) for row in rotation) if rotation is not None else None
        return cls(kind="orthant", n=n, rotation=rot)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ConeSpec":
        rotation = data.get("rotation")
        return cls(
            kind=data["kind"],
            n=int(data.get("n", 2)),
            theta1=data.get("theta1"),
            theta2=data.get("theta2"),
            rotation=tuple(tuple(r) for r in rotation) if rotation is not None else None,
        )

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"kind": self.kind, "n": self.n}
        if self.kind == "sector":
            data.update(theta1=self.theta1, theta2=self.theta2)
        else:
            data["rotation"] = [list(r) for r in self.rotation]
        return data


@dataclass
class AdmissibleDirection:
    """Isotropic unit direction rho0 with margin Re rho0.x <= -gamma |x| on the cone"""
    rho0: Tuple[complex, ...]
    gamma: float

    def __post_init__(self):
        self.rho0 = tuple(_complex(v) for v in self.rho0)
        if self.gamma <= 0:
            raise ParameterError(f"Admissibility margin must be positive, got {self.gamma}")

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "AdmissibleDirection":
        return cls(rho0=tuple(_complex(v) for v in data["rho0"]), gamma=float(data["gamma"]))

    def to_dict(self) -> Dict[str, Any]:
        return _jsonable({"rho0": list(self.rho0), "gamma": self.gamma})


@dataclass
class ScanReport:
    """Result of scanning |L(rho0)| over admissible directions"""
    coefficients: Dict[Tuple[int, ...], Any]
    cone: ConeSpec
    samples: int
    max_abs: float
    min_abs: float
    witness: AdmissibleDirection
    witness_value: complex
    threshold: float

    @property
    def passed(self) -> bool:
        return self.max_abs > self.threshold

    def to_dict(self) -> Dict[str, Any]:
        return _jsonable({
            "polynomial": {",".join(map(str, k)): str(v) for k, v in self.coefficients.items()},
            "cone": self.cone.to_dict(),
            "samples": self.samples,
            "max_abs": self.max_abs,
            "min_abs": self.min_abs,
            "witness": self.witness.to_dict(),
            "witness_value": self.witness_value,
            "threshold": self.threshold,
            "passed": self.passed,
        })


@dataclass
class CheckResult:
    """Outcome of one identity or property check"""
    identity: str
    case: str
    passed: bool
    residuals: List[float] = field(default_factory=list)
    ratios: List[float] = field(default_factory=list)
    detail: str = ""

    def to_dict(self) -> Dict[str, Any]:
        return _jsonable({
            "identity": self.identity,
            "case": self.case,
            "passed": self.passed,
            "residuals": self.residuals,
            "ratios": self.ratios,
            "detail": self.detail,
        })


@dataclass
class RunConfig:
    """Validated parameters of a command-line run"""
    command: str
    params: Dict[str, Any]
    output: Optional[str] = None
    fmt: str = "csv"
    seed: Optional[int] = None
    timing: bool = False

    def __post_init__(self):
        if self.command not in ("eigs", "curves", "corner", "verify"):
            raise ParameterError(f"Unknown command: {self.command!r}")
        if self.fmt not in ("csv", "json"):
            raise ParameterError(f"Unknown output format: {self.fmt!r}")

    def to_dict(self) -> Dict[str, Any]:
        return _jsonable({
            "command": self.command,
            "params": self.params,
            "format": self.fmt,
            "seed": self.seed,
        })
