"""
Free operator H0 on H^n and its conformal generalization H_K
Finite-difference application on grids, the conjugation identity, the Green
identity for H0 and the radial Sturm-Liouville form.
"""

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
import sympy

from .errors import InvalidPointError, ParameterError
from .models import BallPoint, HalfSpacePoint

logger = logging.getLogger(__name__)

MODELS = ("half_space", "ball")


def coordinate_symbols(n: int) -> Tuple[sympy.Symbol, ...]:
    """Real symbols x1..xn; the last one is the half-space height"""
    return sympy.symbols(f"x1:{n + 1}", real=True)


def _vectorized(symbols: Sequence[sympy.Symbol], expr) -> Callable[[np.ndarray], np.ndarray]:
    """Lambdifies expr and evaluates it on point arrays of shape (..., n)"""
    func = sympy.lambdify(symbols, expr, modules=["numpy"])

    def evaluate(points: np.ndarray) -> np.ndarray:
        points = np.asarray(points)
        values = func(*np.moveaxis(points, -1, 0))
        return np.broadcast_to(np.asarray(values), points.shape[:-1]).copy()

    return evaluate


@dataclass
class SmoothFunction:
    """Analytic function of n variables with exact derivatives"""
    expr: sympy.Expr
    n: int
    symbols: Tuple[sympy.Symbol, ...] = field(default=())

    def __post_init__(self):
        if not self.symbols:
            self.symbols = coordinate_symbols(self.n)
        self.expr = sympy.sympify(self.expr)
        grads = [sympy.diff(self.expr, x) for x in self.symbols]
        lap = sum(sympy.diff(self.expr, x, 2) for x in self.symbols)
        self._value = _vectorized(self.symbols, self.expr)
        self._grad = [_vectorized(self.symbols, g) for g in grads]
        self._lap = _vectorized(self.symbols, lap)

    @classmethod
    def from_expression(cls, expr, n: int, symbols: Optional[Sequence[sympy.Symbol]] = None) -> "SmoothFunction":
        return cls(expr=expr, n=n, symbols=tuple(symbols) if symbols else ())

    def __call__(self, points: np.ndarray) -> np.ndarray:
        return self._value(points)

    def gradient(self, points: np.ndarray) -> np.ndarray:
        return np.stack([g(points) for g in self._grad], axis=-1)

    def laplacian(self, points: np.ndarray) -> np.ndarray:
        return self._lap(points)

    def h0(self, points: np.ndarray) -> np.ndarray:
        """Exact H0 f = -x_n^2 Lap f + (n - 2) x_n d_n f - (n - 1)^2/4 f"""
        points = np.asarray(points, dtype=float)
        height = points[..., -1]
        return (
            -height ** 2 * self.laplacian(points)
            + (self.n - 2) * height * self._grad[-1](points)
            - (self.n - 1) ** 2 / 4.0 * self(points)
        )


@dataclass
class ConformalFactorField:
    """
    Positive conformal factor K with gradient and Laplacian callables

    All callables take point arrays of shape (..., n).
    """
    n: int
    K: Callable[[np.ndarray], np.ndarray]
    gradient: Callable[[np.ndarray], np.ndarray]
    laplacian: Callable[[np.ndarray], np.ndarray]
    model: str = "half_space"
    name: str = "custom"

    def __post_init__(self):
        if self.model not in MODELS:
            raise ParameterError(f"Unknown model: {self.model!r}")

    @classmethod
    def from_expression(cls, expr, n: int, model: str = "half_space", name: str = "custom") -> "ConformalFactorField":
        """Builds the field and its derivatives from a sympy expression in x1..xn"""
        smooth = SmoothFunction.from_expression(expr, n)
        return cls(n=n, K=smooth, gradient=smooth.gradient, laplacian=smooth.laplacian, model=model, name=name)

    @classmethod
    def half_space(cls, n: int) -> "ConformalFactorField":
        x = coordinate_symbols(n)
        return cls.from_expression(x[-1], n, model="half_space", name="halfspace")

    @classmethod
    def ball(cls, n: int) -> "ConformalFactorField":
        y = coordinate_symbols(n)
        return cls.from_expression(2 / (1 - sum(v ** 2 for v in y)), n, model="ball", name="ball")

    @classmethod
    def constant(cls, n: int) -> "ConformalFactorField":
        return cls.from_expression(sympy.Integer(1), n, model="half_space", name="constant")

    def values(self, points: np.ndarray) -> np.ndarray:
        k = np.asarray(self.K(points), dtype=float)
        if np.any(k <= 0):
            raise ParameterError(f"Conformal factor {self.name} is not positive on the queried points")
        return k


@dataclass
class RegularGrid:
    """Tensor grid over the box [lower, upper] with `points` nodes per axis"""
    lower: Tuple[float, ...]
    upper: Tuple[float, ...]
    points: int

    def __post_init__(self):
        self.lower = tuple(float(v) for v in self.lower)
        self.upper = tuple(float(v) for v in self.upper)
        if len(self.lower) != len(self.upper) or len(self.lower) < 2:
            raise ParameterError("Grid bounds must have matching length >= 2")
        if any(hi <= lo for lo, hi in zip(self.lower, self.upper)):
            raise ParameterError("Grid box must have positive extent on every axis")
        if self.points < 3:
            raise ParameterError(f"Need at least 3 points per axis, got {self.points}")

    @property
    def n(self) -> int:
        return len(self.lower)

    @property
    def axes(self) -> Tuple[np.ndarray, ...]:
        return tuple(np.linspace(lo, hi, self.points) for lo, hi in zip(self.lower, self.upper))

    def refine(self) -> "RegularGrid":
        """Halves the spacing; the old nodes are every second new node"""
        return RegularGrid(self.lower, self.upper, 2 * (self.points - 1) + 1)


@dataclass
class ScalarField:
    """Samples of a function on a regular grid in half-space or ball coordinates"""
    values: np.ndarray
    axes: Tuple[np.ndarray, ...]
    model: str = "half_space"

    def __post_init__(self):
        if self.model not in MODELS:
            raise ParameterError(f"Unknown model: {self.model!r}")
        self.axes = tuple(np.asarray(a, dtype=float) for a in self.axes)
        self.values = np.asarray(self.values)
        if self.values.shape != tuple(len(a) for a in self.axes):
            raise ParameterError(f"Values of shape {self.values.shape} do not match the axes")
        for a in self.axes:
            if len(a) > 1 and not np.allclose(np.diff(a), a[1] - a[0], rtol=1e-9, atol=0):
                raise ParameterError("Axes must be uniformly spaced")
        if self.model == "half_space":
            if np.any(self.axes[-1] <= 0):
                raise InvalidPointError("Grid reaches the boundary x_n <= 0 of the half-space")
        elif np.any(np.sum(self.points() ** 2, axis=-1) >= 1.0):
            raise InvalidPointError("Grid leaves the unit ball")

    @property
    def n(self) -> int:
        return len(self.axes)

    @property
    def spacing(self) -> Tuple[float, ...]:
        return tuple(float(a[1] - a[0]) for a in self.axes)

    def points(self) -> np.ndarray:
        return np.stack(np.meshgrid(*self.axes, indexing="ij"), axis=-1)

    @classmethod
    def sample(cls, func: Callable[[np.ndarray], np.ndarray], axes: Sequence[np.ndarray],
               model: str = "half_space") -> "ScalarField":
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        return cls(values=func(mesh), axes=tuple(axes), model=model)


def _interior(n: int) -> Tuple[slice, ...]:
    return (slice(1, -1),) * n


def _central_differences(field: ScalarField) -> Tuple[np.ndarray, List[np.ndarray]]:
    """Second-order Laplacian and gradient on the interior sub-grid"""
    if any(len(a) < 3 for a in field.axes):
        raise ParameterError("Grid too small: need at least 3 points per axis")
    u = field.values
    n = field.n
    core = _interior(n)
    lap = np.zeros(u[core].shape, dtype=u.dtype)
    grad = []
    for axis, h in enumerate(field.spacing):
        plus = list(core)
        minus = list(core)
        plus[axis] = slice(2, None)
        minus[axis] = slice(None, -2)
        up, um = u[tuple(plus)], u[tuple(minus)]
        lap = lap + (up - 2.0 * u[core] + um) / h ** 2
        grad.append((up - um) / (2.0 * h))
    return lap, grad


def _interior_field(field: ScalarField, values: np.ndarray) -> ScalarField:
    return ScalarField(values=values, axes=tuple(a[1:-1] for a in field.axes), model=field.model)


def apply_H0(field: ScalarField) -> ScalarField:
    """
    Discrete H0 = -x_n^2 Lap + (n - 2) x_n d_n - (n - 1)^2/4

    Args:
        field: samples in half-space coordinates

    Returns:
        H0 f on the interior sub-grid
    """
    if field.model != "half_space":
        raise ParameterError("apply_H0 works in half-space coordinates")
    lap, grad = _central_differences(field)
    n = field.n
    height = field.points()[_interior(n)][..., -1]
    core = field.values[_interior(n)]
    values = -height ** 2 * lap + (n - 2) * height * grad[-1] - (n - 1) ** 2 / 4.0 * core
    return _interior_field(field, values)


def apply_HK(field: ScalarField, K: ConformalFactorField) -> ScalarField:
    """Discrete H_K = -K^2 Lap + (n - 2) K grad K . grad - (n - 1)^2/4"""
    if K.n != field.n:
        raise ParameterError(f"Dimension mismatch: K has n={K.n}, field has n={field.n}")
    lap, grad = _central_differences(field)
    n = field.n
    pts = field.points()[_interior(n)]
    k = K.values(pts)
    grad_k = K.gradient(pts)
    drift = sum(grad_k[..., j] * grad[j] for j in range(n))
    core = field.values[_interior(n)]
    values = -k ** 2 * lap + (n - 2) * k * drift - (n - 1) ** 2 / 4.0 * core
    return _interior_field(field, values)


def _as_coordinates(point) -> np.ndarray:
    if isinstance(point, (HalfSpacePoint, BallPoint)):
        return np.asarray(point.coordinates(), dtype=float)
    return np.asarray(point, dtype=float)


def _potential_values(K: ConformalFactorField, pts: np.ndarray) -> np.ndarray:
    n = K.n
    k = K.values(pts)
    grad_k = np.asarray(K.gradient(pts), dtype=float)
    lap_k = np.asarray(K.laplacian(pts), dtype=float)
    grad2 = np.sum(grad_k ** 2, axis=-1)
    return ((n - 2) * (n * grad2 - 2.0 * k * lap_k) - (n - 1) ** 2) / (4.0 * k ** 2)


def conjugated_potential(K: ConformalFactorField, point) -> float:
    """
    Zeroth-order coefficient of the conjugated operator

    Q_K = [(n - 2)(n |grad K|^2 - 2 K Lap K) - (n - 1)^2] / (4 K^2), so that
    K^(-(n+2)/2) H_K (K^((n-2)/2) f) = -Lap f + Q_K f.
    """
    coords = _as_coordinates(point)
    if coords.shape != (K.n,):
        raise ParameterError(f"Expected a point with {K.n} coordinates, got shape {coords.shape}")
    return float(_potential_values(K, coords[np.newaxis, :])[0])


def conjugation_residual(K: ConformalFactorField, f: SmoothFunction, grid: RegularGrid, stride: int = 1) -> float:
    """
    Max-norm gap between the two sides of the conjugation identity

    The left side K^(-(n+2)/2) H_K (K^((n-2)/2) f) is discretized with central
    differences; the right side -Lap f + Q_K f is exact. Only interior nodes
    whose grid index is a multiple of `stride` are compared.
    """
    n = K.n
    if grid.n != n or f.n != n:
        raise ParameterError("Grid, function and conformal factor must share the dimension")
    if stride < 1 or (grid.points - 1) % stride:
        raise ParameterError(f"Stride {stride} does not divide the grid")

    def conjugated(points: np.ndarray) -> np.ndarray:
        return K.values(points) ** ((n - 2) / 2.0) * f(points)

    field = ScalarField.sample(conjugated, grid.axes, model=K.model)
    lhs_field = apply_HK(field, K)
    pts = lhs_field.points()
    lhs = K.values(pts) ** (-(n + 2) / 2.0) * lhs_field.values
    rhs = -f.laplacian(pts) + _potential_values(K, pts) * f(pts)
    gap = np.abs(lhs - rhs)

    index = np.arange(1, grid.points - 1)
    keep = (index % stride) == 0
    mask = np.ix_(*([keep] * n))
    return float(np.max(gap[mask]))


def conjugation_convergence(K: ConformalFactorField, f: SmoothFunction, grid: RegularGrid,
                            levels: int = 3) -> Tuple[List[float], List[float]]:
    """
    Residuals on nested refinements measured at the coarse interior nodes

    Returns:
        (residuals, ratios residual_k / residual_{k+1})
    """
    residuals = []
    current = grid
    for level in range(levels):
        residuals.append(conjugation_residual(K, f, current, stride=2 ** level))
        current = current.refine()
    ratios = [a / b if b > 0 else float("inf") for a, b in zip(residuals, residuals[1:])]
    logger.debug("conjugation residuals %s ratios %s", residuals, ratios)
    return residuals, ratios


def _ball_quadrature(n: int, center: np.ndarray, radius: float, resolution: int):
    """
    Nodes and weights on the Euclidean ball and its sphere

    Gauss-Legendre in the radius (and in cos of the polar angle for n = 3),
    trapezoid in the periodic angle.
    """
    q = resolution
    r_nodes, r_weights = np.polynomial.legendre.leggauss(q)
    r = 0.5 * radius * (r_nodes + 1.0)
    wr = 0.5 * radius * r_weights
    m = 2 * q
    theta = 2.0 * np.pi * np.arange(m) / m
    wt = 2.0 * np.pi / m
    if n == 2:
        dirs = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
        vol_pts = center + r[:, None, None] * dirs[None, :, :]
        vol_w = (wr * r)[:, None] * np.full(m, wt)[None, :]
        bnd_w = np.full(m, wt * radius)
    elif n == 3:
        mu, wmu = np.polynomial.legendre.leggauss(q)
        sin_polar = np.sqrt(1.0 - mu ** 2)
        dirs = np.stack([
            sin_polar[:, None] * np.cos(theta)[None, :],
            sin_polar[:, None] * np.sin(theta)[None, :],
            np.broadcast_to(mu[:, None], (q, m)),
        ], axis=-1).reshape(-1, 3)
        ang_w = (wmu[:, None] * wt * np.ones(m)[None, :]).reshape(-1)
        vol_pts = center + r[:, None, None] * dirs[None, :, :]
        vol_w = (wr * r ** 2)[:, None] * ang_w[None, :]
        bnd_w = ang_w * radius ** 2
    else:
        raise ParameterError(f"Green identity quadrature supports n in (2, 3), got n={n}")
    bnd_pts = center + radius * dirs
    return vol_pts.reshape(-1, n), vol_w.reshape(-1), bnd_pts, dirs, bnd_w


def greens_identity_terms(u: SmoothFunction, v: SmoothFunction, center: Union[HalfSpacePoint, Sequence[float]],
                          radius: float, resolution: int = 32,
                          convention: str = "volume_form") -> Tuple[float, float]:
    """
    Both sides of the integration by parts formula for H0 on a Euclidean ball

    int_B (u H0 v - v H0 u) dmu  =  int_dB (v d_nu u - u d_nu v) dsigma

    with dmu = x_n^-n dx and d_nu = x_n d_N, N the outward Euclidean normal.
    Since H0 carries -x_n^2 Lap, the boundary integrand is v d_nu u - u d_nu v,
    the negative of the u d_nu v - v d_nu u form written for +Lap. The
    boundary measure is dsigma = x_n^-(n-1) dS ("volume_form") or
    x_n^(n-1) dS ("lemma").

    Returns:
        (volume side, boundary side)
    """
    c = _as_coordinates(center)
    n = len(c)
    if u.n != n or v.n != n:
        raise ParameterError("Functions and center must share the dimension")
    if radius <= 0:
        raise ParameterError(f"Radius must be positive, got {radius}")
    if c[-1] - radius <= 0:
        raise InvalidPointError(f"Ball of radius {radius} about height {c[-1]} touches x_n = 0")
    if convention not in ("volume_form", "lemma"):
        raise ParameterError(f"Unknown boundary convention: {convention!r}")

    vol_pts, vol_w, bnd_pts, normals, bnd_w = _ball_quadrature(n, c, radius, resolution)
    height = vol_pts[:, -1]
    volume = np.sum(vol_w * (u(vol_pts) * v.h0(vol_pts) - v(vol_pts) * u.h0(vol_pts)) * height ** (-n))

    bh = bnd_pts[:, -1]
    du = bh * np.sum(u.gradient(bnd_pts) * normals, axis=-1)
    dv = bh * np.sum(v.gradient(bnd_pts) * normals, axis=-1)
    exponent = -(n - 1) if convention == "volume_form" else (n - 1)
    boundary = np.sum(bnd_w * (v(bnd_pts) * du - u(bnd_pts) * dv) * bh ** exponent)
    return float(volume), float(boundary)


def greens_identity_residual(u: SmoothFunction, v: SmoothFunction, center, radius: float,
                             resolution: int = 32, convention: str = "volume_form") -> float:
    """|volume side - boundary side| of the H0 integration by parts formula"""
    volume, boundary = greens_identity_terms(u, v, center, radius, resolution, convention)
    return abs(volume - boundary)


def radial_h0_coefficients(n: int, rho):
    """
    Coefficients (p2, p1, p0) of the radial operator
    -rho(rho+1) d^2 - (n rho + n/2) d - (n - 1)^2/4
    """
    rho = np.asarray(rho, dtype=float) if np.ndim(rho) else float(rho)
    p2 = -rho * (rho + 1.0)
    p1 = -(n * rho + n / 2.0)
    p0 = -(n - 1) ** 2 / 4.0
    return p2, p1, p0


@lru_cache(maxsize=64)
def _radial_apply(n: int, expr_text: str):
    rho = sympy.Symbol("rho", nonnegative=True)
    g = sympy.sympify(expr_text, locals={"rho": rho})
    p2 = -rho * (rho + 1)
    p1 = -(n * rho + sympy.Rational(n, 2))
    p0 = -sympy.Rational((n - 1) ** 2, 4)
    expr = p2 * sympy.diff(g, rho, 2) + p1 * sympy.diff(g, rho) + p0 * g
    return sympy.lambdify(rho, expr, modules=["numpy"])


def radial_h0_apply(n: int, expr, rho) -> np.ndarray:
    """Exact radial H0 of a sympy expression in the symbol `rho`"""
    func = _radial_apply(n, str(expr))
    rho = np.asarray(rho, dtype=float)
    return np.broadcast_to(np.asarray(func(rho), dtype=float), rho.shape).copy()


def sturm_liouville_defect(n: int) -> sympy.Expr:
    """
    Symbolic difference between the Sturm-Liouville form
    -(1/w_n) d/drho[rho(rho+1) w_n g'] - (n-1)^2/4 g and the radial operator;
    simplifies to 0.
    """
    if n < 2:
        raise ParameterError(f"Dimension must be >= 2, got n={n}")
    rho = sympy.Symbol("rho", positive=True)
    g = sympy.Function("g")(rho)
    weight = (rho * (rho + 1)) ** sympy.Rational(n - 2, 2)
    form = -sympy.diff(rho * (rho + 1) * weight * sympy.diff(g, rho), rho) / weight
    form -= sympy.Rational((n - 1) ** 2, 4) * g
    p2, p1, p0 = -rho * (rho + 1), -(n * rho + sympy.Rational(n, 2)), -sympy.Rational((n - 1) ** 2, 4)
    target = p2 * sympy.diff(g, rho, 2) + p1 * sympy.diff(g, rho) + p0 * g
    return sympy.simplify(sympy.powsimp(sympy.expand(form - target), force=True))
