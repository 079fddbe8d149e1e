"""
Models of hyperbolic space H^n
Distances, the ball/half-space model maps, conformal factors and the radial
substitution cosh r = 2 rho + 1.
"""

import logging
from functools import lru_cache
from typing import Optional, Union

import numpy as np
import sympy

from .errors import InvalidPointError, ParameterError
from .models import BallPoint, HalfSpacePoint, RadialCoordinate

logger = logging.getLogger(__name__)

Point = Union[HalfSpacePoint, BallPoint]
ArrayLike = Union[float, np.ndarray]


def distance_half_space(p: HalfSpacePoint, q: HalfSpacePoint) -> float:
    """
    Hyperbolic distance in the upper half-space model

    d = arcosh(1 + |x - y|^2 / (2 x_n y_n))
    """
    if p.n != q.n:
        raise InvalidPointError(f"Dimension mismatch: {p.n} vs {q.n}")
    x = np.asarray(p.coordinates())
    y = np.asarray(q.coordinates())
    arg = 1.0 + float(np.sum((x - y) ** 2)) / (2.0 * p.x_n * q.x_n)
    return float(np.arccosh(max(arg, 1.0)))


def distance_ball(a: BallPoint, b: BallPoint) -> float:
    """Hyperbolic distance in the ball model"""
    if a.n != b.n:
        raise InvalidPointError(f"Dimension mismatch: {a.n} vs {b.n}")
    y1 = np.asarray(a.coordinates())
    y2 = np.asarray(b.coordinates())
    denom = (1.0 - float(y1 @ y1)) * (1.0 - float(y2 @ y2))
    arg = 1.0 + 2.0 * float(np.sum((y1 - y2) ** 2)) / denom
    return float(np.arccosh(max(arg, 1.0)))


def ball_to_half_space(b: BallPoint) -> HalfSpacePoint:
    """
    Maps the ball model onto the half-space model

    The center goes to <0, ..., 0, 1>; the map is an isometry.
    """
    y = np.asarray(b.coordinates())
    y_prime, y_n = y[:-1], y[-1]
    denom = float(y_prime @ y_prime) + (1.0 - y_n) ** 2
    x = np.empty_like(y)
    x[:-1] = 2.0 * y_prime / denom
    x[-1] = (1.0 - float(y @ y)) / denom
    return HalfSpacePoint.from_coordinates(x)


def half_space_to_ball(p: HalfSpacePoint) -> BallPoint:
    """Inverse of ball_to_half_space"""
    x = np.asarray(p.coordinates())
    x_prime, x_n = x[:-1], x[-1]
    denom = float(x_prime @ x_prime) + (1.0 + x_n) ** 2
    y = np.empty_like(x)
    y[:-1] = 2.0 * x_prime / denom
    y[-1] = (float(x @ x) - 1.0) / denom
    return BallPoint(y=tuple(y))


def metric_factor(point: Point, model: Optional[str] = None) -> float:
    """
    Conformal factor K of the metric |dx|^2 / K^2

    Args:
        point: HalfSpacePoint or BallPoint
        model: optional explicit model name ("half_space" or "ball") checked
               against the point type

    Returns:
        x_n in the half-space model, 2/(1 - |y|^2) in the ball model
    """
    if isinstance(point, HalfSpacePoint):
        if model not in (None, "half_space"):
            raise InvalidPointError(f"Half-space point given with model {model!r}")
        return point.x_n
    if isinstance(point, BallPoint):
        if model not in (None, "ball"):
            raise InvalidPointError(f"Ball point given with model {model!r}")
        y = np.asarray(point.coordinates())
        return 2.0 / (1.0 - float(y @ y))
    raise InvalidPointError(f"Unsupported point type: {type(point).__name__}")


def _check_nonnegative(name: str, value: ArrayLike) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if np.any(arr < 0) or np.any(~np.isfinite(arr)):
        raise ParameterError(f"{name} must be finite and nonnegative")
    return arr


def _same_shape(value: ArrayLike, result: np.ndarray) -> ArrayLike:
    return float(result) if np.ndim(value) == 0 else result


def rho_of_r(r: ArrayLike) -> ArrayLike:
    """rho = (cosh r - 1)/2, evaluated as sinh^2(r/2)"""
    arr = _check_nonnegative("r", r)
    return _same_shape(r, np.sinh(arr / 2.0) ** 2)


def r_of_rho(rho: ArrayLike) -> ArrayLike:
    """Inverse of rho_of_r, r = 2 asinh(sqrt(rho))"""
    arr = _check_nonnegative("rho", rho)
    return _same_shape(rho, 2.0 * np.arcsinh(np.sqrt(arr)))


def cap_radius(R: float) -> float:
    """Algebraic radius P of the ball of hyperbolic radius R"""
    return rho_of_r(R)


def radial_coordinate(r: Optional[float] = None, rho: Optional[float] = None) -> RadialCoordinate:
    """Builds a consistent (r, rho) pair from either value"""
    if (r is None) == (rho is None):
        raise ParameterError("Give exactly one of r or rho")
    if r is not None:
        return RadialCoordinate(r=float(r), rho=rho_of_r(float(r)))
    return RadialCoordinate(r=r_of_rho(float(rho)), rho=float(rho))


def half_space_radial_rho(x: np.ndarray, center_height: float = 1.0) -> np.ndarray:
    """
    Algebraic radius of half-space points about <0, ..., 0, h>

    Args:
        x: array of shape (..., n) with positive last coordinate
        center_height: height h of the center

    Returns:
        |x - c|^2 / (4 x_n h), the value (cosh d - 1)/2 for the distance d
    """
    x = np.asarray(x, dtype=float)
    if np.any(x[..., -1] <= 0):
        raise InvalidPointError("Half-space heights must be positive")
    shifted = x.copy()
    shifted[..., -1] -= center_height
    return np.sum(shifted ** 2, axis=-1) / (4.0 * x[..., -1] * center_height)


def radial_weight(n: int, rho: ArrayLike) -> ArrayLike:
    """
    Radial volume weight w_n(rho) = (rho (rho + 1))^((n - 2)/2)

    The constant area of the unit sphere is left out.
    """
    if n < 2:
        raise ParameterError(f"Dimension must be >= 2, got n={n}")
    arr = _check_nonnegative("rho", rho)
    if n == 2:
        return _same_shape(rho, np.ones_like(arr))
    return _same_shape(rho, (arr * (arr + 1.0)) ** ((n - 2) / 2.0))


@lru_cache(maxsize=None)
def _flux_identity(n: int):
    rho = sympy.Symbol("rho", positive=True)
    weight = (rho * (rho + 1)) ** sympy.Rational(n - 2, 2)
    expr = sympy.diff(rho * (rho + 1) * weight, rho) - (n * rho + sympy.Rational(n, 2)) * weight
    return sympy.lambdify(rho, sympy.simplify(expr), modules=["numpy"])


def weight_flux_residual(n: int, rho: ArrayLike) -> ArrayLike:
    """
    Residual of d/drho[rho(rho+1) w_n] - (n rho + n/2) w_n on the given points

    The derivative is taken symbolically and evaluated numerically.
    """
    if n < 2:
        raise ParameterError(f"Dimension must be >= 2, got n={n}")
    arr = _check_nonnegative("rho", rho)
    values = np.broadcast_to(np.asarray(_flux_identity(n)(arr), dtype=float), arr.shape)
    return _same_shape(rho, np.array(values))
