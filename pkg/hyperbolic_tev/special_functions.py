"""
Gauss hypergeometric function for conjugate parameter pairs
Evaluates 2F1(s - i t, s + i t; c; x) for real x <= 0, the regime of the
radial solutions, plus a slow extended-precision oracle for testing.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import mpmath
import numpy as np

from .errors import NumericFailure, ParameterError
from .models import HypergeometricInput

logger = logging.getLogger(__name__)

TERM_CAP = 1_000_000
DIRECT_LIMIT = 0.5
GUARD_DIGITS = 16
MAX_DIGITS = 600
TAIL_SWITCH = 1e-3
TAIL_CHUNK = 16384


@dataclass
class HypergeometricValue:
    """Value of the series together with how it was obtained"""
    value: float
    imag_shadow: Optional[float]
    terms: int
    digits: int
    method: str


def _series_parameters(inp: HypergeometricInput, method: str) -> Tuple[complex, complex, float, float, complex]:
    """
    Upper parameters, lower parameter, argument and prefactor of the series
    actually summed: the plain series, or its Pfaff transform
    F(a, b; c; x) = (1 - x)^(-a) F(a, c - b; c; x / (x - 1)).
    """
    a, b, c, x = inp.a, inp.b, inp.c, inp.x
    if method == "direct":
        return a, b, c, x, complex(1.0)
    zeta = x / (x - 1.0)
    prefactor = complex(1.0 - x) ** (-a)
    return a, c - b, c, zeta, prefactor


def _peak_log10(a: complex, b: complex, c: float, z: float) -> Tuple[float, int]:
    """Float pass over |term_k| in log space: (log10 of the largest term, its index)"""
    if z == 0.0:
        return 0.0, 0
    size = 1024
    while True:
        k = np.arange(size, dtype=float)
        ratio = np.abs((a + k) * (b + k)) * abs(z) / ((c + k) * (k + 1.0))
        if ratio[-1] < 1.0 or size >= TERM_CAP:
            break
        size *= 4
    with np.errstate(divide="ignore"):
        logs = np.cumsum(np.log(ratio))
    peak = int(np.argmax(logs))
    return max(0.0, float(logs[peak]) / math.log(10.0)), peak + 1


def _double_tail(a: complex, b: complex, c: float, z: float, k0: int, term: complex,
                 total_abs: float, real: bool) -> Tuple[complex, int]:
    """
    Sums the remaining terms in double precision once they are negligible
    against the running total.

    Returns:
        (tail sum, index after the last term used)
    """
    dtype = float if real else complex
    tail = dtype(0)
    k = k0
    term = dtype(term.real) if real else complex(term)
    while k < TERM_CAP:
        ks = np.arange(k, min(k + TAIL_CHUNK, TERM_CAP), dtype=float)
        if real:
            ratios = ((a.real + ks) * (b.real + ks) - (a.imag * b.imag)) * z / ((c + ks) * (ks + 1.0))
        else:
            ratios = (a + ks) * (b + ks) * z / ((c + ks) * (ks + 1.0))
        terms = term * np.cumprod(ratios)
        tail += terms.sum()
        term = terms[-1]
        k = int(ks[-1]) + 1
        if abs(term) < 1e-18 * max(total_abs, 1e-300):
            return tail, k
    raise NumericFailure(
        "Hypergeometric series did not converge",
        {"terms": k, "last_term": abs(term), "z": z},
    )


def _sum_series(a: complex, b: complex, c: float, z: float, digits: int, real: bool,
                peak_index: int) -> Tuple[mpmath.mpc, int]:
    """Sums 2F1(a, b; c; z) at the given working precision"""
    with mpmath.workdps(digits):
        zm = mpmath.mpf(z)
        cm = mpmath.mpf(c)
        if real:
            s = mpmath.mpf(a.real)
            t2 = -mpmath.mpf(a.imag) * mpmath.mpf(b.imag)
            term = mpmath.mpf(1)
        else:
            am = mpmath.mpc(a.real, a.imag)
            bm = mpmath.mpc(b.real, b.imag)
            term = mpmath.mpc(1)
        total = term
        k = 0
        while k < TERM_CAP:
            if real:
                num = (s + k) ** 2 + t2 if a.imag != 0 else (s + k) * (mpmath.mpf(b.real) + k)
            else:
                num = (am + k) * (bm + k)
            term = term * num * zm / ((cm + k) * (k + 1))
            total += term
            k += 1
            if term == 0:
                return total, k
            if k > peak_index and abs(term) < TAIL_SWITCH * abs(total):
                tail, k = _double_tail(a, b, c, z, k, complex(term), float(abs(total)), real)
                total += mpmath.mpf(float(tail.real)) if real else mpmath.mpc(complex(tail))
                return total, k
    raise NumericFailure(
        "Hypergeometric series did not converge",
        {"terms": TERM_CAP, "z": z, "digits": digits},
    )


def evaluate_2f1(inp: HypergeometricInput, method: str = "auto",
                 with_shadow: bool = False) -> HypergeometricValue:
    """
    Evaluates 2F1(s - i t, s + i t; c; x) for x <= 0

    Args:
        inp: series parameters
        method: "direct" sums the series in x (real recurrence on the
                conjugate pair), "pfaff" sums the transformed series in
                x/(x - 1); "auto" picks direct for |x| <= 1/2
        with_shadow: also report the imaginary part of the complex Pfaff
                     evaluation, which vanishes for the exact function

    Returns:
        HypergeometricValue
    """
    if method == "auto":
        method = "direct" if abs(inp.x) <= DIRECT_LIMIT else "pfaff"
    if method not in ("direct", "pfaff"):
        raise ParameterError(f"Unknown method: {method!r}")
    if method == "direct" and abs(inp.x) >= 1.0:
        raise ParameterError(f"Direct series needs |x| < 1, got x={inp.x}")
    if inp.x == 0.0:
        return HypergeometricValue(1.0, 0.0 if with_shadow else None, 0, 0, method)

    a, b, c, z, prefactor = _series_parameters(inp, method)
    real = method == "direct" or inp.imaginary
    peak, peak_index = _peak_log10(a, b, c, z)
    scale = peak + math.log10(max(abs(prefactor), 1e-300))
    digits = int(math.ceil(max(peak, 0.0))) + GUARD_DIGITS

    while True:
        total, terms = _sum_series(a, b, c, z, digits, real, peak_index)
        with mpmath.workdps(digits):
            full = mpmath.mpc(prefactor.real, prefactor.imag) * total
            value = float(mpmath.re(full))
            imag = float(mpmath.im(full))
        if value == 0.0:
            break
        needed = int(math.ceil(scale - math.log10(abs(value)))) + GUARD_DIGITS
        if needed <= digits or digits >= MAX_DIGITS:
            break
        logger.debug("2F1 precision raised from %d to %d digits", digits, needed + 4)
        digits = min(needed + 4, MAX_DIGITS)

    if not math.isfinite(value):
        raise NumericFailure("Hypergeometric series produced a non-finite value", inp.to_dict())

    shadow: Optional[float] = None
    if with_shadow:
        if method == "pfaff":
            shadow = imag
        else:
            shadow = evaluate_2f1(inp, method="pfaff", with_shadow=True).imag_shadow
    logger.debug("2F1(s=%g, t=%g, c=%g, x=%g) via %s: %d terms at %d digits",
                 inp.s, inp.t, inp.c, inp.x, method, terms, digits)
    return HypergeometricValue(value, shadow, terms, digits, method)


def gauss_2f1(inp: HypergeometricInput) -> float:
    """Real value of 2F1(s - i t, s + i t; c; x)"""
    return evaluate_2f1(inp).value


def gauss_2f1_derivative(inp: HypergeometricInput) -> float:
    """
    d/dx 2F1(a, b; c; x) = (a b / c) 2F1(a + 1, b + 1; c + 1; x)

    For the conjugate pair a b = s^2 + t^2.
    """
    return inp.ab / inp.c * gauss_2f1(inp.shifted())


def series_oracle(inp: HypergeometricInput, precision_digits: int = 30) -> float:
    """
    Slow extended-precision evaluation used as a test oracle

    Sums the Pfaff-transformed series entirely in mpmath and stops once the
    terms fall below 10^-precision_digits relative to the sum.
    """
    if precision_digits > 60 or precision_digits < 1:
        raise ParameterError(f"precision_digits must lie in [1, 60], got {precision_digits}")
    if inp.x == 0.0:
        return 1.0
    a, b, c, zeta, prefactor = _series_parameters(inp, "pfaff")
    if not 0.0 <= zeta < 1.0:
        raise ParameterError(f"Mapped argument {zeta} outside [0, 1)")
    peak, _ = _peak_log10(a, b, c, zeta)
    digits = precision_digits + int(math.ceil(peak)) + 10
    with mpmath.workdps(digits):
        am = mpmath.mpc(a.real, a.imag)
        bm = mpmath.mpc(b.real, b.imag)
        cm = mpmath.mpf(c)
        zm = mpmath.mpf(zeta)
        tol = mpmath.mpf(10) ** (-precision_digits - 2)
        term = mpmath.mpc(1)
        total = term
        k = 0
        while True:
            term = term * (am + k) * (bm + k) * zm / ((cm + k) * (k + 1))
            total += term
            k += 1
            if abs(term) < tol * abs(total) and abs(am + k) * abs(bm + k) * zm < (cm + k) * (k + 1):
                break
            if k >= TERM_CAP:
                raise NumericFailure("Oracle series did not converge", {"terms": k, "zeta": zeta})
        result = mpmath.re(mpmath.power(1 - mpmath.mpf(inp.x), -am) * total)
        return float(result)


def contiguous_residual(inp: HypergeometricInput) -> float:
    """
    Relative residual of the Gauss contiguous relation in c

    c(c-1)(z-1)F(c-1) + c[c-1-(2c-a-b-1)z]F(c) + (c-a)(c-b)z F(c+1) = 0
    """
    c, z, s = inp.c, inp.x, inp.s
    if c - 1.0 <= 0 and float(c - 1.0).is_integer():
        raise ParameterError(f"c - 1 must not be a nonpositive integer, got c={c}")
    lower = gauss_2f1(HypergeometricInput(s, inp.t, c - 1.0, z, inp.imaginary))
    middle = gauss_2f1(inp)
    upper = gauss_2f1(HypergeometricInput(s, inp.t, c + 1.0, z, inp.imaginary))
    cab = (c - s) ** 2 + inp.t_squared
    terms = (
        c * (c - 1.0) * (z - 1.0) * lower,
        c * (c - 1.0 - (2.0 * c - 2.0 * s - 1.0) * z) * middle,
        cab * z * upper,
    )
    scale = max(abs(v) for v in terms)
    return abs(sum(terms)) / scale if scale > 0 else 0.0
