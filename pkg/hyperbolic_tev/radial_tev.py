"""
Radial transmission eigenvalues for constant potentials on hyperbolic balls
Autovalores de transmissão radiais para potenciais constantes em bolas hiperbólicas
Hypergeometric radial solutions, the matching determinant and its roots, the
large-energy model M(lambda) and the far-field decay check.
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import brentq

from .errors import EnvelopeError, NumericFailure, ParameterError
from .models import (
    DecayReport,
    DeterminantSample,
    EigenvalueList,
    FlavorEquivalence,
    HypergeometricInput,
    RadialProblem,
    RefinedRoot,
)
from .settings import Settings
from .special_functions import evaluate_2f1, gauss_2f1

logger = logging.getLogger(__name__)

RHO_ENVELOPE = 1e4
MAX_BISECTIONS = 200
SCAN_FLOOR = 1e-3


def _check_lambda(lam: float, allow_negative: bool) -> float:
    lam = float(lam)
    if not math.isfinite(lam):
        raise ParameterError(f"lambda must be finite, got {lam}")
    if allow_negative:
        if lam == 0:
            raise ParameterError("lambda must be nonzero")
    elif lam <= 0:
        raise ParameterError(f"lambda must be positive, got {lam}")
    return lam


def _input(prob: RadialProblem, t_squared: float, rho: float, shift: int = 0) -> HypergeometricInput:
    if rho < 0:
        raise ParameterError(f"rho must be nonnegative, got {rho}")
    return HypergeometricInput.from_t_squared(prob.s + shift, t_squared, prob.c + shift, -float(rho))


def solution_v(prob: RadialProblem, lam: float, rho: float, allow_negative: bool = False) -> float:
    """Perturbed radial solution F(s - i t_v, s + i t_v; n/2; -rho), t_v^2 = lambda - lambda^nu V0"""
    lam = _check_lambda(lam, allow_negative)
    return gauss_2f1(_input(prob, prob.t_squared_v(lam), rho))


def solution_w(prob: RadialProblem, lam: float, rho: float, allow_negative: bool = False) -> float:
    """Free radial solution F(s - i t_w, s + i t_w; n/2; -rho), t_w^2 = lambda"""
    lam = _check_lambda(lam, allow_negative)
    return gauss_2f1(_input(prob, prob.t_squared_w(lam), rho))


def _radial_derivative(prob: RadialProblem, t_squared: float, rho: float) -> float:
    # d/drho F(-rho) = -(ab/c) F(a+1, b+1; c+1; -rho), ab = s^2 + t^2
    return -(prob.s ** 2 + t_squared) / prob.c * gauss_2f1(_input(prob, t_squared, rho, shift=1))


def derivative_v(prob: RadialProblem, lam: float, rho: Optional[float] = None,
                 allow_negative: bool = False) -> float:
    """v'(rho), at the cap radius P unless rho is given"""
    lam = _check_lambda(lam, allow_negative)
    return _radial_derivative(prob, prob.t_squared_v(lam), prob.cap_radius if rho is None else rho)


def derivative_w(prob: RadialProblem, lam: float, rho: Optional[float] = None,
                 allow_negative: bool = False) -> float:
    """w'(rho), at the cap radius P unless rho is given"""
    lam = _check_lambda(lam, allow_negative)
    return _radial_derivative(prob, prob.t_squared_w(lam), prob.cap_radius if rho is None else rho)


def matching_determinant(n: int, R: float, lam: float, t_squared_v: float, t_squared_w: float,
                         with_shadow: bool = False) -> DeterminantSample:
    """
    F_v c_w G_w - F_w c_v G_v at rho = P for arbitrary signed t^2 values

    G denotes the shifted series F(s+1 -/+ i t; n/2 + 1; -P) and
    c = ((n-1)/2)^2 + t^2; the common factor 2/n is dropped.
    """
    s, c = (n - 1) / 2.0, n / 2.0
    x = -math.sinh(R / 2.0) ** 2
    fv = evaluate_2f1(HypergeometricInput.from_t_squared(s, t_squared_v, c, x), with_shadow=with_shadow)
    fw = evaluate_2f1(HypergeometricInput.from_t_squared(s, t_squared_w, c, x), with_shadow=with_shadow)
    gv = evaluate_2f1(HypergeometricInput.from_t_squared(s + 1, t_squared_v, c + 1, x), with_shadow=with_shadow)
    gw = evaluate_2f1(HypergeometricInput.from_t_squared(s + 1, t_squared_w, c + 1, x), with_shadow=with_shadow)
    cv = s * s + t_squared_v
    cw = s * s + t_squared_w
    det = fv.value * cw * gw.value - fw.value * cv * gv.value
    shadow = None
    if with_shadow:
        # imaginary part of the same expression built from the complex evaluations
        zv, zw = complex(fv.value, fv.imag_shadow), complex(fw.value, fw.imag_shadow)
        yv, yw = complex(gv.value, gv.imag_shadow), complex(gw.value, gw.imag_shadow)
        shadow = (zv * cw * yw - zw * cv * yv).imag
    return DeterminantSample(
        lam=lam, det_value=det, F_v=fv.value, F_w=fw.value,
        cG_v=cv * gv.value, cG_w=cw * gw.value, imag_shadow=shadow,
    )


def determinant(prob: RadialProblem, lam: float, with_shadow: bool = False,
                allow_negative: bool = False) -> DeterminantSample:
    """
    Matching determinant of the problem at energy lambda

    Numeric failures of the hypergeometric engine are recorded on the sample
    instead of being raised.
    """
    lam = _check_lambda(lam, allow_negative)
    try:
        return matching_determinant(prob.n, prob.R, lam, prob.t_squared_v(lam), prob.t_squared_w(lam),
                                    with_shadow=with_shadow)
    except NumericFailure as e:
        logger.warning(f"Determinant evaluation failed at lambda={lam}: {e}")
        nan = float("nan")
        return DeterminantSample(lam=lam, det_value=nan, F_v=nan, F_w=nan, cG_v=nan, cG_w=nan, error=str(e))


def envelope_t(prob: RadialProblem, lambda_max: float) -> float:
    """Largest t the engine meets for energies up to lambda_max"""
    return math.sqrt(max(abs(lambda_max), abs(prob.t_squared_v(lambda_max))))


def scan_grid(lam0: float, lambda_max: float, scan_step: float, aligned: bool = False) -> np.ndarray:
    """
    Scan points from lam0 to lambda_max, both ends included

    With aligned=True the interior points are the multiples of scan_step above
    lam0; otherwise they are lam0 + k scan_step.
    """
    if aligned:
        interior = scan_step * np.arange(1, int(math.floor(lambda_max / scan_step + 1e-9)) + 1)
        grid = np.concatenate([[lam0], interior[interior > lam0]])
    else:
        count = int(math.floor((lambda_max - lam0) / scan_step + 1e-9)) + 1
        grid = lam0 + scan_step * np.arange(count)
    if lambda_max - grid[-1] > 1e-9 * lambda_max:
        grid = np.append(grid, lambda_max)
    return grid


def _scan_chunk(prob: RadialProblem, lambdas: Sequence[float]) -> List[DeterminantSample]:
    return [determinant(prob, lam) for lam in lambdas]


def _scan(prob: RadialProblem, lambdas: np.ndarray, workers: int) -> List[DeterminantSample]:
    if workers <= 1 or len(lambdas) < 2 * workers:
        return _scan_chunk(prob, lambdas)
    chunks = [list(c) for c in np.array_split(lambdas, workers) if len(c)]
    samples: List[DeterminantSample] = []
    with ProcessPoolExecutor(max_workers=workers) as pool:
        # map keeps chunk order, so the merge is ordered by lambda
        for part in pool.map(_scan_chunk, [prob] * len(chunks), chunks):
            samples.extend(part)
    return samples


def _det_value(prob: RadialProblem, lam: float) -> float:
    sample = determinant(prob, lam)
    if not sample.ok:
        raise NumericFailure("Determinant evaluation failed during refinement", {"lambda": lam, "error": sample.error})
    return sample.det_value


def _bisect(prob: RadialProblem, lo: float, hi: float, flo: float, fhi: float,
            rel_tol: float, residual_tol: float) -> Tuple[float, float, int, bool]:
    """
    Bisection on a sign change until both the bracket is relatively narrower
    than rel_tol and |det| is below residual_tol times the bracket scale
    """
    scale = max(abs(flo), abs(fhi))
    best, fbest = (lo, flo) if abs(flo) < abs(fhi) else (hi, fhi)
    iterations = 0
    while iterations < MAX_BISECTIONS:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        fmid = _det_value(prob, mid)
        iterations += 1
        if abs(fmid) <= abs(fbest):
            best, fbest = mid, fmid
        if fmid == 0.0:
            break
        if (fmid < 0) == (flo < 0):
            lo, flo = mid, fmid
        else:
            hi, fhi = mid, fmid
        narrow = (hi - lo) <= rel_tol * abs(mid)
        if narrow and abs(fbest) <= residual_tol * scale:
            break
        if (hi - lo) <= 4.0 * np.finfo(float).eps * abs(mid):
            break
    residual = abs(fbest) / scale if scale > 0 else 0.0
    return best, residual, iterations, residual <= residual_tol


def find_eigenvalues(prob: RadialProblem, lambda_max: float, scan_step: float = 5.0, *,
                     lambda_min: Optional[float] = None, t_max: Optional[float] = None,
                     workers: Optional[int] = None, rel_tol: float = 1e-10,
                     residual_tol: float = 1e-8) -> EigenvalueList:
    """
    Roots of the matching determinant on (0, lambda_max]

    Args:
        prob: radial problem
        lambda_max: upper end of the scan
        scan_step: spacing of the sign-change scan
        lambda_min: first scan point (default: just above 0, then multiples of scan_step)
        t_max: accuracy envelope on t (default from Settings)
        workers: processes for the scan (default from Settings)
        rel_tol: relative bracket width of a refined root
        residual_tol: |det(root)| relative to the bracket scale

    Returns:
        EigenvalueList with refined roots in increasing order
    """
    settings = Settings.from_env()
    t_max = settings.t_max if t_max is None else t_max
    workers = settings.workers if workers is None else workers
    if scan_step <= 0:
        raise ParameterError(f"scan_step must be positive, got {scan_step}")
    lam0 = min(scan_step, SCAN_FLOOR) if lambda_min is None else float(lambda_min)
    if lam0 <= 0 or lambda_max <= lam0:
        raise ParameterError(f"Need 0 < lambda_min < lambda_max, got {lam0}, {lambda_max}")
    reach = envelope_t(prob, lambda_max)
    if reach > t_max * (1.0 + 1e-12):
        raise EnvelopeError(
            f"lambda_max={lambda_max} needs t={reach:.3f} beyond the accuracy envelope t_max={t_max}"
        )

    grid = scan_grid(lam0, lambda_max, scan_step, aligned=lambda_min is None)
    count = len(grid)
    samples = _scan(prob, grid, workers)
    failed = [s for s in samples if not s.ok]
    if failed:
        raise NumericFailure(
            "Determinant scan failed",
            {"failures": len(failed), "first_lambda": failed[0].lam, "error": failed[0].error},
        )
    values = np.array([s.det_value for s in samples])

    roots: List[RefinedRoot] = []
    for i in range(count):
        if values[i] == 0.0:
            roots.append(RefinedRoot(len(roots) + 1, float(grid[i]), (float(grid[i]), float(grid[i])), 0, 0.0))
            continue
        if i + 1 < count and values[i] * values[i + 1] < 0:
            lam, residual, iterations, ok = _bisect(
                prob, float(grid[i]), float(grid[i + 1]), values[i], values[i + 1], rel_tol, residual_tol
            )
            if not ok:
                logger.warning(f"Root near lambda={lam} kept with residual {residual:.3e}")
            roots.append(RefinedRoot(len(roots) + 1, lam, (float(grid[i]), float(grid[i + 1])),
                                     iterations, residual, ok))

    coarse = any(b.lam - a.lam < 2.0 * scan_step for a, b in zip(roots, roots[1:]))
    tau = math.sqrt(abs(prob.t_squared_v(lambda_max)) / lambda_max)
    fast_spacing = 2.0 * math.pi * math.sqrt(lambda_max) / (prob.R * (1.0 + tau))
    if scan_step > 0.5 * fast_spacing:
        coarse = True
    if coarse:
        logger.warning(f"Scan step {scan_step} looks too coarse for the root spacing; consider halving it")
    logger.info(f"Found {len(roots)} roots of the matching determinant on (0, {lambda_max}]")
    return EigenvalueList(problem=prob, roots=roots, lambda_max=float(lambda_max),
                          scan_step=float(scan_step), coarse_grid=coarse)


def asymptotic_model(n: int, R: float, t_w: float, t_v: float) -> float:
    """(1 - tau) cos(R(t_w + t_v) - n pi/2) + (1 + tau) sin(R(t_w - t_v)) with tau = t_v / t_w"""
    tau = t_v / t_w
    return (1.0 - tau) * math.cos(R * (t_w + t_v) - n * math.pi / 2.0) + (1.0 + tau) * math.sin(R * (t_w - t_v))


def asymptotic_M(prob: RadialProblem, lam: float) -> float:
    """
    Dominant oscillatory part of the determinant for large lambda

    For the Helmholtz flavor this is
    (1 - sqrt(1-V0)) cos(R(sqrt(l) + sqrt(l - l V0)) - n pi/2) + (1 + sqrt(1-V0)) sin(R(sqrt(l) - sqrt(l - l V0))).
    """
    lam = _check_lambda(lam, False)
    if prob.nu == 1:
        root = math.sqrt(1.0 - prob.V0)
        tw, tv = math.sqrt(lam), math.sqrt(lam - lam * prob.V0)
        return ((1.0 - root) * math.cos(prob.R * (tw + tv) - prob.n * math.pi / 2.0)
                + (1.0 + root) * math.sin(prob.R * (tw - tv)))
    tv2 = prob.t_squared_v(lam)
    if tv2 <= 0:
        raise ParameterError(f"Asymptotic model needs lambda > V0, got lambda={lam}")
    return asymptotic_model(prob.n, prob.R, math.sqrt(lam), math.sqrt(tv2))


def asymptotic_roots(prob: RadialProblem, lambda_max: float, step: float = 1.0) -> List[float]:
    """Zeros of asymptotic_M on (step, lambda_max] bracketed on a grid and refined with brentq"""
    if step <= 0 or lambda_max <= step:
        raise ParameterError("Need 0 < step < lambda_max")
    lo = step if prob.nu == 1 else max(step, prob.V0 + step)
    grid = np.arange(lo, lambda_max + 0.5 * step, step)
    grid = grid[grid <= lambda_max]
    values = np.array([asymptotic_M(prob, lam) for lam in grid])
    roots = []
    for a, b, fa, fb in zip(grid, grid[1:], values, values[1:]):
        if fa == 0.0:
            roots.append(float(a))
        elif fa * fb < 0:
            roots.append(float(brentq(lambda lam: asymptotic_M(prob, lam), a, b, xtol=1e-12, rtol=1e-14)))
    return roots


def root_count_estimate(prob: RadialProblem, lam: float) -> int:
    """Number of zeros of the dominant sine factor below lambda, floor(R |t_w - t_v| / pi)"""
    lam = _check_lambda(lam, False)
    tv = math.sqrt(abs(prob.t_squared_v(lam)))
    return int(math.floor(prob.R * abs(math.sqrt(lam) - tv) / math.pi))


def asymptotic_consistency(prob: RadialProblem, roots: Union[EigenvalueList, Iterable[float]],
                           sqrt_lambda_min: float = 20.0) -> float:
    """sup of |M(lambda_k)| sqrt(lambda_k) over roots with sqrt(lambda_k) >= sqrt_lambda_min"""
    values = roots.values if isinstance(roots, EigenvalueList) else list(roots)
    scaled = [abs(asymptotic_M(prob, lam)) * math.sqrt(lam) for lam in values if math.sqrt(lam) >= sqrt_lambda_min]
    return max(scaled, default=0.0)


def helmholtz_to_schrodinger(prob: RadialProblem, lambda0: float) -> FlavorEquivalence:
    """
    The Helmholtz problem at lambda0 next to the Schrodinger problem with the
    scaled potential lambda0*V0 at the same energy; both matching systems use
    t_v^2 = lambda0 - lambda0 V0, so the determinants coincide.
    """
    if prob.nu != 1:
        raise ParameterError("helmholtz_to_schrodinger expects a Helmholtz (nu=1) problem")
    lambda0 = _check_lambda(lambda0, False)
    schrodinger = RadialProblem(n=prob.n, R=prob.R, V0=lambda0 * prob.V0, nu=0)
    helm = determinant(prob, lambda0)
    schr = determinant(schrodinger, lambda0)
    return FlavorEquivalence(helmholtz=prob, schrodinger=schrodinger, lam=lambda0,
                             det_helmholtz=helm.det_value, det_schrodinger=schr.det_value)


def difference_profile(prob: RadialProblem, lam: float, rho: Sequence[float]) -> np.ndarray:
    """
    u = v - (v(P)/w(P)) w on the given radii, vanishing at rho = P

    At a transmission eigenvalue u'(P) vanishes as well. The roles of v and w
    swap when |w(P)| < |v(P)|.
    """
    lam = _check_lambda(lam, False)
    rho = np.asarray(rho, dtype=float)
    P = prob.cap_radius
    v = np.array([solution_v(prob, lam, r) for r in rho])
    w = np.array([solution_w(prob, lam, r) for r in rho])
    vP, wP = solution_v(prob, lam, P), solution_w(prob, lam, P)
    if abs(wP) >= abs(vP):
        return v - (vP / wP) * w
    return w - (wP / vP) * v


def farfield_decay_check(prob: RadialProblem, lam: float, rho_max: float, rho_min: float = 1.0,
                         points: int = 200, slope_tol: float = 0.05) -> DecayReport:
    """
    Boundedness of |w(rho)|^2 rho^(n-1) on a log grid over [rho_min, rho_max]

    The growth trend is the log-log slope of the smooth envelope
    M^s [w^2 + (s w + 2 M w'/M')^2 / t^2], M = rho(rho+1), t = sqrt(lambda),
    which dominates the oscillating quantity and shares its decay.
    """
    lam = _check_lambda(lam, False)
    if not 0 < rho_min < rho_max:
        raise ParameterError(f"Need 0 < rho_min < rho_max, got {rho_min}, {rho_max}")
    if rho_max > RHO_ENVELOPE:
        raise EnvelopeError(f"rho_max={rho_max} beyond the supported range {RHO_ENVELOPE:g}")
    if points < 3:
        raise ParameterError(f"Need at least 3 grid points, got {points}")
    rho = np.geomspace(rho_min, rho_max, points)
    t2 = prob.t_squared_w(lam)
    w = np.array([gauss_2f1(_input(prob, t2, r)) for r in rho])
    dw = np.array([_radial_derivative(prob, t2, r) for r in rho])
    quantity = w ** 2 * rho ** (prob.n - 1)
    if not np.all(np.isfinite(quantity)):
        raise NumericFailure("Non-finite far-field samples", {"lambda": lam, "rho_max": rho_max})
    m = rho * (rho + 1.0)
    envelope = m ** prob.s * (w ** 2 + (prob.s * w + 2.0 * m * dw / (2.0 * rho + 1.0)) ** 2 / t2)
    slope = float(np.polyfit(np.log(rho), np.log(envelope), 1)[0])
    report = DecayReport(lam=lam, rho=rho.tolist(), quantity=quantity.tolist(),
                         sup=float(np.max(quantity)), slope=slope, slope_tol=slope_tol)
    logger.info(f"Far-field check n={prob.n} lambda={lam}: sup={report.sup:.4g} slope={slope:.3g}")
    return report
