"""
Eigencurves of the fourth-order quadratic-form family on the radial subspace
Finite-volume discretization of the radial H0 on a hyperbolic ball, the
clamped fourth-order pencil T_lambda, its lowest eigencurves mu_l(lambda)
and their zero crossings.
"""

import logging
import math
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate, linalg

from .errors import ContractError, NumericFailure, ParameterError
from .geometry import radial_weight, rho_of_r
from .models import (
    CrossingComparison,
    CurveCrossing,
    EigencurveTable,
    EigenvalueList,
    RadialProblem,
)

logger = logging.getLogger(__name__)

MAPPINGS = ("geodesic", "uniform")
MIN_GRID = 50


@dataclass
class RadialDiscretization:
    """
    Radial H0 on 0 = rho_0 < ... < rho_m = P

    `weights` are the dual-cell integrals of w_n, `L` the (m+1)x(m+1) finite
    volume operator; W L is symmetric.
    """
    n: int
    R: float
    grid: np.ndarray
    midpoints: np.ndarray
    weights: np.ndarray
    L: np.ndarray
    mapping: str

    @property
    def m(self) -> int:
        return len(self.grid) - 1

    @property
    def P(self) -> float:
        return float(self.grid[-1])

    def symmetry_defect(self) -> float:
        """||W L - (W L)^T|| / ||W L||"""
        wl = self.weights[:, None] * self.L
        return float(np.linalg.norm(wl - wl.T) / np.linalg.norm(wl))

    def apply(self, u: np.ndarray) -> np.ndarray:
        """L u on all nodes"""
        return self.L @ np.asarray(u)

    def dirichlet_spectrum(self, count: int = 1) -> np.ndarray:
        """Lowest eigenvalues of L with u(P) = 0, generalized against W"""
        m = self.m
        wl = (self.weights[:, None] * self.L)[:m, :m]
        wl = 0.5 * (wl + wl.T)
        d = 1.0 / np.sqrt(self.weights[:m])
        scaled = d[:, None] * wl * d[None, :]
        band = np.zeros((2, m))
        band[0] = np.diag(scaled)
        band[1, :-1] = np.diag(scaled, -1)
        return linalg.eig_banded(band, lower=True, eigvals_only=True,
                                 select="i", select_range=(0, min(count, m) - 1))

    def core_mask(self, lower: float = 0.1, upper: float = 0.9) -> np.ndarray:
        """Nodes with geodesic radius in [lower R, upper R]"""
        r = 2.0 * np.arcsinh(np.sqrt(self.grid))
        return (r >= lower * self.R) & (r <= upper * self.R)


def _nodes(R: float, m: int, mapping: str) -> Tuple[np.ndarray, np.ndarray]:
    if mapping == "geodesic":
        r = R * np.arange(m + 1) / m
        rm = R * (np.arange(m) + 0.5) / m
        return rho_of_r(r), rho_of_r(rm)
    P = rho_of_r(R)
    return P * np.arange(m + 1) / m, P * (np.arange(m) + 0.5) / m


def assemble(prob: RadialProblem, m: int, mapping: str = "geodesic") -> RadialDiscretization:
    """
    Finite-volume discretization of the radial H0 on the ball of radius R

    Args:
        prob: radial problem (n and R are used)
        m: number of intervals, at least 50
        mapping: "geodesic" spaces the nodes uniformly in r, "uniform" in rho

    Returns:
        RadialDiscretization
    """
    if m < MIN_GRID:
        raise ParameterError(f"Grid size must be >= {MIN_GRID}, got m={m}")
    if mapping not in MAPPINGS:
        raise ParameterError(f"Unknown mapping: {mapping!r}")
    n = prob.n
    grid, mid = _nodes(prob.R, m, mapping)
    if np.any(np.diff(grid) <= 0):
        raise ParameterError("Degenerate grid: nodes are not strictly increasing")

    edges = np.concatenate([[0.0], mid, [grid[-1]]])
    if n == 2:
        weights = np.diff(edges)
    else:
        weights = np.array([
            integrate.quad(lambda x: radial_weight(n, x), a, b, epsabs=0.0, epsrel=1e-13)[0]
            for a, b in zip(edges[:-1], edges[1:])
        ])
    flux = mid * (mid + 1.0) * radial_weight(n, mid) / np.diff(grid)

    L = np.zeros((m + 1, m + 1))
    idx = np.arange(m)
    L[idx, idx] += flux
    L[idx, idx + 1] -= flux
    L[idx + 1, idx + 1] += flux
    L[idx + 1, idx] -= flux
    L /= weights[:, None]
    L -= (n - 1) ** 2 / 4.0 * np.eye(m + 1)
    logger.debug("assembled radial operator n=%d R=%g m=%d (%s)", n, prob.R, m, mapping)
    return RadialDiscretization(n=n, R=prob.R, grid=grid, midpoints=mid, weights=weights, L=L, mapping=mapping)


def clamped_extension(disc: RadialDiscretization) -> np.ndarray:
    """
    (m+1) x (m-1) matrix E mapping the free values u_0..u_{m-2} to all nodes

    u_m = 0 and u_{m-1} = beta u_{m-2}, where beta makes the one-sided
    three-point derivative at P vanish (beta = 1/4 on a uniform grid).
    """
    m = disc.m
    x0, x1, x2 = disc.grid[m], disc.grid[m - 1], disc.grid[m - 2]
    alpha1 = (x0 - x2) / ((x1 - x0) * (x1 - x2))
    alpha2 = (x0 - x1) / ((x2 - x0) * (x2 - x1))
    beta = -alpha2 / alpha1
    E = np.zeros((m + 1, m - 1))
    E[np.arange(m - 1), np.arange(m - 1)] = 1.0
    E[m - 1, m - 2] = beta
    return E


@dataclass
class FourthOrderPencil:
    """
    Pieces of T_lambda = (S2 - 2 lambda S1 + lambda^2 M)/|V0| + lambda^nu sign(V0) (S1 - lambda M)

    S2 = Lr^T W Lr, S1 = sym(Er^T W Lr), M = Er^T W Er (diagonal), with Lr, Er
    the rows 0..m-1 of L E and E.
    """
    problem: RadialProblem
    S2: np.ndarray
    S1: np.ndarray
    mass: np.ndarray

    @classmethod
    def build(cls, disc: RadialDiscretization, prob: RadialProblem) -> "FourthOrderPencil":
        if disc.n != prob.n or not math.isclose(disc.R, prob.R):
            raise ParameterError("Discretization was assembled for a different problem")
        E = clamped_extension(disc)
        m = disc.m
        Lr = (disc.L @ E)[:m]
        Er = E[:m]
        W = disc.weights[:m]
        S2 = Lr.T @ (W[:, None] * Lr)
        cross = Er.T @ (W[:, None] * Lr)
        S1 = 0.5 * (cross + cross.T)
        mass = np.einsum("ij,i,ij->j", Er, W, Er)
        return cls(problem=prob, S2=0.5 * (S2 + S2.T), S1=S1, mass=mass)

    @property
    def size(self) -> int:
        return len(self.mass)

    def sigma(self, lam: float) -> float:
        """lambda^nu sign(V0)"""
        return (lam ** self.problem.nu) * math.copysign(1.0, self.problem.V0)

    def matrix(self, lam: float) -> np.ndarray:
        """Dense symmetric T_lambda"""
        V = abs(self.problem.V0)
        M = np.diag(self.mass)
        return (self.S2 - 2.0 * lam * self.S1 + lam * lam * M) / V + self.sigma(lam) * (self.S1 - lam * M)

    def lowest(self, lam: float, count: int) -> np.ndarray:
        """Lowest generalized eigenvalues of T_lambda against the mass, banded solver"""
        count = min(count, self.size)
        A = self.matrix(lam)
        d = 1.0 / np.sqrt(self.mass)
        A = d[:, None] * A * d[None, :]
        band = np.zeros((3, self.size))
        for k in range(3):
            band[k, :self.size - k] = np.diag(A, -k)
        try:
            return linalg.eig_banded(band, lower=True, eigvals_only=True,
                                     select="i", select_range=(0, count - 1))
        except (linalg.LinAlgError, ValueError) as e:
            raise NumericFailure("Banded eigen-solve failed", {"lambda": lam, "error": str(e)}) from e


def t_lambda_matrix(disc: RadialDiscretization, prob: RadialProblem, lam: float) -> np.ndarray:
    """Symmetric discretization of the quadratic form Q_lambda on clamped radial functions"""
    return FourthOrderPencil.build(disc, prob).matrix(lam)


def _refine_crossing(pencil: FourthOrderPencil, curve: int, count: int, lo: float, hi: float,
                     flo: float, rel_tol: float) -> Tuple[float, int]:
    iterations = 0
    while hi - lo > rel_tol * max(abs(lo), abs(hi), 1.0) and iterations < 200:
        mid = 0.5 * (lo + hi)
        fmid = pencil.lowest(mid, count)[curve]
        iterations += 1
        if fmid == 0.0:
            return mid, iterations
        if (fmid < 0) == (flo < 0):
            lo, flo = mid, fmid
        else:
            hi = mid
    return 0.5 * (lo + hi), iterations


def eigencurves(disc: RadialDiscretization, prob: RadialProblem, lambda_grid: Sequence[float],
                count: int = 16, rel_tol: float = 1e-10) -> EigencurveTable:
    """
    Lowest `count` eigencurves on a lambda grid and their zero crossings

    Curves are matched across lambda by sorted index; a sign change of curve l
    between neighbouring grid values is refined by bisection on that curve.
    Crossings of several curves inside one step are reported once with their
    multiplicity.
    """
    lambdas = np.asarray(lambda_grid, dtype=float)
    if lambdas.ndim != 1 or len(lambdas) < 2 or np.any(np.diff(lambdas) <= 0):
        raise ParameterError("lambda grid must be strictly increasing with at least 2 values")
    if count < 1:
        raise ParameterError(f"count must be positive, got {count}")
    pencil = FourthOrderPencil.build(disc, prob)
    count = min(count, pencil.size)

    mu = np.full((len(lambdas), count), np.nan)
    incomplete = []
    for j, lam in enumerate(lambdas):
        try:
            mu[j] = pencil.lowest(lam, count)
        except NumericFailure as e:
            logger.warning(f"Eigen-solve failed at lambda={lam}: {e}")
            incomplete.append(j)

    crossings: List[CurveCrossing] = []
    for j in range(len(lambdas) - 1):
        if j in incomplete or j + 1 in incomplete:
            continue
        step = []
        for curve in range(count):
            a, b = mu[j, curve], mu[j + 1, curve]
            if a == 0.0 or a * b < 0:
                lam, iterations = (lambdas[j], 0) if a == 0.0 else _refine_crossing(
                    pencil, curve, count, lambdas[j], lambdas[j + 1], a, rel_tol)
                step.append(CurveCrossing(curve=curve, lam=float(lam),
                                          bracket=(float(lambdas[j]), float(lambdas[j + 1])),
                                          iterations=iterations))
        if len(step) > 1:
            # several curves changing sign within one step count as one crossing of that multiplicity
            first = step[0]
            first.multiplicity = len(step)
            crossings.append(first)
        else:
            crossings.extend(step)
    logger.info(f"Eigencurves: {len(crossings)} crossings on [{lambdas[0]}, {lambdas[-1]}]")
    return EigencurveTable(lambdas=lambdas.tolist(), mu=mu.tolist(), crossings=crossings, incomplete=incomplete)


def crossings_vs_determinant(prob: RadialProblem, table: EigencurveTable, eigenvalue_list: EigenvalueList,
                             rel_tol: float = 1e-2) -> CrossingComparison:
    """
    Matches determinant roots against curve crossings on the common range

    Each root is paired with the nearest unused crossing; pairs farther apart
    than rel_tol (relative) stay unmatched.
    """
    if eigenvalue_list.problem != prob:
        raise ParameterError("Eigenvalue list was computed for a different problem")
    lo = max(table.lambdas[0], 0.0)
    hi = min(table.lambdas[-1], eigenvalue_list.lambda_max)
    roots = [lam for lam in eigenvalue_list.values if lo < lam <= hi]
    crossing_values = [lam for lam in table.crossing_values() if lo < lam <= hi]
    unused = list(crossing_values)
    pairs, unmatched = [], []
    for root in roots:
        if not unused:
            unmatched.append(root)
            continue
        nearest = min(unused, key=lambda c: abs(c - root))
        gap = abs(nearest - root) / root
        if gap <= rel_tol:
            pairs.append((root, nearest, gap))
            unused.remove(nearest)
        else:
            unmatched.append(root)
    report = CrossingComparison(pairs=pairs, unmatched_roots=unmatched, unmatched_crossings=unused, rel_tol=rel_tol)
    logger.info(f"Crossing comparison: {len(pairs)} matched, max gap {report.max_gap:.2e}")
    return report


def one_sided_derivative(disc: RadialDiscretization, u: np.ndarray) -> float:
    """Three-point one-sided derivative of u at rho = P"""
    m = disc.m
    x0, x1, x2 = disc.grid[m], disc.grid[m - 1], disc.grid[m - 2]
    alpha0 = (2.0 * x0 - x1 - x2) / ((x0 - x1) * (x0 - x2))
    alpha1 = (x0 - x2) / ((x1 - x0) * (x1 - x2))
    alpha2 = (x0 - x1) / ((x2 - x0) * (x2 - x1))
    return float(alpha0 * u[m] + alpha1 * u[m - 1] + alpha2 * u[m - 2])


def fourth_order_residual(disc: RadialDiscretization, prob: RadialProblem, lam: float, u: Sequence[float]) -> float:
    """
    Weighted norm of (H0 + lambda^nu V0 - lambda)(1/V0)(H0 - lambda) u

    The interior part is measured on the core nodes r in [0.1 R, 0.9 R]; the
    boundary defect p(P) |u'(P)| (1 + |lambda|)/|V0| adds the clamped
    condition u'(P) = 0 that the interior equation does not see.

    Raises:
        ContractError: u has the wrong length or u(P) != 0
    """
    u = np.asarray(u, dtype=float)
    m = disc.m
    if u.shape != (m + 1,):
        raise ContractError(f"Expected {m + 1} grid values, got shape {u.shape}")
    scale = float(np.max(np.abs(u))) if u.size else 0.0
    if scale == 0.0:
        return 0.0
    if abs(u[m]) > 1e-8 * scale:
        raise ContractError(f"u(P) = {u[m]:.3e} violates the clamped boundary condition")
    V0 = prob.V0
    g = (disc.L[:m] @ u - lam * u[:m]) / V0
    shift = prob.potential_term(lam) - lam
    r = disc.L[:m - 1, :m] @ g + shift * g[:m - 1]
    core = disc.core_mask()[:m - 1]
    interior = math.sqrt(float(np.sum(disc.weights[:m - 1][core] * r[core] ** 2)))
    P = disc.P
    boundary = P * (P + 1.0) * abs(one_sided_derivative(disc, u)) * (1.0 + abs(lam)) / abs(V0)
    return interior + boundary


def coercivity_margin(disc: RadialDiscretization, prob: RadialProblem, lambdas: Iterable[float]) -> List[float]:
    """Lowest generalized eigenvalue of T_lambda at each lambda"""
    pencil = FourthOrderPencil.build(disc, prob)
    return [float(pencil.lowest(lam, 1)[0]) for lam in lambdas]
