"""
Command-line front end for hyperbolic transmission eigenvalue computations
Linha de comando para o cálculo de autovalores de transmissão hiperbólicos
Subcommands eigs, curves, corner and verify write CSV or JSON tables.
"""

import argparse
import json
import logging
import math
import sys
import time
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
import sympy

from . import __version__
from .corner_laplace import harmonic_basis, nonvanishing_scan
from .errors import HyperbolicTevError, ParameterError
from .geometry import weight_flux_residual
from .models import CheckResult, ConeSpec, RadialProblem, RunConfig
from .operators import (
    ConformalFactorField,
    RegularGrid,
    SmoothFunction,
    conjugation_convergence,
    coordinate_symbols,
    greens_identity_terms,
    sturm_liouville_defect,
)
from .radial_tev import asymptotic_consistency, find_eigenvalues
from .settings import Settings
from .spectral_curves import assemble, crossings_vs_determinant, eigencurves

logger = logging.getLogger(__name__)

GLOBAL_KEYS = ("command", "output", "format", "log_level", "timing", "workers", "seed")
EIGS_COLUMNS = ["index", "lambda", "sqrt_lambda", "det_residual"]
CORNER_COLUMNS = ["index", "polynomial", "samples", "max_abs", "min_abs",
                  "witness_value_re", "witness_value_im", "gamma", "passed"]
VERIFY_COLUMNS = ["identity", "case", "passed", "max_residual", "min_ratio", "detail"]
IDENTITIES = ("conjugation", "green", "sturm-liouville", "asymptotic")

CONJUGATION_MIN_RATIO = 3.5
GREEN_TOL = 1e-8
ASYMPTOTIC_STABILITY = 0.2


def _add_problem_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--n", type=int, default=2, help="dimension of H^n")
    parser.add_argument("--R", type=float, default=1.0, help="geodesic radius of the ball")
    parser.add_argument("--V0", type=float, default=0.5, help="constant potential")
    parser.add_argument("--nu", type=int, choices=(0, 1), default=1, help="0 Schrodinger, 1 Helmholtz")
    parser.add_argument("--lambda-max", type=float, default=2000.0)
    parser.add_argument("--scan-step", type=float, default=5.0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hyperbolic_tev",
        description="Transmission eigenvalues and corner scattering on hyperbolic space",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output", "-o", default=None, help="output file, '-' for standard output")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--log-level", default=None, help="logging level (default HTEV_LOG_LEVEL or INFO)")
    common.add_argument("--timing", action="store_true", help="record wall time in JSON output")
    common.add_argument("--workers", type=int, default=None, help="processes for lambda scans")
    common.add_argument("--seed", type=int, default=None, help="seed for random sampling")

    sub = parser.add_subparsers(dest="command", required=True)

    eigs = sub.add_parser("eigs", parents=[common], help="radial transmission eigenvalues")
    _add_problem_options(eigs)

    curves = sub.add_parser("curves", parents=[common], help="eigencurves of the fourth-order pencil")
    _add_problem_options(curves)
    curves.add_argument("--grid", type=int, default=400, help="radial cells")
    curves.add_argument("--count", type=int, default=16, help="eigencurves tracked")
    curves.add_argument("--mapping", choices=("geodesic", "uniform"), default="geodesic")
    curves.add_argument("--lambda-min", type=float, default=None)

    corner = sub.add_parser("corner", parents=[common], help="Laplace transform nonvanishing scan")
    corner.add_argument("--cone", choices=("orthant", "sector"), default="orthant")
    corner.add_argument("--n", type=int, default=2)
    corner.add_argument("--degree", type=int, default=3)
    corner.add_argument("--samples", type=int, default=100)
    corner.add_argument("--theta1", type=float, default=0.0)
    corner.add_argument("--theta2", type=float, default=math.pi / 2.0)

    verify = sub.add_parser("verify", parents=[common], help="operator identity checks")
    _add_problem_options(verify)
    verify.add_argument("--identity", choices=IDENTITIES + ("all",), default="all")
    verify.add_argument("--K", choices=("halfspace", "ball", "constant"), default="halfspace")
    verify.add_argument("--points", type=int, default=9, help="coarsest grid points per axis")
    return parser


def output_path(config: RunConfig, settings: Settings) -> Optional[Path]:
    """File the run writes to; None means standard output"""
    if config.output == "-":
        return None
    if config.output:
        return Path(config.output)
    return Path(settings.output_dir) / f"{config.command}.{config.fmt}"


def write_output(config: RunConfig, settings: Settings, rows: List[Dict[str, Any]],
                 columns: Sequence[str], results: Any, elapsed: Optional[float] = None) -> None:
    """Writes rows as CSV or the results as a JSON envelope"""
    if config.fmt == "csv":
        text = pd.DataFrame(rows, columns=list(columns)).to_csv(index=False, float_format="%.15g")
    else:
        envelope = {
            "version": __version__,
            "command": config.command,
            "config": config.to_dict(),
            "results": results,
        }
        if config.timing and elapsed is not None:
            envelope["timing"] = {"seconds": elapsed}
        text = json.dumps(envelope, indent=2, sort_keys=True) + "\n"
    path = output_path(config, settings)
    if path is None:
        sys.stdout.write(text)
        return
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    logger.info(f"Wrote {config.command} output to {path}")


def _problem(params: Dict[str, Any]) -> RadialProblem:
    return RadialProblem(n=params["n"], R=params["R"], V0=params["V0"], nu=params["nu"])


def cmd_eigs(config: RunConfig, settings: Optional[Settings] = None) -> int:
    """Determinant roots on (0, lambda_max]; exit 1 when a root misses its residual contract"""
    settings = settings or Settings.from_env()
    start = time.perf_counter()
    prob = _problem(config.params)
    result = find_eigenvalues(prob, config.params["lambda_max"], config.params["scan_step"],
                              t_max=settings.t_max, workers=settings.workers)
    write_output(config, settings, result.to_rows(), EIGS_COLUMNS, result.to_dict(),
                 time.perf_counter() - start)
    failed = [r.index for r in result.roots if not r.converged]
    if failed:
        logger.error(f"Roots {failed} did not reach the determinant residual tolerance")
        return 1
    return 0


def cmd_curves(config: RunConfig, settings: Optional[Settings] = None) -> int:
    """Eigencurve table on a lambda grid; exit 1 when crossings and determinant roots disagree"""
    settings = settings or Settings.from_env()
    start = time.perf_counter()
    params = config.params
    prob = _problem(params)
    step = params["scan_step"]
    lam_min = step if params.get("lambda_min") is None else params["lambda_min"]
    if lam_min >= params["lambda_max"]:
        raise ParameterError(f"lambda_min={lam_min} must lie below lambda_max={params['lambda_max']}")
    count = int(math.floor((params["lambda_max"] - lam_min) / step + 1e-9)) + 1
    grid = lam_min + step * np.arange(count)

    disc = assemble(prob, params["grid"], mapping=params["mapping"])
    table = eigencurves(disc, prob, grid, count=params["count"])
    results: Dict[str, Any] = {"problem": prob.to_dict(), "curves": table.to_dict()}
    code = 0
    if lam_min > 0:
        roots = find_eigenvalues(prob, params["lambda_max"], step, lambda_min=lam_min,
                                 t_max=settings.t_max, workers=settings.workers)
        comparison = crossings_vs_determinant(prob, table, roots)
        results["comparison"] = comparison.to_dict()
        if not comparison.passed:
            logger.error(f"Crossings and determinant roots disagree: {comparison.to_dict()}")
            code = 1
    if table.incomplete:
        logger.error(f"Eigen-solve failed at {len(table.incomplete)} lambda values")
        code = 1
    write_output(config, settings, table.to_rows(),
                 ["lambda"] + [f"mu_{k + 1}" for k in range(table.count)], results,
                 time.perf_counter() - start)
    return code


def _cone(params: Dict[str, Any]) -> ConeSpec:
    if params["cone"] == "sector":
        return ConeSpec.sector(params["theta1"], params["theta2"])
    return ConeSpec.orthant(params["n"])


def cmd_corner(config: RunConfig, settings: Optional[Settings] = None) -> int:
    """Nonvanishing scan for every harmonic basis polynomial of the requested degree"""
    settings = settings or Settings.from_env()
    start = time.perf_counter()
    cone = _cone(config.params)
    rows, reports = [], []
    for k, P in enumerate(harmonic_basis(cone.n, config.params["degree"]), 1):
        report = nonvanishing_scan(P, cone, config.params["samples"], seed=config.seed)
        reports.append(report.to_dict())
        rows.append({
            "index": k,
            "polynomial": P.label(),
            "samples": report.samples,
            "max_abs": report.max_abs,
            "min_abs": report.min_abs,
            "witness_value_re": report.witness_value.real,
            "witness_value_im": report.witness_value.imag,
            "gamma": report.witness.gamma,
            "passed": report.passed,
        })
    write_output(config, settings, rows, CORNER_COLUMNS, {"cone": cone.to_dict(), "scans": reports},
                 time.perf_counter() - start)
    failed = [row["polynomial"] for row in rows if not row["passed"]]
    if failed:
        logger.error(f"Laplace transform stayed below threshold for {failed}")
        return 1
    return 0


def _test_function(n: int) -> SmoothFunction:
    x = coordinate_symbols(n)
    return SmoothFunction.from_expression(sympy.exp(x[0] / 2) * sympy.cos(x[-1]) + x[-1] ** 3 * x[0] ** 2, n)


def check_conjugation(n: int, name: str, points: int = 9) -> CheckResult:
    """Second-order convergence of the conjugation identity on nested grids"""
    if name == "ball":
        K = ConformalFactorField.ball(n)
        grid = RegularGrid((-0.3,) * n, (0.3,) * n, points)
    else:
        K = ConformalFactorField.half_space(n) if name == "halfspace" else ConformalFactorField.constant(n)
        grid = RegularGrid((-0.5,) * (n - 1) + (0.5,), (0.5,) * (n - 1) + (1.5,), points)
    residuals, ratios = conjugation_convergence(K, _test_function(n), grid)
    passed = all(r >= CONJUGATION_MIN_RATIO for r in ratios)
    return CheckResult("conjugation", f"K={name} n={n}", passed, residuals, ratios,
                       f"ratios must be >= {CONJUGATION_MIN_RATIO}")


def check_green(n: int) -> List[CheckResult]:
    """H0 integration by parts on a ball about height 2: general pair and u = v"""
    x = coordinate_symbols(n)
    u = SmoothFunction.from_expression(x[-1] ** 2 * sympy.cos(x[0]), n)
    v = SmoothFunction.from_expression(x[0] ** 2 + x[-1] ** 3, n)
    center = (0.0,) * (n - 1) + (2.0,)
    out = []
    for case, (f, g) in (("general", (u, v)), ("u=v", (u, u))):
        residuals = []
        scale = 1.0
        for resolution in (8, 16, 32):
            volume, boundary = greens_identity_terms(f, g, center, 1.0, resolution=resolution)
            residuals.append(abs(volume - boundary))
            scale = max(1.0, abs(volume), abs(boundary))
        passed = residuals[-1] <= GREEN_TOL * scale
        out.append(CheckResult("green", f"{case} n={n}", passed, residuals, [],
                               f"final residual <= {GREEN_TOL:g} relative"))
    return out


def check_sturm_liouville(n: int) -> CheckResult:
    """Symbolic Sturm-Liouville form and the weight flux identity on [0, 10]"""
    defect = sturm_liouville_defect(n)
    flux = float(np.max(np.abs(weight_flux_residual(n, np.linspace(0.0, 10.0, 101)))))
    passed = defect == 0 and flux <= 1e-9
    return CheckResult("sturm-liouville", f"n={n}", passed, [flux], [], f"symbolic defect {defect}")


def check_asymptotic(prob: RadialProblem, lambda_max: float, scan_step: float, settings: Settings) -> CheckResult:
    """sup |M(lambda_k)| sqrt(lambda_k) stays within 20% when the range grows by a quarter"""
    constants = []
    for upper in (lambda_max, 1.25 * lambda_max):
        roots = find_eigenvalues(prob, upper, scan_step, t_max=settings.t_max, workers=settings.workers)
        constants.append(asymptotic_consistency(prob, roots))
    first, extended = constants
    passed = first > 0 and abs(extended - first) <= ASYMPTOTIC_STABILITY * first
    return CheckResult("asymptotic", f"n={prob.n} R={prob.R} V0={prob.V0} nu={prob.nu}", passed,
                       constants, [extended / first if first > 0 else float("nan")],
                       "roots with sqrt(lambda) >= 20 only")


def cmd_verify(config: RunConfig, settings: Optional[Settings] = None) -> int:
    """Runs the requested identity checks and reports pass/fail with residuals"""
    settings = settings or Settings.from_env()
    start = time.perf_counter()
    params = config.params
    wanted = IDENTITIES if params["identity"] == "all" else (params["identity"],)
    checks: List[CheckResult] = []
    if "conjugation" in wanted:
        checks.append(check_conjugation(params["n"], params["K"], params.get("points", 9)))
    if "green" in wanted:
        checks.extend(check_green(params["n"]))
    if "sturm-liouville" in wanted:
        checks.append(check_sturm_liouville(params["n"]))
    if "asymptotic" in wanted:
        checks.append(check_asymptotic(_problem(params), params["lambda_max"], params["scan_step"], settings))

    rows = [{
        "identity": c.identity,
        "case": c.case,
        "passed": c.passed,
        "max_residual": max(c.residuals, default=float("nan")),
        "min_ratio": min(c.ratios, default=float("nan")),
        "detail": c.detail,
    } for c in checks]
    write_output(config, settings, rows, VERIFY_COLUMNS, [c.to_dict() for c in checks],
                 time.perf_counter() - start)
    for c in checks:
        logger.info(f"{c.identity} [{c.case}]: {'pass' if c.passed else 'FAIL'}")
    return 0 if all(c.passed for c in checks) else 1


COMMANDS: Dict[str, Callable[[RunConfig, Optional[Settings]], int]] = {
    "eigs": cmd_eigs,
    "curves": cmd_curves,
    "corner": cmd_corner,
    "verify": cmd_verify,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Ponto de entrada da linha de comando

    Returns:
        0 on success, 1 on numeric failure or a failed check, 2 on invalid
        parameters
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 2

    try:
        settings = Settings.from_env(log_level=args.log_level, workers=args.workers)
        logging.basicConfig(level=settings.log_level, stream=sys.stderr,
                            format="%(levelname)s %(name)s: %(message)s")
        params = {k: v for k, v in vars(args).items() if k not in GLOBAL_KEYS}
        config = RunConfig(command=args.command, params=params, output=args.output,
                           fmt=args.format, seed=args.seed, timing=args.timing)
        return COMMANDS[config.command](config, settings)
    except ParameterError as e:
        logger.error(f"Invalid parameters: {e}")
        return 2
    except HyperbolicTevError as e:
        logger.error(f"{args.command} failed: {e}")
        return 1
