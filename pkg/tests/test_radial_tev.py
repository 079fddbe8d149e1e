"""
Tests for radial transmission eigenvalues and the matching determinant
"""

import json
import math
import unittest
from pathlib import Path
from unittest.mock import patch

import numpy as np
from scipy.integrate import solve_ivp

from hyperbolic_tev.errors import EnvelopeError, ParameterError
from hyperbolic_tev.models import RadialProblem
from hyperbolic_tev.radial_tev import (
    asymptotic_M,
    asymptotic_consistency,
    asymptotic_model,
    asymptotic_roots,
    derivative_v,
    derivative_w,
    determinant,
    difference_profile,
    farfield_decay_check,
    find_eigenvalues,
    helmholtz_to_schrodinger,
    matching_determinant,
    root_count_estimate,
    scan_grid,
    solution_v,
    solution_w,
)


def _load_cases():
    path = Path(__file__).parent / "fixtures" / "acceptance_cases.json"
    with open(path, "r", encoding="utf-8") as f:
        return {case["name"]: case for case in json.load(f)["radial_problems"]}


class TestRadialSolutions(unittest.TestCase):
    """Tests for v, w and their derivatives"""

    def setUp(self):
        self.prob = RadialProblem(n=3, R=1.0, V0=0.5, nu=1)

    def test_value_at_center(self):
        """v(0) = w(0) = 1"""
        self.assertEqual(solution_v(self.prob, 50.0, 0.0), 1.0)
        self.assertEqual(solution_w(self.prob, 50.0, 0.0), 1.0)

    def test_space_closed_form(self):
        """n = 3: w(rho(r)) = sin(t r) / (t sinh r)"""
        lam, r = 30.0, 0.8
        t = math.sqrt(lam)
        rho = math.sinh(r / 2.0) ** 2
        self.assertAlmostEqual(solution_w(self.prob, lam, rho), math.sin(t * r) / (t * math.sinh(r)), places=12)

    def test_derivative_matches_finite_difference(self):
        """w'(rho) against a central difference"""
        lam, rho, h = 40.0, 0.3, 1e-6
        fd = (solution_w(self.prob, lam, rho + h) - solution_w(self.prob, lam, rho - h)) / (2.0 * h)
        self.assertLess(abs(derivative_w(self.prob, lam, rho) - fd), 1e-6 * max(1.0, abs(fd)))
        fd_v = (solution_v(self.prob, lam, rho + h) - solution_v(self.prob, lam, rho - h)) / (2.0 * h)
        self.assertLess(abs(derivative_v(self.prob, lam, rho) - fd_v), 1e-6 * max(1.0, abs(fd_v)))

    def test_plane_solution_against_ode(self):
        """n = 2, lambda = 1: v(1) matches shooting from the regular singular point"""
        prob = RadialProblem(n=2, R=1.0, V0=0.5, nu=1)
        lam = 1.0
        c = prob.c
        ab = prob.s ** 2 + prob.t_squared_v(lam)
        apb = 2.0 * prob.s
        shifted = ab + apb + 1.0

        def rhs(rho, y):
            return [y[1], -((c + (apb + 1.0) * rho) * y[1] + ab * y[0]) / (rho * (1.0 + rho))]

        rho0 = 1e-4
        start = [1.0 - ab / c * rho0 + ab * shifted / (2.0 * c * (c + 1.0)) * rho0 ** 2,
                 -ab / c + ab * shifted / (c * (c + 1.0)) * rho0]
        sol = solve_ivp(rhs, (rho0, 1.0), start, method="DOP853", rtol=1e-12, atol=1e-14)
        self.assertTrue(sol.success)
        self.assertLess(abs(solution_v(prob, lam, 1.0) - sol.y[0, -1]), 1e-6)
        self.assertLess(abs(derivative_v(prob, lam, 1.0) - sol.y[1, -1]), 1e-6)

    def test_derivative_sign_for_small_lambda(self):
        """v'(P) < 0 as lambda -> 0+"""
        for n in (2, 3):
            prob = RadialProblem(n=n, R=1.0, V0=0.5, nu=1)
            for lam in (1e-3, 0.1, 1.0):
                with self.subTest(n=n, lam=lam):
                    self.assertLess(derivative_v(prob, lam), 0.0)

    def test_negative_lambda_needs_flag(self):
        """lambda <= 0 is rejected unless the extension flag is set"""
        with self.assertRaises(ParameterError):
            solution_w(self.prob, -1.0, 0.2)
        self.assertTrue(math.isfinite(solution_w(self.prob, -1.0, 0.2, allow_negative=True)))


class TestDeterminant(unittest.TestCase):
    """Tests for the matching determinant"""

    def test_free_problem_vanishes(self):
        """Equal t^2 on both sides gives det = 0 exactly"""
        sample = matching_determinant(2, 1.0, 25.0, 25.0, 25.0)
        self.assertEqual(sample.det_value, 0.0)

    def test_components(self):
        """det = F_v cG_w - F_w cG_v"""
        sample = determinant(RadialProblem(n=2, R=1.0, V0=0.5), 100.0)
        self.assertTrue(sample.ok)
        self.assertAlmostEqual(sample.det_value, sample.F_v * sample.cG_w - sample.F_w * sample.cG_v,
                               delta=1e-12 * sample.scale)

    def test_shadow_is_small(self):
        """Imaginary part of the complex evaluation is negligible"""
        sample = determinant(RadialProblem(n=3, R=2.0, V0=0.3), 200.0, with_shadow=True)
        self.assertLess(abs(sample.imag_shadow), 1e-9 * sample.scale)

    def test_flavor_identity(self):
        """Helmholtz with V0 equals Schrodinger with lambda V0 to 1e-12"""
        prob = RadialProblem(n=2, R=1.0, V0=0.5, nu=1)
        for lam in (3.0, 47.5, 115.0, 600.0, 1999.0):
            with self.subTest(lam=lam):
                eq = helmholtz_to_schrodinger(prob, lam)
                self.assertEqual(eq.schrodinger.V0, lam * 0.5)
                self.assertLessEqual(eq.difference, 1e-12 * max(1.0, abs(eq.det_helmholtz)))

    def test_flavor_identity_needs_helmholtz(self):
        """The identity starts from a nu = 1 problem"""
        with self.assertRaises(ParameterError):
            helmholtz_to_schrodinger(RadialProblem(n=2, R=1.0, V0=0.5, nu=0), 10.0)


class TestFindEigenvalues(unittest.TestCase):
    """Tests for the determinant root finder"""

    @classmethod
    def setUpClass(cls):
        cls.cases = _load_cases()
        case = cls.cases["helmholtz_plane"]
        cls.prob = RadialProblem.from_dict(case["problem"])
        cls.result = find_eigenvalues(cls.prob, case["lambda_max"], case["scan_step"])

    def test_reference_problem_has_roots(self):
        """(2, 1, 0.5, 1) has at least 3 roots on (0, 2000]"""
        self.assertGreaterEqual(len(self.result), self.cases["helmholtz_plane"]["min_roots"])
        self.assertTrue(all(r.converged for r in self.result.roots))
        self.assertEqual([r.index for r in self.result.roots], list(range(1, len(self.result) + 1)))

    def test_roots_are_sign_changes(self):
        """Each root lies inside its bracket and the determinant changes sign there"""
        for root in self.result.roots:
            lo, hi = root.bracket
            self.assertLessEqual(lo, root.lam)
            self.assertLessEqual(root.lam, hi)
            self.assertLess(determinant(self.prob, lo).det_value * determinant(self.prob, hi).det_value, 0.0)

    def test_stable_under_step_halving(self):
        """Halving the scan step reproduces the roots to 1e-8 relative"""
        finer = find_eigenvalues(self.prob, 2000.0, 2.5)
        self.assertEqual(len(finer), len(self.result))
        for a, b in zip(self.result.values, finer.values):
            self.assertLess(abs(a - b), 1e-8 * a)

    def test_scan_reaches_lambda_max(self):
        """A root between the last multiple of the step and lambda_max is found"""
        prob = RadialProblem(n=3, R=1.0, V0=0.5, nu=1)
        fine = find_eigenvalues(prob, 125.0, 0.5)
        target = max(v for v in fine.values if v < 120.0)
        coarse = find_eigenvalues(prob, target + 0.1, 10.0)
        self.assertTrue(any(abs(v - target) <= 1e-8 * target for v in coarse.values), coarse.values)

    def test_scan_grid_covers_range(self):
        """Default grid starts just above 0 and ends at lambda_max"""
        np.testing.assert_allclose(scan_grid(1e-3, 12.0, 5.0, aligned=True), [1e-3, 5.0, 10.0, 12.0])
        np.testing.assert_allclose(scan_grid(5.0, 12.0, 5.0), [5.0, 10.0, 12.0])
        np.testing.assert_allclose(scan_grid(5.0, 15.0, 5.0), [5.0, 10.0, 15.0])

    def test_schrodinger_roots(self):
        """nu = 0 with V0 > 1 is accepted and has roots"""
        case = self.cases["schrodinger_plane"]
        result = find_eigenvalues(RadialProblem.from_dict(case["problem"]), case["lambda_max"], case["scan_step"])
        self.assertGreaterEqual(len(result), case["min_roots"])

    def test_envelope(self):
        """lambda_max beyond t_max raises EnvelopeError"""
        with self.assertRaises(EnvelopeError):
            find_eigenvalues(self.prob, 3000.0, 5.0, t_max=50.0)

    def test_envelope_from_environment(self):
        """t_max falls back to HTEV_T_MAX"""
        with patch.dict("os.environ", {"HTEV_T_MAX": "10"}):
            with self.assertRaises(EnvelopeError):
                find_eigenvalues(self.prob, 200.0, 5.0)

    def test_invalid_scan(self):
        """Nonpositive steps and empty ranges are rejected"""
        with self.assertRaises(ParameterError):
            find_eigenvalues(self.prob, 100.0, 0.0)
        with self.assertRaises(ParameterError):
            find_eigenvalues(self.prob, 100.0, 5.0, lambda_min=200.0)

    def test_coarse_grid_flag(self):
        """A scan step larger than the root spacing is flagged"""
        result = find_eigenvalues(self.prob, 2000.0, 400.0)
        self.assertTrue(result.coarse_grid)

    def test_parallel_scan_matches(self):
        """Process-parallel scans give the same roots"""
        parallel = find_eigenvalues(self.prob, 600.0, 5.0, workers=2)
        serial = find_eigenvalues(self.prob, 600.0, 5.0, workers=1)
        self.assertEqual(parallel.values, serial.values)


class TestAsymptotics(unittest.TestCase):
    """Tests for M(lambda) and its consistency with the roots"""

    def setUp(self):
        case = _load_cases()["helmholtz_plane"]
        self.case = case
        self.prob = RadialProblem.from_dict(case["problem"])

    def test_model_reduces_to_helmholtz_formula(self):
        """The generalized model equals the closed form for nu = 1"""
        lam = 777.0
        tw, tv = math.sqrt(lam), math.sqrt(lam - lam * 0.5)
        self.assertAlmostEqual(asymptotic_M(self.prob, lam), asymptotic_model(2, 1.0, tw, tv), places=12)

    def test_asymptotic_zero_windows(self):
        """Every zero of M lies in a documented window and every window holds one"""
        zeros = asymptotic_roots(self.prob, 2000.0)
        windows = self.case["asymptotic_windows"]
        for lo, hi in windows:
            with self.subTest(window=(lo, hi)):
                self.assertGreaterEqual(sum(1 for z in zeros if lo <= z <= hi), 1)
        for z in zeros:
            self.assertTrue(any(lo <= z <= hi for lo, hi in windows), z)

    def test_root_count_growth(self):
        """Roots below Lambda stay within one of the sine-factor zero count"""
        for lambda_max in (1200.0, 2000.0):
            found = len(find_eigenvalues(self.prob, lambda_max, 5.0))
            expected = root_count_estimate(self.prob, lambda_max)
            with self.subTest(lambda_max=lambda_max):
                self.assertGreaterEqual(expected, 3)
                self.assertLessEqual(abs(found - expected), 1, (found, expected))

    def test_consistency_constant_is_stable(self):
        """sup |M(lambda_k)| sqrt(lambda_k) is stable within 20% when the range grows"""
        first = asymptotic_consistency(self.prob, find_eigenvalues(self.prob, 2000.0, 5.0))
        extended = asymptotic_consistency(self.prob, find_eigenvalues(self.prob, 2500.0, 5.0))
        self.assertGreater(first, 0.0)
        self.assertLessEqual(abs(extended - first), 0.2 * first)

    def test_consistency_ignores_small_roots(self):
        """Roots with sqrt(lambda) < 20 do not count"""
        self.assertEqual(asymptotic_consistency(self.prob, [100.0, 300.0]), 0.0)


class TestProfilesAndDecay(unittest.TestCase):
    """Tests for the difference profile and the far-field check"""

    def test_profile_vanishes_at_cap(self):
        """u(P) = 0 for any lambda"""
        prob = RadialProblem(n=2, R=1.0, V0=0.5)
        u = difference_profile(prob, 150.0, [0.0, 0.1, prob.cap_radius])
        self.assertLess(abs(u[-1]), 1e-12 * max(1.0, float(np.max(np.abs(u)))))

    def test_farfield_decay(self):
        """|w|^2 rho^(n-1) shows no growth on [10, 1000]"""
        for n in (2, 3):
            prob = RadialProblem(n=n, R=1.0, V0=0.5)
            for lam in (1.0, 5.0, 20.0):
                with self.subTest(n=n, lam=lam):
                    report = farfield_decay_check(prob, lam, rho_max=1e3, rho_min=10.0, points=60)
                    self.assertTrue(report.bounded, report.slope)

    def test_farfield_running_sup(self):
        """Doubling rho_max raises the running sup by at most 10%"""
        prob = RadialProblem(n=2, R=1.0, V0=0.5)
        first = farfield_decay_check(prob, 5.0, rho_max=500.0, rho_min=10.0, points=60)
        second = farfield_decay_check(prob, 5.0, rho_max=1000.0, rho_min=10.0, points=70)
        self.assertLessEqual(second.sup, 1.1 * first.sup)

    def test_farfield_range(self):
        """rho_max beyond the supported range raises EnvelopeError"""
        with self.assertRaises(EnvelopeError):
            farfield_decay_check(RadialProblem(n=2, R=1.0, V0=0.5), 5.0, rho_max=1e6)


if __name__ == "__main__":
    unittest.main()
