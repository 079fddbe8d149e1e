"""
Tests for harmonic polynomials and their Laplace transforms over corners
"""

import json
import math
import unittest
from pathlib import Path
from unittest.mock import patch

import numpy as np

from hyperbolic_tev.corner_laplace import (
    HarmonicPolynomial,
    check_admissible,
    harmonic_basis,
    laplace_orthant_closed_form,
    laplace_quadrature_2d,
    laplace_sector,
    laplace_transform,
    leading_term_check,
    multi_indices,
    nonvanishing_scan,
    orthant_quadrature_oracle,
    sample_admissible,
)
from hyperbolic_tev.errors import AdmissibilityError, FitConditioningError, ParameterError
from hyperbolic_tev.geometry import half_space_radial_rho
from hyperbolic_tev.models import ConeSpec, RadialProblem
from hyperbolic_tev.radial_tev import solution_w


def _direction(a, b):
    """Isotropic unit vector (a + i b)/sqrt(2) from orthogonal real a, b"""
    a = np.asarray(a, dtype=float) / np.linalg.norm(a)
    b = np.asarray(b, dtype=float)
    b = b - (b @ a) * a
    b = b / np.linalg.norm(b)
    return tuple((a + 1j * b) / math.sqrt(2.0))


def _sector_direction(theta1, theta2):
    phi = 0.5 * (theta1 + theta2)
    return _direction([-math.cos(phi), -math.sin(phi)], [-math.sin(phi), math.cos(phi)])


def _rotation(angle):
    return ((math.cos(angle), -math.sin(angle)), (math.sin(angle), math.cos(angle)))


PLANE_RHO = ((-1 + 1j) / 2, (-1 - 1j) / 2)
SPACE_RHO = _direction([-1.0, -1.0, -1.0], [1.0, -1.0, 0.0])


class TestHarmonicBasis(unittest.TestCase):
    """Tests for multi-indices and harmonic bases"""

    def test_graded_lex_order(self):
        """Multi-indices of degree 3 in 2 variables"""
        self.assertEqual(multi_indices(2, 3), ((3, 0), (2, 1), (1, 2), (0, 3)))
        self.assertEqual(len(multi_indices(3, 2)), 6)

    def test_dimensions(self):
        """2 per degree in the plane (1 for N = 0), 2N + 1 in space"""
        for N in range(5):
            with self.subTest(N=N):
                self.assertEqual(len(harmonic_basis(2, N)), 1 if N == 0 else 2)
                self.assertEqual(len(harmonic_basis(3, N)), 2 * N + 1)

    def test_exactly_harmonic(self):
        """Every basis element has zero Laplacian and integer coefficients"""
        for n in (2, 3):
            for N in range(5):
                for P in harmonic_basis(n, N):
                    with self.subTest(n=n, N=N, P=P.label()):
                        self.assertEqual(P.laplacian_defect(), 0.0)
                        self.assertTrue(all(float(c).is_integer() for c in P.coefficients.values()))

    def test_quadratic_span(self):
        """n = 2, N = 2 is spanned by x^2 - y^2 and x y"""
        basis = harmonic_basis(2, 2)
        points = np.random.default_rng(3).standard_normal((6, 2))
        values = np.stack([P.evaluate(points).real for P in basis], axis=1)
        targets = np.stack([points[:, 0] ** 2 - points[:, 1] ** 2, points[:, 0] * points[:, 1]], axis=1)
        coef = np.linalg.lstsq(values, targets, rcond=None)[0]
        np.testing.assert_allclose(values @ coef, targets, atol=1e-12)

    def test_rotation_preserves_harmonicity(self):
        """P(Q y) is harmonic and agrees with P at Q y"""
        P = harmonic_basis(2, 3)[0]
        Q = _rotation(0.4)
        rotated = P.rotated(Q)
        y = np.array([[0.3, -0.7], [1.2, 0.5]])
        np.testing.assert_allclose(rotated.evaluate(y), P.evaluate(y @ np.array(Q).T), atol=1e-12)
        self.assertLess(rotated.laplacian_defect(), 1e-12)

    def test_invalid_polynomial(self):
        """Multi-indices must match the degree"""
        with self.assertRaises(ParameterError):
            HarmonicPolynomial(2, 2, {(1, 0): 1})


class TestAdmissibility(unittest.TestCase):
    """Tests for admissible directions"""

    def test_reference_direction(self):
        """((-1+i)/2, (-1-i)/2) is admissible for the quarter plane with margin 1/2"""
        direction = check_admissible(ConeSpec.orthant(2), PLANE_RHO)
        self.assertAlmostEqual(direction.gamma, 0.5)

    def test_not_isotropic(self):
        """rho0 . rho0 != 0 is rejected"""
        with self.assertRaises(AdmissibilityError):
            check_admissible(ConeSpec.orthant(2), (-1.0 / math.sqrt(2), -1.0 / math.sqrt(2)))

    def test_pointing_into_cone(self):
        """A real part pointing into the cone is rejected"""
        with self.assertRaises(AdmissibilityError):
            check_admissible(ConeSpec.orthant(2), tuple(-v for v in PLANE_RHO))

    def test_samples_are_admissible(self):
        """Sampled directions satisfy isotropy, unit length and the margin"""
        for data in self._cones():
            cone = ConeSpec.from_dict(data)
            for d in sample_admissible(cone, 25, seed=9):
                rho = np.array(d.rho0)
                with self.subTest(cone=data):
                    self.assertLess(abs(np.sum(rho * rho)), 1e-14)
                    self.assertAlmostEqual(float(np.linalg.norm(rho)), 1.0, places=14)
                    self.assertGreater(d.gamma, 0.0)

    def test_sampling_is_seeded(self):
        """The same seed gives the same directions"""
        cone = ConeSpec.sector(0.0, 1.0)
        self.assertEqual(sample_admissible(cone, 5, seed=1), sample_admissible(cone, 5, seed=1))

    @staticmethod
    def _cones():
        path = Path(__file__).parent / "fixtures" / "acceptance_cases.json"
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)["cones"]


class TestTransforms(unittest.TestCase):
    """Closed forms against quadrature"""

    def _assert_close(self, value, reference, tol=1e-8):
        self.assertLess(abs(value - reference), tol * max(abs(reference), 1e-300))

    def test_orthant_against_separable_quadrature(self):
        """All basis elements N <= 4, n = 2, 3"""
        for n, rho in ((2, PLANE_RHO), (3, SPACE_RHO)):
            for N in range(5):
                for P in harmonic_basis(n, N):
                    with self.subTest(n=n, P=P.label()):
                        self._assert_close(laplace_orthant_closed_form(P, rho), orthant_quadrature_oracle(P, rho))

    def test_orthant_against_polar_quadrature(self):
        """n = 2 closed form against the two-dimensional quadrature"""
        cone = ConeSpec.orthant(2)
        for P in harmonic_basis(2, 3):
            with self.subTest(P=P.label()):
                self._assert_close(laplace_orthant_closed_form(P, PLANE_RHO, cone),
                                   laplace_quadrature_2d(P, PLANE_RHO, cone))

    def test_rotated_orthant(self):
        """Rotated quarter plane: closed form through the rotated polynomial"""
        Q = _rotation(0.35)
        cone = ConeSpec.orthant(2, Q)
        rho = tuple(np.array(Q) @ np.array(PLANE_RHO))
        for P in harmonic_basis(2, 2):
            with self.subTest(P=P.label()):
                self._assert_close(laplace_orthant_closed_form(P, rho, cone), laplace_quadrature_2d(P, rho, cone))
                self._assert_close(orthant_quadrature_oracle(P, rho, cone), laplace_quadrature_2d(P, rho, cone))

    def test_quarter_sector_equals_orthant(self):
        """The sector [0, pi/2] is the quarter plane"""
        sector = ConeSpec.sector(0.0, math.pi / 2.0)
        for N in range(5):
            for P in harmonic_basis(2, N):
                with self.subTest(P=P.label()):
                    self._assert_close(laplace_sector(P, PLANE_RHO, sector), laplace_orthant_closed_form(P, PLANE_RHO))

    def test_sector_against_polar_quadrature(self):
        """Sectors of opening pi/3 and 2 pi/3"""
        for theta2 in (math.pi / 3.0, 2.0 * math.pi / 3.0):
            sector = ConeSpec.sector(0.0, theta2)
            rho = _sector_direction(0.0, theta2)
            for P in harmonic_basis(2, 2):
                with self.subTest(theta2=theta2, P=P.label()):
                    self._assert_close(laplace_sector(P, rho, sector), laplace_quadrature_2d(P, rho, sector))

    def test_sector_rotation_equivariance(self):
        """Rotating the sector, rho0 and P together leaves the transform unchanged"""
        theta1, theta2 = 0.2, 1.1
        sector = ConeSpec.sector(theta1, theta2)
        rho = np.array(_sector_direction(theta1, theta2))
        for alpha in (0.7, -1.3, 2.5):
            Q = np.array(_rotation(alpha))
            turned = ConeSpec.sector(theta1 + alpha, theta2 + alpha)
            for N in (1, 2, 3):
                for P in harmonic_basis(2, N):
                    with self.subTest(alpha=alpha, P=P.label()):
                        self._assert_close(laplace_sector(P.rotated(_rotation(-alpha)), tuple(Q @ rho), turned),
                                           laplace_sector(P, tuple(rho), sector))

    def test_scaling_law(self):
        """L(s rho0) = s^(-N-n) L(rho0)"""
        for n, rho in ((2, PLANE_RHO), (3, SPACE_RHO)):
            for N in (1, 3, 4):
                P = harmonic_basis(n, N)[-1]
                base = laplace_orthant_closed_form(P, rho)
                for s in (0.5, 2.0, 7.0):
                    scaled = laplace_orthant_closed_form(P, tuple(s * v for v in rho))
                    with self.subTest(n=n, N=N, s=s):
                        self._assert_close(scaled, s ** (-N - n) * base, tol=1e-13)

    def test_dispatch(self):
        """laplace_transform picks the orthant or sector path"""
        P = harmonic_basis(2, 2)[0]
        self.assertEqual(laplace_transform(P, PLANE_RHO, ConeSpec.orthant(2)), laplace_orthant_closed_form(P, PLANE_RHO))

    def test_sector_rejects_space(self):
        """Sectors need planar polynomials"""
        with self.assertRaises(ParameterError):
            laplace_sector(harmonic_basis(3, 1)[0], SPACE_RHO, ConeSpec.sector(0.0, 1.0))


class TestNonvanishing(unittest.TestCase):
    """Tests for the nonvanishing scan"""

    def test_plane_basis_over_cones(self):
        """max |L| > 1e-6 ||P|| for every plane basis element N <= 4"""
        cones = [ConeSpec.sector(0.0, a) for a in (math.pi / 3.0, math.pi / 2.0, 2.0 * math.pi / 3.0)]
        cones.append(ConeSpec.orthant(2))
        for cone in cones:
            for N in range(5):
                for P in harmonic_basis(2, N):
                    report = nonvanishing_scan(P, cone, sample_count=30, seed=7)
                    with self.subTest(cone=cone.to_dict(), P=P.label()):
                        self.assertTrue(report.passed)
                        self.assertGreater(report.max_abs, 1e-6 * P.norm())
                        self.assertAlmostEqual(abs(report.witness_value), report.max_abs, places=12)

    def test_space_orthant(self):
        """Space orthant scan for the degree-2 basis"""
        for P in harmonic_basis(3, 2):
            with self.subTest(P=P.label()):
                self.assertTrue(nonvanishing_scan(P, ConeSpec.orthant(3), sample_count=30, seed=7).passed)

    def test_deterministic(self):
        """Same seed, same witness"""
        P = harmonic_basis(2, 3)[1]
        a = nonvanishing_scan(P, ConeSpec.orthant(2), sample_count=20, seed=7)
        b = nonvanishing_scan(P, ConeSpec.orthant(2), sample_count=20, seed=7)
        self.assertEqual(a.to_dict(), b.to_dict())

    def test_zero_polynomial(self):
        """The zero polynomial is rejected"""
        with self.assertRaises(ParameterError):
            nonvanishing_scan(HarmonicPolynomial(2, 2, {}), ConeSpec.orthant(2))


class TestLeadingTerm(unittest.TestCase):
    """Tests for the Taylor leading-term check"""

    def setUp(self):
        self.x0 = np.array([0.4, 1.3])

    def _shifted(self, points):
        d = np.asarray(points) - self.x0
        return d[..., 0], d[..., 1]

    def test_recovers_harmonic_cubic(self):
        """Re (z - z0)^3 plus quartic terms: degree 3, tiny defect"""
        def w(points):
            x, y = self._shifted(points)
            return x ** 3 - 3 * x * y ** 2 + 0.7 * x ** 4 - 0.2 * x * y ** 3
        result = leading_term_check(w, self.x0, expected_N=3)
        self.assertEqual(result.degree, 3)
        self.assertTrue(result.consistent)
        self.assertLess(result.harmonicity_defect, 1e-8)
        self.assertAlmostEqual(result.coefficients[(3, 0)].real, 1.0, places=8)

    def test_injected_perturbation(self):
        """A non-harmonic perturbation eps x^2 shows up as a defect below 10 eps"""
        eps = 1e-4

        def w(points):
            x, y = self._shifted(points)
            return x ** 2 - y ** 2 + eps * x ** 2 + 0.5 * x ** 3 * y
        result = leading_term_check(w, self.x0)
        self.assertEqual(result.degree, 2)
        self.assertGreater(result.harmonicity_defect, 0.1 * eps)
        self.assertLess(result.harmonicity_defect, 10.0 * eps)

    def test_complex_values(self):
        """Complex samples of (z - z0)^2"""
        def w(points):
            x, y = self._shifted(points)
            return (x + 1j * y) ** 2
        result = leading_term_check(w, self.x0)
        self.assertEqual(result.degree, 2)
        self.assertAlmostEqual(result.coefficients[(1, 1)], 2j, places=8)

    def test_radial_solution_at_center(self):
        """The radial solution recentred at <0, 1> starts with the constant w(0) = 1"""
        prob = RadialProblem(n=2, R=1.0, V0=0.5)

        def w(points):
            return np.array([solution_w(prob, 2.0, rho) for rho in half_space_radial_rho(points)])
        result = leading_term_check(w, (0.0, 1.0), expected_N=0)
        self.assertEqual(result.degree, 0)
        self.assertTrue(result.consistent)
        self.assertEqual(result.harmonicity_defect, 0.0)
        self.assertAlmostEqual(result.coefficients[(0, 0)], 1.0, places=7)

    def test_height_power_off_axis(self):
        """x_n^((n-1)/2 - i sqrt(lambda)) away from the axis has a nonzero constant term"""
        lam = 12.0
        exponent = 0.5 - 1j * math.sqrt(lam)

        def w(points):
            return np.asarray(points)[..., -1].astype(complex) ** exponent
        result = leading_term_check(w, self.x0)
        expected = complex(self.x0[-1]) ** exponent
        self.assertEqual(result.degree, 0)
        self.assertLess(abs(result.coefficients[(0, 0)] - expected), 1e-6 * abs(expected))

    def test_ill_conditioned_fit(self):
        """Condition numbers above the limit raise FitConditioningError"""
        with patch("hyperbolic_tev.corner_laplace.MAX_CONDITION", 1.0):
            with self.assertRaises(FitConditioningError):
                leading_term_check(lambda p: np.ones(np.shape(p)[:-1]), self.x0)


if __name__ == "__main__":
    unittest.main()
