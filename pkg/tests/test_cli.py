"""
Tests for the command-line front end
"""

import csv
import importlib
import json
import os
import tempfile
import unittest
from pathlib import Path
from unittest.mock import patch

from hyperbolic_tev.cli import EIGS_COLUMNS, build_parser, main, output_path
from hyperbolic_tev.models import RunConfig
from hyperbolic_tev.settings import Settings


class TestCLI(unittest.TestCase):
    """End-to-end runs of the subcommands"""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def _run(self, *argv):
        return main([str(a) for a in argv])

    def test_invalid_potential(self):
        """Helmholtz flavor with V0 >= 1 exits with status 2"""
        out = self.dir / "bad.csv"
        self.assertEqual(self._run("eigs", "--V0", 1.5, "-o", out), 2)
        self.assertFalse(out.exists())

    def test_unknown_option(self):
        """argparse errors map to status 2"""
        self.assertEqual(self._run("eigs", "--no-such-flag"), 2)

    def test_eigs_csv(self):
        """Reference problem writes at least 3 rows with the documented header"""
        out = self.dir / "eigs.csv"
        self.assertEqual(self._run("eigs", "--n", 2, "--R", 1, "--V0", 0.5, "--nu", 1,
                                   "--lambda-max", 2000, "--scan-step", 5, "-o", out), 0)
        with open(out, "r", encoding="utf-8") as f:
            rows = list(csv.reader(f))
        self.assertEqual(rows[0], EIGS_COLUMNS)
        self.assertGreaterEqual(len(rows) - 1, 3)
        lambdas = [float(r[1]) for r in rows[1:]]
        self.assertEqual(lambdas, sorted(lambdas))

    def test_curves_crossings_match_eigs(self):
        """Curves JSON pairs every crossing with an eigs root inside the comparison tolerance"""
        curves, eigs = self.dir / "curves.json", self.dir / "eigs.csv"
        self.assertEqual(self._run("curves", "--grid", 400, "--count", 16, "--lambda-max", 1200,
                                   "--scan-step", 5, "--format", "json", "-o", curves), 0)
        self.assertEqual(self._run("eigs", "--lambda-max", 1200, "--scan-step", 5, "-o", eigs), 0)
        comparison = json.loads(curves.read_text())["results"]["comparison"]
        with open(eigs, "r", encoding="utf-8") as f:
            lambdas = [float(r[1]) for r in list(csv.reader(f))[1:]]
        self.assertTrue(comparison["passed"], comparison)
        self.assertGreaterEqual(len(comparison["pairs"]), 3)
        for pair in comparison["pairs"]:
            with self.subTest(root=pair["root"]):
                nearest = min(lambdas, key=lambda lam: abs(lam - pair["root"]))
                self.assertAlmostEqual(nearest, pair["root"], delta=1e-8 * nearest)
                self.assertLessEqual(abs(pair["crossing"] - nearest), comparison["rel_tol"] * nearest)

    def test_eigs_deterministic(self):
        """Two runs give byte-identical CSV"""
        first, second = self.dir / "a.csv", self.dir / "b.csv"
        for path in (first, second):
            self.assertEqual(self._run("eigs", "--lambda-max", 600, "-o", path), 0)
        self.assertEqual(first.read_bytes(), second.read_bytes())

    def test_corner_json_deterministic(self):
        """Seeded corner scans give byte-identical JSON"""
        first, second = self.dir / "a.json", self.dir / "b.json"
        for path in (first, second):
            self.assertEqual(self._run("corner", "--cone", "orthant", "--n", 2, "--degree", 3,
                                       "--samples", 20, "--seed", 7, "--format", "json", "-o", path), 0)
        self.assertEqual(first.read_bytes(), second.read_bytes())
        data = json.loads(first.read_text())
        self.assertEqual(data["command"], "corner")
        self.assertEqual(data["config"]["seed"], 7)
        self.assertEqual(len(data["results"]["scans"]), 2)
        self.assertNotIn("timing", data)

    def test_timing_flag(self):
        """--timing adds wall time to the JSON envelope"""
        out = self.dir / "timed.json"
        self.assertEqual(self._run("corner", "--cone", "sector", "--theta2", 1.0, "--degree", 1,
                                   "--samples", 5, "--seed", 1, "--format", "json", "--timing", "-o", out), 0)
        self.assertGreaterEqual(json.loads(out.read_text())["timing"]["seconds"], 0.0)

    def test_verify_conjugation(self):
        """Conjugation identity converges at second order for n = 3"""
        out = self.dir / "verify.csv"
        self.assertEqual(self._run("verify", "--identity", "conjugation", "--n", 3, "-o", out), 0)
        with open(out, "r", encoding="utf-8") as f:
            rows = list(csv.DictReader(f))
        self.assertEqual(len(rows), 1)
        self.assertEqual(rows[0]["passed"], "True")

    def test_verify_sturm_liouville(self):
        """Symbolic Sturm-Liouville form passes in the plane"""
        out = self.dir / "sl.json"
        self.assertEqual(self._run("verify", "--identity", "sturm-liouville", "--n", 2,
                                   "--format", "json", "-o", out), 0)
        self.assertTrue(json.loads(out.read_text())["results"][0]["passed"])

    def test_default_output_directory(self):
        """Without --output the file goes to HTEV_OUTPUT_DIR/<command>.<format>"""
        with patch.dict(os.environ, {"HTEV_OUTPUT_DIR": str(self.dir)}):
            self.assertEqual(self._run("corner", "--degree", 2, "--samples", 5, "--seed", 1), 0)
        self.assertTrue((self.dir / "corner.csv").exists())


class TestOutputPath(unittest.TestCase):
    """Tests for output path resolution"""

    def test_stdout(self):
        """'-' means standard output"""
        config = RunConfig(command="eigs", params={}, output="-")
        self.assertIsNone(output_path(config, Settings()))

    def test_explicit(self):
        """An explicit path wins over the settings"""
        config = RunConfig(command="eigs", params={}, output="x/y.csv")
        self.assertEqual(output_path(config, Settings(output_dir="/data")), Path("x/y.csv"))

    def test_default(self):
        """Default is <output_dir>/<command>.<format>"""
        config = RunConfig(command="curves", params={}, fmt="json")
        self.assertEqual(output_path(config, Settings(output_dir="/data")), Path("/data/curves.json"))

    def test_parser_defaults(self):
        """Curves defaults follow the documented grid and curve count"""
        args = build_parser().parse_args(["curves"])
        self.assertEqual(args.grid, 400)
        self.assertEqual(args.count, 16)
        self.assertEqual(args.mapping, "geodesic")


class TestModuleDocs(unittest.TestCase):
    """Module docstrings: English title line, then the description"""

    MODULES = ("cli", "corner_laplace", "errors", "geometry", "models", "operators",
               "radial_tev", "settings", "special_functions", "spectral_curves")

    def test_every_module_has_title(self):
        """Each package module opens with a one-line title"""
        for name in self.MODULES:
            module = importlib.import_module(f"hyperbolic_tev.{name}")
            with self.subTest(module=name):
                self.assertTrue(module.__doc__ and module.__doc__.strip().splitlines()[0])

    def test_portuguese_description(self):
        """Package and settings keep the Portuguese description line"""
        import hyperbolic_tev
        from hyperbolic_tev import settings
        self.assertIn("Autovalores de transmissão", hyperbolic_tev.__doc__)
        self.assertIn("variáveis de ambiente", settings.__doc__)
        self.assertIn("variáveis de ambiente", Settings.from_env.__doc__)


if __name__ == "__main__":
    unittest.main()
