#!/usr/bin/env python3
"""
Unit tests for the smooth_entropy command-line frontend

Covers the compute, verify and random subcommands and the exit codes:
- 0 success
- 1 verification failures
- 2 malformed file
- 3 contract or precondition violation
- 4 numerical failure
"""

import io
import json
import os
import shutil
import sys
import tempfile
import unittest
from pathlib import Path
from unittest.mock import patch

import yaml

sys.path.insert(0, str(Path(__file__).parent.parent / "scripts"))

import smooth_entropy
from entropy_lib import NumericalFailure
from test_config import TestConfig, TestFixtures


def parse_key_values(text):
    return dict(line.split("=", 1) for line in text.strip().splitlines() if "=" in line)


class CliTestCase(unittest.TestCase):
    """Runs main() inside a temporary working directory"""

    def setUp(self):
        self.temp_dir = tempfile.mkdtemp()
        self.original_cwd = os.getcwd()
        os.chdir(self.temp_dir)

    def tearDown(self):
        os.chdir(self.original_cwd)
        shutil.rmtree(self.temp_dir, ignore_errors=True)

    def run_cli(self, *argv):
        stdout, stderr = io.StringIO(), io.StringIO()
        with patch("sys.stdout", stdout), patch("sys.stderr", stderr):
            code = smooth_entropy.main(list(argv))
        return code, stdout.getvalue(), stderr.getvalue()


class TestCompute(CliTestCase):

    def test_hmin_of_maximally_entangled(self):
        """Test the analytic fixture prints its value with twelve digits"""
        code, out, _ = self.run_cli("compute", TestFixtures.fixture_path("max_entangled_2x2.yaml"), "hmin")
        self.assertEqual(code, 0)
        values = parse_key_values(out)
        self.assertEqual(values["quantity"], "hmin")
        self.assertEqual(values["value"], "-1.000000000000")
        self.assertEqual(values["degenerate"], "false")

    def test_fixture_values(self):
        """Test every bundled state against its closed-form entropies"""
        for name, (h_min, h_max) in TestConfig.FIXTURE_VALUES.items():
            for quantity, expected in (("hmin", h_min), ("hmax", h_max)):
                with self.subTest(fixture=name, quantity=quantity):
                    code, out, _ = self.run_cli("compute", TestFixtures.fixture_path(name), quantity)
                    self.assertEqual(code, 0)
                    self.assertAlmostEqual(float(parse_key_values(out)["value"]), expected,
                                           delta=TestConfig.SDP_TOL)

    def test_smooth_hmax_with_explicit_split(self):
        path = TestFixtures.fixture_path("mixed_product_2x2.yaml")
        code, out, _ = self.run_cli("compute", path, "smooth-hmax", "--target", "A", "--conditioning", "B",
                                    "--eps", "0.1")
        self.assertEqual(code, 0)
        values = parse_key_values(out)
        self.assertLessEqual(float(values["value"]), 1.0 + TestConfig.SDP_TOL)
        self.assertNotEqual(values["ball_slack"], "none")

    def test_distance_needs_second_state(self):
        code, _, err = self.run_cli("compute", TestFixtures.fixture_path("pure_product_2x2.yaml"),
                                    "purified-distance")
        self.assertEqual(code, 3)
        self.assertIn("error=precondition", err)

    def test_purified_distance(self):
        code, out, _ = self.run_cli("compute", TestFixtures.fixture_path("pure_product_2x2.yaml"),
                                    "purified-distance", "--second",
                                    TestFixtures.fixture_path("pure_product_2x2.yaml"))
        self.assertEqual(code, 0)
        self.assertAlmostEqual(float(parse_key_values(out)["value"]), 0.0, places=6)

    def test_phi(self):
        code, out, _ = self.run_cli("compute", TestFixtures.fixture_path("max_entangled_2x2.yaml"), "phi")
        self.assertEqual(code, 0)
        self.assertAlmostEqual(float(parse_key_values(out)["value"]), 2.0, delta=TestConfig.SDP_TOL)

    def test_malformed_file_exit_code(self):
        """Test an unknown key is rejected with exit code 2"""
        path = TestFixtures.write_file(self.temp_dir, "extra.yaml", TestConfig.UNKNOWN_KEY_YAML)
        code, out, err = self.run_cli("compute", path, "hmin")
        self.assertEqual(code, 2)
        self.assertEqual(out, "")
        self.assertTrue(err.startswith("error=malformed-file"))

    def test_epsilon_too_large_exit_code(self):
        code, _, err = self.run_cli("compute", TestFixtures.fixture_path("max_entangled_2x2.yaml"),
                                    "smooth-hmin", "--eps", "1.5")
        self.assertEqual(code, 3)
        self.assertIn("error=precondition", err)

    def test_unknown_label_exit_code(self):
        code, _, err = self.run_cli("compute", TestFixtures.fixture_path("max_entangled_2x2.yaml"),
                                    "hmin", "--target", "Z")
        self.assertEqual(code, 3)
        self.assertIn("error=layout", err)

    @patch("entropy.compute")
    def test_numerical_failure_exit_code(self, mock_compute):
        """Test a solver failure maps to exit code 4"""
        mock_compute.side_effect = NumericalFailure("SDP stalled", residual=1e-3)
        code, _, err = self.run_cli("compute", TestFixtures.fixture_path("max_entangled_2x2.yaml"), "hmin")
        self.assertEqual(code, 4)
        self.assertIn("error=numerical-failure message=SDP stalled", err)

    def test_dump_sdpa(self):
        dump_dir = os.path.join(self.temp_dir, "sdpa")
        code, _, _ = self.run_cli("compute", TestFixtures.fixture_path("max_entangled_2x2.yaml"), "hmin",
                                  "--dump-sdpa", dump_dir)
        self.assertEqual(code, 0)
        self.assertTrue(os.listdir(dump_dir))


class TestVerify(CliTestCase):

    def test_list(self):
        code, out, _ = self.run_cli("verify", "--list")
        self.assertEqual(code, 0)
        self.assertIn("duality:", out)
        self.assertIn("sdp-fixtures:", out)

    def test_missing_suite(self):
        code, _, err = self.run_cli("verify")
        self.assertEqual(code, 3)
        self.assertIn("error=precondition", err)

    def test_unknown_suite(self):
        code, _, _ = self.run_cli("verify", "nonsense")
        self.assertEqual(code, 3)

    def test_run_with_report(self):
        """Test a small run writes both report files"""
        code, out, _ = self.run_cli("verify", "metric-axioms", "--trials", "5", "--seed", "9",
                                    "--out", "reports/metric.json")
        self.assertEqual(code, 0)
        self.assertIn("suite=metric-axioms status=pass", out)
        with open("reports/metric.json") as f:
            document = json.load(f)
        self.assertEqual(document["reports"][0]["trials_run"], 5)
        self.assertTrue(os.path.exists("reports/metric.txt"))

    def test_bad_eps_list(self):
        code, _, _ = self.run_cli("verify", "ball-properties", "--eps", "0.1,abc")
        self.assertEqual(code, 3)

    @patch("verify.run_battery")
    def test_failures_give_exit_code_one(self, mock_battery):
        report = smooth_entropy.verify.VerificationReport(
            suite="bounds", anchor="x", seed=1, trials=1, dims="A:2,B:2", epsilons=[], tolerance=1e-7,
            trials_run=1, failures=1, status="fail")
        mock_battery.return_value = [report]
        code, out, _ = self.run_cli("verify", "bounds", "--trials", "1")
        self.assertEqual(code, 1)
        self.assertIn("status=fail", out)

    @patch("verify.run_battery")
    def test_banner_names_the_suite(self, mock_battery):
        mock_battery.return_value = []
        with patch.object(smooth_entropy.logger, "step") as mock_step:
            code, _, _ = self.run_cli("verify", "uhlmann", "--trials", "1")
        self.assertEqual(code, 0)
        mock_step.assert_called_once_with("Verification: uhlmann")
        self.assertFalse(hasattr(smooth_entropy.logger, "header"))


class TestRandom(CliTestCase):

    def test_mixed_state_round_trip(self):
        """Test a generated state file is accepted by compute"""
        code, out, _ = self.run_cli("random", "mixed", "--dims", "A:2,B:3", "--rank", "2", "--seed", "7",
                                    "--out", "rho.yaml")
        self.assertEqual(code, 0)
        self.assertEqual(out.strip(), "wrote=rho.yaml")
        code, out, _ = self.run_cli("compute", "rho.yaml", "hmin")
        self.assertEqual(code, 0)
        self.assertIn("value=", out)

    def test_seed_reproducible(self):
        _, first, _ = self.run_cli("random", "pure", "--seed", "3")
        _, second, _ = self.run_cli("random", "pure", "--seed", "3")
        self.assertEqual(first, second)
        document = yaml.safe_load(first)
        self.assertEqual(document["kind"], "state")
        self.assertEqual([f["dim"] for f in document["layout"]], [2, 2])

    def test_channel(self):
        code, out, _ = self.run_cli("random", "channel", "--dims", "B:2", "--out-dims", "D:3", "--env", "2")
        self.assertEqual(code, 0)
        document = yaml.safe_load(out)
        self.assertEqual(document["kind"], "channel")
        self.assertEqual(len(document["kraus"]), 2)

    def test_insufficient_environment(self):
        code, _, err = self.run_cli("random", "channel", "--dims", "A:4", "--out-dims", "B:1", "--env", "2")
        self.assertEqual(code, 3)
        self.assertIn("error=insufficient-dimension", err)


if __name__ == "__main__":
    unittest.main()
