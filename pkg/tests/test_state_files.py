#!/usr/bin/env python3
"""
Unit tests for StateFile/ChannelFile parsing and report writing
"""

import json
import os
import sys
import unittest
from pathlib import Path

import numpy as np
import yaml

sys.path.insert(0, str(Path(__file__).parent.parent / "scripts"))

import state_files
from entropy_lib import StateFileError
from quantum import Channel, State, SystemLayout, random_channel, random_state
from test_config import TestConfig, TestEnvironment, TestFixtures
from verify import make_suite, run_suite


class TestStateFileValidation(unittest.TestCase):

    def test_valid_document(self):
        ok, errors = state_files.validate_state_data(yaml.safe_load(TestConfig.STATE_YAML))
        self.assertTrue(ok, errors)
        state_file = state_files.parse_state(yaml.safe_load(TestConfig.STATE_YAML))
        self.assertEqual(state_file.comment, "maximally mixed qubit")
        np.testing.assert_allclose(state_file.to_state().matrix, np.eye(2) / 2)

    def test_unknown_key(self):
        ok, errors = state_files.validate_state_data(yaml.safe_load(TestConfig.UNKNOWN_KEY_YAML))
        self.assertFalse(ok)
        self.assertIn("unknown keys: extra", errors)

    def test_wrong_version(self):
        ok, errors = state_files.validate_state_data(yaml.safe_load(TestConfig.WRONG_VERSION_YAML))
        self.assertFalse(ok)
        self.assertTrue(any("format_version" in e for e in errors))

    def test_missing_matrix(self):
        data = yaml.safe_load(TestConfig.STATE_YAML)
        del data["matrix"]
        ok, errors = state_files.validate_state_data(data)
        self.assertFalse(ok)
        self.assertIn("missing keys: matrix", errors)

    def test_wrong_kind(self):
        data = yaml.safe_load(TestConfig.STATE_YAML)
        data["kind"] = "channel"
        with self.assertRaises(StateFileError):
            state_files.parse_state(data)

    def test_entries_must_be_pairs(self):
        data = yaml.safe_load(TestConfig.STATE_YAML)
        data["matrix"][0][0] = 0.5
        ok, errors = state_files.validate_state_data(data)
        self.assertFalse(ok)
        self.assertIn("[re, im]", errors[0])

    def test_boolean_entries_rejected(self):
        data = yaml.safe_load(TestConfig.STATE_YAML)
        data["matrix"][0][0] = [True, 0.0]
        self.assertFalse(state_files.validate_state_data(data)[0])

    def test_layout_factor_keys(self):
        data = yaml.safe_load(TestConfig.STATE_YAML)
        data["layout"] = [{"label": "A", "dim": 2, "extra": 1}]
        self.assertFalse(state_files.validate_state_data(data)[0])

    def test_matrix_shape_must_match_layout(self):
        data = yaml.safe_load(TestConfig.STATE_YAML)
        data["layout"] = [{"label": "A", "dim": 3}]
        self.assertFalse(state_files.validate_state_data(data)[0])

    def test_not_hermitian_names_invariant(self):
        state_file = state_files.parse_state(yaml.safe_load(TestConfig.NOT_HERMITIAN_YAML))
        with self.assertRaises(StateFileError) as ctx:
            state_file.to_state()
        self.assertIn("state invariant", ctx.exception.message)
        self.assertEqual(ctx.exception.exit_code, 2)

    def test_trace_too_large(self):
        state_file = state_files.parse_state(yaml.safe_load(TestConfig.TRACE_TOO_LARGE_YAML))
        with self.assertRaises(StateFileError):
            state_file.to_state()


class TestStateFileIO(unittest.TestCase):

    def test_save_and_load(self):
        rho = random_state(SystemLayout.of(A=2, B=3), rank=2, seed=TestConfig.SEED)
        with TestEnvironment() as env:
            path = state_files.save_state(rho, env.get_file_path("out/rho.yaml"), "rank two")
            loaded = state_files.load_state(path)
            self.assertEqual(loaded.layout, rho.layout)
            np.testing.assert_allclose(loaded.matrix, rho.matrix, atol=1e-14)
            with open(path) as f:
                self.assertEqual(yaml.safe_load(f)["comment"], "rank two")

    def test_missing_file(self):
        with self.assertRaises(StateFileError) as ctx:
            state_files.load_state("/nonexistent/rho.yaml")
        self.assertIn("no such file", ctx.exception.message)

    def test_invalid_yaml(self):
        with TestEnvironment() as env:
            path = env.create_file("bad.yaml", "layout: [unclosed\n")
            with self.assertRaises(StateFileError):
                state_files.load_state(path)

    def test_error_names_path(self):
        with TestEnvironment() as env:
            path = env.create_file("extra.yaml", TestConfig.UNKNOWN_KEY_YAML)
            with self.assertRaises(StateFileError) as ctx:
                state_files.load_state(path)
            self.assertIn(path, ctx.exception.message)

    def test_bundled_fixtures_load(self):
        for name in TestConfig.FIXTURE_VALUES:
            with self.subTest(fixture=name):
                state = state_files.load_state(TestFixtures.fixture_path(name))
                self.assertIsInstance(state, State)
                self.assertTrue(state.is_normalized())


class TestChannelFiles(unittest.TestCase):

    def test_save_and_load(self):
        channel = random_channel(SystemLayout.of(B=2), SystemLayout.of(D=3), 2, seed=5)
        with TestEnvironment() as env:
            path = state_files.save_channel(channel, env.get_file_path("ch.yaml"))
            loaded = state_files.load_channel(path)
            self.assertEqual(loaded.output_layout, channel.output_layout)
            self.assertEqual(loaded.kraus_rank, 2)
            self.assertIsInstance(state_files.load_any(path), Channel)

    def test_bundled_depolarizing_channel(self):
        channel = state_files.load_any(TestFixtures.fixture_path("depolarizing_qubit.yaml"))
        self.assertIsInstance(channel, Channel)
        self.assertTrue(channel.trace_preserving)

    def test_trace_increasing_rejected(self):
        data = state_files.ChannelFile(SystemLayout.of(A=1), SystemLayout.of(A=1),
                                       (np.array([[2.0]]),), False).to_dict()
        with self.assertRaises(StateFileError) as ctx:
            state_files.parse_channel(data).to_channel()
        self.assertIn("channel invariant", ctx.exception.message)

    def test_kraus_shape(self):
        data = state_files.ChannelFile(SystemLayout.of(A=2), SystemLayout.of(A=2), (np.eye(2),)).to_dict()
        data["kraus"] = [[[[1.0, 0.0]]]]
        self.assertFalse(state_files.validate_channel_data(data)[0])


class TestReportWriting(unittest.TestCase):

    def test_text_report_path(self):
        self.assertEqual(state_files.text_report_path("r/duality.json"), "r/duality.txt")
        self.assertEqual(state_files.text_report_path("r/duality"), "r/duality.txt")

    def test_write_reports(self):
        report = run_suite(make_suite("uhlmann", trials=3, seed=1), threads=1)
        with TestEnvironment() as env:
            json_path, text_path = state_files.write_reports([report], os.path.join(env.temp_dir, "r", "u.json"))
            with open(json_path) as f:
                document = json.load(f)
            self.assertEqual(document["format_version"], 1)
            self.assertTrue(document["passed"])
            self.assertEqual(document["reports"][0]["suite"], "uhlmann")
            with open(text_path) as f:
                text = f.read()
            self.assertTrue(text.startswith("format_version=1\n"))
            self.assertIn("suite=uhlmann", text)

    def test_reports_reproducible_without_timing(self):
        first = run_suite(make_suite("uhlmann", trials=3, seed=1), threads=1)
        second = run_suite(make_suite("uhlmann", trials=3, seed=1), threads=2)
        self.assertEqual(json.dumps(state_files.report_document([first], include_timing=False), sort_keys=True),
                         json.dumps(state_files.report_document([second], include_timing=False), sort_keys=True))


if __name__ == "__main__":
    unittest.main()
