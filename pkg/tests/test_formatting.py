import math
import unittest

import numpy as np

from src.model.meanfield import Phase
from src.utils.formatting import (
    format_cell,
    format_critical_report,
    format_float,
    format_sweep_summary,
    format_validation_report,
)


class TestFormatFloat(unittest.TestCase):
    def test_round_trip_digits(self):
        self.assertEqual(format_float(0.1), "0.10000000000000001")
        self.assertEqual(float(format_float(math.pi)), math.pi)
        self.assertEqual(format_float(0.5), "0.5")
        self.assertEqual(format_float(1.0 / 3.0, digits=6), "0.333333")

    def test_special_values(self):
        self.assertEqual(format_float(math.inf), "inf")
        self.assertEqual(format_float(-math.inf), "-inf")
        self.assertEqual(format_float(math.nan), "nan")


class TestFormatCell(unittest.TestCase):
    def test_cells(self):
        self.assertEqual(format_cell(None), "")
        self.assertEqual(format_cell(True), "true")
        self.assertEqual(format_cell(np.bool_(False)), "false")
        self.assertEqual(format_cell(20), "20")
        self.assertEqual(format_cell(np.int64(7)), "7")
        self.assertEqual(format_cell(np.float64(2.0)), "2")
        self.assertEqual(format_cell(Phase.CRITICAL), "critical")
        self.assertEqual(format_cell("g"), "g")


class TestReports(unittest.TestCase):
    def test_critical_report(self):
        text = format_critical_report(0.5000000001, 0.5, 1.0, 1.0)
        self.assertIn("bisection:   0.50000000", text)
        self.assertIn("closed form: 0.50000000", text)

    def test_validation_report(self):
        checks = [("variational", True, "min gap 0"), ("parity", False, "max 1e-3")]
        text = format_validation_report(checks, 27, [(0.3, 0.02), (0.05, None)])
        self.assertIn("[ok  ] variational", text)
        self.assertIn("[FAIL] parity", text)
        self.assertIn("g=0.05: n/a", text)
        self.assertTrue(text.endswith("FAILED"))

        self.assertTrue(format_validation_report(checks[:1], 27).endswith("PASSED"))

    def test_sweep_summary(self):
        text = format_sweep_summary("fig1", 201, 1, ["results/fig1.csv"])
        self.assertTrue(text.startswith("Sweep 'fig1': 201 points (1 diverged)"))
        self.assertIn("results/fig1.csv", text)


if __name__ == '__main__':
    unittest.main()
