import unittest

import numpy as np
import scipy.sparse as sp
from numpy.testing import assert_allclose

from src.config import Config, set_config
from src.model.errors import CutoffNotConverged, HilbertSpaceTooLarge, InvalidParameters
from src.model.lattice import Boundary, ModelParams
from src.model.oracle import (
    Basis,
    EDConfig,
    build_full_hamiltonian,
    converge_cutoff,
    cutoff_convergence,
    exact_vs_meanfield,
    ground_state,
    hermiticity_residual,
    parity_operator,
    solve_exact,
)


class TestEigensolver(unittest.TestCase):
    def test_two_by_two(self):
        energy, vector = ground_state(np.array([[0.0, 1.0], [1.0, 0.0]]))
        self.assertAlmostEqual(energy, -1.0, places=14)
        self.assertAlmostEqual(np.linalg.norm(vector), 1.0)

    def test_dense_and_sparse_agree(self):
        cfg = EDConfig(params=ModelParams(n_sites=2, t=0.4, g=0.4), fock_cutoff=6)
        h = build_full_hamiltonian(cfg)
        dense, _ = ground_state(h, method="dense")
        sparse, _ = ground_state(h, method="sparse")
        self.assertAlmostEqual(dense, sparse, places=10)

    def test_unknown_method(self):
        with self.assertRaises(ValueError):
            ground_state(sp.identity(4, format="csr"), method="qr")


class TestHamiltonian(unittest.TestCase):
    def test_dimension_and_hermiticity(self):
        cfg = EDConfig(params=ModelParams(n_sites=2, t=0.4, g=0.6, omega=0.8), fock_cutoff=5)
        h = build_full_hamiltonian(cfg)
        self.assertEqual(h.shape, (4 * 36, 4 * 36))
        self.assertLess(hermiticity_residual(h), 1e-12)

    def test_parity_commutes_in_bare_basis(self):
        cfg = EDConfig(params=ModelParams(n_sites=2, t=0.4, g=0.6, omega=0.8), fock_cutoff=4)
        h = build_full_hamiltonian(cfg)
        p = parity_operator(cfg)
        self.assertLess(abs(h @ p - p @ h).max(), 1e-12)

    def test_single_decoupled_site(self):
        result = solve_exact(EDConfig(params=ModelParams(n_sites=1, g=0.0), fock_cutoff=4))
        self.assertAlmostEqual(result.energy, -0.5, places=12)

    def test_guards(self):
        with self.assertRaises(HilbertSpaceTooLarge):
            EDConfig(params=ModelParams(n_sites=4, g=0.3)).validate()
        with self.assertRaises(HilbertSpaceTooLarge):
            EDConfig(params=ModelParams(n_sites=3, g=0.3), fock_cutoff=100).validate()
        with self.assertRaises(InvalidParameters):
            EDConfig(params=ModelParams(n_sites=2, g=0.3), fock_cutoff=0).validate()


class TestObservables(unittest.TestCase):
    def test_decoupled_ground_state(self):
        result = solve_exact(EDConfig(params=ModelParams(n_sites=2, t=0.4, g=0.0), fock_cutoff=3))
        self.assertAlmostEqual(result.energy, -1.0, places=12)
        assert_allclose(result.sx_mean, -1.0, atol=1e-12)
        assert_allclose(result.boson_occupation, 0.0, atol=1e-12)
        self.assertAlmostEqual(result.zz_corr[0, 1], 0.0, places=12)
        assert_allclose(np.diag(result.zz_corr), 1.0)

    def test_parity_symmetric_ground_state(self):
        for omega in (0.5, 0.0):
            cfg = EDConfig(params=ModelParams(n_sites=2, t=0.4, g=0.6, omega=omega), fock_cutoff=10)
            result = solve_exact(cfg)
            self.assertLess(np.max(np.abs(result.sz_mean)), 1e-10)
            self.assertLess(np.max(np.abs(result.boson_displacement)), 1e-10)
            self.assertAlmostEqual(result.parity, 1.0, places=8)

    def test_zero_field_degeneracy(self):
        cfg = EDConfig(params=ModelParams(n_sites=2, t=0.4, g=0.6, omega=0.0), fock_cutoff=10)
        self.assertEqual(solve_exact(cfg).degeneracy, 2)

    def test_ordered_correlations(self):
        cfg = EDConfig(params=ModelParams(n_sites=2, t=0.4, g=1.2), fock_cutoff=20)
        result = solve_exact(cfg)
        self.assertGreater(result.zz_corr[0, 1], 0.9)
        self.assertLess(np.max(np.abs(result.sz_mean)), 1e-8)


class TestCutoff(unittest.TestCase):
    def tearDown(self):
        set_config(Config())

    def test_energy_decreases_with_cutoff(self):
        cfg = EDConfig(params=ModelParams(n_sites=1, g=1.0, omega=0.0))
        table = cutoff_convergence(cfg, [2, 4, 8, 16, 24])
        self.assertTrue(table.is_monotone())
        self.assertTrue(table.converged)
        self.assertAlmostEqual(table.rows[-1][1], -1.0, places=10)
        self.assertGreater(table.rows[0][1], -1.0 + 1e-3)

    def test_displaced_basis_converges_at_once(self):
        params = ModelParams(n_sites=1, g=1.0, omega=0.0)
        displaced = solve_exact(EDConfig(params=params, fock_cutoff=1, basis=Basis.DISPLACED_MODES))
        self.assertAlmostEqual(displaced.energy, -1.0, places=10)
        self.assertEqual(displaced.degeneracy, 2)
        self.assertAlmostEqual(displaced.boson_occupation[0], 1.0, places=8)
        self.assertLess(abs(displaced.boson_displacement[0]), 1e-8)

    def test_displaced_basis_in_ordered_phase(self):
        params = ModelParams(n_sites=2, t=0.4, g=1.2, omega=1.0)
        reference, _ = ground_state(build_full_hamiltonian(EDConfig(params=params, fock_cutoff=26)))

        for cutoff in (4, 8):
            bare, _ = ground_state(build_full_hamiltonian(EDConfig(params=params, fock_cutoff=cutoff)))
            displaced, _ = ground_state(build_full_hamiltonian(
                EDConfig(params=params, fock_cutoff=cutoff, basis=Basis.DISPLACED_MODES)
            ))
            self.assertGreater(displaced, reference - 1e-9)
            self.assertLess(displaced - reference, bare - reference)

        displaced, _ = ground_state(build_full_hamiltonian(
            EDConfig(params=params, fock_cutoff=14, basis=Basis.DISPLACED_MODES)
        ))
        self.assertAlmostEqual(displaced, reference, delta=1e-6)

    def test_displaced_basis_keeps_parity(self):
        cfg = EDConfig(
            params=ModelParams(n_sites=2, t=0.4, g=0.8, omega=0.5), fock_cutoff=4, basis=Basis.DISPLACED_MODES
        )
        h = build_full_hamiltonian(cfg)
        p = parity_operator(cfg)
        self.assertLess(abs(h @ p - p @ h).max(), 1e-10)
        self.assertLess(abs(p @ p - sp.identity(h.shape[0])).max(), 1e-10)

        result = solve_exact(cfg)
        self.assertLess(np.max(np.abs(result.sz_mean)), 1e-8)
        self.assertAlmostEqual(abs(result.parity), 1.0, places=8)

    def test_rejects_unsorted_cutoffs(self):
        with self.assertRaises(InvalidParameters):
            cutoff_convergence(EDConfig(params=ModelParams(n_sites=1, g=0.5)), [4, 2])

    def test_escalation(self):
        cfg = EDConfig(params=ModelParams(n_sites=2, t=0.4, g=0.6, omega=0.0), fock_cutoff=4)
        result = converge_cutoff(cfg)
        self.assertTrue(result.cutoff_converged)
        self.assertGreater(result.cutoff_used, 4)
        self.assertAlmostEqual(result.energy, -0.72, places=8)
        self.assertEqual(result.cutoff_table.rows[-1][0], result.cutoff_used)

    def test_ceiling_reached(self):
        set_config(Config(max_fock_cutoff=3))
        cfg = EDConfig(params=ModelParams(n_sites=1, g=1.5, omega=0.0), fock_cutoff=1)
        with self.assertRaises(CutoffNotConverged) as ctx:
            exact_vs_meanfield(cfg)
        self.assertEqual(ctx.exception.table.rows[-1][0], 3)
        self.assertFalse(ctx.exception.table.converged)


class TestMeanFieldComparison(unittest.TestCase):
    def test_exact_at_zero_field(self):
        report = exact_vs_meanfield(EDConfig(params=ModelParams(n_sites=2, t=0.4, g=0.6, omega=0.0)))
        self.assertAlmostEqual(report.energy_exact, -0.72, places=8)
        self.assertLess(abs(report.variational_gap), 1e-8)

    def test_exact_without_coupling(self):
        report = exact_vs_meanfield(EDConfig(params=ModelParams(n_sites=2, t=0.4, g=0.0)))
        self.assertAlmostEqual(report.variational_gap, 0.0, places=12)
        self.assertAlmostEqual(report.sx_exact, report.sx_meanfield, places=12)

    def test_variational_gap_and_zero_point_energy(self):
        report = exact_vs_meanfield(EDConfig(params=ModelParams(n_sites=2, t=0.4, g=0.3)))
        self.assertGreater(report.variational_gap, 0.0)
        self.assertIsNotNone(report.zero_point_energy)
        self.assertLess(report.zero_point_energy, 0.0)
        self.assertLess(report.variational_gap, 2 * abs(report.zero_point_energy))

    def test_variational_bound_in_ordered_phase(self):
        params = ModelParams(n_sites=2, t=0.4, g=0.8, omega=0.5)
        report = exact_vs_meanfield(EDConfig(params=params, fock_cutoff=12))
        self.assertGreaterEqual(report.variational_gap, -1e-10)
        self.assertEqual(report.phase, "ordered")

    def test_open_chain(self):
        params = ModelParams(n_sites=3, t=0.4, g=0.4, boundary=Boundary.OPEN)
        report = exact_vs_meanfield(EDConfig(params=params, fock_cutoff=4))
        self.assertGreaterEqual(report.variational_gap, -1e-10)

    def test_spin_wave_trend(self):
        discrepancies = []
        for g in (0.3, 0.2, 0.1, 0.05):
            report = exact_vs_meanfield(EDConfig(params=ModelParams(n_sites=2, t=0.4, g=g), fock_cutoff=8))
            self.assertIsNotNone(report.spin_wave_discrepancy)
            discrepancies.append(report.spin_wave_discrepancy)
        self.assertTrue(all(b < a for a, b in zip(discrepancies, discrepancies[1:])), discrepancies)


if __name__ == '__main__':
    unittest.main()
