import math
import unittest
from unittest.mock import patch

import numpy as np
from numpy.testing import assert_allclose

from src.model.errors import InvalidParameters, NonConvergence
from src.model.lattice import (
    Boundary,
    ModelParams,
    boson_modes,
    build_hopping,
    collective_modes,
    ising_couplings,
    plane_wave_modes,
)
from src.model.meanfield import (
    Phase,
    critical_coupling,
    ising_energy,
    mean_field_energy,
    solve_pbc,
    solve_self_consistent,
)


def closed_form(g: float, omega: float = 1.0, omega0: float = 1.0) -> tuple[float, float]:
    """(sin theta, cos theta) of the periodic solution."""
    coupling = 2 * g**2 / omega0
    sin_t = -min(1.0, omega / (2 * coupling)) if coupling > 0 else -1.0
    return sin_t, math.sqrt(1 - sin_t**2)


class TestClosedForm(unittest.TestCase):
    def test_ordered_solution(self):
        params = ModelParams(n_sites=20, t=0.4, g=0.6)
        mf = solve_pbc(params)
        sin_t, cos_t = closed_form(0.6)

        self.assertEqual(mf.phase, Phase.ORDERED)
        assert_allclose(mf.sin_thetas, sin_t, atol=1e-14)
        assert_allclose(mf.cos_thetas, cos_t, atol=1e-14)
        self.assertAlmostEqual(cos_t, 0.719546, places=6)
        self.assertAlmostEqual(abs(mf.alphas[0]), 0.6 * math.sqrt(20) * cos_t, places=12)
        assert_allclose(mf.alphas[1:], 0.0)

    def test_ordered_energy(self):
        n, g = 20, 0.6
        mf = solve_pbc(ModelParams(n_sites=n, t=0.4, g=g))
        sin_t, cos_t = closed_form(g)
        coupling = 2 * g**2
        self.assertAlmostEqual(mf.energy, n * (-0.5 * coupling * cos_t**2 + 0.5 * sin_t), places=10)
        self.assertLess(mf.energy, -0.5 * n)

    def test_disordered_solution(self):
        mf = solve_pbc(ModelParams(n_sites=10, t=0.4, g=0.3))
        self.assertEqual(mf.phase, Phase.DISORDERED)
        assert_allclose(mf.sin_thetas, -1.0)
        assert_allclose(mf.alphas, 0.0)
        self.assertAlmostEqual(mf.energy, -5.0)

    def test_zero_coupling(self):
        mf = solve_pbc(ModelParams(n_sites=4, g=0.0))
        self.assertEqual(mf.phase, Phase.DISORDERED)
        self.assertEqual(mf.sin_theta, -1.0)

    def test_critical_point(self):
        mf = solve_pbc(ModelParams(n_sites=20, t=0.4, g=0.5))
        self.assertEqual(mf.phase, Phase.CRITICAL)
        self.assertAlmostEqual(mf.sin_theta, -1.0)

    def test_zero_field(self):
        n, g = 6, 0.6
        mf = solve_pbc(ModelParams(n_sites=n, t=0.4, g=g, omega=0.0))
        self.assertEqual(mf.phase, Phase.ORDERED)
        self.assertAlmostEqual(mf.energy, -n * g**2, places=12)

    def test_critical_coupling(self):
        self.assertAlmostEqual(critical_coupling(ModelParams(n_sites=1)), 0.5)
        self.assertAlmostEqual(critical_coupling(ModelParams(n_sites=1, omega=2.0)), 0.70710678, places=8)
        with self.assertRaises(InvalidParameters):
            critical_coupling(ModelParams(n_sites=3, boundary=Boundary.OPEN))

    def test_phase_on_either_side_of_threshold(self):
        for omega in (1.0, 2.0):
            g_c = critical_coupling(ModelParams(n_sites=1, omega=omega))
            below = solve_pbc(ModelParams(n_sites=10, t=0.4, omega=omega, g=g_c * (1 - 1e-6)))
            above = solve_pbc(ModelParams(n_sites=10, t=0.4, omega=omega, g=g_c * (1 + 1e-6)))
            self.assertEqual(below.phase, Phase.DISORDERED)
            self.assertEqual(above.phase, Phase.ORDERED)
            self.assertEqual(below.sin_theta, -1.0)
            self.assertGreater(above.sin_theta, -1.0)

    def test_order_parameter_grows_as_square_root(self):
        offsets = np.array([1e-6, 1e-5, 1e-4])
        cos_t = [solve_pbc(ModelParams(n_sites=20, t=0.4, g=0.5 + d)).cos_thetas[0] for d in offsets]
        slope, _ = np.polyfit(np.log(offsets), np.log(cos_t), 1)
        self.assertAlmostEqual(slope, 0.5, delta=0.05)
        self.assertEqual(solve_pbc(ModelParams(n_sites=20, t=0.4, g=0.5)).cos_thetas[0], 0.0)

    def test_requires_periodic(self):
        with self.assertRaises(InvalidParameters):
            solve_pbc(ModelParams(n_sites=4, g=0.6, boundary=Boundary.OPEN))


class TestEnergyFunctional(unittest.TestCase):
    def test_stationary_in_theta(self):
        params = ModelParams(n_sites=8, t=0.4, g=0.7)
        modes = plane_wave_modes(params)
        mf = solve_pbc(params)
        for shift in (1e-3, -1e-3):
            energy = mean_field_energy(modes, params, mf.thetas + shift, mf.alphas)
            self.assertGreater(energy, mf.energy)

    def test_local_minimum_under_site_perturbations(self):
        rng = np.random.default_rng(7)
        for g in (0.3, 0.7):
            params = ModelParams(n_sites=8, t=0.4, g=g)
            modes = plane_wave_modes(params)
            mf = solve_pbc(params)
            for _ in range(100):
                delta = rng.normal(size=params.n_sites)
                delta *= rng.uniform(1e-6, 1e-3) / np.linalg.norm(delta)
                energy = mean_field_energy(modes, params, mf.thetas + delta, mf.alphas)
                self.assertGreaterEqual(energy, mf.energy - 1e-12)

    def test_reflected_solution_is_degenerate(self):
        params = ModelParams(n_sites=8, t=0.4, g=0.7)
        modes = plane_wave_modes(params)
        mf = solve_pbc(params)
        reflected = mean_field_energy(modes, params, np.pi - mf.thetas, -mf.alphas)
        self.assertAlmostEqual(reflected, mf.energy, places=12)

        open_params = ModelParams(n_sites=6, t=0.4, g=0.6, boundary=Boundary.OPEN)
        open_modes = boson_modes(open_params)
        open_mf = solve_self_consistent(open_modes, open_params)
        reflected = mean_field_energy(open_modes, open_params, np.pi - open_mf.thetas, -open_mf.alphas)
        self.assertAlmostEqual(reflected, open_mf.energy, places=12)

    def test_shape_mismatch(self):
        params = ModelParams(n_sites=3, g=0.2)
        with self.assertRaises(InvalidParameters):
            mean_field_energy(plane_wave_modes(params), params, np.zeros(2), np.zeros(3))

    def test_ising_energy_of_aligned_spins(self):
        params = ModelParams(n_sites=4, t=0.4)
        coupling = ising_couplings(plane_wave_modes(params), 0.6)
        self.assertAlmostEqual(ising_energy(coupling, [1, 1, 1, 1]), -4 * 0.36, places=12)
        self.assertAlmostEqual(ising_energy(coupling, [-1, -1, -1, -1]), -4 * 0.36, places=12)


class TestSelfConsistent(unittest.TestCase):
    def test_matches_closed_form_on_ring(self):
        for g in (0.3, 0.6, 0.9):
            params = ModelParams(n_sites=6, t=0.4, g=g)
            modes = collective_modes(build_hopping(params))
            mf = solve_self_consistent(modes, params)
            reference = solve_pbc(params)

            self.assertTrue(mf.converged)
            assert_allclose(mf.sin_thetas, reference.sin_thetas, atol=1e-8)
            assert_allclose(np.abs(mf.cos_thetas), reference.cos_thetas, atol=1e-8)
            self.assertAlmostEqual(mf.energy, reference.energy, places=10)
            self.assertEqual(mf.phase, reference.phase)

    def test_open_chain_converges(self):
        params = ModelParams(n_sites=8, t=0.4, g=0.6, boundary=Boundary.OPEN)
        mf = solve_self_consistent(boson_modes(params), params)
        self.assertTrue(mf.converged)
        self.assertLess(mf.residual, 1e-12)
        self.assertLess(mf.energy, -0.5 * params.n_sites)
        self.assertTrue(np.all(mf.sin_thetas <= 0))

    def test_decoupled_open_chain(self):
        params = ModelParams(n_sites=5, t=0.4, g=0.0, boundary=Boundary.OPEN)
        mf = solve_self_consistent(boson_modes(params), params)
        assert_allclose(mf.sin_thetas, -1.0, atol=1e-10)
        assert_allclose(mf.alphas, 0.0, atol=1e-10)

    def test_non_convergence(self):
        params = ModelParams(n_sites=4, t=0.4, g=0.6, boundary=Boundary.OPEN)
        modes = boson_modes(params)
        stuck = (np.zeros(4), -np.ones(4), 1, 0.5, False)
        with patch("src.model.meanfield._iterate", return_value=stuck):
            with self.assertRaises(NonConvergence) as ctx:
                solve_self_consistent(modes, params, max_iter=1)
            self.assertEqual(ctx.exception.residual, 0.5)

            mf = solve_self_consistent(modes, params, max_iter=1, strict=False)
            self.assertFalse(mf.converged)

    def test_rejects_mismatched_modes(self):
        params = ModelParams(n_sites=4, g=0.6)
        with self.assertRaises(InvalidParameters):
            solve_self_consistent(plane_wave_modes(ModelParams(n_sites=3)), params)


if __name__ == '__main__':
    unittest.main()
