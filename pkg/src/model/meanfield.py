"""
Variational mean-field solution: product of spin coherent states and displaced collective modes.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from src.model.errors import InvalidParameters, NonConvergence
from src.model.lattice import (
    Boundary,
    BosonModes,
    CouplingMatrix,
    ModelParams,
    ising_couplings,
    plane_wave_modes,
)

logger = logging.getLogger(__name__)


CRITICAL_BAND = 1e-12
MIXING = 0.5
DEFAULT_TOL = 1e-12
DEFAULT_MAX_ITER = 100_000
RANDOM_RESTART_SEEDS = (11, 23, 37, 41, 59)


class Phase(Enum):
    """Magnetic phase of a mean-field solution."""
    DISORDERED = "disordered"
    ORDERED = "ordered"
    CRITICAL = "critical"


@dataclass(frozen=True)
class MeanFieldSolution:
    """
    Stationary point of the mean-field energy.

    Angles follow the branch sin(theta) <= 0, cos(theta) >= 0 for the closed
    form; flipping every cos(theta_j) and alpha_n gives the degenerate partner.
    """

    thetas: np.ndarray
    alphas: np.ndarray
    energy: float
    phase: Phase
    converged: bool = True
    iterations: int = 0
    residual: float = 0.0

    @property
    def sin_thetas(self) -> np.ndarray:
        return np.sin(self.thetas)

    @property
    def cos_thetas(self) -> np.ndarray:
        return np.cos(self.thetas)

    @property
    def sin_theta(self) -> float:
        """Site-averaged sin(theta); exact for homogeneous solutions."""
        return float(np.mean(self.sin_thetas))

    @property
    def n_sites(self) -> int:
        return len(self.thetas)


# ===== Energy functional =====

def mean_field_energy(
    modes: BosonModes,
    params: ModelParams,
    thetas: np.ndarray,
    alphas: np.ndarray,
) -> float:
    """
    Evaluate the mean-field energy of the product ansatz.

    Args:
        modes: Collective modes
        params: Model parameters (g and omega are used)
        thetas: Spin angles, one per site
        alphas: Mode displacements, one per mode

    Returns:
        sum_n w_n |a_n|^2 - g sum_{j,n} cos(theta_j)(M*_{j,n} a*_n + M_{j,n} a_n) + (omega/2) sum_j sin(theta_j)
    """
    thetas = np.asarray(thetas, dtype=float)
    alphas = np.asarray(alphas, dtype=complex)
    if thetas.shape != (modes.amplitudes.shape[0],) or alphas.shape != (modes.n_modes,):
        raise InvalidParameters("thetas and alphas must match the lattice dimensions")

    m = modes.amplitudes
    cos_t = np.cos(thetas)
    boson = float(np.sum(modes.energies * np.abs(alphas) ** 2))
    # sum_n M_{j,n} a_n + c.c. = 2 Re(M a)_j
    field = 2.0 * np.real(m @ alphas)
    coupling = params.g * float(np.dot(cos_t, field))
    spin = 0.5 * params.omega * float(np.sum(np.sin(thetas)))
    return boson - coupling + spin


def displacements(modes: BosonModes, g: float, cos_thetas: np.ndarray) -> np.ndarray:
    """alpha_n = (g / w_n) sum_j M*_{j,n} cos(theta_j)."""
    return g / modes.energies * (modes.amplitudes.conj().T @ cos_thetas)


def ising_energy(coupling: CouplingMatrix, spins: Sequence[float]) -> float:
    """Energy of the zero-field Ising model sum_{j,l} J_{j,l} s_j s_l, diagonal included."""
    spins = np.asarray(spins, dtype=float)
    return float(spins @ coupling.ising @ spins)


# ===== Closed form (periodic) =====

def critical_coupling(params: ModelParams) -> float:
    """
    Critical spin-boson coupling where omega = 2J = 4 g^2 / omega0.

    Args:
        params: Periodic model parameters (g is ignored)

    Returns:
        g_c = sqrt(omega * omega0) / 2
    """
    params.validate()
    if params.boundary is not Boundary.PERIODIC:
        raise InvalidParameters("The closed-form critical coupling assumes periodic boundaries")
    return math.sqrt(params.omega * params.omega0) / 2.0


def _classify(omega: float, two_j: float) -> Phase:
    if abs(omega - two_j) < CRITICAL_BAND:
        return Phase.CRITICAL
    return Phase.ORDERED if omega < two_j else Phase.DISORDERED


def solve_pbc(params: ModelParams) -> MeanFieldSolution:
    """
    Closed-form homogeneous solution for periodic chains.

    sin(theta) = -omega / 2J with J = 2 g^2 / omega0 when omega <= 2J,
    otherwise sin(theta) = -1; only the uniform mode is displaced.

    Args:
        params: Periodic model parameters

    Returns:
        MeanFieldSolution on the cos(theta) >= 0 branch
    """
    params.validate()
    if params.boundary is not Boundary.PERIODIC:
        raise InvalidParameters("solve_pbc requires periodic boundaries")

    n = params.n_sites
    coupling = 2.0 * params.g**2 / params.omega0
    if coupling == 0.0:
        sin_t, phase = -1.0, Phase.DISORDERED
    else:
        phase = _classify(params.omega, 2.0 * coupling)
        ratio = params.omega / (2.0 * coupling)
        sin_t = -ratio if ratio <= 1.0 else -1.0
    cos_t = math.sqrt(max(0.0, 1.0 - sin_t**2))

    theta = math.atan2(sin_t, cos_t)
    alphas = np.zeros(n, dtype=complex)
    alphas[0] = params.g / params.omega0 * math.sqrt(n) * cos_t

    thetas = np.full(n, theta)
    energy = mean_field_energy(plane_wave_modes(params), params, thetas, alphas)
    return MeanFieldSolution(thetas=thetas, alphas=alphas, energy=energy, phase=phase)


# ===== Self-consistent iteration =====

def _residual(coupling: np.ndarray, omega: float, cos_t: np.ndarray, sin_t: np.ndarray) -> float:
    # polynomial form of the angle equation: (sum_l J_{l,j} cos_l) sin_j + (omega/2) cos_j = 0
    field = coupling @ cos_t
    return float(np.max(np.abs(field * sin_t + 0.5 * omega * cos_t)))


def _iterate(
    coupling: np.ndarray,
    omega: float,
    cos_t: np.ndarray,
    tol: float,
    max_iter: int,
) -> tuple[np.ndarray, np.ndarray, int, float, bool]:
    """Damped fixed-point iteration on cos(theta_j) toward the local field direction."""
    cos_t = np.clip(np.asarray(cos_t, dtype=float), -1.0, 1.0)
    sin_t = -np.sqrt(1.0 - cos_t**2)
    residual = _residual(coupling, omega, cos_t, sin_t)

    for iteration in range(1, max_iter + 1):
        if residual < tol:
            return cos_t, sin_t, iteration - 1, residual, True

        field = coupling @ cos_t
        norm = np.hypot(field, 0.5 * omega)
        target = np.divide(field, norm, out=cos_t.copy(), where=norm > 0)
        cos_t = np.clip((1.0 - MIXING) * cos_t + MIXING * target, -1.0, 1.0)
        sin_t = -np.sqrt(1.0 - cos_t**2)
        residual = _residual(coupling, omega, cos_t, sin_t)

    return cos_t, sin_t, max_iter, residual, residual < tol


def _restart_points(n: int, coupling: CouplingMatrix, omega: float, init) -> list[np.ndarray]:
    starts: list[np.ndarray] = []
    if init is not None:
        starts.append(np.cos(np.asarray(init, dtype=float)))

    mean_j = float(np.mean(coupling.row_sums))
    if mean_j > 0 and omega <= 2.0 * mean_j:
        closed = math.sqrt(max(0.0, 1.0 - (omega / (2.0 * mean_j)) ** 2))
    else:
        closed = 0.0
    starts.append(np.full(n, closed))
    starts.append(np.ones(n))
    starts.append(np.zeros(n))
    for seed in RANDOM_RESTART_SEEDS:
        starts.append(np.random.default_rng(seed).uniform(-1.0, 1.0, n))
    return starts


def solve_self_consistent(
    modes: BosonModes,
    params: ModelParams,
    init: Optional[Sequence[float]] = None,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    strict: bool = True,
) -> MeanFieldSolution:
    """
    Solve the coupled mean-field equations on a general lattice.

    Each restart iterates cos(theta_j) toward J cos / |(J cos, omega/2)| with
    mixing 0.5; alphas follow from the angles. Restarts: the optional ``init``
    angles, the closed-form periodic angle, fully ordered, fully disordered and
    five seeded random states. The lowest-energy converged restart wins.

    Args:
        modes: Collective modes of the lattice
        params: Model parameters
        init: Optional starting angles
        tol: Residual tolerance of the angle equation
        max_iter: Iteration budget per restart
        strict: Raise NonConvergence when no restart converges

    Returns:
        MeanFieldSolution
    """
    params.validate()
    if modes.amplitudes.shape[0] != params.n_sites:
        raise InvalidParameters("Modes and parameters disagree on the number of sites")
    if tol <= 0:
        raise InvalidParameters("tol must be positive")

    coupling = ising_couplings(modes, params.g)
    starts = _restart_points(params.n_sites, coupling, params.omega, init)

    best: Optional[MeanFieldSolution] = None
    best_any: Optional[MeanFieldSolution] = None
    for k, start in enumerate(starts):
        cos_t, sin_t, iterations, residual, converged = _iterate(
            coupling.J, params.omega, start, tol, max_iter
        )
        thetas = np.arctan2(sin_t, cos_t)
        alphas = displacements(modes, params.g, cos_t)
        energy = mean_field_energy(modes, params, thetas, alphas)
        candidate = MeanFieldSolution(
            thetas=thetas,
            alphas=alphas,
            energy=energy,
            phase=_classify(params.omega, 2.0 * coupling.max_eigenvalue) if params.g > 0 else Phase.DISORDERED,
            converged=converged,
            iterations=iterations,
            residual=residual,
        )
        logger.debug(f"Restart {k}: energy={energy:.12g} residual={residual:.2e} iterations={iterations}")

        if best_any is None or candidate.residual < best_any.residual:
            best_any = candidate
        if converged and (best is None or energy < best.energy - 1e-14):
            best = candidate

    if best is not None:
        return best

    logger.warning(f"No mean-field restart converged (best residual {best_any.residual:.2e})")
    if strict:
        raise NonConvergence("Mean-field iteration did not converge", best_any.residual, best_any)
    return best_any
