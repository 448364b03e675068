"""
Boson sector of the chain: hopping matrix, collective modes and the effective Ising couplings.
"""

import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Optional

import numpy as np

from src.model.errors import InvalidParameters, NonPositiveSpectrum

logger = logging.getLogger(__name__)


# Relative tolerance used to group degenerate mode energies
DEGENERACY_TOL = 1e-9


class Boundary(Enum):
    """Boundary condition of the boson hopping."""
    PERIODIC = "periodic"
    OPEN = "open"
    CUSTOM = "custom"


@dataclass(frozen=True)
class ModelParams:
    """
    Physical couplings of the chain, all in one energy unit (default omega0 = 1).

    Attributes:
        n_sites: Number of spins and local boson modes N
        omega0: Lowest periodic mode energy
        t: Nearest-neighbour hopping amplitude
        g: Spin-boson coupling
        omega: Transverse field
        boundary: Boundary condition of the hopping
    """

    n_sites: int
    omega0: float = 1.0
    t: float = 0.0
    g: float = 0.0
    omega: float = 1.0
    boundary: Boundary = Boundary.PERIODIC

    def validate(self) -> "ModelParams":
        """Raise InvalidParameters unless every field is in range."""
        if int(self.n_sites) != self.n_sites or self.n_sites < 1:
            raise InvalidParameters(f"n_sites must be a positive integer, got {self.n_sites}")
        if not self.omega0 > 0:
            raise InvalidParameters(f"omega0 must be positive, got {self.omega0}")
        if self.t < 0:
            raise InvalidParameters(f"hopping t must be non-negative, got {self.t}")
        if self.g < 0:
            raise InvalidParameters(f"coupling g must be non-negative, got {self.g}")
        if self.omega < 0:
            raise InvalidParameters(f"transverse field omega must be non-negative, got {self.omega}")
        return self

    def with_changes(self, **changes) -> "ModelParams":
        """Return a copy with some fields replaced."""
        return replace(self, **changes)

    def as_dict(self) -> dict:
        return {
            "n_sites": self.n_sites,
            "omega0": self.omega0,
            "t": self.t,
            "g": self.g,
            "omega": self.omega,
            "boundary": self.boundary.value,
        }


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class HoppingMatrix:
    """Local boson energies plus the off-diagonal hopping t_{j,l}."""

    local_energies: np.ndarray
    hop: np.ndarray
    boundary: Boundary = Boundary.CUSTOM

    def __post_init__(self):
        object.__setattr__(self, "local_energies", _frozen(np.asarray(self.local_energies, dtype=float)))
        object.__setattr__(self, "hop", _frozen(np.asarray(self.hop, dtype=float)))

    @property
    def n_sites(self) -> int:
        return len(self.local_energies)

    @property
    def matrix(self) -> np.ndarray:
        """Full single-particle boson Hamiltonian t_{j,l} + omega_j delta_{j,l}."""
        return self.hop + np.diag(self.local_energies)


@dataclass(frozen=True)
class BosonModes:
    """
    Collective boson modes.

    ``amplitudes[j, n]`` is the amplitude of mode n on site j. ``mode_index``
    holds the plane-wave index of each column for periodic lattices.
    """

    energies: np.ndarray
    amplitudes: np.ndarray
    boundary: Boundary
    mode_index: np.ndarray = field(default=None)

    def __post_init__(self):
        energies = np.asarray(self.energies, dtype=float)
        object.__setattr__(self, "energies", _frozen(energies))
        object.__setattr__(self, "amplitudes", _frozen(np.asarray(self.amplitudes, dtype=complex)))
        index = np.arange(len(energies)) if self.mode_index is None else self.mode_index
        object.__setattr__(self, "mode_index", _frozen(np.asarray(index, dtype=int)))

    @property
    def n_modes(self) -> int:
        return len(self.energies)

    def site_hamiltonian(self) -> np.ndarray:
        """Reassemble sum_n M_{j,n} w_n M*_{l,n}."""
        m = self.amplitudes
        return (m * self.energies) @ m.conj().T

    def unitarity_residual(self) -> float:
        m = self.amplitudes
        return float(np.max(np.abs(m.conj().T @ m - np.eye(self.n_modes))))

    def eigen_residual(self, hopping: HoppingMatrix) -> float:
        m = self.amplitudes
        projected = m.conj().T @ hopping.matrix @ m
        return float(np.max(np.abs(projected - np.diag(self.energies))))


@dataclass(frozen=True)
class CouplingMatrix:
    """
    Effective spin-spin couplings mediated by the bosons.

    Attributes:
        J: Mean-field convention, J_{l,j} = 2 Re(g^2 sum_n M*_{j,n} M_{l,n} / w_n)
        ising: Polaron convention, J_{j,l} = -g^2 sum_n M*_{j,n} M_{l,n} / w_n
    """

    J: np.ndarray
    ising: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "J", _frozen(self.J))
        object.__setattr__(self, "ising", _frozen(self.ising))

    @property
    def row_sums(self) -> np.ndarray:
        return self.J.sum(axis=1)

    @property
    def max_eigenvalue(self) -> float:
        """Largest eigenvalue of J; the disordered state is unstable when omega < 2 * max_eigenvalue."""
        return float(np.linalg.eigvalsh(self.J)[-1])


# ===== Hopping =====

def build_hopping(params: ModelParams) -> HoppingMatrix:
    """
    Build the nearest-neighbour hopping matrix.

    Local energies are omega0 + 2t for both boundaries so that the periodic
    spectrum starts at omega0. On two periodic sites the wrap link coincides
    with the direct link and both contribute.

    Args:
        params: Model parameters with Periodic or Open boundary

    Returns:
        HoppingMatrix tagged with the boundary
    """
    params.validate()
    if params.boundary is Boundary.CUSTOM:
        raise InvalidParameters("Custom lattices are supplied as a hopping matrix, not built")

    n = params.n_sites
    hop = np.zeros((n, n))
    links = n if params.boundary is Boundary.PERIODIC else n - 1
    if n > 1:
        for j in range(links):
            l = (j + 1) % n
            hop[j, l] -= params.t
            hop[l, j] -= params.t

    local = np.full(n, params.omega0 + 2.0 * params.t)
    return HoppingMatrix(local_energies=local, hop=hop, boundary=params.boundary)


def load_hopping_csv(path: Path) -> HoppingMatrix:
    """
    Load a custom hopping matrix from CSV; the diagonal holds the local energies.

    Args:
        path: Path to an N x N comma-separated matrix

    Returns:
        HoppingMatrix with Custom boundary
    """
    path = Path(path).expanduser()
    matrix = np.atleast_2d(np.loadtxt(path, delimiter=",", dtype=float))
    if matrix.shape[0] != matrix.shape[1]:
        raise InvalidParameters(f"Hopping matrix in {path} is not square: {matrix.shape}")
    if not np.allclose(matrix, matrix.T, atol=1e-12):
        raise InvalidParameters(f"Hopping matrix in {path} is not symmetric")

    local = np.diag(matrix).copy()
    hop = matrix - np.diag(local)
    logger.debug(f"Loaded {matrix.shape[0]}-site hopping matrix from {path}")
    return HoppingMatrix(local_energies=local, hop=hop, boundary=Boundary.CUSTOM)


# ===== Collective modes =====

def _degenerate_groups(sorted_values: np.ndarray) -> list[list[int]]:
    """Group consecutive indices of an ascending array whose values coincide."""
    scale = max(1.0, float(np.max(np.abs(sorted_values)))) if len(sorted_values) else 1.0
    groups: list[list[int]] = []
    for i, value in enumerate(sorted_values):
        if groups and abs(value - sorted_values[groups[-1][-1]]) <= DEGENERACY_TOL * scale:
            groups[-1].append(i)
        else:
            groups.append([i])
    return groups


def _plane_waves(n: int, indices) -> np.ndarray:
    sites = np.arange(n)[:, None]
    modes = np.asarray(indices)[None, :]
    return np.exp(-2j * np.pi * modes * sites / n) / np.sqrt(n)


def _largest_component_gauge(vectors: np.ndarray) -> np.ndarray:
    vectors = np.array(vectors, dtype=complex)
    for col in range(vectors.shape[1]):
        k = int(np.argmax(np.abs(vectors[:, col])))
        phase = vectors[k, col] / abs(vectors[k, col])
        vectors[:, col] /= phase
    return vectors


def _plane_wave_gauge(matrix: np.ndarray, energies: np.ndarray, vectors: np.ndarray):
    """
    Rotate each degenerate eigenspace of a circulant matrix onto its plane waves.

    Returns:
        Tuple (amplitudes, mode_index) or None when the spaces do not match
    """
    n = len(energies)
    # eigenvalue of plane wave n for a circulant matrix
    analytic = np.real(np.fft.fft(matrix[0]))
    order = sorted(range(n), key=lambda k: analytic[k])
    analytic_groups = [
        sorted(order[i] for i in group)
        for group in _degenerate_groups(np.array([analytic[k] for k in order]))
    ]
    numeric_groups = _degenerate_groups(energies)
    if [len(g) for g in analytic_groups] != [len(g) for g in numeric_groups]:
        return None

    amplitudes = np.zeros((n, n), dtype=complex)
    mode_index = np.zeros(n, dtype=int)
    for numeric, indices in zip(numeric_groups, analytic_groups):
        subspace = vectors[:, numeric]
        projected = subspace @ (subspace.conj().T @ _plane_waves(n, indices))
        overlap = projected.conj().T @ projected
        weights, basis = np.linalg.eigh(overlap)
        if np.min(weights) < 0.5:
            return None
        projected = projected @ (basis @ np.diag(weights ** -0.5) @ basis.conj().T)
        amplitudes[:, numeric] = projected
        mode_index[numeric] = indices
    return amplitudes, mode_index


def collective_modes(h: HoppingMatrix) -> BosonModes:
    """
    Diagonalize the boson Hamiltonian into collective modes.

    Modes are sorted by ascending energy. Degenerate periodic pairs are rotated
    onto the analytic plane waves (ties ordered by plane-wave index); other
    lattices fix each eigenvector's largest component real and positive.

    Args:
        h: Hopping matrix

    Returns:
        BosonModes with the same boundary tag
    """
    matrix = h.matrix
    if not np.allclose(matrix, matrix.T, atol=1e-12):
        raise InvalidParameters("Hopping matrix must be symmetric")

    energies, vectors = np.linalg.eigh(matrix)
    if np.any(energies <= 0):
        raise NonPositiveSpectrum(energies)

    if h.boundary is Boundary.PERIODIC and h.n_sites > 1:
        canonical = _plane_wave_gauge(matrix, energies, vectors)
        if canonical is not None:
            amplitudes, mode_index = canonical
            return BosonModes(energies=energies, amplitudes=amplitudes, boundary=h.boundary, mode_index=mode_index)
        logger.warning("Periodic hopping is not circulant; falling back to largest-component gauge")

    return BosonModes(
        energies=energies,
        amplitudes=_largest_component_gauge(vectors),
        boundary=h.boundary,
    )


def plane_wave_modes(params: ModelParams) -> BosonModes:
    """
    Analytic periodic modes M_{j,n} = exp(-i 2 pi n j / N) / sqrt(N), n = 0..N-1.

    Args:
        params: Model parameters with Periodic boundary

    Returns:
        BosonModes ordered by plane-wave index
    """
    params.validate()
    if params.boundary is not Boundary.PERIODIC:
        raise InvalidParameters("Plane-wave modes exist only for periodic boundaries")

    n = params.n_sites
    index = np.arange(n)
    energies = params.omega0 + 2.0 * params.t * (1.0 - np.cos(2.0 * np.pi * index / n))
    return BosonModes(
        energies=energies,
        amplitudes=_plane_waves(n, index),
        boundary=Boundary.PERIODIC,
        mode_index=index,
    )


def boson_modes(params: ModelParams, hopping: Optional[HoppingMatrix] = None) -> BosonModes:
    """Pick the mode construction matching the boundary condition."""
    params.validate()
    if params.boundary is Boundary.PERIODIC:
        return plane_wave_modes(params)
    if params.boundary is Boundary.OPEN:
        return collective_modes(build_hopping(params))
    if hopping is None:
        raise InvalidParameters("Custom boundary requires a hopping matrix")
    if hopping.n_sites != params.n_sites:
        raise InvalidParameters(
            f"Hopping matrix has {hopping.n_sites} sites but n_sites = {params.n_sites}"
        )
    return collective_modes(hopping)


# ===== Couplings =====

def ising_couplings(modes: BosonModes, g: float) -> CouplingMatrix:
    """
    Effective Ising couplings obtained by eliminating the bosons.

    Args:
        modes: Collective modes with positive energies
        g: Spin-boson coupling

    Returns:
        CouplingMatrix with both sign conventions
    """
    if np.any(modes.energies <= 0):
        raise NonPositiveSpectrum(modes.energies)

    m = modes.amplitudes
    # green[j, l] = sum_n M*_{j,n} M_{l,n} / w_n
    green = (m.conj() / modes.energies) @ m.T
    if np.max(np.abs(green.imag)) > 1e-12:
        logger.debug("Boson propagator has an imaginary part; couplings keep the real part")

    return CouplingMatrix(
        J=2.0 * g**2 * green.real,
        ising=-(g**2) * green.real,
    )
