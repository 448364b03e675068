"""
Exact diagonalization of the full spin-boson chain at small N.

Each collective mode is truncated at n_max bosons. The basis is ordered
spin_0 x ... x spin_{N-1} x mode_0 x ... x mode_{N-1}.

The displaced basis keeps, for a mode with mean-field displacement alpha,
the span of D(+alpha)|k> and D(-alpha)|k> for k <= n_max. The span is
closed under boson parity, so both branches of an ordered cat state are
resolved at the same cutoff.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from src.config import get_config
from src.model.errors import (
    CutoffNotConverged,
    EigenSolverError,
    HilbertSpaceTooLarge,
    InvalidParameters,
    ModelError,
)
from src.model.lattice import Boundary, BosonModes, HoppingMatrix, ModelParams, boson_modes
from src.model.meanfield import MeanFieldSolution, solve_pbc, solve_self_consistent
from src.model.spinwave import (
    build_gaussian_hamiltonian,
    diagonalize_quadratic,
    fluctuations_general,
    fluctuations_pbc,
    gaussian_spectrum_pbc,
    zero_point_energy,
)

logger = logging.getLogger(__name__)


MAX_SITES = 3
MAX_DIMENSION = 1_000_000
DENSE_LIMIT = 4096
EIGSH_TOL = 1e-10
EIGSH_MAXITER = 10_000
DEGENERACY_WINDOW = 1e-8
CUTOFF_TOL = 1e-8
HERMITICITY_TOL = 1e-12
# Singular values below this drop linearly dependent displaced states
SPAN_RANK_TOL = 1e-10
# Extra Fock levels used to represent displaced states before projection
SPAN_MARGIN = 8.0

SIGMA_X = sp.csr_matrix([[0.0, 1.0], [1.0, 0.0]], dtype=np.complex128)
SIGMA_Z = sp.csr_matrix([[1.0, 0.0], [0.0, -1.0]], dtype=np.complex128)


class Basis(Enum):
    """Boson occupation basis used for the truncation."""
    BARE_MODES = "bare"
    DISPLACED_MODES = "displaced"


@dataclass(frozen=True)
class EDConfig:
    """
    Exact-diagonalization setup.

    Attributes:
        params: Model parameters, at most three sites
        fock_cutoff: Maximum occupation n_max of each collective mode
        basis: Bare modes, or the parity-closed span of modes displaced by +-alpha
        hopping: Hopping matrix for Custom lattices
    """

    params: ModelParams
    fock_cutoff: int = 8
    basis: Basis = Basis.BARE_MODES
    hopping: Optional[HoppingMatrix] = field(default=None, compare=False)

    @property
    def levels_per_mode(self) -> int:
        """Upper bound on the states kept per mode."""
        levels = self.fock_cutoff + 1
        return 2 * levels if self.basis is Basis.DISPLACED_MODES else levels

    @property
    def dimension(self) -> int:
        n = self.params.n_sites
        return 2**n * self.levels_per_mode ** n

    def validate(self) -> "EDConfig":
        self.params.validate()
        if self.params.n_sites > MAX_SITES:
            raise HilbertSpaceTooLarge(f"Exact diagonalization supports N <= {MAX_SITES}, got {self.params.n_sites}")
        if self.fock_cutoff < 1:
            raise InvalidParameters(f"fock_cutoff must be at least 1, got {self.fock_cutoff}")
        if self.dimension > MAX_DIMENSION:
            raise HilbertSpaceTooLarge(
                f"Hilbert space dimension {self.dimension} exceeds {MAX_DIMENSION} "
                f"(N={self.params.n_sites}, n_max={self.fock_cutoff})"
            )
        return self

    def with_cutoff(self, fock_cutoff: int) -> "EDConfig":
        return replace(self, fock_cutoff=fock_cutoff)


@dataclass(frozen=True)
class CutoffTable:
    """Ground energies for a sequence of Fock cutoffs."""

    rows: list[tuple[int, float]]
    converged: bool

    def is_monotone(self, tol: float = 1e-10) -> bool:
        energies = [energy for _, energy in self.rows]
        return all(b <= a + tol for a, b in zip(energies, energies[1:]))


@dataclass(frozen=True)
class EDResult:
    """Ground-state energy and observables of the truncated model."""

    energy: float
    sx_mean: np.ndarray
    sz_mean: np.ndarray
    zz_corr: np.ndarray
    boson_occupation: np.ndarray
    boson_displacement: np.ndarray
    cutoff_converged: bool
    cutoff_used: int
    parity: float = float("nan")
    degeneracy: int = 1
    cutoff_table: Optional[CutoffTable] = None


# ===== Operators =====

def _annihilation(n_max: int) -> sp.csr_matrix:
    return sp.diags(np.sqrt(np.arange(1, n_max + 1, dtype=float)), offsets=1, format="csr", dtype=np.complex128)


def _embed(op: sp.spmatrix, position: int, dims: list[int]) -> sp.csr_matrix:
    result = sp.identity(1, format="csr", dtype=np.complex128)
    for k, d in enumerate(dims):
        factor = op if k == position else sp.identity(d, format="csr", dtype=np.complex128)
        result = sp.kron(result, factor, format="csr")
    return result


@dataclass(frozen=True)
class ModeBasis:
    """Single-mode operators in the truncated basis of one collective mode."""

    annihilation: sp.csr_matrix
    number: sp.csr_matrix
    parity: sp.csr_matrix

    @property
    def size(self) -> int:
        return self.number.shape[0]


def bare_mode_basis(n_max: int) -> ModeBasis:
    levels = np.arange(n_max + 1, dtype=float)
    return ModeBasis(
        annihilation=_annihilation(n_max),
        number=sp.diags(levels, format="csr", dtype=np.complex128),
        parity=sp.diags((-1.0) ** levels, format="csr", dtype=np.complex128),
    )


def displaced_mode_basis(n_max: int, alpha: complex) -> ModeBasis:
    """
    Orthonormalized span of D(+alpha)|k> and D(-alpha)|k>, k = 0..n_max.

    The states are built in a larger Fock space and every operator is
    projected from there, so the truncated Hamiltonian stays variational.

    Args:
        n_max: Highest Fock level displaced on each branch
        alpha: Mean-field displacement of the mode

    Returns:
        ModeBasis with at most 2 (n_max + 1) states
    """
    if abs(alpha) < SPAN_RANK_TOL:
        return bare_mode_basis(n_max)

    large = int(math.ceil((math.sqrt(n_max + 1) + abs(alpha) + SPAN_MARGIN) ** 2))
    a = _annihilation(large).toarray()
    branches = []
    for sign in (1.0, -1.0):
        generator = sign * (alpha * a.conj().T - np.conj(alpha) * a)
        branches.append(sla.expm(generator)[:, : n_max + 1])
    u, s, _ = np.linalg.svd(np.hstack(branches), full_matrices=False)
    q = u[:, s > SPAN_RANK_TOL * s[0]]

    def project(op: np.ndarray, hermitian: bool = True) -> sp.csr_matrix:
        projected = q.conj().T @ op @ q
        if hermitian:
            projected = 0.5 * (projected + projected.conj().T)
        return sp.csr_matrix(projected)

    levels = np.arange(large + 1, dtype=float)
    logger.debug(f"Displaced span for alpha={alpha:.6g}: {q.shape[1]} states from {large + 1} Fock levels")
    return ModeBasis(
        annihilation=project(a, hermitian=False),
        number=project(np.diag(levels).astype(np.complex128)),
        parity=project(np.diag((-1.0) ** levels).astype(np.complex128)),
    )


@dataclass
class _Operators:
    sx: list
    sz: list
    a: list
    number: list
    modes: list[ModeBasis]
    dims: list[int]

    @property
    def identity(self) -> sp.csr_matrix:
        return sp.identity(int(np.prod(self.dims)), format="csr", dtype=np.complex128)


def _mode_bases(cfg: EDConfig) -> list[ModeBasis]:
    if cfg.basis is Basis.BARE_MODES:
        return [bare_mode_basis(cfg.fock_cutoff)] * cfg.params.n_sites
    alphas = _meanfield(cfg, _modes(cfg)).alphas
    return [displaced_mode_basis(cfg.fock_cutoff, complex(alpha)) for alpha in alphas]


def _operators(cfg: EDConfig) -> _Operators:
    n = cfg.params.n_sites
    modes = _mode_bases(cfg)
    dims = [2] * n + [mode.size for mode in modes]
    return _Operators(
        sx=[_embed(SIGMA_X, j, dims) for j in range(n)],
        sz=[_embed(SIGMA_Z, j, dims) for j in range(n)],
        a=[_embed(mode.annihilation, n + k, dims) for k, mode in enumerate(modes)],
        number=[_embed(mode.number, n + k, dims) for k, mode in enumerate(modes)],
        modes=modes,
        dims=dims,
    )


def parity_operator(cfg: EDConfig) -> sp.csr_matrix:
    """P = prod_j sigma^x_j * (-1)^(sum_n a_n^dagger a_n); commutes with the Hamiltonian in both bases."""
    n = cfg.params.n_sites
    result = sp.identity(1, format="csr", dtype=np.complex128)
    for factor in [SIGMA_X] * n + [mode.parity for mode in _mode_bases(cfg)]:
        result = sp.kron(result, factor, format="csr")
    return result


def _modes(cfg: EDConfig) -> BosonModes:
    return boson_modes(cfg.params, cfg.hopping)


def _meanfield(cfg: EDConfig, modes: BosonModes) -> MeanFieldSolution:
    if cfg.params.boundary is Boundary.PERIODIC:
        return solve_pbc(cfg.params)
    return solve_self_consistent(modes, cfg.params)


def hermiticity_residual(h) -> float:
    diff = h - h.conj().T
    return float(abs(diff).max()) if sp.issparse(diff) else float(np.max(np.abs(diff)))


# ===== Hamiltonian and eigensolver =====

def build_full_hamiltonian(cfg: EDConfig) -> sp.csr_matrix:
    """
    Assemble H = (omega/2) sum_j sigma^x_j + sum_n w_n a_n^dagger a_n
    + g sum_{j,n} sigma^z_j (M_{j,n} a_n + M*_{j,n} a_n^dagger).

    Args:
        cfg: Exact-diagonalization setup

    Returns:
        Sparse Hermitian matrix of dimension 2^N (n_max+1)^N in the bare
        basis, at most 2^N (2 n_max + 2)^N in the displaced one
    """
    cfg.validate()
    params = cfg.params
    modes = _modes(cfg)
    ops = _operators(cfg)
    identity = ops.identity
    m = modes.amplitudes

    h = sp.csr_matrix(identity.shape, dtype=np.complex128)
    for sx in ops.sx:
        h = h + 0.5 * params.omega * sx

    for k, number in enumerate(ops.number):
        h = h + modes.energies[k] * number

    for j, sz in enumerate(ops.sz):
        field_ = sp.csr_matrix(identity.shape, dtype=np.complex128)
        for k, a in enumerate(ops.a):
            field_ = field_ + m[j, k] * a + np.conj(m[j, k]) * a.conj().T
        h = h + params.g * (sz @ field_)

    h = h.tocsr()
    residual = hermiticity_residual(h)
    if residual > HERMITICITY_TOL:
        raise RuntimeError(f"Assembled Hamiltonian is not Hermitian (residual {residual:.2e})")
    logger.debug(f"Built H: dim={h.shape[0]} nnz={h.nnz} basis={cfg.basis.value}")
    return h


def lowest_states(h, k: int = 1, method: str = "auto") -> tuple[np.ndarray, np.ndarray]:
    """
    Lowest eigenpairs of a Hermitian matrix.

    Args:
        h: Dense or sparse Hermitian matrix
        k: Number of eigenpairs
        method: "dense", "sparse" (Lanczos) or "auto" (dense up to dimension 4096)

    Returns:
        Tuple (energies ascending, vectors as columns)
    """
    dim = h.shape[0]
    if method not in ("auto", "dense", "sparse"):
        raise ValueError(f"Unknown eigensolver method {method!r}")

    if method == "dense" or (method == "auto" and dim <= DENSE_LIMIT) or dim < 3:
        dense = h.toarray() if sp.issparse(h) else np.asarray(h)
        energies, vectors = np.linalg.eigh(dense)
        return energies[:k], vectors[:, :k]

    k = min(k, dim - 2)
    v0 = np.ones(dim, dtype=h.dtype) / math.sqrt(dim)
    try:
        energies, vectors = spla.eigsh(h, k=k, which="SA", tol=EIGSH_TOL, maxiter=EIGSH_MAXITER, v0=v0)
    except spla.ArpackNoConvergence as exc:
        residual = math.inf
        if len(exc.eigenvalues):
            residual = float(np.linalg.norm(h @ exc.eigenvectors[:, 0] - exc.eigenvalues[0] * exc.eigenvectors[:, 0]))
        raise EigenSolverError("Lanczos ground-state search did not converge", residual) from exc

    order = np.argsort(energies)
    return energies[order], vectors[:, order]


def ground_state(h, method: str = "auto") -> tuple[float, np.ndarray]:
    """Lowest eigenvalue and its normalized eigenvector."""
    energies, vectors = lowest_states(h, 1, method)
    vector = vectors[:, 0]
    return float(energies[0]), vector / np.linalg.norm(vector)


# ===== Observables =====

def observables(state: np.ndarray, cfg: EDConfig, energy: Optional[float] = None) -> EDResult:
    """
    Expectation values of a normalized state of the truncated model.

    Args:
        state: State vector in the ordering of build_full_hamiltonian
        cfg: The configuration the state belongs to
        energy: Known energy; computed as <H> when omitted

    Returns:
        EDResult (cutoff_converged is False until a cutoff study sets it)
    """
    ops = _operators(cfg)
    psi = np.asarray(state, dtype=np.complex128)
    psi = psi / np.linalg.norm(psi)

    def expect(op) -> complex:
        return complex(np.vdot(psi, op @ psi))

    n = cfg.params.n_sites
    sz_psi = [sz @ psi for sz in ops.sz]
    zz = np.array([[np.real(np.vdot(sz_psi[j], sz_psi[l])) for l in range(n)] for j in range(n)])
    np.fill_diagonal(zz, 1.0)

    displacement = np.array([expect(a) for a in ops.a])
    occupation = np.array([np.real(expect(number)) for number in ops.number])

    if energy is None:
        energy = float(np.real(np.vdot(psi, build_full_hamiltonian(cfg) @ psi)))

    return EDResult(
        energy=float(energy),
        sx_mean=np.array([np.real(expect(sx)) for sx in ops.sx]),
        sz_mean=np.array([np.real(expect(sz)) for sz in ops.sz]),
        zz_corr=zz,
        boson_occupation=occupation,
        boson_displacement=displacement,
        cutoff_converged=False,
        cutoff_used=cfg.fock_cutoff,
        parity=float(np.real(expect(parity_operator(cfg)))),
    )


def solve_exact(cfg: EDConfig, method: str = "auto") -> EDResult:
    """
    Ground state and observables at a fixed cutoff.

    A ground manifold degenerate within 1e-8 is rotated onto its even-parity
    state, so the result respects the parity symmetry.
    """
    h = build_full_hamiltonian(cfg)
    n_candidates = min(2 ** cfg.params.n_sites + 1, h.shape[0])
    energies, vectors = lowest_states(h, n_candidates, method)
    manifold = vectors[:, energies < energies[0] + DEGENERACY_WINDOW]
    state = manifold[:, 0]

    if manifold.shape[1] > 1:
        projected = manifold.conj().T @ (parity_operator(cfg) @ manifold)
        _, rotation = np.linalg.eigh(0.5 * (projected + projected.conj().T))
        state = manifold @ rotation[:, -1]
        logger.debug(f"Ground manifold of size {manifold.shape[1]} symmetrized onto even parity")

    result = observables(state, cfg, energy=float(energies[0]))
    return replace(result, degeneracy=int(manifold.shape[1]))


# ===== Cutoff studies =====

def cutoff_convergence(cfg: EDConfig, cutoffs: list[int], method: str = "auto") -> CutoffTable:
    """
    Ground energy for each Fock cutoff.

    Args:
        cfg: Base configuration (its cutoff is ignored)
        cutoffs: Strictly ascending cutoffs

    Returns:
        CutoffTable; converged when the last two energies differ by less than 1e-8
    """
    if not cutoffs or any(b <= a for a, b in zip(cutoffs, cutoffs[1:])):
        raise InvalidParameters("cutoffs must be a non-empty ascending list")

    rows = []
    for cutoff in cutoffs:
        energy, _ = ground_state(build_full_hamiltonian(cfg.with_cutoff(cutoff)), method)
        rows.append((cutoff, energy))
        logger.debug(f"n_max={cutoff}: E0={energy:.14g}")

    converged = len(rows) >= 2 and abs(rows[-1][1] - rows[-2][1]) < CUTOFF_TOL
    return CutoffTable(rows=rows, converged=converged)


def converge_cutoff(cfg: EDConfig, step: int = 2, ceiling: Optional[int] = None) -> EDResult:
    """
    Raise the Fock cutoff from cfg.fock_cutoff until the ground energy settles.

    Args:
        cfg: Starting configuration
        step: Cutoff increment
        ceiling: Largest cutoff tried (defaults to JT_MAX_FOCK_CUTOFF)

    Returns:
        EDResult at the last cutoff, with the cutoff table attached
    """
    ceiling = get_config().max_fock_cutoff if ceiling is None else ceiling
    rows: list[tuple[int, float]] = []
    result: Optional[EDResult] = None
    converged = False
    cutoff = cfg.fock_cutoff

    while True:
        current = cfg.with_cutoff(cutoff)
        try:
            current.validate()
        except HilbertSpaceTooLarge:
            if result is None:
                raise
            logger.warning(f"Cutoff escalation stopped at n_max={rows[-1][0]}: dimension guard")
            break

        result = solve_exact(current)
        rows.append((cutoff, result.energy))
        if len(rows) >= 2 and abs(rows[-1][1] - rows[-2][1]) < CUTOFF_TOL:
            converged = True
            break
        if cutoff + step > ceiling:
            break
        cutoff += step

    table = CutoffTable(rows=rows, converged=converged)
    if not converged:
        logger.warning(f"Ground energy not converged up to n_max={rows[-1][0]}")
    return replace(result, cutoff_converged=converged, cutoff_used=rows[-1][0], cutoff_table=table)


# ===== Mean-field comparison =====

@dataclass(frozen=True)
class ComparisonReport:
    """Exact ground state against the mean-field and Gaussian predictions."""

    params: ModelParams
    energy_exact: float
    energy_meanfield: float
    variational_gap: float
    sx_exact: float
    sx_meanfield: float
    zz_exact: float
    zz_meanfield: float
    occupation_exact: np.ndarray
    occupation_meanfield: np.ndarray
    max_abs_sz: float
    max_abs_displacement: float
    cutoff_used: int
    phase: str
    zero_point_energy: Optional[float] = None
    f_spin_exact: Optional[float] = None
    f_spin_gaussian: Optional[float] = None

    @property
    def spin_wave_discrepancy(self) -> Optional[float]:
        """Relative deviation of the exact spin fluctuation from the Gaussian one."""
        if self.f_spin_exact is None or self.f_spin_gaussian is None or self.f_spin_gaussian == 0:
            return None
        return abs(self.f_spin_exact - self.f_spin_gaussian) / self.f_spin_gaussian

    def as_row(self) -> dict:
        row = dict(self.params.as_dict())
        row.update({
            "energy_exact": self.energy_exact,
            "energy_meanfield": self.energy_meanfield,
            "variational_gap": self.variational_gap,
            "zero_point_energy": self.zero_point_energy,
            "sx_exact": self.sx_exact,
            "sx_meanfield": self.sx_meanfield,
            "zz_exact": self.zz_exact,
            "zz_meanfield": self.zz_meanfield,
            "occupation_exact": float(np.sum(self.occupation_exact)),
            "occupation_meanfield": float(np.sum(self.occupation_meanfield)),
            "f_spin_exact": self.f_spin_exact,
            "f_spin_gaussian": self.f_spin_gaussian,
            "max_abs_sz": self.max_abs_sz,
            "max_abs_displacement": self.max_abs_displacement,
            "cutoff_used": self.cutoff_used,
            "phase": self.phase,
        })
        return row


def _offdiagonal_mean(matrix: np.ndarray) -> float:
    n = matrix.shape[0]
    if n < 2:
        return float("nan")
    return float((np.sum(matrix) - np.trace(matrix)) / (n * (n - 1)))


def _gaussian_prediction(params: ModelParams, modes: BosonModes, mf: MeanFieldSolution):
    """Zero-point energy and F_b, or (None, None) where the Gaussian theory breaks down."""
    try:
        normal = diagonalize_quadratic(build_gaussian_hamiltonian(modes, mf, params))
        zero_point = zero_point_energy(normal)
        if params.boundary is Boundary.PERIODIC:
            report = fluctuations_pbc(gaussian_spectrum_pbc(params, mf), params)
        else:
            report = fluctuations_general(normal)
    except ModelError as e:
        logger.info(f"No Gaussian prediction at {params.as_dict()}: {e}")
        return None, None
    f_spin = None if report.diverged else report.f_spin_total
    return zero_point, f_spin


def exact_vs_meanfield(cfg: EDConfig) -> ComparisonReport:
    """
    Compare the converged exact ground state with mean-field and spin-wave theory.

    Args:
        cfg: Starting configuration; the cutoff is escalated until converged

    Returns:
        ComparisonReport

    Raises:
        CutoffNotConverged: When the cutoff ceiling is hit first
    """
    exact = converge_cutoff(cfg)
    if not exact.cutoff_converged:
        raise CutoffNotConverged(exact.cutoff_table)

    params = cfg.params
    modes = _modes(cfg)
    mf = _meanfield(cfg, modes)
    cos_t = mf.cos_thetas
    zz_mf = np.outer(cos_t, cos_t)
    zero_point, f_gaussian = _gaussian_prediction(params, modes, mf)

    sx_exact = float(np.mean(exact.sx_mean))
    f_exact = None
    if mf.sin_theta != 0.0:
        f_exact = 0.5 * (1.0 - sx_exact / mf.sin_theta)

    return ComparisonReport(
        params=params,
        energy_exact=exact.energy,
        energy_meanfield=mf.energy,
        variational_gap=mf.energy - exact.energy,
        sx_exact=sx_exact,
        sx_meanfield=mf.sin_theta,
        zz_exact=_offdiagonal_mean(exact.zz_corr),
        zz_meanfield=_offdiagonal_mean(zz_mf),
        occupation_exact=exact.boson_occupation,
        occupation_meanfield=np.abs(mf.alphas) ** 2,
        max_abs_sz=float(np.max(np.abs(exact.sz_mean))),
        max_abs_displacement=float(np.max(np.abs(exact.boson_displacement))),
        cutoff_used=exact.cutoff_used,
        phase=mf.phase.value,
        zero_point_energy=zero_point,
        f_spin_exact=f_exact,
        f_spin_gaussian=f_gaussian,
    )
