"""
Gaussian (spin-wave) fluctuations around the mean-field solution.

Two routes are provided. The periodic route evaluates the per-mode 2x2
quadrature problem in closed form. The general route assembles the full
2N x 2N quadrature form (unit mass, X-X couplings), diagonalizes it
orthogonally and rebuilds the Bogoliubov coefficients from the X, P
rescalings of each mode.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from src.model.errors import GaplessMode, InvalidParameters, NotAMinimum, UndefinedGap
from src.model.lattice import Boundary, BosonModes, ModelParams, plane_wave_modes
from src.model.meanfield import MeanFieldSolution, Phase, critical_coupling, solve_pbc

logger = logging.getLogger(__name__)


ZERO_ENERGY_FLOOR = 1e-12
ZERO_EIGEN_TOL = 1e-10
NEGATIVE_TOL = 1e-10
COMMUTATION_TOL = 1e-10
ZERO_MODE_WEIGHT = 1e-8
DEFAULT_VALIDITY_THRESHOLD = 0.1


# ===== Reports =====

@dataclass(frozen=True)
class FluctuationReport:
    """
    Per-atom fluctuation variances, total and resolved by collective mode.

    Divergent entries are +inf; the zero mode is column 0 of the mode basis.
    """

    f_spin_total: float
    f_boson_total: float
    per_mode_spin: np.ndarray
    per_mode_boson: np.ndarray
    zero_mode_spin: float
    zero_mode_boson: float
    rest_spin: float
    rest_boson: float
    diverged: bool = False

    @classmethod
    def from_modes(cls, per_mode_spin: np.ndarray, per_mode_boson: np.ndarray) -> "FluctuationReport":
        spin = np.asarray(per_mode_spin, dtype=float)
        boson = np.asarray(per_mode_boson, dtype=float)
        spin.setflags(write=False)
        boson.setflags(write=False)
        return cls(
            f_spin_total=float(np.sum(spin)),
            f_boson_total=float(np.sum(boson)),
            per_mode_spin=spin,
            per_mode_boson=boson,
            zero_mode_spin=float(spin[0]),
            zero_mode_boson=float(boson[0]),
            rest_spin=float(np.sum(spin[1:])),
            rest_boson=float(np.sum(boson[1:])),
            diverged=bool(np.any(np.isinf(spin)) or np.any(np.isinf(boson))),
        )

    @classmethod
    def zeros(cls, n_modes: int) -> "FluctuationReport":
        return cls.from_modes(np.zeros(n_modes), np.zeros(n_modes))

    def is_gaussian_valid(self, threshold: float = DEFAULT_VALIDITY_THRESHOLD) -> bool:
        """Self-consistency of the linearized spin bosons: F_b well below one."""
        return (not self.diverged) and self.f_spin_total < threshold


def mode_decomposition(report: FluctuationReport) -> tuple[tuple[float, float], tuple[float, float]]:
    """
    Split the totals into the uniform-mode part and the rest.

    Returns:
        ((zero_spin, zero_boson), (rest_spin, rest_boson))
    """
    return (
        (report.zero_mode_spin, report.zero_mode_boson),
        (report.rest_spin, report.rest_boson),
    )


# ===== Periodic closed form =====

@dataclass(frozen=True)
class GaussianSpectrum:
    """Per-mode Bogoliubov branches of a periodic chain."""

    e_plus: np.ndarray
    e_minus: np.ndarray
    u: np.ndarray
    v_norm: np.ndarray
    delta: float
    mode_energies: np.ndarray
    params: ModelParams
    sin_theta: float

    @property
    def n_modes(self) -> int:
        return len(self.e_plus)

    def coupling_terms(self) -> np.ndarray:
        """2 g sqrt(omega w_n |sin theta|) per mode."""
        p = self.params
        return 2.0 * p.g * np.sqrt(p.omega * self.mode_energies * abs(self.sin_theta))

    def k_matrix(self, n: int) -> np.ndarray:
        """Quadrature matrix K^(n) of mode n."""
        k = self.coupling_terms()[n]
        return np.array([
            [self.mode_energies[n] ** 2, -k],
            [-k, self.delta**2],
        ])


def site_gaps(modes: BosonModes, mf: MeanFieldSolution, params: ModelParams) -> np.ndarray:
    """Delta_j = -omega sin(theta_j) + 2 g cos(theta_j) sum_n (M_{j,n} alpha_n + c.c.)."""
    field_ = 2.0 * np.real(modes.amplitudes @ mf.alphas)
    return -params.omega * mf.sin_thetas + 2.0 * params.g * mf.cos_thetas * field_


def _quadrature_blocks(params: ModelParams, w: np.ndarray, abs_sin: float) -> tuple[float, np.ndarray]:
    """Spin gap omega/|sin theta| and the off-diagonal entries of every K^(n)."""
    gap = params.omega / abs_sin
    return gap, 2.0 * params.g * np.sqrt(params.omega * w * abs_sin)


def _branches_squared(w: np.ndarray, gap: float, k: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (E+^2, E-^2) of K^(n) = [[w_n^2, -k_n], [-k_n, gap^2]]; E-^2 keeps its sign."""
    discriminant = np.sqrt(4.0 * k**2 + (gap**2 - w**2) ** 2)
    e_plus_sq = 0.5 * (gap**2 + w**2 + discriminant)
    # lower branch from the determinant to avoid cancellation
    e_minus_sq = (w**2 * gap**2 - k**2) / e_plus_sq
    return e_plus_sq, e_minus_sq


def gaussian_spectrum_pbc(params: ModelParams, mf: MeanFieldSolution) -> GaussianSpectrum:
    """
    Closed-form Bogoliubov branches for a periodic chain.

    Args:
        params: Periodic model parameters
        mf: Mean-field solution from solve_pbc

    Returns:
        GaussianSpectrum with E+, E-, U^(n) and v_n for every plane wave n
    """
    params.validate()
    if params.boundary is not Boundary.PERIODIC:
        raise InvalidParameters("gaussian_spectrum_pbc requires periodic boundaries")
    if params.omega == 0.0:
        raise UndefinedGap("The rotated-frame spin gap needs a non-zero transverse field")

    abs_sin = abs(mf.sin_theta)
    if abs_sin == 0.0:
        raise UndefinedGap("sin(theta) = 0: spin gap omega/|sin(theta)| is undefined")

    modes = plane_wave_modes(params)
    w = modes.energies
    gap, k = _quadrature_blocks(params, w, abs_sin)
    e_plus_sq, e_minus_sq = _branches_squared(w, gap, k)
    if mf.phase is Phase.CRITICAL:
        e_minus_sq[0] = 0.0

    if np.any(e_minus_sq < -NEGATIVE_TOL):
        n_bad = int(np.argmin(e_minus_sq))
        raise GaplessMode(
            f"E-^2 = {e_minus_sq[n_bad]:.3e} < 0 at mode {n_bad}: mean-field input is not a minimum"
        )

    e_plus = np.sqrt(e_plus_sq)
    e_minus = np.sqrt(np.clip(e_minus_sq, 0.0, None))
    e_minus[e_minus < ZERO_ENERGY_FLOOR] = 0.0

    v_sq = (e_minus**2 - gap**2) ** 2 + k**2
    v_norm = np.sqrt(v_sq)
    u = np.zeros((len(w), 2, 2))
    for n in range(len(w)):
        if v_norm[n] == 0.0:
            # decoupled mode with w_n >= gap: K^(n) is already diagonal
            u[n] = np.eye(2)
            continue
        u[n] = np.array([
            [-k[n], e_minus[n] ** 2 - gap**2],
            [e_plus[n] ** 2 - w[n] ** 2, -k[n]],
        ]) / v_norm[n]

    direct = site_gaps(modes, mf, params)
    if np.max(np.abs(direct - gap)) > 1e-10 * max(1.0, gap):
        logger.warning(f"Spin gap {gap:.12g} differs from direct Delta_j evaluation {direct[0]:.12g}")

    return GaussianSpectrum(
        e_plus=e_plus,
        e_minus=e_minus,
        u=u,
        v_norm=v_norm,
        delta=gap,
        mode_energies=w.copy(),
        params=params,
        sin_theta=mf.sin_theta,
    )


def fluctuations_pbc(spectrum: GaussianSpectrum, params: ModelParams) -> FluctuationReport:
    """
    Closed-form per-mode phonon and spin-wave variances of a periodic chain.

    Zero lower branches make the corresponding mode terms +inf and set the
    diverged flag; the other modes stay finite.

    Args:
        spectrum: Output of gaussian_spectrum_pbc
        params: The same model parameters

    Returns:
        FluctuationReport resolved by plane-wave index
    """
    n_sites = params.n_sites
    if params.g == 0.0:
        return FluctuationReport.zeros(spectrum.n_modes)

    w = spectrum.mode_energies
    ep = spectrum.e_plus
    em = spectrum.e_minus
    gap = spectrum.delta
    abs_sin = abs(spectrum.sin_theta)
    omega, g = params.omega, params.g
    v_sq = spectrum.v_norm**2
    zero = em <= ZERO_ENERGY_FLOOR
    safe_em = np.where(zero, 1.0, em)

    boson = (
        g**2 * omega * abs_sin * (w - ep) ** 2 / ep
        + 0.25 * (em**2 - gap**2) ** 2 * (safe_em - w) ** 2 / (w * safe_em)
    ) / (n_sites * v_sq)
    spin = (
        g**2 * w * abs_sin**2 * (gap - safe_em) ** 2 / safe_em
        + 0.25 * (ep**2 - w**2) ** 2 * (gap - ep) ** 2 / (ep * gap)
    ) / (n_sites * v_sq)

    boson[zero] = np.inf
    spin[zero] = np.inf
    if np.any(zero):
        logger.info(f"Gapless modes {np.flatnonzero(zero).tolist()}: fluctuations diverge")
    return FluctuationReport.from_modes(spin, boson)


def soft_mode_gap_squared(params: ModelParams, g: float) -> float:
    """
    Signed E-,0^2 of the uniform mode around the disordered reference state.

    The K^(0) block is built from the plane-wave modes of the given chain
    with sin(theta) = -1, the same path gaussian_spectrum_pbc takes.
    Positive below the critical coupling, negative above it.
    """
    current = params.with_changes(g=g).validate()
    if current.boundary is not Boundary.PERIODIC:
        raise InvalidParameters("The soft-mode gap is defined for periodic chains")
    modes = plane_wave_modes(current)
    gap, k = _quadrature_blocks(current, modes.energies, 1.0)
    _, e_minus_sq = _branches_squared(modes.energies, gap, k)
    uniform = int(np.flatnonzero(modes.mode_index == 0)[0])
    return float(e_minus_sq[uniform])


def predicted_sx(mf: MeanFieldSolution, report: FluctuationReport) -> float:
    """Spin-wave estimate of the site-averaged <sigma^x> = sin(theta)(1 - 2 F_b)."""
    return mf.sin_theta * (1.0 - 2.0 * report.f_spin_total)


# ===== General quadrature route =====

@dataclass(frozen=True)
class QuadraticForm:
    """
    H = 1/2 P^T P + 1/2 X^T k X over N boson and N spin coordinates.

    Boson coordinates live in the real mode basis ``boson_basis`` (site x mode);
    ``scales`` holds the frequency used to define each X, P pair.
    """

    k: np.ndarray
    labels: tuple[str, ...]
    scales: np.ndarray
    boson_basis: np.ndarray

    @property
    def n_sites(self) -> int:
        return len(self.labels) // 2


@dataclass(frozen=True)
class NormalModes:
    """
    Normal modes of a quadratic form and the generalized Bogoliubov blocks.

    Rows of ``w``/``v`` are the original coordinates, columns the normal modes:
    a_mu = sum_m (w[mu, m] c_m + v[mu, m] c_m^dagger).
    """

    energies: np.ndarray
    vectors: np.ndarray
    w: np.ndarray
    v: np.ndarray
    zero_modes: np.ndarray
    form: QuadraticForm = field(repr=False)


def _real_mode_basis(modes: BosonModes) -> tuple[np.ndarray, np.ndarray]:
    """
    Real orthonormal basis of the boson sector, column k matching mode column k.

    Plane-wave pairs (n, N-n) become cosine and sine modes.
    """
    m = modes.amplitudes
    n = m.shape[0]
    if np.max(np.abs(m.imag)) < 1e-12:
        return m.real.copy(), modes.energies.copy()

    if modes.boundary is Boundary.PERIODIC:
        column_of = {int(idx): col for col, idx in enumerate(modes.mode_index)}
        basis = np.zeros((n, n))
        for col, idx in enumerate(modes.mode_index):
            partner = (-int(idx)) % n
            if partner == idx:
                basis[:, col] = m[:, col].real
            elif idx < partner and partner in column_of:
                other = column_of[partner]
                cos_mode = (m[:, col] + m[:, other]) / math.sqrt(2.0)
                sin_mode = 1j * (m[:, col] - m[:, other]) / math.sqrt(2.0)
                basis[:, col] = cos_mode.real
                basis[:, other] = sin_mode.real
        if np.allclose(basis.T @ basis, np.eye(n), atol=1e-10):
            return basis, modes.energies.copy()

    logger.warning("Complex mode amplitudes without plane-wave pairing; using a real eigenbasis")
    energies, basis = np.linalg.eigh(modes.site_hamiltonian().real)
    return basis, energies


def build_gaussian_hamiltonian(
    modes: BosonModes,
    mf: MeanFieldSolution,
    params: ModelParams,
) -> QuadraticForm:
    """
    Quadrature form of the Gaussian fluctuation Hamiltonian on any lattice.

    In the real boson mode basis O the coupling g sin(theta_j)(delta a_j + h.c.)(b_j + h.c.)
    becomes 2 g sin(theta_j) sqrt(w_n Delta_j) O_{j,n} X_{a,n} X_{b,j}.

    Args:
        modes: Collective modes
        mf: Converged mean-field solution (site-dependent angles allowed)
        params: Model parameters

    Returns:
        QuadraticForm with boson coordinates first, then spin coordinates
    """
    n = params.n_sites
    if mf.n_sites != n or modes.n_modes != n:
        raise InvalidParameters("Modes, mean-field solution and parameters disagree on N")

    gaps = site_gaps(modes, mf, params)
    if np.any(gaps <= 0):
        raise UndefinedGap(f"Non-positive site gap Delta_j (min = {np.min(gaps):.3e})")

    basis, w = _real_mode_basis(modes)
    k = np.zeros((2 * n, 2 * n))
    k[:n, :n] = np.diag(w**2)
    k[n:, n:] = np.diag(gaps**2)
    # off[n, j] = 2 g sin(theta_j) sqrt(w_n Delta_j) O_{j,n}
    off = 2.0 * params.g * basis.T * (mf.sin_thetas * np.sqrt(gaps))[None, :] * np.sqrt(w)[:, None]
    k[:n, n:] = off
    k[n:, :n] = off.T

    lowest = float(np.linalg.eigvalsh(k)[0])
    if lowest < -NEGATIVE_TOL:
        raise NotAMinimum(lowest)

    labels = tuple(f"a{i}" for i in range(n)) + tuple(f"b{j}" for j in range(n))
    return QuadraticForm(k=k, labels=labels, scales=np.concatenate([w, gaps]), boson_basis=basis)


def diagonalize_quadratic(q: QuadraticForm) -> NormalModes:
    """
    Orthogonal normal-mode decomposition of a unit-mass quadrature form.

    With k = Y diag(E^2) Y^T and X_mu = sqrt(1/2r) (a + a^dagger), the ladder
    operators expand as w = Y (sqrt(r/E) + sqrt(E/r)) / 2 and
    v = Y (sqrt(r/E) - sqrt(E/r)) / 2. Modes with k-eigenvalue below 1e-10
    are flagged as zero modes and given no coefficients.

    Args:
        q: Positive semidefinite quadratic form

    Returns:
        NormalModes sorted by ascending energy
    """
    eigenvalues, vectors = np.linalg.eigh(q.k)
    if eigenvalues[0] < -NEGATIVE_TOL:
        raise NotAMinimum(float(eigenvalues[0]))

    zero = eigenvalues < ZERO_EIGEN_TOL
    energies = np.sqrt(np.clip(eigenvalues, 0.0, None))
    safe = np.where(zero, 1.0, energies)

    ratio = np.sqrt(q.scales[:, None] / safe[None, :])
    w = 0.5 * vectors * (ratio + 1.0 / ratio)
    v = 0.5 * vectors * (ratio - 1.0 / ratio)
    w[:, zero] = 0.0
    v[:, zero] = 0.0

    if np.any(zero):
        logger.info(f"{int(np.sum(zero))} zero mode(s) flagged in the quadratic form")
    else:
        commutator = w @ w.T - v @ v.T
        error = float(np.max(np.abs(commutator - np.eye(len(energies)))))
        if error > COMMUTATION_TOL * max(1.0, float(np.max(w**2))):
            raise RuntimeError(f"Bogoliubov transformation breaks commutation relations (error {error:.2e})")

    return NormalModes(energies=energies, vectors=vectors, w=w, v=v, zero_modes=zero, form=q)


def fluctuations_general(normal: NormalModes) -> FluctuationReport:
    """
    Per-atom variances F = (1/N) sum |V|^2 from the Bogoliubov blocks.

    Per-mode entries are resolved in the real boson mode basis; the spin
    fluctuation bosons are projected onto the same basis. Entries with weight
    on a zero mode are +inf.

    Args:
        normal: Output of diagonalize_quadratic

    Returns:
        FluctuationReport
    """
    q = normal.form
    n = q.n_sites
    basis = q.boson_basis

    v_boson = normal.v[:n]
    v_spin = basis.T @ normal.v[n:]
    per_mode_boson = np.sum(np.abs(v_boson) ** 2, axis=1) / n
    per_mode_spin = np.sum(np.abs(v_spin) ** 2, axis=1) / n

    for m in np.flatnonzero(normal.zero_modes):
        boson_weight = np.abs(normal.vectors[:n, m])
        spin_weight = np.abs(basis.T @ normal.vectors[n:, m])
        per_mode_boson[boson_weight > ZERO_MODE_WEIGHT] = np.inf
        per_mode_spin[spin_weight > ZERO_MODE_WEIGHT] = np.inf

    return FluctuationReport.from_modes(per_mode_spin, per_mode_boson)


def zero_point_energy(normal: NormalModes) -> float:
    """Vacuum energy of the Gaussian Hamiltonian relative to its normal-ordered form."""
    return 0.5 * float(np.sum(normal.energies)) - 0.5 * float(np.sum(normal.form.scales))


# ===== Critical scaling =====

@dataclass(frozen=True)
class LogFit:
    """Least-squares fit S(N) = slope * log N + intercept."""

    slope: float
    intercept: float
    residual: float
    relative_residual: float
    n_values: tuple[int, ...]
    values: tuple[float, ...]


def critical_sum(params: ModelParams, quantity: str = "inverse_gap") -> float:
    """
    Contribution of the non-uniform modes at one chain length.

    Args:
        params: Periodic model parameters
        quantity: "inverse_gap" for (1/N) sum_{n != 0} 1/E-,n, or "rest_spin" / "rest_boson"
    """
    mf = solve_pbc(params)
    spectrum = gaussian_spectrum_pbc(params, mf)
    if quantity == "inverse_gap":
        return float(np.sum(1.0 / spectrum.e_minus[1:]) / params.n_sites)
    report = fluctuations_pbc(spectrum, params)
    if quantity == "rest_spin":
        return report.rest_spin
    if quantity == "rest_boson":
        return report.rest_boson
    raise InvalidParameters(f"Unknown critical quantity {quantity!r}")


def log_divergence_fit(
    params: ModelParams,
    n_list: Sequence[int],
    quantity: str = "inverse_gap",
) -> LogFit:
    """
    Fit the non-uniform critical fluctuations against log N.

    Args:
        params: Periodic parameters at g = g_c (n_sites is ignored)
        n_list: At least four ascending chain lengths
        quantity: See critical_sum

    Returns:
        LogFit with the maximum deviation, absolute and relative to the data range
    """
    g_c = critical_coupling(params)
    if abs(params.g - g_c) > 1e-10 * max(1.0, g_c):
        raise InvalidParameters(
            f"Logarithmic scaling holds only at the critical coupling g_c = {g_c:.10g}, got g = {params.g}"
        )
    n_values = [int(n) for n in n_list]
    if len(n_values) < 4 or any(b <= a for a, b in zip(n_values, n_values[1:])):
        raise InvalidParameters("n_list must hold at least four strictly ascending values")

    values = np.array([critical_sum(params.with_changes(n_sites=n), quantity) for n in n_values])
    logs = np.log(np.array(n_values, dtype=float))
    slope, intercept = np.polyfit(logs, values, 1)
    deviation = float(np.max(np.abs(values - (slope * logs + intercept))))
    span = float(np.max(values) - np.min(values))
    return LogFit(
        slope=float(slope),
        intercept=float(intercept),
        residual=deviation,
        relative_residual=deviation / span if span > 0 else math.inf,
        n_values=tuple(n_values),
        values=tuple(float(x) for x in values),
    )
