"""
Exceptions raised when a parameter set leaves the physically valid regime.
"""

from typing import Any, Optional


class ModelError(Exception):
    """Base class for physics-regime failures."""


class InvalidParameters(ModelError, ValueError):
    """Model parameters violate their documented ranges."""


class NonPositiveSpectrum(ModelError):
    """A collective boson mode has non-positive energy."""

    def __init__(self, energies: Any):
        self.energies = energies
        super().__init__(f"Collective mode spectrum is not strictly positive (min = {min(energies):.6g})")


class NonConvergence(ModelError):
    """An iterative solver exhausted its budget."""

    def __init__(self, message: str, residual: float, solution: Optional[Any] = None):
        self.residual = residual
        self.solution = solution
        super().__init__(f"{message} (residual = {residual:.3e})")


class GaplessMode(ModelError):
    """A squared Bogoliubov energy is negative: the mean-field input is not a minimum."""


class UndefinedGap(ModelError):
    """The rotated-frame spin gap is undefined (zero transverse field)."""


class NotAMinimum(ModelError):
    """A quadrature form is indefinite beyond tolerance."""

    def __init__(self, lowest_eigenvalue: float):
        self.lowest_eigenvalue = lowest_eigenvalue
        super().__init__(f"Quadratic form is indefinite (lowest eigenvalue = {lowest_eigenvalue:.3e})")


class NoBracket(ModelError):
    """A root search range does not bracket a sign change."""


class HilbertSpaceTooLarge(ModelError):
    """Exact diagonalization would exceed the dimension guard."""


class EigenSolverError(ModelError):
    """The iterative eigensolver did not converge."""

    def __init__(self, message: str, residual: float):
        self.residual = residual
        super().__init__(f"{message} (residual = {residual:.3e})")


class CutoffNotConverged(ModelError):
    """Ground energy did not settle before the Fock cutoff ceiling."""

    def __init__(self, table: Any):
        self.table = table
        super().__init__(f"Fock cutoff did not converge up to n_max = {table.rows[-1][0]}")
