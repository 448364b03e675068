"""
Validation runs: mean-field and spin-wave predictions against exact diagonalization.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from src.config import get_config
from src.model.oracle import ComparisonReport, EDConfig, exact_vs_meanfield
from src.sweeps.settings import ValidationSpec
from src.utils.formatting import format_validation_report
from src.utils.output_files import write_csv, write_metadata

logger = logging.getLogger(__name__)


VARIATIONAL_TOL = 1e-10
ZERO_FIELD_TOL = 1e-8
PARITY_TOL = 1e-10
EXACT_TOL = 1e-12

REPORT_COLUMNS = [
    "n_sites", "omega0", "t", "g", "omega", "boundary", "phase", "cutoff_used",
    "energy_exact", "energy_meanfield", "variational_gap", "zero_point_energy",
    "sx_exact", "sx_meanfield", "zz_exact", "zz_meanfield",
    "occupation_exact", "occupation_meanfield",
    "f_spin_exact", "f_spin_gaussian", "max_abs_sz", "max_abs_displacement",
]

TREND_COLUMNS = ["g", "f_spin_exact", "f_spin_gaussian", "discrepancy"]


@dataclass
class ValidationOutcome:
    """Invariant checks of one validation run."""

    checks: list[tuple[str, bool, str]]
    reports: list[ComparisonReport]
    trend: list[ComparisonReport]
    files: list[Path] = field(default_factory=list)
    text: str = ""

    @property
    def passed(self) -> bool:
        return all(passed for _, passed, _ in self.checks)


def _check_variational(reports: list[ComparisonReport]) -> tuple[str, bool, str]:
    worst = min(r.variational_gap for r in reports)
    return "variational E_MF >= E_exact", worst >= -VARIATIONAL_TOL, f"min gap {worst:.3e}"


def _check_zero_field(reports: list[ComparisonReport]) -> tuple[str, bool, str]:
    rows = [r for r in reports if r.params.omega == 0.0]
    if not rows:
        return "zero field E_MF = E_exact", True, "no omega = 0 points"
    worst = max(abs(r.variational_gap) for r in rows)
    return "zero field E_MF = E_exact", worst <= ZERO_FIELD_TOL, f"max |gap| {worst:.3e} over {len(rows)} points"


def _check_parity(reports: list[ComparisonReport]) -> tuple[str, bool, str]:
    worst = max(max(r.max_abs_sz, r.max_abs_displacement) for r in reports)
    return "parity <sigma^z> = <a> = 0", worst < PARITY_TOL, f"max {worst:.3e}"


def _check_decoupled(reports: list[ComparisonReport]) -> tuple[str, bool, str]:
    rows = [r for r in reports if r.params.g == 0.0]
    if not rows:
        return "g = 0 exact agreement", True, "no g = 0 points"
    failures = 0
    for r in rows:
        deviations = [abs(r.variational_gap)]
        # at omega = 0 the spin ground manifold is degenerate and only the energy is fixed
        if r.params.omega > 0:
            deviations.append(abs(r.sx_exact - r.sx_meanfield))
            deviations.append(float(r.occupation_exact.sum()))
            if r.params.n_sites > 1:
                deviations.append(abs(r.zz_exact - r.zz_meanfield))
        if max(deviations) > EXACT_TOL:
            failures += 1
    return "g = 0 exact agreement", failures == 0, f"{len(rows) - failures}/{len(rows)} points agree"


def _check_trend(trend: list[ComparisonReport]) -> tuple[str, bool, str]:
    discrepancies = [r.spin_wave_discrepancy for r in trend]
    if len(discrepancies) < 2 or any(d is None for d in discrepancies):
        return "spin-wave discrepancy decreases with g", False, "trend could not be evaluated"
    ok = all(b < a for a, b in zip(discrepancies, discrepancies[1:]))
    shown = ", ".join(f"{d:.3e}" for d in discrepancies)
    return "spin-wave discrepancy decreases with g", ok, shown


def validate(spec: ValidationSpec, out: Optional[Path] = None) -> ValidationOutcome:
    """
    Run the exact-vs-mean-field comparison over the grid and the trend points.

    Writes ``validation.csv``, ``trend.csv`` and ``validation_report.txt``.

    Args:
        spec: Validation pack
        out: Output directory (defaults to the pack's out path)

    Returns:
        ValidationOutcome; ``passed`` is False when any invariant fails
    """
    out = Path(out) if out is not None else spec.out_path
    points = spec.grid()
    logger.info(f"Validating {len(points)} grid points with N={spec.base.n_sites}")

    reports = []
    for params in points:
        report = exact_vs_meanfield(EDConfig(params=params, fock_cutoff=spec.fock_cutoff, basis=spec.basis))
        logger.debug(f"{params.as_dict()}: gap={report.variational_gap:.3e}")
        reports.append(report)

    trend = [
        exact_vs_meanfield(EDConfig(params=params, fock_cutoff=spec.fock_cutoff, basis=spec.basis))
        for params in spec.trend_points()
    ]

    checks = [
        _check_variational(reports),
        _check_zero_field(reports),
        _check_parity(reports),
        _check_decoupled(reports),
        _check_trend(trend),
    ]

    outcome = ValidationOutcome(checks=checks, reports=reports, trend=trend)
    outcome.text = format_validation_report(
        checks,
        len(reports),
        [(r.params.g, r.spin_wave_discrepancy) for r in trend],
    )

    digits = get_config().float_digits
    meta = {"n_points": len(reports), "basis": spec.basis.value, "passed": outcome.passed}
    grid_csv = write_csv(out / "validation.csv", REPORT_COLUMNS, [r.as_row() for r in reports], digits)
    trend_csv = write_csv(
        out / "trend.csv",
        TREND_COLUMNS,
        [
            {"g": r.params.g, "f_spin_exact": r.f_spin_exact, "f_spin_gaussian": r.f_spin_gaussian,
             "discrepancy": r.spin_wave_discrepancy}
            for r in trend
        ],
        digits,
    )
    for path in (grid_csv, trend_csv):
        write_metadata(path, spec.source_hash, meta)

    report_path = out / "validation_report.txt"
    report_path.write_text(outcome.text + "\n")
    outcome.files = [grid_csv, trend_csv, report_path]

    if outcome.passed:
        logger.info("Validation passed")
    else:
        logger.warning("Validation failed: " + ", ".join(name for name, ok, _ in checks if not ok))
    return outcome
