"""
Text formatting for CSV cells and console reports.
"""

import math
from enum import Enum
from typing import Any, Optional

import numpy as np


def format_float(value: float, digits: int = 17) -> str:
    """
    Render a float so that it round-trips.

    Args:
        value: Number to format
        digits: Significant digits

    Returns:
        "%.<digits>g" text, or the literals inf, -inf and nan
    """
    value = float(value)
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return f"{value:.{digits}g}"


def format_cell(value: Any, digits: int = 17) -> str:
    """
    Render one CSV cell.

    Args:
        value: Cell value (None, bool, int, float, Enum or text)
        digits: Significant digits for floats

    Returns:
        Cell text
    """
    if value is None:
        return ""
    if isinstance(value, Enum):
        return str(value.value)
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format_float(value, digits)
    return str(value)


def format_critical_report(
    estimate: float,
    closed_form: float,
    omega: float,
    omega0: float,
) -> str:
    """
    Format the result of a critical-coupling scan.

    Returns:
        Two-line report comparing bisection and closed form
    """
    lines = [
        f"Critical coupling (omega={omega:g}, omega0={omega0:g})",
        f"  bisection:   {estimate:.8f}",
        f"  closed form: {closed_form:.8f}  (sqrt(omega * omega0) / 2)",
    ]
    return "\n".join(lines)


def format_validation_report(
    checks: list[tuple[str, bool, str]],
    n_points: int,
    trend: Optional[list[tuple[float, Optional[float]]]] = None,
) -> str:
    """
    Format the outcome of a validation run.

    Args:
        checks: (name, passed, detail) for every invariant
        n_points: Number of grid points compared
        trend: Optional (g, relative discrepancy) pairs of the spin-wave trend

    Returns:
        Multi-line report ending with PASSED or FAILED
    """
    lines = [f"Validation over {n_points} grid points", ""]
    for name, passed, detail in checks:
        mark = "ok  " if passed else "FAIL"
        lines.append(f"[{mark}] {name}: {detail}")

    if trend:
        lines.append("")
        lines.append("Spin-wave discrepancy |F_exact - F_gauss| / F_gauss:")
        for i, (g, discrepancy) in enumerate(trend):
            prefix = "├─" if i < len(trend) - 1 else "└─"
            shown = "n/a" if discrepancy is None else f"{discrepancy:.4e}"
            lines.append(f"{prefix} g={g:g}: {shown}")

    lines.append("")
    lines.append("PASSED" if all(passed for _, passed, _ in checks) else "FAILED")
    return "\n".join(lines)


def format_sweep_summary(name: str, n_rows: int, n_diverged: int, files: list[str]) -> str:
    """One-paragraph summary of a finished sweep."""
    lines = [f"Sweep '{name}': {n_rows} points ({n_diverged} diverged)"]
    for path in files:
        lines.append(f"  • {path}")
    return "\n".join(lines)
