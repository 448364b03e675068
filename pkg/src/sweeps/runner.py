"""
Sweep evaluation and CSV emission.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from src.config import get_config
from src.model.lattice import Boundary, HoppingMatrix, ModelParams, boson_modes
from src.model.meanfield import MeanFieldSolution, solve_pbc, solve_self_consistent
from src.model.spinwave import (
    FluctuationReport,
    build_gaussian_hamiltonian,
    diagonalize_quadratic,
    fluctuations_general,
    fluctuations_pbc,
    gaussian_spectrum_pbc,
    zero_point_energy,
)
from src.sweeps.settings import Output, SweepConfig
from src.utils.output_files import write_csv, write_metadata

logger = logging.getLogger(__name__)


PARAM_COLUMNS = ["axis_name", "axis_value", "N", "omega", "omega0", "t", "g"]

COLUMNS = PARAM_COLUMNS + [
    "f_spin_total", "f_boson_total",
    "f_spin_zero", "f_boson_zero",
    "f_spin_rest", "f_boson_rest",
    "e_minus_0", "e_plus_0",
    "sin_theta", "phase",
    "boundary",
]

OUTPUT_COLUMNS = {
    Output.TOTAL: PARAM_COLUMNS + ["f_spin_total", "f_boson_total", "diverged", "gaussian_valid", "boundary"],
    Output.ZERO_MODE: PARAM_COLUMNS + ["f_spin_zero", "f_boson_zero", "boundary"],
    Output.REST: PARAM_COLUMNS + ["f_spin_rest", "f_boson_rest", "boundary"],
    Output.SPECTRUM: PARAM_COLUMNS + ["mode", "mode_energy", "e_minus", "e_plus", "normal_energy", "boundary"],
    Output.MEANFIELD: PARAM_COLUMNS + ["sin_theta", "cos_theta", "alpha_0", "energy", "phase", "zero_point_energy", "boundary"],
}


@dataclass
class PointResult:
    """Everything computed at one sweep point."""

    params: ModelParams
    axis_name: str
    axis_value: float
    meanfield: MeanFieldSolution
    report: FluctuationReport
    e_minus_0: float
    e_plus_0: float
    zero_point: Optional[float]
    spectrum_rows: list[dict] = field(default_factory=list)

    def param_row(self) -> dict:
        p = self.params
        return {
            "axis_name": self.axis_name,
            "axis_value": int(self.axis_value) if self.axis_name == "N" else float(self.axis_value),
            "N": p.n_sites,
            "omega": p.omega,
            "omega0": p.omega0,
            "t": p.t,
            "g": p.g,
            "boundary": p.boundary.value,
        }

    def row(self, threshold: float) -> dict:
        r = self.report
        row = self.param_row()
        row.update({
            "f_spin_total": r.f_spin_total,
            "f_boson_total": r.f_boson_total,
            "f_spin_zero": r.zero_mode_spin,
            "f_boson_zero": r.zero_mode_boson,
            "f_spin_rest": r.rest_spin,
            "f_boson_rest": r.rest_boson,
            "e_minus_0": self.e_minus_0,
            "e_plus_0": self.e_plus_0,
            "sin_theta": self.meanfield.sin_theta,
            "cos_theta": float(np.mean(self.meanfield.cos_thetas)),
            "alpha_0": float(np.abs(self.meanfield.alphas[0])),
            "energy": self.meanfield.energy,
            "phase": self.meanfield.phase.value,
            "zero_point_energy": self.zero_point,
            "diverged": r.diverged,
            "gaussian_valid": r.is_gaussian_valid(threshold),
        })
        return row


def evaluate_point(
    params: ModelParams,
    axis_name: str = "g",
    axis_value: Optional[float] = None,
    hopping: Optional[HoppingMatrix] = None,
) -> PointResult:
    """
    Mean-field solution and Gaussian fluctuations at one parameter set.

    Periodic chains use the closed forms; other lattices go through the
    general quadrature diagonalization.
    """
    axis_value = getattr(params, "n_sites" if axis_name == "N" else axis_name) if axis_value is None else axis_value

    if params.boundary is Boundary.PERIODIC:
        mf = solve_pbc(params)
        spectrum = gaussian_spectrum_pbc(params, mf)
        report = fluctuations_pbc(spectrum, params)
        rows = [
            {"mode": n, "mode_energy": spectrum.mode_energies[n], "e_minus": spectrum.e_minus[n], "e_plus": spectrum.e_plus[n]}
            for n in range(spectrum.n_modes)
        ]
        zero_point = 0.5 * float(np.sum(spectrum.e_plus + spectrum.e_minus - spectrum.mode_energies - spectrum.delta))
        return PointResult(
            params=params,
            axis_name=axis_name,
            axis_value=axis_value,
            meanfield=mf,
            report=report,
            e_minus_0=float(spectrum.e_minus[0]),
            e_plus_0=float(spectrum.e_plus[0]),
            zero_point=zero_point,
            spectrum_rows=rows,
        )

    modes = boson_modes(params, hopping)
    mf = solve_self_consistent(modes, params)
    normal = diagonalize_quadratic(build_gaussian_hamiltonian(modes, mf, params))
    report = fluctuations_general(normal)
    rows = [{"mode": m, "normal_energy": energy} for m, energy in enumerate(normal.energies)]
    return PointResult(
        params=params,
        axis_name=axis_name,
        axis_value=axis_value,
        meanfield=mf,
        report=report,
        e_minus_0=float(normal.energies[0]),
        e_plus_0=math.nan,
        zero_point=zero_point_energy(normal),
        spectrum_rows=rows,
    )


@dataclass
class SweepResult:
    """Evaluated points and the files written for one sweep."""

    config: SweepConfig
    points: list[PointResult]
    files: list[Path] = field(default_factory=list)

    @property
    def n_diverged(self) -> int:
        return sum(1 for p in self.points if p.report.diverged)


def evaluate_sweep(cfg: SweepConfig, workers: Optional[int] = None) -> list[PointResult]:
    """Evaluate all sweep points; results come back in axis order."""
    cfg.validate()
    workers = get_config().workers if workers is None else workers
    axis_name = cfg.axis.value

    def evaluate(value: float) -> PointResult:
        return evaluate_point(cfg.params_at(value), axis_name, value, cfg.hopping)

    if workers > 1 and len(cfg.values) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(evaluate, cfg.values))
    return [evaluate(value) for value in cfg.values]


def run_sweep(
    cfg: SweepConfig,
    digits: Optional[int] = None,
    workers: Optional[int] = None,
) -> SweepResult:
    """
    Evaluate a sweep and write its CSVs.

    Every point is evaluated before any file is written, so a physics error
    leaves no partial output. Writes ``<name>.csv`` with the combined schema
    plus ``<name>_<output>.csv`` per requested output, each with a metadata
    sidecar.

    Args:
        cfg: Sweep configuration
        digits: Significant digits for floats (defaults to JT_FLOAT_DIGITS)
        workers: Thread-pool width (defaults to JT_WORKERS)

    Returns:
        SweepResult with the written paths
    """
    config = get_config()
    digits = config.float_digits if digits is None else digits
    logger.info(f"Running sweep '{cfg.name}' over {cfg.axis.value} ({len(cfg.values)} points)")

    points = evaluate_sweep(cfg, workers)
    result = SweepResult(config=cfg, points=points)
    threshold = config.validity_threshold
    rows = [p.row(threshold) for p in points]

    meta = {
        "sweep": cfg.name,
        "axis": cfg.axis.value,
        "n_points": len(points),
        "base_params": cfg.base.as_dict(),
        "outputs": sorted(o.value for o in cfg.outputs),
        "validity_threshold": threshold,
    }
    if cfg.hopping is not None:
        # rows of a custom lattice are only complete together with this matrix
        meta["hopping_matrix"] = cfg.hopping.matrix.tolist()
    meta.update(cfg.metadata)

    out_dir = Path(cfg.out_path)
    combined = write_csv(out_dir / f"{cfg.name}.csv", COLUMNS, rows, digits)
    write_metadata(combined, cfg.source_hash, meta)
    result.files.append(combined)

    for output in sorted(cfg.outputs, key=lambda o: list(Output).index(o)):
        if output is Output.SPECTRUM:
            output_rows = [
                {**p.param_row(), **mode_row}
                for p in points
                for mode_row in p.spectrum_rows
            ]
        else:
            output_rows = rows
        path = write_csv(out_dir / f"{cfg.name}_{output.value}.csv", OUTPUT_COLUMNS[output], output_rows, digits)
        write_metadata(path, cfg.source_hash, meta)
        result.files.append(path)

    if result.n_diverged:
        logger.warning(f"Sweep '{cfg.name}': {result.n_diverged} point(s) with divergent fluctuations")
    return result
