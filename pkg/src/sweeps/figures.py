"""
Regenerate the data behind the published figures, plus a plot script for each.
"""

import logging
from pathlib import Path
from typing import Optional

from src.model.lattice import Boundary, ModelParams
from src.sweeps.runner import SweepResult, run_sweep
from src.sweeps.settings import Axis, ConfigError, FigureId, FigureSpec, Output, SweepConfig, grid

logger = logging.getLogger(__name__)


G_GRID = grid(0.0, 1.0, 201)
FIG2_SIZES = (5, 10, 20, 40)
SIZES = tuple(float(n) for n in range(2, 101))
FIG3_HOPPINGS = (0.4, 10.0)
FIG4_HOPPINGS = (0.4, 0.8, 1.5, 5.0)
FIG4_COUPLINGS = (0.6, 0.5)

ASSUMPTIONS = {
    FigureId.FIG1: "per-atom fluctuations with omega = omega0 (same units for spin and boson)",
    FigureId.FIG2: "chain lengths N in {5, 10, 20, 40}",
    FigureId.FIG3: "chain lengths N = 2..100",
    FigureId.FIG4: "chain lengths N = 2..100",
}

BASE = ModelParams(n_sites=20, omega0=1.0, t=0.4, g=0.6, omega=1.0, boundary=Boundary.PERIODIC)


def _sweep(
    spec: FigureSpec,
    name: str,
    base: ModelParams,
    axis: Axis,
    values: tuple[float, ...],
    outputs: set[Output],
    out: Path,
) -> SweepConfig:
    if axis.field_name in spec.overrides:
        raise ConfigError(f"{spec.figure_id.value} sweeps {axis.value}; it cannot be overridden")
    return SweepConfig(
        name=name,
        base=base.with_changes(**spec.overrides),
        axis=axis,
        values=values,
        outputs=frozenset(outputs),
        out_path=out,
        source_hash=spec.digest(),
        metadata={
            "figure": spec.figure_id.value,
            "overrides": dict(spec.overrides),
            "assumption": ASSUMPTIONS[spec.figure_id],
        },
    )


def figure_sweeps(spec: FigureSpec, out: Path) -> list[SweepConfig]:
    """
    The sweeps behind one figure.

    fig1: F vs g at N=20, t=0.4. fig2: F vs g for N in {5, 10, 20, 40}.
    fig3: F vs N at g=0.6 for t in {0.4, 10}. fig4: non-uniform spin
    fluctuations vs N for t in {0.4, 0.8, 1.5, 5} at g=0.6 and g=0.5.
    """
    out = Path(out)
    fig = spec.figure_id
    if fig is FigureId.FIG1:
        return [_sweep(spec, "fig1", BASE, Axis.G, G_GRID, set(Output), out)]
    if fig is FigureId.FIG2:
        return [
            _sweep(spec, f"fig2_N{n}", BASE.with_changes(n_sites=n), Axis.G, G_GRID,
                   {Output.TOTAL, Output.ZERO_MODE}, out)
            for n in FIG2_SIZES
        ]
    if fig is FigureId.FIG3:
        return [
            _sweep(spec, f"fig3_t{t:g}", BASE.with_changes(t=t), Axis.N, SIZES,
                   {Output.TOTAL, Output.REST}, out)
            for t in FIG3_HOPPINGS
        ]
    return [
        _sweep(spec, f"fig4_g{g:g}_t{t:g}", BASE.with_changes(g=g, t=t), Axis.N, SIZES, {Output.REST}, out)
        for g in FIG4_COUPLINGS
        for t in FIG4_HOPPINGS
    ]


# (x label, y column, y label, sweep-name prefix of the series drawn in the panel)
PLOT_PANELS = {
    FigureId.FIG1: [("g", "f_spin_total", "F spin", ""), ("g", "f_boson_total", "F boson", "")],
    FigureId.FIG2: [("g", "f_spin_total", "F spin", ""), ("g", "f_spin_zero", "F spin (n=0)", "")],
    FigureId.FIG3: [("N", "f_spin_total", "F spin", ""), ("N", "f_spin_rest", "F spin (n!=0)", "")],
    FigureId.FIG4: [
        ("N", "f_spin_rest", f"F spin (n!=0), g={g:g}", f"fig4_g{g:g}_") for g in FIG4_COUPLINGS
    ],
}


PLOT_TEMPLATE = '''"""
Plot {figure} from the CSVs next to this script.

Requires matplotlib (pip install "jahn-teller-chain[plot]").
"""

import csv
import math
from pathlib import Path

import matplotlib.pyplot as plt

HERE = Path(__file__).resolve().parent
SERIES = {series!r}
PANELS = {panels!r}


def read(name):
    with open(HERE / f"{{name}}.csv", newline="") as f:
        return list(csv.DictReader(f))


def column(rows, key):
    return [float(r[key]) if r[key] else math.nan for r in rows]


def main():
    fig, axes = plt.subplots(1, len(PANELS), figsize=(5 * len(PANELS), 4), squeeze=False)
    for ax, (x_key, y_key, label, prefix) in zip(axes[0], PANELS):
        for name in (s for s in SERIES if s.startswith(prefix)):
            rows = read(name)
            ys = [y if math.isfinite(y) else math.nan for y in column(rows, y_key)]
            ax.plot(column(rows, "axis_value"), ys, label=name)
        ax.set_xlabel(x_key)
        ax.set_ylabel(label)
        ax.legend()
    fig.tight_layout()
    fig.savefig(HERE / "{figure}.png", dpi=150)


if __name__ == "__main__":
    main()
'''


def write_plot_script(figure_id: FigureId, sweep_names: list[str], out: Path) -> Path:
    """Generate a matplotlib script that reads the figure's combined CSVs."""
    path = Path(out) / f"plot_{figure_id.value}.py"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(PLOT_TEMPLATE.format(
        figure=figure_id.value,
        series=list(sweep_names),
        panels=PLOT_PANELS[figure_id],
    ))
    return path


def reproduce_figure(spec: FigureSpec, out: Path, workers: Optional[int] = None) -> list[SweepResult]:
    """
    Run every sweep of a figure and emit its plot script.

    Args:
        spec: Figure and overrides
        out: Output directory

    Returns:
        SweepResults in figure order
    """
    logger.info(f"Reproducing {spec.figure_id.value} into {out}")
    sweeps = figure_sweeps(spec, out)
    results = [run_sweep(cfg, workers=workers) for cfg in sweeps]
    script = write_plot_script(spec.figure_id, [cfg.name for cfg in sweeps], out)
    logger.info(f"Plot script written to {script}")
    return results
