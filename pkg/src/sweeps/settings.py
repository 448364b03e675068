"""
Sweep, figure and validation settings loaded from TOML files.
"""

import json
import logging
import sys
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Optional

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from src.model.errors import ModelError
from src.model.lattice import Boundary, HoppingMatrix, ModelParams, load_hopping_csv
from src.model.oracle import MAX_SITES, Basis
from src.utils.output_files import config_hash

logger = logging.getLogger(__name__)


MODEL_KEYS = ("n_sites", "omega0", "t", "g", "omega")


class ConfigError(ValueError):
    """A sweep, figure or validation configuration is malformed."""


class Axis(Enum):
    """Swept parameter."""
    G = "g"
    N = "N"
    T = "t"

    @property
    def field_name(self) -> str:
        return {"g": "g", "N": "n_sites", "t": "t"}[self.value]


class Output(Enum):
    """Per-sweep CSV products."""
    TOTAL = "total"
    ZERO_MODE = "zero_mode"
    REST = "rest"
    SPECTRUM = "spectrum"
    MEANFIELD = "meanfield"


ALL_OUTPUTS = frozenset(Output)


@dataclass(frozen=True)
class SweepConfig:
    """
    One parameter sweep.

    Attributes:
        name: File stem of the sweep's CSVs
        base: Parameters held fixed
        axis: Swept parameter
        values: Strictly increasing axis values
        outputs: Requested CSV products
        out_path: Output directory
        hopping: Hopping matrix for Custom lattices
        source_hash: SHA-256 of the configuration that defined the sweep
        metadata: Extra entries for the metadata sidecars
    """

    name: str
    base: ModelParams
    axis: Axis
    values: tuple[float, ...]
    outputs: frozenset = ALL_OUTPUTS
    out_path: Path = field(default_factory=lambda: Path("results"))
    hopping: Optional[HoppingMatrix] = field(default=None, compare=False)
    source_hash: str = ""
    metadata: dict = field(default_factory=dict, compare=False)

    def validate(self) -> "SweepConfig":
        if not self.values:
            raise ConfigError(f"Sweep '{self.name}' has no axis values")
        if any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise ConfigError(f"Sweep '{self.name}' axis values must be strictly increasing")
        if not self.outputs:
            raise ConfigError(f"Sweep '{self.name}' requests no outputs")
        if self.axis is Axis.N:
            if any(int(v) != v or v < 1 for v in self.values):
                raise ConfigError(f"Sweep '{self.name}' N values must be positive integers")
            if self.base.boundary is Boundary.CUSTOM:
                raise ConfigError(f"Sweep '{self.name}': a custom hopping matrix fixes N")
        if self.base.boundary is Boundary.CUSTOM and self.hopping is None:
            raise ConfigError(f"Sweep '{self.name}': custom boundary needs hopping_csv")
        try:
            for value in self.values:
                self.params_at(value).validate()
        except ModelError as e:
            raise ConfigError(f"Sweep '{self.name}': {e}") from e
        return self

    def params_at(self, value: float) -> ModelParams:
        if self.axis is Axis.N:
            return self.base.with_changes(n_sites=int(value))
        return self.base.with_changes(**{self.axis.field_name: float(value)})


class FigureId(Enum):
    """Published figures whose data can be regenerated."""
    FIG1 = "fig1"
    FIG2 = "fig2"
    FIG3 = "fig3"
    FIG4 = "fig4"


@dataclass(frozen=True)
class FigureSpec:
    """A figure plus optional parameter overrides."""

    figure_id: FigureId
    overrides: dict = field(default_factory=dict)

    def digest(self) -> str:
        canonical = json.dumps({"figure": self.figure_id.value, "overrides": self.overrides}, sort_keys=True)
        return config_hash(canonical)


@dataclass(frozen=True)
class ValidationSpec:
    """
    Grid of small-N points compared against exact diagonalization.

    Attributes:
        base: Parameters shared by all points (N <= 3)
        g_values, omega_values, t_values: Grid axes
        fock_cutoff: Starting Fock cutoff, escalated until converged
        basis: Truncation basis
        trend_g: Couplings of the spin-wave convergence trend
        trend_omega, trend_t: Fixed field and hopping of the trend
        out_path: Output directory
        source_hash: SHA-256 of the configuration file
    """

    base: ModelParams
    g_values: tuple[float, ...] = (0.0, 0.3, 0.8)
    omega_values: tuple[float, ...] = (0.0, 0.5, 1.0)
    t_values: tuple[float, ...] = (0.0, 0.4, 1.0)
    fock_cutoff: int = 12
    basis: Basis = Basis.BARE_MODES
    trend_g: tuple[float, ...] = (0.3, 0.2, 0.1, 0.05)
    trend_omega: float = 1.0
    trend_t: float = 0.4
    out_path: Path = field(default_factory=lambda: Path("results") / "validation")
    source_hash: str = ""

    def grid(self) -> list[ModelParams]:
        """Grid points in g-major, then omega, then t order."""
        return [
            self.base.with_changes(g=g, omega=omega, t=t)
            for g in self.g_values
            for omega in self.omega_values
            for t in self.t_values
        ]

    def trend_points(self) -> list[ModelParams]:
        return [self.base.with_changes(g=g, omega=self.trend_omega, t=self.trend_t) for g in self.trend_g]


# ===== Parsing =====

def read_toml(path: Path) -> dict[str, Any]:
    path = Path(path).expanduser()
    if not path.is_file():
        raise ConfigError(f"Config file not found: {path}")
    try:
        with open(path, "rb") as f:
            return tomllib.load(f)
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"{path}: {e}") from e


def grid(start: float, stop: float, count: int) -> tuple[float, ...]:
    """Linear grid of ``count`` points including both ends."""
    if count < 2:
        raise ConfigError(f"Grid count must be at least 2, got {count}")
    return tuple(float(v) for v in np.linspace(start, stop, int(count)))


def parse_model(table: dict[str, Any], base_dir: Path, defaults: Optional[ModelParams] = None) -> tuple[ModelParams, Optional[HoppingMatrix]]:
    """
    Build ModelParams from a ``[model]`` table.

    Args:
        table: Key = value pairs (n_sites, omega0, t, g, omega, boundary, hopping_csv)
        base_dir: Directory that relative hopping_csv paths are resolved against
        defaults: Parameters the table overrides

    Returns:
        Tuple (params, hopping matrix or None)
    """
    unknown = set(table) - set(MODEL_KEYS) - {"boundary", "hopping_csv"}
    if unknown:
        raise ConfigError(f"Unknown model keys: {', '.join(sorted(unknown))}")

    changes: dict[str, Any] = {}
    for key in MODEL_KEYS:
        if key in table:
            value = table[key]
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise ConfigError(f"Model key '{key}' must be a number, got {value!r}")
            changes[key] = int(value) if key == "n_sites" else float(value)
    if "boundary" in table:
        try:
            changes["boundary"] = Boundary(table["boundary"])
        except ValueError:
            raise ConfigError(f"Unknown boundary {table['boundary']!r}") from None

    hopping = None
    if "hopping_csv" in table:
        hopping_path = Path(table["hopping_csv"]).expanduser()
        if not hopping_path.is_absolute():
            hopping_path = base_dir / hopping_path
        try:
            hopping = load_hopping_csv(hopping_path)
        except OSError as e:
            raise ConfigError(f"Cannot read hopping matrix {hopping_path}: {e}") from e
        changes["boundary"] = Boundary.CUSTOM
        changes["n_sites"] = hopping.n_sites

    base = defaults if defaults is not None else ModelParams(n_sites=changes.get("n_sites", 1))
    return base.with_changes(**changes), hopping


def parse_overrides(items: list[str]) -> dict[str, float]:
    """
    Parse ``key=value`` command-line overrides of model parameters.

    Args:
        items: Strings such as "t=10" or "omega=2"

    Returns:
        Dict of validated overrides
    """
    overrides: dict[str, float] = {}
    for item in items:
        key, sep, raw = item.partition("=")
        key = key.strip()
        if not sep or key not in MODEL_KEYS:
            raise ConfigError(f"Override must be key=value with key in {', '.join(MODEL_KEYS)}: {item!r}")
        try:
            overrides[key] = int(raw) if key == "n_sites" else float(raw)
        except ValueError:
            raise ConfigError(f"Override {key} needs a number, got {raw!r}") from None
    return overrides


def _axis_values(name: str, table: dict[str, Any]) -> tuple[float, ...]:
    if "values" in table:
        values = table["values"]
        if not isinstance(values, list):
            raise ConfigError(f"Sweep '{name}': values must be a list")
        return tuple(float(v) for v in values)
    try:
        return grid(float(table["start"]), float(table["stop"]), int(table["count"]))
    except KeyError as e:
        raise ConfigError(f"Sweep '{name}' needs values or start/stop/count (missing {e})") from None


def load_sweeps(path: Path) -> list[SweepConfig]:
    """
    Load every ``[sweep.NAME]`` table of a sweep file.

    Each sweep table holds axis, values (or start/stop/count), outputs, out and
    an optional nested ``model`` table overriding the shared ``[model]``.
    """
    path = Path(path).expanduser()
    data = read_toml(path)
    digest = config_hash(path)
    base, hopping = parse_model(data.get("model", {}), path.parent)

    sweeps_table = data.get("sweep")
    if not isinstance(sweeps_table, dict) or not sweeps_table:
        raise ConfigError(f"{path}: no [sweep.NAME] tables found")

    sweeps = []
    for name, table in sweeps_table.items():
        params, sweep_hopping = parse_model(table.get("model", {}), path.parent, defaults=base)
        try:
            axis = Axis(table.get("axis", "g"))
            outputs = frozenset(Output(o) for o in table.get("outputs", [o.value for o in Output]))
        except ValueError as e:
            raise ConfigError(f"Sweep '{name}': {e}") from None

        sweep = SweepConfig(
            name=name,
            base=params,
            axis=axis,
            values=_axis_values(name, table),
            outputs=outputs,
            out_path=Path(table.get("out", "results")).expanduser(),
            hopping=sweep_hopping or hopping,
            source_hash=digest,
            metadata={"config": str(path)},
        )
        sweeps.append(sweep.validate())

    logger.info(f"Loaded {len(sweeps)} sweep(s) from {path}")
    return sweeps


def load_validation(path: Path) -> ValidationSpec:
    """Load a validation pack: a ``[model]`` table plus a ``[validation]`` table."""
    path = Path(path).expanduser()
    data = read_toml(path)
    base, hopping = parse_model(data.get("model", {}), path.parent, defaults=ModelParams(n_sites=2))
    if hopping is not None:
        raise ConfigError("Validation packs use periodic or open chains, not custom matrices")
    if base.n_sites > MAX_SITES:
        raise ConfigError(f"Validation needs n_sites <= {MAX_SITES}, got {base.n_sites}")

    table = data.get("validation", {})
    try:
        spec = ValidationSpec(
            base=base,
            g_values=tuple(float(v) for v in table.get("g", ValidationSpec.g_values)),
            omega_values=tuple(float(v) for v in table.get("omega", ValidationSpec.omega_values)),
            t_values=tuple(float(v) for v in table.get("t", ValidationSpec.t_values)),
            fock_cutoff=int(table.get("fock_cutoff", ValidationSpec.fock_cutoff)),
            basis=Basis(table.get("basis", Basis.BARE_MODES.value)),
            trend_g=tuple(float(v) for v in table.get("trend_g", ValidationSpec.trend_g)),
            trend_omega=float(table.get("trend_omega", ValidationSpec.trend_omega)),
            trend_t=float(table.get("trend_t", ValidationSpec.trend_t)),
            out_path=Path(table.get("out", "results/validation")).expanduser(),
            source_hash=config_hash(path),
        )
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{path}: {e}") from e

    if spec.fock_cutoff < 1:
        raise ConfigError("fock_cutoff must be at least 1")
    return spec
