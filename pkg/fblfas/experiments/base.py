"""
Sweep description, results and the interface contract of series metrics.
"""

import io
import json
from abc import ABC, abstractmethod
from dataclasses import dataclass, field, fields
from functools import cached_property
from pathlib import Path
from typing import Any, Optional

import numpy as np
import pandas as pd
from dataclasses_json import dataclass_json
from tabulate import tabulate

from fblfas.channel import PortCorrelationProfile, SystemConfig, profile_for
from fblfas.quadrature import DEFAULT_QUADRATURE, QuadratureSpec

FIGURE_IDS = ("fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "op_vs_ports", "custom")

CONFIG_FIELDS = frozenset(f.name for f in fields(SystemConfig))

# axes that are not SystemConfig fields
FREE_AXES = frozenset({"snr_db", "gamma_th", "r"})

CSV_COLUMNS = ["axis", "axis_value", "series", "value", "raw_value", "stderr"]

ERROR_MARKER = "ERROR"

_REQUIRED = object()


@dataclass_json
@dataclass
class AxisSpec:
    """
    name is a SystemConfig field, snr_db (dB), gamma_th (linear) or
    r (amplitude grid of the distribution metrics).
    """

    name: str
    values: list[float]

    def __post_init__(self) -> None:
        if self.name not in CONFIG_FIELDS | FREE_AXES:
            raise ValueError(
                f"Unknown axis {self.name}, expected one of {sorted(CONFIG_FIELDS | FREE_AXES)}"
            )
        if len(self.values) == 0:
            raise ValueError(f"Axis {self.name} has no values")
        steps = np.diff(np.asarray(self.values, dtype=np.float64))
        if not (np.all(steps > 0) or np.all(steps < 0)):
            raise ValueError(f"Axis {self.name} values must be strictly monotone")


@dataclass_json
@dataclass
class SeriesSpec:
    """
    overrides: SystemConfig fields (or snr_db) changed for this series only.
    params: arguments of the metric itself, e.g. L, gamma_th, method.
    """

    name: str
    kind: str
    overrides: dict[str, float] = field(default_factory=dict)
    params: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        unknown = set(self.overrides) - CONFIG_FIELDS - {"snr_db"}
        if unknown:
            raise ValueError(f"Series {self.name} overrides unknown fields {sorted(unknown)}")


@dataclass_json
@dataclass
class McSpec:
    n_trials: int = 2000
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_trials < 2:
            raise ValueError(f"n_trials must be >= 2, got {self.n_trials}")
        if self.seed < 0:
            raise ValueError(f"seed must be >= 0, got {self.seed}")


@dataclass_json
@dataclass
class SweepSpec:
    """
    A figure-style parameter sweep. snr_db, when set, fixes the noise level
    of base_config before series overrides and the axis are applied.
    """

    figure_id: str
    base_config: SystemConfig
    axis: AxisSpec
    series: list[SeriesSpec]
    mc: Optional[McSpec] = None
    snr_db: Optional[float] = None

    def __post_init__(self) -> None:
        if self.figure_id not in FIGURE_IDS:
            raise ValueError(f"Unknown figure_id {self.figure_id}, expected one of {FIGURE_IDS}")
        if len(self.series) == 0:
            raise ValueError("A sweep needs at least one series")
        names = [s.name for s in self.series]
        if len(set(names)) != len(names):
            raise ValueError(f"Series names must be unique, got {names}")

    def config_for(self, series: SeriesSpec, axis_value: float) -> SystemConfig:
        config = self.base_config
        if self.snr_db is not None:
            config = config.with_snr_db(self.snr_db)
        changes: dict[str, Any] = dict(series.overrides)
        if self.axis.name in CONFIG_FIELDS or self.axis.name == "snr_db":
            changes[self.axis.name] = axis_value
        return config.with_updates(**changes) if changes else config


@dataclass
class CellContext:
    """
    Everything a metric needs to evaluate one (axis value, series) cell.
    """

    config: SystemConfig
    axis_name: str
    axis_value: float
    params: dict[str, Any]
    mc: Optional[McSpec] = None
    quad: QuadratureSpec = DEFAULT_QUADRATURE

    @cached_property
    def profile(self) -> PortCorrelationProfile:
        return profile_for(self.config)

    def param(self, name: str, default: Any = _REQUIRED) -> Any:
        """
        A metric argument, taken from the axis when the sweep runs over it.
        """
        if self.axis_name == name:
            return self.axis_value
        if name in self.params:
            return self.params[name]
        if default is _REQUIRED:
            raise ValueError(f"Series needs the parameter {name}")
        return default

    def require_mc(self) -> McSpec:
        if self.mc is None:
            raise ValueError("Monte-Carlo series need an mc section in the sweep")
        return self.mc


@dataclass(frozen=True)
class CellValue:
    value: float
    raw_value: Optional[float] = None
    stderr: Optional[float] = None


class SeriesMetric(ABC):
    # concrete subclasses set register to True
    # to be discovered as a series kind.
    register: bool = False
    monte_carlo: bool = False

    @property
    @abstractmethod
    def kind(self) -> str:
        """
        Name used as SeriesSpec.kind.
        """

    @abstractmethod
    def evaluate(self, ctx: CellContext) -> CellValue:
        """
        Value of the metric in one cell.
        """


@dataclass(frozen=True)
class SweepRow:
    axis: str
    axis_value: float
    series: str
    value: Optional[float] = None
    raw_value: Optional[float] = None
    stderr: Optional[float] = None
    error: Optional[str] = None


@dataclass
class SweepResult:
    spec: SweepSpec
    rows: list[SweepRow]
    runtime_ms: float = 0.0

    def to_dataframe(self) -> pd.DataFrame:
        return pd.DataFrame(
            [
                {
                    "axis": row.axis,
                    "axis_value": row.axis_value,
                    "series": row.series,
                    "value": ERROR_MARKER if row.error is not None else row.value,
                    "raw_value": row.raw_value,
                    "stderr": row.stderr,
                }
                for row in self.rows
            ],
            columns=CSV_COLUMNS,
        )

    def to_csv(self, path: Optional[Path] = None) -> str:
        """
        CSV with header axis,axis_value,series,value,raw_value,stderr.
        Failed cells carry ERROR as value.
        """
        buffer = io.StringIO()
        self.to_dataframe().to_csv(buffer, index=False, float_format="%.12g")
        text = buffer.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    def to_json(self, canonical: bool = False) -> str:
        """
        Envelope with the spec echoed for provenance. canonical drops the
        runtime so that identical sweeps serialize identically.
        """
        envelope: dict[str, Any] = {
            "spec": json.loads(self.spec.to_json()),
            "rows": [
                {key: value for key, value in row.__dict__.items()} for row in self.rows
            ],
        }
        if not canonical:
            envelope["runtime_ms"] = self.runtime_ms
        return json.dumps(envelope, sort_keys=True, indent=2)

    def __str__(self) -> str:
        table = [
            [
                row.axis_value,
                row.series,
                ERROR_MARKER if row.error is not None else row.value,
                row.raw_value,
                row.stderr,
            ]
            for row in self.rows
        ]
        headers = [self.spec.axis.name, "series", "value", "raw_value", "stderr"]
        return tabulate(table, headers=headers, floatfmt=".6g", missingval="-")
