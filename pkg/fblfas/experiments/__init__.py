import importlib
import pkgutil
from pathlib import Path
from types import ModuleType
from typing import Union

from .base import (
    AxisSpec,
    CellContext,
    CellValue,
    McSpec,
    SeriesMetric,
    SeriesSpec,
    SweepResult,
    SweepRow,
    SweepSpec,
)

# Load every series metric from the experiments.metrics package
# which is a SeriesMetric subclass with the register attribute set to True
registry: dict[str, type[SeriesMetric]] = dict()
package: ModuleType = importlib.import_module("fblfas.experiments.metrics")
for module_info in pkgutil.walk_packages(package.__path__, package.__name__ + "."):
    module: ModuleType = importlib.import_module(module_info.name)
    for object_name, kls in module.__dict__.items():
        if (
            isinstance(kls, type)
            and issubclass(kls, SeriesMetric)
            and kls != SeriesMetric
            and kls.register
        ):
            kind = str(kls.kind)
            if kind in registry and registry[kind] is not kls:
                raise ValueError(
                    f"Series kind {kind} from {object_name} already exists in the registry."
                )
            registry[kind] = kls

PRESETS_DIR = Path(__file__).resolve().parent.parent / "config" / "sweeps"
presets: dict[str, Path] = {path.stem: path for path in sorted(PRESETS_DIR.glob("*.json"))}


def load_sweep_spec(source: Union[str, Path]) -> SweepSpec:
    """
    Reads a sweep from a preset name or a JSON file with Schema validation.
    Every series kind must be registered.
    """
    path = presets.get(str(source), None) if isinstance(source, str) else None
    if path is None:
        path = Path(source)
        if not path.is_file():
            raise ValueError(
                f"Sweep {source} is neither a file nor a preset: {[x for x in presets]}"
            )
    with open(path, "r") as f:
        spec = SweepSpec.schema().loads(f.read())
    check_series_kinds(spec)
    return spec


def check_series_kinds(spec: SweepSpec) -> None:
    unknown = [s.kind for s in spec.series if s.kind not in registry]
    if unknown:
        raise ValueError(
            f"Unknown series kinds {unknown}, available kinds: {sorted(registry)}"
        )


__all__ = [
    "AxisSpec",
    "CellContext",
    "CellValue",
    "McSpec",
    "SeriesMetric",
    "SeriesSpec",
    "SweepResult",
    "SweepRow",
    "SweepSpec",
    "check_series_kinds",
    "load_sweep_spec",
    "presets",
    "registry",
]
